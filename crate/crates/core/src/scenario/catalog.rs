use std::ops::RangeInclusive;

use super::{parse_scenario, ParseError, Scenario};

/// Seeds under which every shipped scenario must conform.
pub const CATALOG_SEED_RANGE: RangeInclusive<u64> = 1..=5;

macro_rules! embedded {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../scenarios/", $name, ".json")))),*]
    };
}

const SCENARIOS: &[(&str, &str)] = embedded![
    "honest_umts_mapsec",
    "honest_umts_tcapsec",
    "honest_umts_ipsec",
    "honest_lte_ipsec",
    "attack_misbind_mapsec",
    "attack_misbind_outsider_mapsec",
    "attack_misbind_tcapsec",
    "attack_misbind_ipsec",
    "collision_tcapsec",
    "resync_umts",
    "redirection_umts",
    "redirection_lte",
    "no_protection_umts",
    "gsm_sia_misbind",
];

const STRATEGIES: &[(&str, &str)] = &[
    (
        "strategies/misbind_insider.json",
        include_str!("../../scenarios/strategies/misbind_insider.json"),
    ),
    (
        "strategies/misbind_insider_gsm.json",
        include_str!("../../scenarios/strategies/misbind_insider_gsm.json"),
    ),
    (
        "strategies/misbind_outsider.json",
        include_str!("../../scenarios/strategies/misbind_outsider.json"),
    ),
];

fn resolve(path: &str) -> Result<String, String> {
    STRATEGIES
        .iter()
        .find(|(p, _)| *p == path)
        .map(|(_, t)| t.to_string())
        .ok_or_else(|| format!("no shipped strategy {path}"))
}

pub fn catalog_names() -> Vec<&'static str> {
    SCENARIOS.iter().map(|(n, _)| *n).collect()
}

pub fn find_scenario(name: &str) -> Option<Result<Scenario, ParseError>> {
    SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| parse_scenario(&format!("{n}.json"), text, &resolve))
}

/// All shipped scenarios in catalog order.
pub fn catalog() -> Result<Vec<Scenario>, ParseError> {
    SCENARIOS
        .iter()
        .map(|(n, text)| parse_scenario(&format!("{n}.json"), text, &resolve))
        .collect()
}
