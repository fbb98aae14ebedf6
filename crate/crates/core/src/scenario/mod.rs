//! Scenario files: a world, an attacker strategy and the verdicts each
//! property is expected to reach.

mod catalog;
mod runner;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::adversary::{
    LinkConfig, SessionSpec, SnConfig, Strategy, SubscriberConfig, WorldConfig,
};
use crate::crypto::{SnId, Sqn, SubscriberKey};
use crate::principals::{Imsi, NetworkType};
use crate::properties::Property;
use crate::transport::{ProtectionProfile, TransactionIdMode};

pub use catalog::{catalog, catalog_names, find_scenario, CATALOG_SEED_RANGE};
pub use runner::{
    default_seed, emit_trace, render_report, report_json, run_scenario, run_scenario_with,
    RunOptions, RunReport, UnknownFormat, SEED_ENV,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{source_name}:{line}:{column}: {msg}")]
    Syntax {
        source_name: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{source_name}: field `{field}`: {msg}")]
    Field {
        source_name: String,
        field: String,
        msg: String,
    },
    #[error("{source_name}: {msg}")]
    Io { source_name: String, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub world: WorldConfig,
    pub strategy: Strategy,
    /// Shared strategy file, when the scenario refers to one.
    pub strategy_ref: Option<String>,
    /// Expected outcome per property, `true` meaning PASS.
    pub expect: BTreeMap<Property, bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    description: String,
    subscribers: Vec<RawSubscriber>,
    serving_networks: Vec<RawSn>,
    links: Vec<RawLink>,
    #[serde(default)]
    sessions: Vec<RawSession>,
    #[serde(default)]
    strategy: Option<RawStrategy>,
    expect: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubscriber {
    imsi: String,
    k_hex: String,
    sqn: u64,
    #[serde(default)]
    usim_sqn: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSn {
    sn_id: String,
    #[serde(default)]
    network: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    from: String,
    to: String,
    profile: String,
    attacker: bool,
    #[serde(default)]
    force_collision: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSession {
    imsi: String,
    sn: String,
    #[serde(default)]
    network: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawStrategy {
    Path(String),
    Inline(serde_json::Value),
}

fn parse_network(s: &str) -> Option<NetworkType> {
    match s {
        "umts" => Some(NetworkType::Umts),
        "lte" => Some(NetworkType::Lte),
        "gsm" => Some(NetworkType::Gsm),
        _ => None,
    }
}

pub fn parse_profile(s: &str) -> Option<ProtectionProfile> {
    match s {
        "none" => Some(ProtectionProfile::None),
        "mapsec" => Some(ProtectionProfile::MapSec),
        "tcapsec" => Some(ProtectionProfile::TcapSec),
        "diameter_ipsec" => Some(ProtectionProfile::DiameterIpsec),
        _ => None,
    }
}

/// Parses scenario JSON. `resolve` maps a strategy path reference to the
/// referenced file's text.
pub fn parse_scenario(
    source_name: &str,
    text: &str,
    resolve: &dyn Fn(&str) -> Result<String, String>,
) -> Result<Scenario, ParseError> {
    let syntax = |e: serde_json::Error, src: &str| ParseError::Syntax {
        source_name: src.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    };
    let field = |f: String, msg: String| ParseError::Field {
        source_name: source_name.to_string(),
        field: f,
        msg,
    };
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| syntax(e, source_name))?;

    let mut subscribers = Vec::new();
    for (i, s) in raw.subscribers.iter().enumerate() {
        let at = |f: &str| format!("subscribers[{i}].{f}");
        let imsi = Imsi::new(s.imsi.as_str()).map_err(|e| field(at("imsi"), e.to_string()))?;
        let k = SubscriberKey::from_hex(&s.k_hex).map_err(|e| field(at("k_hex"), e.to_string()))?;
        let sqn_hn = Sqn::new(s.sqn).map_err(|e| field(at("sqn"), e.to_string()))?;
        let sqn_ms = Sqn::new(s.usim_sqn.unwrap_or(s.sqn))
            .map_err(|e| field(at("usim_sqn"), e.to_string()))?;
        subscribers.push(SubscriberConfig {
            imsi,
            k,
            sqn_hn,
            sqn_ms,
        });
    }

    let mut serving_networks = Vec::new();
    for (i, s) in raw.serving_networks.iter().enumerate() {
        let sn_id: SnId = s.sn_id.parse().map_err(|e: crate::crypto::CryptoError| {
            field(format!("serving_networks[{i}].sn_id"), e.to_string())
        })?;
        let network = match &s.network {
            None => NetworkType::Umts,
            Some(n) => parse_network(n).ok_or_else(|| {
                field(
                    format!("serving_networks[{i}].network"),
                    format!("unknown network {n:?}"),
                )
            })?,
        };
        serving_networks.push(SnConfig { sn_id, network });
    }
    let known_sn = |s: &str| {
        serving_networks
            .iter()
            .find(|c| c.sn_id.as_bytes() == s.as_bytes())
            .map(|c| c.sn_id.clone())
    };

    let mut links = Vec::new();
    for (i, l) in raw.links.iter().enumerate() {
        let at = |f: &str| format!("links[{i}].{f}");
        let sn_id = known_sn(&l.from)
            .ok_or_else(|| field(at("from"), format!("unknown serving network {:?}", l.from)))?;
        if l.to != "HN" {
            return Err(field(
                at("to"),
                format!("links end at \"HN\", got {:?}", l.to),
            ));
        }
        let profile = parse_profile(&l.profile)
            .ok_or_else(|| field(at("profile"), format!("unknown profile {:?}", l.profile)))?;
        let tid_mode = if l.force_collision {
            TransactionIdMode::ForceCollision
        } else {
            TransactionIdMode::Unique
        };
        links.push(LinkConfig {
            sn_id,
            profile,
            attacker_controlled: l.attacker,
            tid_mode,
        });
    }
    for c in &serving_networks {
        if !links.iter().any(|l| l.sn_id == c.sn_id) {
            return Err(field(
                "links".into(),
                format!("serving network {} has no link", c.sn_id),
            ));
        }
    }

    let mut sessions = Vec::new();
    for (i, s) in raw.sessions.iter().enumerate() {
        let at = |f: &str| format!("sessions[{i}].{f}");
        let imsi = Imsi::new(s.imsi.as_str()).map_err(|e| field(at("imsi"), e.to_string()))?;
        if !subscribers.iter().any(|c| c.imsi == imsi) {
            return Err(field(at("imsi"), format!("{imsi} is not a subscriber")));
        }
        let sn_id = known_sn(&s.sn)
            .ok_or_else(|| field(at("sn"), format!("unknown serving network {:?}", s.sn)))?;
        let network = match &s.network {
            None => None,
            Some(n) => Some(
                parse_network(n)
                    .ok_or_else(|| field(at("network"), format!("unknown network {n:?}")))?,
            ),
        };
        sessions.push(SessionSpec {
            imsi,
            sn_id,
            network,
        });
    }

    let (strategy, strategy_ref) = match raw.strategy {
        None => (Strategy::default(), None),
        Some(RawStrategy::Inline(v)) => {
            let s =
                serde_json::from_value(v).map_err(|e| field("strategy".into(), e.to_string()))?;
            (s, None)
        }
        Some(RawStrategy::Path(p)) => {
            let text = resolve(&p).map_err(|e| field("strategy".into(), e))?;
            let s = Strategy::from_json(&text).map_err(|e| syntax(e, &p))?;
            (s, Some(p))
        }
    };

    let mut expect = BTreeMap::new();
    for (k, v) in &raw.expect {
        let p = Property::from_name(k)
            .ok_or_else(|| field(format!("expect.{k}"), "unknown property".into()))?;
        let holds = match v.as_str() {
            "PASS" => true,
            "FAIL" => false,
            _ => {
                return Err(field(
                    format!("expect.{k}"),
                    format!("expected PASS or FAIL, got {v:?}"),
                ))
            }
        };
        expect.insert(p, holds);
    }
    if let Some(missing) = Property::ALL.iter().find(|p| !expect.contains_key(p)) {
        return Err(field(
            format!("expect.{missing}"),
            "missing expected verdict".into(),
        ));
    }

    Ok(Scenario {
        name: raw.name,
        description: raw.description,
        world: WorldConfig {
            subscribers,
            serving_networks,
            links,
            sessions,
        },
        strategy,
        strategy_ref,
        expect,
    })
}

/// Loads a scenario file; strategy references resolve against its directory.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ParseError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io {
        source_name: name.clone(),
        msg: e.to_string(),
    })?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve =
        |rel: &str| std::fs::read_to_string(dir.join(rel)).map_err(|e| format!("{rel}: {e}"));
    parse_scenario(&name, &text, &resolve)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "name": "t",
  "subscribers": [{"imsi": "001010000000001", "k_hex": "000102030405060708090a0b0c0d0e0f", "sqn": 0}],
  "serving_networks": [{"sn_id": "SN-A"}],
  "links": [{"from": "SN-A", "to": "HN", "profile": "mapsec", "attacker": true}],
  "strategy": {"actions": []},
  "expect": {"av_binding": "PASS", "agreement_ue_sn": "PASS", "agreement_sn_hn": "PASS",
             "key_secrecy": "PASS", "sn_identity_binding": "PASS", "session_id_uniqueness": "PASS"}
}"#;

    fn no_files(p: &str) -> Result<String, String> {
        Err(format!("{p}: not available"))
    }

    #[test]
    fn minimal_scenario_loads() {
        let s = parse_scenario("t.json", MINIMAL, &no_files).unwrap();
        assert_eq!(s.world.links[0].profile, ProtectionProfile::MapSec);
        assert_eq!(s.expect.len(), 6);
    }

    #[test]
    fn missing_expectation_names_the_field() {
        let text = MINIMAL.replace(r#""key_secrecy": "PASS", "#, "");
        let err = parse_scenario("t.json", &text, &no_files).unwrap_err();
        assert!(
            matches!(&err, ParseError::Field { field, .. } if field == "expect.key_secrecy"),
            "{err}"
        );
    }

    #[test]
    fn unknown_profile_names_the_field() {
        let text = MINIMAL.replace("\"mapsec\"", "\"quantum\"");
        let err = parse_scenario("t.json", &text, &no_files).unwrap_err();
        assert!(
            matches!(&err, ParseError::Field { field, .. } if field == "links[0].profile"),
            "{err}"
        );
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = MINIMAL.replace("\"sqn\": 0}", "\"sqn\": }");
        let err = parse_scenario("t.json", &text, &no_files).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 3, .. }), "{err}");
    }
}
