use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::adversary::{run, Knowledge, StrategyError};
use crate::properties::{check_all, Property, Verdict};
use crate::trace::{render_record, Trace};
use crate::transport::TransactionIdMode;

use super::Scenario;

pub const SEED_ENV: &str = "AKA_LAB_SEED";

/// Seed from the environment, or 1.
pub fn default_seed() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    /// Put every link into forced-collision mode.
    pub force_collision: bool,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub verdicts: Vec<Verdict>,
    pub expected: BTreeMap<Property, bool>,
    pub conforms: bool,
    pub trace: Trace,
    pub knowledge: Knowledge,
    pub wire_log: Vec<String>,
}

impl RunReport {
    pub fn verdict(&self, p: Property) -> &Verdict {
        self.verdicts
            .iter()
            .find(|v| v.property == p)
            .expect("all properties are checked")
    }
}

pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<RunReport, StrategyError> {
    run_scenario_with(
        scenario,
        RunOptions {
            seed,
            force_collision: false,
        },
    )
}

pub fn run_scenario_with(
    scenario: &Scenario,
    opts: RunOptions,
) -> Result<RunReport, StrategyError> {
    let mut world = scenario.world.clone();
    if opts.force_collision {
        for l in &mut world.links {
            l.tid_mode = TransactionIdMode::ForceCollision;
        }
    }
    let outcome = run(&world, &scenario.strategy, opts.seed)?;
    let verdicts = check_all(&outcome.trace, &outcome.knowledge);
    let conforms = verdicts
        .iter()
        .all(|v| scenario.expect.get(&v.property) == Some(&v.holds));
    Ok(RunReport {
        scenario: scenario.name.clone(),
        seed: opts.seed,
        verdicts,
        expected: scenario.expect.clone(),
        conforms,
        trace: outcome.trace,
        knowledge: outcome.knowledge,
        wire_log: outcome.wire_log,
    })
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown trace format {0:?} (expected text or json)")]
pub struct UnknownFormat(pub String);

pub fn emit_trace(report: &RunReport, format: &str) -> Result<Vec<u8>, UnknownFormat> {
    match format {
        "text" => Ok(report.trace.to_text().into_bytes()),
        "json" => Ok(report.trace.to_json().into_bytes()),
        other => Err(UnknownFormat(other.to_string())),
    }
}

fn word(holds: bool) -> &'static str {
    if holds {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn render_report(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "SCENARIO {} seed={}", report.scenario, report.seed);
    for v in &report.verdicts {
        let expected = report.expected.get(&v.property).copied();
        let mark = if expected == Some(v.holds) {
            ""
        } else {
            "  <-- unexpected"
        };
        let _ = writeln!(
            out,
            "PROPERTY {} {} (expected {}){mark}",
            v.property,
            word(v.holds),
            expected.map_or("?", word)
        );
        if !v.holds {
            let _ = writeln!(out, "  {}", v.detail);
            for r in &v.witness {
                let _ = writeln!(out, "    {}", render_record(r));
            }
        }
    }
    let _ = writeln!(
        out,
        "RESULT {}",
        if report.conforms {
            "conforms"
        } else {
            "DOES NOT CONFORM"
        }
    );
    out
}

#[derive(Serialize)]
struct JsonVerdict<'a> {
    property: Property,
    verdict: &'static str,
    expected: Option<&'static str>,
    #[serde(skip_serializing_if = "str::is_empty")]
    detail: &'a str,
    witness: &'a [crate::trace::TraceRecord],
}

#[derive(Serialize)]
struct JsonReport<'a> {
    scenario: &'a str,
    seed: u64,
    conforms: bool,
    verdicts: Vec<JsonVerdict<'a>>,
}

pub fn report_json(report: &RunReport) -> serde_json::Value {
    let r = JsonReport {
        scenario: &report.scenario,
        seed: report.seed,
        conforms: report.conforms,
        verdicts: report
            .verdicts
            .iter()
            .map(|v| JsonVerdict {
                property: v.property,
                verdict: word(v.holds),
                expected: report.expected.get(&v.property).map(|h| word(*h)),
                detail: &v.detail,
                witness: &v.witness,
            })
            .collect(),
    };
    serde_json::to_value(r).expect("report serialises")
}
