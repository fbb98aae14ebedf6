use aka_lab::scenario::{emit_trace, find_scenario, run_scenario};
use aka_lab::trace::Trace;

const GOLDEN: &str = include_str!("data/honest_lte_ipsec_seed1.trace");

fn report(name: &str, seed: u64) -> aka_lab::scenario::RunReport {
    run_scenario(&find_scenario(name).unwrap().unwrap(), seed).unwrap()
}

#[test]
fn honest_lte_text_trace_matches_golden() {
    let text = emit_trace(&report("honest_lte_ipsec", 1), "text").unwrap();
    assert_eq!(String::from_utf8(text).unwrap(), GOLDEN);
}

#[test]
fn same_seed_gives_identical_traces() {
    for name in ["honest_lte_ipsec", "attack_misbind_mapsec", "collision_tcapsec"] {
        for format in ["text", "json"] {
            let a = emit_trace(&report(name, 7), format).unwrap();
            let b = emit_trace(&report(name, 7), format).unwrap();
            assert_eq!(a, b, "{name} {format}");
        }
    }
}

#[test]
fn different_seeds_give_different_randomness() {
    let a = emit_trace(&report("honest_umts_mapsec", 1), "text").unwrap();
    let b = emit_trace(&report("honest_umts_mapsec", 2), "text").unwrap();
    assert_ne!(a, b);
}

#[test]
fn json_trace_round_trips() {
    let r = report("resync_umts", 3);
    let json = emit_trace(&r, "json").unwrap();
    let back = Trace::from_json(std::str::from_utf8(&json).unwrap()).unwrap();
    assert_eq!(back, r.trace);
    assert!(back.validate().is_ok());
}

#[test]
fn unknown_trace_format_is_rejected() {
    assert!(emit_trace(&report("honest_lte_ipsec", 1), "yaml").is_err());
}
