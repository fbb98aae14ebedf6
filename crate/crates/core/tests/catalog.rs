use aka_lab::properties::{check_agreement_ue_sn_non_injective, Property};
use aka_lab::scenario::{catalog, render_report, run_scenario, CATALOG_SEED_RANGE};

#[test]
fn every_scenario_conforms_under_catalog_seeds() {
    for s in catalog().unwrap() {
        for seed in CATALOG_SEED_RANGE {
            let r = run_scenario(&s, seed).unwrap();
            assert!(r.conforms, "{}", render_report(&r));
        }
    }
}

#[test]
fn failing_witnesses_replay() {
    for s in catalog().unwrap() {
        let r = run_scenario(&s, 1).unwrap();
        for v in &r.verdicts {
            assert_eq!(v.holds, v.witness.is_empty(), "{} {}", s.name, v.property);
            if !v.holds {
                let again =
                    aka_lab::properties::check(v.property, &v.witness_trace(), &r.knowledge);
                assert!(
                    !again.holds,
                    "{} {} witness does not replay",
                    s.name, v.property
                );
            }
        }
        let _ = Property::ALL;
    }
}

#[test]
fn non_injective_agreement_matches_injective_across_catalog() {
    for s in catalog().unwrap() {
        for seed in CATALOG_SEED_RANGE {
            let r = run_scenario(&s, seed).unwrap();
            let weak = check_agreement_ue_sn_non_injective(&r.trace);
            assert_eq!(weak.holds, s.expect[&Property::AgreementUeSn], "{} seed {seed}", s.name);
        }
    }
}
