mod common;

use aka_lab::adversary::{run, Action, Strategy};
use aka_lab::properties::{check_all, Property};
use aka_lab::scenario::{find_scenario, run_scenario};
use aka_lab::trace::{TraceEvent, UeFailureKind};
use aka_lab::transport::ProtectionProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{controlled_channels, random_honest_world};

#[test]
fn randomized_honest_interleavings_all_accept_with_equal_keys() {
    for case in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(case);
        let world = random_honest_world(&mut rng);
        let channels = controlled_channels(&world);
        let actions = (0..rng.gen_range(0..40))
            .map(|_| Action::DeliverNext { channel: channels[rng.gen_range(0..channels.len())].clone() })
            .collect();
        let out = run(&world, &Strategy { actions }, case).unwrap();
        out.trace.validate().unwrap();

        for s in &world.subscribers {
            let accepts: Vec<_> = out
                .trace
                .iter()
                .filter_map(|r| match &r.event {
                    TraceEvent::Accept { claimed_imsi, rand, fingerprint, .. } if *claimed_imsi == s.imsi => {
                        Some((*rand, *fingerprint))
                    }
                    _ => None,
                })
                .collect();
            assert_eq!(accepts.len(), 1, "case {case}: {} accepted {} times", s.imsi, accepts.len());
            let ue_side = out.trace.iter().any(|r| {
                matches!(&r.event, TraceEvent::UeKeysEstablished { imsi, rand, fingerprint, .. }
                    if *imsi == s.imsi && (*rand, *fingerprint) == accepts[0])
            });
            assert!(ue_side, "case {case}: UE and SN keys differ for {}", s.imsi);
        }

        let exposed = world.links.iter().any(|l| l.profile == ProtectionProfile::None && l.attacker_controlled);
        for v in check_all(&out.trace, &out.knowledge) {
            if v.property == Property::KeySecrecy && exposed {
                continue;
            }
            assert!(v.holds, "case {case}: {} failed: {}", v.property, v.detail);
        }
    }
}

#[test]
fn resync_emits_one_sync_failure_then_succeeds() {
    let s = find_scenario("resync_umts").unwrap().unwrap();
    let r = run_scenario(&s, 1).unwrap();
    let sync_failures = r
        .trace
        .iter()
        .filter(|x| matches!(x.event, TraceEvent::UeFailure { reason: UeFailureKind::SyncFailure, .. }))
        .count();
    assert_eq!(sync_failures, 1);
    let resync_ok = r.trace.iter().any(|x| matches!(x.event, TraceEvent::Resync { ok: true, .. }));
    assert!(resync_ok);
    let accepts = r.trace.iter().filter(|x| matches!(x.event, TraceEvent::Accept { .. })).count();
    assert_eq!(accepts, 1);
    assert!(r.conforms);
}

mod invariants {
    use super::*;
    use aka_lab::trace::Trace;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn traces_are_well_formed_and_round_trip(world_seed in any::<u64>(), run_seed in any::<u64>(), n in 0usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(world_seed);
            let world = random_honest_world(&mut rng);
            let channels = controlled_channels(&world);
            let actions = (0..n)
                .map(|_| Action::DeliverNext { channel: channels[rng.gen_range(0..channels.len())].clone() })
                .collect();
            let out = run(&world, &Strategy { actions }, run_seed).unwrap();
            prop_assert!(out.trace.validate().is_ok());
            prop_assert_eq!(Trace::from_json(&out.trace.to_json()).unwrap(), out.trace.clone());
            let protected = world.links.iter().all(|l| l.profile.is_protected() || !l.attacker_controlled);
            for v in check_all(&out.trace, &out.knowledge) {
                prop_assert!(v.holds || (!protected && v.property == Property::KeySecrecy), "{}", v.detail);
                prop_assert_eq!(v.holds, v.witness.is_empty());
            }
        }
    }
}
