#![allow(dead_code)]

use aka_lab::adversary::{
    core_channel, radio_channel, LinkConfig, SessionSpec, SnConfig, SubscriberConfig, WorldConfig,
};
use aka_lab::crypto::{Sqn, SubscriberKey};
use aka_lab::principals::{Imsi, NetworkType};
use aka_lab::transport::{ProtectionProfile, TransactionIdMode};
use rand::Rng;

pub const NETWORKS: [NetworkType; 3] = [NetworkType::Umts, NetworkType::Lte, NetworkType::Gsm];

pub fn imsi(i: usize) -> Imsi {
    Imsi::new(format!("0010100000{:05}", i + 1)).unwrap()
}

pub fn subscriber(i: usize, rng: &mut impl Rng) -> SubscriberConfig {
    let sqn = Sqn::new(rng.gen_range(0..1000)).unwrap();
    SubscriberConfig { imsi: imsi(i), k: SubscriberKey(rng.gen()), sqn_hn: sqn, sqn_ms: sqn }
}

/// One session per subscriber, spread over one or two serving networks.
pub fn random_honest_world(rng: &mut impl Rng) -> WorldConfig {
    let n_subs = rng.gen_range(1..=4);
    let n_sns = rng.gen_range(1..=2);
    let subscribers: Vec<_> = (0..n_subs).map(|i| subscriber(i, rng)).collect();
    let serving_networks: Vec<_> = (0..n_sns)
        .map(|i| SnConfig {
            sn_id: format!("SN-{}", (b'A' + i as u8) as char).parse().unwrap(),
            network: NETWORKS[rng.gen_range(0..3)],
        })
        .collect();
    let links = serving_networks
        .iter()
        .map(|s| LinkConfig {
            sn_id: s.sn_id.clone(),
            profile: ProtectionProfile::ALL[rng.gen_range(0..4)],
            attacker_controlled: rng.gen(),
            tid_mode: TransactionIdMode::Unique,
        })
        .collect();
    let sessions = subscribers
        .iter()
        .map(|s| SessionSpec {
            imsi: s.imsi.clone(),
            sn_id: serving_networks[rng.gen_range(0..n_sns)].sn_id.clone(),
            network: None,
        })
        .collect();
    WorldConfig { subscribers, serving_networks, links, sessions }
}

/// Channels a strategy may schedule in `world`.
pub fn controlled_channels(world: &WorldConfig) -> Vec<String> {
    let mut out: Vec<String> = world.serving_networks.iter().map(|s| radio_channel(&s.sn_id)).collect();
    out.extend(world.links.iter().filter(|l| l.attacker_controlled).map(|l| core_channel(&l.sn_id)));
    out
}
