use serde::{Deserialize, Serialize};

use crate::crypto::{SnId, Sqn, SubscriberKey};
use crate::principals::{Imsi, NetworkType};
use crate::transport::{ProtectionProfile, TransactionIdMode};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubscriberConfig {
    pub imsi: Imsi,
    pub k: SubscriberKey,
    pub sqn_hn: Sqn,
    /// Counter held by the USIM.
    pub sqn_ms: Sqn,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnConfig {
    pub sn_id: SnId,
    pub network: NetworkType,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub sn_id: SnId,
    pub profile: ProtectionProfile,
    pub attacker_controlled: bool,
    pub tid_mode: TransactionIdMode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub imsi: Imsi,
    pub sn_id: SnId,
    pub network: Option<NetworkType>,
}

/// One home network, its subscribers, the serving networks and their links.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub subscribers: Vec<SubscriberConfig>,
    pub serving_networks: Vec<SnConfig>,
    pub links: Vec<LinkConfig>,
    /// Honest sessions opened before the strategy runs.
    pub sessions: Vec<SessionSpec>,
}

pub fn radio_channel(sn: &SnId) -> String {
    format!("radio:{sn}")
}

pub fn core_channel(sn: &SnId) -> String {
    format!("core:{sn}")
}
