//! Attacker strategies as data.

use serde::{Deserialize, Serialize};

use crate::principals::NetworkType;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Strategy {
    #[serde(default)]
    pub actions: Vec<Action>,
}

impl Strategy {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Principal {
    Ue,
    Attacker,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    /// Delivers the oldest pending message on a controlled channel.
    DeliverNext {
        channel: String,
    },
    Drop {
        msg: u64,
    },
    /// Queues a copy of a message, delivered or not.
    Duplicate {
        msg: u64,
    },
    MutateField {
        msg: u64,
        field: String,
        hex: String,
    },
    SwapField {
        a: u64,
        b: u64,
        field: String,
    },
    InjectClear {
        channel: String,
        event: InjectEvent,
    },
    StartSession {
        principal: Principal,
        sn: String,
        imsi: String,
        #[serde(default)]
        network: Option<NetworkType>,
    },
    CorruptSubscriber {
        imsi: String,
    },
    RevealLinkKeys {
        link: String,
    },
}

impl Action {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("action serialises")
    }
}

/// Radio messages the attacker can fabricate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InjectEvent {
    ChallengeResponse {
        session: u32,
        res: Term,
        #[serde(default)]
        key_confirm: Option<Term>,
    },
    SyncFailure {
        session: u32,
        auts: Term,
    },
    MacFailure {
        session: u32,
    },
    /// Challenge towards a UE.
    Challenge {
        to: String,
        session: u32,
        network: NetworkType,
        rand: Term,
        #[serde(default)]
        autn: Option<Term>,
        sn_id: Term,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Hex(String),
    /// Field of an observed in-flight message.
    MsgField {
        msg: u64,
        name: String,
    },
    /// Field of the latest radio message of `session` seen on `channel`.
    Observed {
        channel: String,
        session: u32,
        name: String,
    },
    SubscriberKey(String),
    Apply {
        func: Func,
        args: Vec<Term>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Func {
    F1,
    F1Star,
    F2,
    F3,
    F4,
    F5,
    F5Star,
    Sres,
    Kc,
    Kasme,
    KeyConfirm,
    Xor,
    Concat,
}

impl Func {
    pub fn arity(self) -> Option<usize> {
        match self {
            Func::F1 | Func::F1Star => Some(4),
            Func::Kasme => Some(3),
            Func::Concat => None,
            _ => Some(2),
        }
    }
}
