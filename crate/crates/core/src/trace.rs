//! Ordered record of everything security-relevant that happened in a run.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::crypto::{KeyFingerprint, Rand, SnId};
use crate::principals::{EventKind, Imsi, NetworkType, ResponseStatus, SessionRef};
use crate::transport::TransactionId;

/// In-flight message id, assigned in emission order from 0.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct MsgId(pub u64);

impl fmt::Display for MsgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum Actor {
    Hn,
    Sn { sn_id: SnId },
    Ue { imsi: Imsi },
    Attacker,
    Net,
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Hn => f.write_str("hn"),
            Actor::Sn { sn_id } => write!(f, "sn:{sn_id}"),
            Actor::Ue { imsi } => write!(f, "ue:{imsi}"),
            Actor::Attacker => f.write_str("attacker"),
            Actor::Net => f.write_str("net"),
        }
    }
}

/// Who opened a session at the serving network.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Peer {
    Ue,
    Attacker,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UeFailureKind {
    MacFailure,
    SyncFailure,
    SeparationBit,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiveErrorKind {
    Malformed,
    Integrity,
    UnknownTransaction,
    State,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    SessionStarted {
        sn_id: SnId,
        session: SessionRef,
        claimed_imsi: Imsi,
        network: NetworkType,
        peer: Peer,
    },
    /// SN sent an AuthDataRequest on a freshly issued transaction id.
    RequestSent {
        sn_id: SnId,
        session: SessionRef,
        link: String,
        tid: TransactionId,
        msg: MsgId,
        resync: bool,
    },
    Queued {
        msg: MsgId,
        origin: MsgId,
        channel: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kind: Option<EventKind>,
    },
    Delivered {
        msg: MsgId,
        channel: String,
        to: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        tampered: Vec<String>,
    },
    ReceiveError {
        msg: MsgId,
        kind: ReceiveErrorKind,
        detail: String,
    },
    Resync {
        imsi: Imsi,
        ok: bool,
        sqn_hn: u64,
    },
    /// HN answered the request `reply_to` (origin id) on `tid`.
    AuthDataResponse {
        msg: MsgId,
        reply_to: MsgId,
        link: String,
        tid: TransactionId,
        imsi: Imsi,
        status: ResponseStatus,
        rands: Vec<Rand>,
    },
    ResponseRouted {
        sn_id: SnId,
        link: String,
        msg: MsgId,
        origin: MsgId,
        tid: TransactionId,
        session: SessionRef,
    },
    /// SN consumed a vector and challenged the user.
    Challenge {
        sn_id: SnId,
        session: SessionRef,
        claimed_imsi: Imsi,
        network: NetworkType,
        rand: Rand,
        msg: MsgId,
    },
    UeKeysEstablished {
        imsi: Imsi,
        session: SessionRef,
        rand: Rand,
        sn_id: SnId,
        network: NetworkType,
        fingerprint: KeyFingerprint,
    },
    UeFailure {
        imsi: Imsi,
        session: SessionRef,
        rand: Rand,
        reason: UeFailureKind,
    },
    Accept {
        sn_id: SnId,
        session: SessionRef,
        claimed_imsi: Imsi,
        network: NetworkType,
        rand: Rand,
        fingerprint: KeyFingerprint,
    },
    Reject {
        sn_id: SnId,
        session: SessionRef,
        claimed_imsi: Imsi,
        reason: String,
    },
    Attacker {
        action: serde_json::Value,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        touches: Vec<MsgId>,
        outcome: String,
    },
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub actor: Actor,
    #[serde(flatten)]
    pub event: TraceEvent,
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, actor: Actor, event: TraceEvent) -> u64 {
        let step = self.records.last().map_or(0, |r| r.step + 1);
        self.records.push(TraceRecord { step, actor, event });
        step
    }

    pub fn iter(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter()
    }

    /// Sub-trace keeping only the given steps, in trace order.
    pub fn restrict(&self, steps: &[u64]) -> Trace {
        Trace {
            records: self
                .records
                .iter()
                .filter(|r| steps.contains(&r.step))
                .cloned()
                .collect(),
        }
    }

    pub fn corrupted_subscribers(&self) -> Vec<Imsi> {
        let mut out: Vec<Imsi> = self
            .records
            .iter()
            .filter_map(|r| match &r.event {
                TraceEvent::Attacker {
                    action, outcome, ..
                } if outcome == "ok"
                    && action.get("op").and_then(|v| v.as_str()) == Some("corrupt_subscriber") =>
                {
                    action
                        .get("imsi")
                        .and_then(|v| v.as_str())
                        .and_then(|s| Imsi::new(s).ok())
                }
                _ => None,
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Structural invariants: strictly increasing steps, and every Accept is
    /// preceded by a Challenge in the same session.
    pub fn validate(&self) -> Result<(), String> {
        let mut challenged: BTreeMap<(SnId, SessionRef), u64> = BTreeMap::new();
        let mut last: Option<u64> = None;
        for r in &self.records {
            if last.is_some_and(|l| r.step <= l) {
                return Err(format!("step {} does not increase", r.step));
            }
            last = Some(r.step);
            match &r.event {
                TraceEvent::Challenge { sn_id, session, .. } => {
                    challenged.insert((sn_id.clone(), *session), r.step);
                }
                TraceEvent::Accept { sn_id, session, .. }
                    if !challenged.contains_key(&(sn_id.clone(), *session)) =>
                {
                    return Err(format!("accept at step {} without challenge", r.step));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialises")
    }

    pub fn from_json(s: &str) -> Result<Trace, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(out, "{}", render_record(r));
        }
        out
    }
}

pub fn render_record(r: &TraceRecord) -> String {
    format!(
        "{:04} {:<24} {}",
        r.step,
        r.actor.to_string(),
        describe(&r.event)
    )
}

fn describe(e: &TraceEvent) -> String {
    use TraceEvent::*;
    match e {
        SessionStarted {
            session,
            claimed_imsi,
            network,
            peer,
            ..
        } => {
            format!("session {session} started: claimed {claimed_imsi} {network} peer={peer:?}")
        }
        RequestSent {
            session,
            link,
            tid,
            msg,
            resync,
            ..
        } => format!(
            "request {msg} for {session} on {link} tid={tid}{}",
            if *resync { " (resync)" } else { "" }
        ),
        Queued {
            msg,
            origin,
            channel,
            kind,
        } => {
            let kind = kind.map_or("unparseable".to_string(), |k| k.to_string());
            if msg == origin {
                format!("queued {msg} {kind} on {channel}")
            } else {
                format!("queued {msg} {kind} on {channel} (copy of {origin})")
            }
        }
        Delivered {
            msg, to, tampered, ..
        } => {
            if tampered.is_empty() {
                format!("delivered {msg} to {to}")
            } else {
                format!("delivered {msg} to {to} tampered=[{}]", tampered.join(","))
            }
        }
        ReceiveError { msg, kind, detail } => {
            format!("receive error on {msg}: {kind:?} ({detail})")
        }
        Resync { imsi, ok, sqn_hn } => format!("resync {imsi} ok={ok} sqn_hn={sqn_hn}"),
        AuthDataResponse {
            msg,
            reply_to,
            tid,
            imsi,
            status,
            rands,
            ..
        } => format!(
            "response {msg} to {reply_to} tid={tid} for {imsi} status={status:?} rands=[{}]",
            rands
                .iter()
                .map(|r| r.to_hex())
                .collect::<Vec<_>>()
                .join(",")
        ),
        ResponseRouted {
            msg, tid, session, ..
        } => format!("routed {msg} tid={tid} to {session}"),
        Challenge {
            session,
            claimed_imsi,
            rand,
            msg,
            ..
        } => {
            format!("challenge {msg} in {session} for {claimed_imsi} rand={rand}")
        }
        UeKeysEstablished {
            session,
            rand,
            sn_id,
            fingerprint,
            ..
        } => {
            format!("keys established in {session} rand={rand} sn={sn_id} fp={fingerprint}")
        }
        UeFailure {
            session, reason, ..
        } => format!("failure in {session}: {reason:?}"),
        Accept {
            session,
            claimed_imsi,
            rand,
            fingerprint,
            ..
        } => {
            format!("ACCEPT {session} as {claimed_imsi} rand={rand} fp={fingerprint}")
        }
        Reject {
            session,
            claimed_imsi,
            reason,
            ..
        } => format!("REJECT {session} ({claimed_imsi}): {reason}"),
        Attacker {
            action, outcome, ..
        } => format!("{action} -> {outcome}"),
    }
}
