//! Security properties evaluated over a finished trace.
//!
//! A failing verdict carries a witness: a sub-trace on which the same check
//! fails again when evaluated alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::adversary::Knowledge;
use crate::crypto::{KeyFingerprint, Rand, SnId};
use crate::principals::{Imsi, SessionRef};
use crate::trace::{MsgId, Trace, TraceEvent, TraceRecord};
use crate::transport::TransactionId;

pub use crate::trace;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    AvBinding,
    AgreementUeSn,
    AgreementSnHn,
    KeySecrecy,
    SnIdentityBinding,
    SessionIdUniqueness,
}

impl Property {
    pub const ALL: [Property; 6] = [
        Property::AvBinding,
        Property::AgreementUeSn,
        Property::AgreementSnHn,
        Property::KeySecrecy,
        Property::SnIdentityBinding,
        Property::SessionIdUniqueness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::AvBinding => "av_binding",
            Property::AgreementUeSn => "agreement_ue_sn",
            Property::AgreementSnHn => "agreement_sn_hn",
            Property::KeySecrecy => "key_secrecy",
            Property::SnIdentityBinding => "sn_identity_binding",
            Property::SessionIdUniqueness => "session_id_uniqueness",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub property: Property,
    pub holds: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    pub witness: Vec<TraceRecord>,
}

impl Verdict {
    fn pass(property: Property) -> Self {
        Self {
            property,
            holds: true,
            detail: String::new(),
            witness: Vec::new(),
        }
    }

    fn fail(property: Property, trace: &Trace, steps: BTreeSet<u64>, detail: String) -> Self {
        let steps: Vec<u64> = steps.into_iter().collect();
        Self {
            property,
            holds: false,
            detail,
            witness: trace.restrict(&steps).records,
        }
    }

    pub fn witness_trace(&self) -> Trace {
        Trace {
            records: self.witness.clone(),
        }
    }
}

/// Evaluates one property. `knowledge` is only consulted by key secrecy.
pub fn check(property: Property, trace: &Trace, knowledge: &Knowledge) -> Verdict {
    match property {
        Property::AvBinding => check_av_binding(trace),
        Property::AgreementUeSn => check_agreement_ue_sn(trace),
        Property::AgreementSnHn => check_agreement_sn_hn(trace),
        Property::KeySecrecy => check_key_secrecy(trace, knowledge),
        Property::SnIdentityBinding => check_sn_identity_binding(trace),
        Property::SessionIdUniqueness => check_session_id_uniqueness(trace),
    }
}

pub fn check_all(trace: &Trace, knowledge: &Knowledge) -> Vec<Verdict> {
    Property::ALL
        .iter()
        .map(|p| check(*p, trace, knowledge))
        .collect()
}

struct ChallengeRec<'a> {
    step: u64,
    sn_id: &'a SnId,
    session: SessionRef,
    claimed: &'a Imsi,
    rand: &'a Rand,
}

struct ResponseRec<'a> {
    step: u64,
    msg: MsgId,
    reply_to: MsgId,
    tid: TransactionId,
    imsi: &'a Imsi,
    rands: &'a [Rand],
}

struct AcceptRec<'a> {
    step: u64,
    sn_id: &'a SnId,
    claimed: &'a Imsi,
    rand: &'a Rand,
    fp: &'a KeyFingerprint,
}

struct UeRec<'a> {
    step: u64,
    imsi: &'a Imsi,
    rand: &'a Rand,
    sn_id: &'a SnId,
    fp: &'a KeyFingerprint,
}

fn challenges(trace: &Trace) -> Vec<ChallengeRec<'_>> {
    trace
        .iter()
        .filter_map(|r| match &r.event {
            TraceEvent::Challenge {
                sn_id,
                session,
                claimed_imsi,
                rand,
                ..
            } => Some(ChallengeRec {
                step: r.step,
                sn_id,
                session: *session,
                claimed: claimed_imsi,
                rand,
            }),
            _ => None,
        })
        .collect()
}

fn responses(trace: &Trace) -> Vec<ResponseRec<'_>> {
    trace
        .iter()
        .filter_map(|r| match &r.event {
            TraceEvent::AuthDataResponse {
                msg,
                reply_to,
                tid,
                imsi,
                rands,
                ..
            } => Some(ResponseRec {
                step: r.step,
                msg: *msg,
                reply_to: *reply_to,
                tid: *tid,
                imsi,
                rands,
            }),
            _ => None,
        })
        .collect()
}

fn accepts(trace: &Trace) -> Vec<AcceptRec<'_>> {
    trace
        .iter()
        .filter_map(|r| match &r.event {
            TraceEvent::Accept {
                sn_id,
                claimed_imsi,
                rand,
                fingerprint,
                ..
            } => Some(AcceptRec {
                step: r.step,
                sn_id,
                claimed: claimed_imsi,
                rand,
                fp: fingerprint,
            }),
            _ => None,
        })
        .collect()
}

fn ue_keys(trace: &Trace) -> Vec<UeRec<'_>> {
    trace
        .iter()
        .filter_map(|r| match &r.event {
            TraceEvent::UeKeysEstablished {
                imsi,
                rand,
                sn_id,
                fingerprint,
                ..
            } => Some(UeRec {
                step: r.step,
                imsi,
                rand,
                sn_id,
                fp: fingerprint,
            }),
            _ => None,
        })
        .collect()
}

/// Latest request the session sent before `before`.
fn session_request(
    trace: &Trace,
    sn: &SnId,
    session: SessionRef,
    before: u64,
) -> Option<(u64, MsgId, TransactionId)> {
    trace
        .iter()
        .filter(|r| r.step < before)
        .filter_map(|r| match &r.event {
            TraceEvent::RequestSent {
                sn_id,
                session: s,
                msg,
                tid,
                ..
            } if sn_id == sn && *s == session => Some((r.step, *msg, *tid)),
            _ => None,
        })
        .last()
}

/// Attacker actions that touched any of `msgs`.
fn attacker_steps(trace: &Trace, msgs: &BTreeSet<MsgId>) -> Vec<u64> {
    trace
        .iter()
        .filter(|r| matches!(&r.event, TraceEvent::Attacker { touches, .. } if touches.iter().any(|m| msgs.contains(m))))
        .map(|r| r.step)
        .collect()
}

fn exempt(trace: &Trace) -> BTreeSet<Imsi> {
    trace.corrupted_subscribers().into_iter().collect()
}

/// Each vector an SN consumes was generated by the HN for the identity the
/// SN believes it is authenticating.
pub fn check_av_binding(trace: &Trace) -> Verdict {
    let p = Property::AvBinding;
    let resp = responses(trace);
    let mut failures = 0;
    let mut first = None;
    for c in challenges(trace) {
        let carrying: Vec<&ResponseRec> =
            resp.iter().filter(|r| r.rands.contains(c.rand)).collect();
        let bad = carrying.is_empty() || carrying.iter().any(|r| r.imsi != c.claimed);
        if !bad {
            continue;
        }
        failures += 1;
        if first.is_some() {
            continue;
        }
        let mut steps: BTreeSet<u64> = [c.step].into();
        let mut msgs = BTreeSet::new();
        for r in &carrying {
            steps.insert(r.step);
            msgs.insert(r.msg);
        }
        if let Some((_, req, _)) = session_request(trace, c.sn_id, c.session, c.step) {
            for r in resp.iter().filter(|r| r.reply_to == req) {
                steps.insert(r.step);
                msgs.insert(r.msg);
            }
        }
        steps.extend(attacker_steps(trace, &msgs));
        let detail = match carrying.first() {
            None => format!(
                "{} {} consumed rand {} that no HN response carried",
                c.sn_id, c.session, c.rand
            ),
            Some(r) => format!(
                "{} {} claimed {} but consumed rand {} generated for {}",
                c.sn_id, c.session, c.claimed, c.rand, r.imsi
            ),
        };
        first = Some((steps, detail));
    }
    match first {
        None => Verdict::pass(p),
        Some((steps, detail)) => Verdict::fail(
            p,
            trace,
            steps,
            format!("{detail} ({failures} violation(s))"),
        ),
    }
}

/// Injective agreement between SN and UE on (imsi, rand, key fingerprint)
/// for every accepted session of an uncorrupted subscriber.
pub fn check_agreement_ue_sn(trace: &Trace) -> Verdict {
    agreement_ue_sn(trace, true)
}

/// Weaker form: each accept needs at least one agreeing UE run, and UE runs
/// may be shared between accepts.
pub fn check_agreement_ue_sn_non_injective(trace: &Trace) -> Verdict {
    agreement_ue_sn(trace, false)
}

fn agreement_ue_sn(trace: &Trace, injective: bool) -> Verdict {
    let p = Property::AgreementUeSn;
    let skip = exempt(trace);
    let ues = ue_keys(trace);
    let mut partner: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for a in accepts(trace).iter().filter(|a| !skip.contains(a.claimed)) {
        let matches: Vec<&UeRec> = ues
            .iter()
            .filter(|u| u.imsi == a.claimed && u.rand == a.rand && u.fp == a.fp)
            .collect();
        if matches.is_empty() || (injective && matches.len() > 1) {
            let mut steps: BTreeSet<u64> = [a.step].into();
            steps.extend(ues.iter().filter(|u| u.rand == a.rand).map(|u| u.step));
            let detail = format!(
                "{} accepted {} with rand {} but {} UE run(s) agree",
                a.sn_id,
                a.claimed,
                a.rand,
                matches.len()
            );
            return Verdict::fail(p, trace, steps, detail);
        }
        partner.entry(matches[0].step).or_default().push(a.step);
    }
    if let Some((ue, acc)) = partner
        .into_iter()
        .find(|(_, acc)| injective && acc.len() > 1)
    {
        let mut steps: BTreeSet<u64> = acc.into_iter().collect();
        steps.insert(ue);
        return Verdict::fail(
            p,
            trace,
            steps,
            "one UE run matched by several accepts".into(),
        );
    }
    Verdict::pass(p)
}

/// Every consumed vector comes from exactly one HN response, sent in reply
/// to this session's own request on the transaction id issued for it.
pub fn check_agreement_sn_hn(trace: &Trace) -> Verdict {
    let p = Property::AgreementSnHn;
    let resp = responses(trace);
    for c in challenges(trace) {
        let carrying: Vec<&ResponseRec> =
            resp.iter().filter(|r| r.rands.contains(c.rand)).collect();
        let req = session_request(trace, c.sn_id, c.session, c.step);
        let ok = match (&carrying[..], req) {
            ([r], Some((_, msg, tid))) => r.reply_to == msg && r.tid == tid,
            _ => false,
        };
        if ok {
            continue;
        }
        let mut steps: BTreeSet<u64> = [c.step].into();
        let mut msgs: BTreeSet<MsgId> = carrying.iter().map(|r| r.msg).collect();
        steps.extend(carrying.iter().map(|r| r.step));
        if let Some((step, msg, _)) = req {
            steps.insert(step);
            for r in resp.iter().filter(|r| r.reply_to == msg) {
                steps.insert(r.step);
                msgs.insert(r.msg);
            }
        }
        steps.extend(attacker_steps(trace, &msgs));
        let detail = match (carrying.len(), req) {
            (_, None) => format!("{} {} has no request of its own", c.sn_id, c.session),
            (1, Some((_, msg, _))) => format!(
                "{} {} consumed rand {} from a response to {} instead of its request {}",
                c.sn_id, c.session, c.rand, carrying[0].reply_to, msg
            ),
            (n, _) => format!(
                "{} {} consumed rand {} carried by {n} responses",
                c.sn_id, c.session, c.rand
            ),
        };
        return Verdict::fail(p, trace, steps, detail);
    }
    Verdict::pass(p)
}

/// Session keys of accepted sessions of uncorrupted subscribers are not in
/// the attacker's derivation closure.
pub fn check_key_secrecy(trace: &Trace, knowledge: &Knowledge) -> Verdict {
    let p = Property::KeySecrecy;
    let skip = exempt(trace);
    let pending: Vec<AcceptRec> = accepts(trace)
        .into_iter()
        .filter(|a| !skip.contains(a.claimed))
        .collect();
    if pending.is_empty() {
        return Verdict::pass(p);
    }
    let closure = knowledge.closure();
    for a in pending {
        if closure.derives_key(a.fp) {
            let detail = format!(
                "attacker derives the key of {} session for {} (fp {})",
                a.sn_id, a.claimed, a.fp
            );
            return Verdict::fail(p, trace, [a.step].into(), detail);
        }
    }
    Verdict::pass(p)
}

/// UE and SN used the same serving-network identity for each matched run.
pub fn check_sn_identity_binding(trace: &Trace) -> Verdict {
    let p = Property::SnIdentityBinding;
    let ues = ue_keys(trace);
    for a in accepts(trace) {
        if let Some(u) = ues
            .iter()
            .find(|u| u.imsi == a.claimed && u.rand == a.rand && u.sn_id != a.sn_id)
        {
            let detail = format!(
                "SN {} accepted while the UE bound its keys to {}",
                a.sn_id, u.sn_id
            );
            return Verdict::fail(p, trace, [a.step, u.step].into(), detail);
        }
    }
    Verdict::pass(p)
}

/// No transaction id is issued twice on a link while a dialogue using it is
/// still open.
pub fn check_session_id_uniqueness(trace: &Trace) -> Verdict {
    let p = Property::SessionIdUniqueness;
    let mut live: BTreeMap<(String, TransactionId), Vec<u64>> = BTreeMap::new();
    for r in trace.iter() {
        match &r.event {
            TraceEvent::RequestSent { link, tid, .. } => {
                let open = live.entry((link.clone(), *tid)).or_default();
                if let Some(prev) = open.last() {
                    let detail = format!("{tid} issued again on {link} while still live");
                    return Verdict::fail(p, trace, [*prev, r.step].into(), detail);
                }
                open.push(r.step);
            }
            TraceEvent::ResponseRouted { link, tid, .. } => {
                if let Some(open) = live.get_mut(&(link.clone(), *tid)) {
                    open.pop();
                }
            }
            _ => {}
        }
    }
    Verdict::pass(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::principals::NetworkType;
    use crate::trace::Actor;

    fn imsi(n: u8) -> Imsi {
        Imsi::new(format!("00101000000000{n}")).unwrap()
    }

    fn sn() -> SnId {
        "SN-A".parse().unwrap()
    }

    #[test]
    fn empty_trace_satisfies_everything() {
        for v in check_all(&Trace::default(), &Knowledge::new()) {
            assert!(v.holds && v.witness.is_empty(), "{}", v.property);
        }
    }

    #[test]
    fn mismatched_vector_breaks_binding_and_witness_replays() {
        let mut t = Trace::default();
        let tid = TransactionId([1, 2, 3, 4]);
        t.push(
            Actor::Sn { sn_id: sn() },
            TraceEvent::RequestSent {
                sn_id: sn(),
                session: SessionRef(0),
                link: "core:SN-A".into(),
                tid,
                msg: MsgId(0),
                resync: false,
            },
        );
        t.push(
            Actor::Hn,
            TraceEvent::AuthDataResponse {
                msg: MsgId(1),
                reply_to: MsgId(0),
                link: "core:SN-A".into(),
                tid,
                imsi: imsi(2),
                status: crate::principals::ResponseStatus::Ok,
                rands: vec![Rand([9; 16])],
            },
        );
        t.push(
            Actor::Sn { sn_id: sn() },
            TraceEvent::Challenge {
                sn_id: sn(),
                session: SessionRef(0),
                claimed_imsi: imsi(1),
                network: NetworkType::Umts,
                rand: Rand([9; 16]),
                msg: MsgId(2),
            },
        );
        let v = check_av_binding(&t);
        assert!(!v.holds);
        assert!(!check_av_binding(&v.witness_trace()).holds);
        assert!(check_agreement_sn_hn(&t).holds);
    }

    #[test]
    fn reissued_live_tid_is_detected() {
        let mut t = Trace::default();
        for s in 0..2 {
            t.push(
                Actor::Sn { sn_id: sn() },
                TraceEvent::RequestSent {
                    sn_id: sn(),
                    session: SessionRef(s),
                    link: "core:SN-A".into(),
                    tid: TransactionId([7; 4]),
                    msg: MsgId(s as u64),
                    resync: false,
                },
            );
        }
        let v = check_session_id_uniqueness(&t);
        assert!(!v.holds);
        assert_eq!(v.witness.len(), 2);
    }

    #[test]
    fn replayed_accept_breaks_only_injective_agreement() {
        let mut t = Trace::default();
        let rand = Rand([5; 16]);
        let fp = KeyFingerprint([3; 8]);
        t.push(
            Actor::Ue { imsi: imsi(1) },
            TraceEvent::UeKeysEstablished {
                imsi: imsi(1),
                session: SessionRef(0),
                rand,
                sn_id: sn(),
                network: NetworkType::Umts,
                fingerprint: fp,
            },
        );
        for s in 0..2 {
            t.push(
                Actor::Sn { sn_id: sn() },
                TraceEvent::Accept {
                    sn_id: sn(),
                    session: SessionRef(s),
                    claimed_imsi: imsi(1),
                    network: NetworkType::Umts,
                    rand,
                    fingerprint: fp,
                },
            );
        }
        assert!(!check_agreement_ue_sn(&t).holds);
        assert!(check_agreement_ue_sn_non_injective(&t).holds);
        t.records.remove(0);
        assert!(!check_agreement_ue_sn_non_injective(&t).holds);
    }

    #[test]
    fn names_roundtrip() {
        for p in Property::ALL {
            assert_eq!(Property::from_name(p.name()), Some(p));
        }
    }
}
