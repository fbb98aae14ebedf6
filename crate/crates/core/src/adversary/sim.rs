use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::crypto::{
    aka_f1, aka_f1_star, aka_f2345, aka_f5_star, derive_kasme_raw, gsm_derive, key_confirmation,
    Amf, Autn, Auts, ConcealedSqn, Kasme, KeyMaterial, MacTag, Rand, SnId, Sqn, SubscriberKey,
};
use crate::principals::{
    decode_body, encode_body, ue_session_keys, HomeNetwork, Imsi, NetworkType, ProtocolEvent,
    ResponseStatus, ServingNetwork, SessionRef, SubscriberRecord, UserResponse, UsimFailure,
    UsimOutput, UsimState,
};
use crate::trace::{Actor, MsgId, Peer, ReceiveErrorKind, Trace, TraceEvent, UeFailureKind};
use crate::transport::{
    get_field_raw, hex_dump_line, parse, protect, set_field_raw, unprotect, Direction, LinkKeys,
    LinkState, ProtectionProfile, TransportError, WireField,
};

use super::knowledge::{Knowledge, Sort};
use super::strategy::{Action, Func, InjectEvent, Principal, Strategy, Term};
use super::world::{core_channel, radio_channel, WorldConfig};
use super::StrategyError;

/// Upper bound on deliveries while flushing.
pub const MAX_FLUSH_STEPS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    Hn,
    Sn(SnId),
    Ue(Imsi),
    Attacker,
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Hn => f.write_str("hn"),
            Endpoint::Sn(s) => write!(f, "sn:{s}"),
            Endpoint::Ue(i) => write!(f, "ue:{i}"),
            Endpoint::Attacker => f.write_str("attacker"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Wire(Vec<u8>),
    Clear(ProtocolEvent),
}

#[derive(Clone, Debug)]
pub struct InFlight {
    pub id: MsgId,
    /// Id of the message this one was copied from, or its own id.
    pub origin: MsgId,
    pub channel: String,
    pub dest: Endpoint,
    pub payload: Payload,
    pub delivered: bool,
    pub dropped: bool,
    pub tampered: BTreeSet<String>,
}

impl InFlight {
    pub fn is_pending(&self) -> bool {
        !self.delivered && !self.dropped
    }
}

struct CoreLink {
    profile: ProtectionProfile,
    keys: LinkKeys,
    state: LinkState,
}

struct Channel {
    sn: SnId,
    controlled: bool,
    core: Option<CoreLink>,
}

struct SnNode {
    sn: ServingNetwork,
    network: NetworkType,
}

/// Everything a finished run leaves behind.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub trace: Trace,
    pub knowledge: Knowledge,
    /// Hex dump of every core-network frame as emitted.
    pub wire_log: Vec<String>,
}

pub struct Simulation {
    rng: ChaCha20Rng,
    hn: HomeNetwork,
    sns: BTreeMap<SnId, SnNode>,
    ues: BTreeMap<Imsi, UsimState>,
    channels: BTreeMap<String, Channel>,
    pool: Vec<InFlight>,
    knowledge: Knowledge,
    peers: BTreeMap<(SnId, SessionRef), Peer>,
    trace: Trace,
    wire_log: Vec<String>,
}

impl Simulation {
    pub fn new(world: &WorldConfig, seed: u64) -> Result<Self, StrategyError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut knowledge = Knowledge::new();
        let mut seen = BTreeSet::new();
        for s in &world.subscribers {
            if !seen.insert(s.imsi.clone()) {
                return Err(StrategyError::Config(format!(
                    "duplicate subscriber {}",
                    s.imsi
                )));
            }
            knowledge.learn(Sort::Imsi, s.imsi.as_str().as_bytes().to_vec());
        }
        let hn = HomeNetwork::new(world.subscribers.iter().map(|s| SubscriberRecord {
            imsi: s.imsi.clone(),
            k: s.k,
            sqn_hn: s.sqn_hn,
        }));
        let ues = world
            .subscribers
            .iter()
            .map(|s| {
                (
                    s.imsi.clone(),
                    UsimState::new(s.imsi.clone(), s.k, s.sqn_ms),
                )
            })
            .collect();

        let mut sns = BTreeMap::new();
        let mut channels = BTreeMap::new();
        for c in &world.serving_networks {
            if sns.contains_key(&c.sn_id) {
                return Err(StrategyError::Config(format!(
                    "duplicate serving network {}",
                    c.sn_id
                )));
            }
            knowledge.learn(Sort::SnId, c.sn_id.as_bytes().to_vec());
            sns.insert(
                c.sn_id.clone(),
                SnNode {
                    sn: ServingNetwork::new(c.sn_id.clone()),
                    network: c.network,
                },
            );
            channels.insert(
                radio_channel(&c.sn_id),
                Channel {
                    sn: c.sn_id.clone(),
                    controlled: true,
                    core: None,
                },
            );
        }
        for l in &world.links {
            if !sns.contains_key(&l.sn_id) {
                return Err(StrategyError::UnknownServingNetwork(l.sn_id.to_string()));
            }
            let id = core_channel(&l.sn_id);
            if channels.contains_key(&id) {
                return Err(StrategyError::Config(format!(
                    "second link for {}",
                    l.sn_id
                )));
            }
            let keys = LinkKeys::generate(&mut rng);
            channels.insert(
                id,
                Channel {
                    sn: l.sn_id.clone(),
                    controlled: l.attacker_controlled,
                    core: Some(CoreLink {
                        profile: l.profile,
                        keys,
                        state: LinkState::new(l.tid_mode),
                    }),
                },
            );
        }
        if let Some(sn) = sns
            .keys()
            .find(|sn| !channels.contains_key(&core_channel(sn)))
        {
            return Err(StrategyError::Config(format!(
                "serving network {sn} has no link"
            )));
        }
        Ok(Self {
            rng,
            hn,
            sns,
            ues,
            channels,
            pool: Vec::new(),
            knowledge,
            peers: BTreeMap::new(),
            trace: Trace::default(),
            wire_log: Vec::new(),
        })
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn knowledge(&self) -> &Knowledge {
        &self.knowledge
    }

    pub fn messages(&self) -> &[InFlight] {
        &self.pool
    }

    pub fn is_controlled(&self, channel: &str) -> bool {
        self.channels.get(channel).is_some_and(|c| c.controlled)
    }

    pub fn finish(self) -> RunOutcome {
        RunOutcome {
            trace: self.trace,
            knowledge: self.knowledge,
            wire_log: self.wire_log,
        }
    }

    /// Opens the configured honest sessions, then lets uncontrolled traffic run.
    pub fn start_configured_sessions(&mut self, world: &WorldConfig) -> Result<(), StrategyError> {
        for s in &world.sessions {
            self.start_session(
                Principal::Ue,
                &s.sn_id.to_string(),
                s.imsi.as_str(),
                s.network,
            )?;
        }
        self.settle();
        Ok(())
    }

    /// Executes one attacker action, records it and lets uncontrolled traffic
    /// run. Only errors that make the strategy itself invalid are returned.
    pub fn apply(&mut self, action: &Action) -> Result<(), StrategyError> {
        let result = self.execute(action);
        let (touches, outcome) = match &result {
            Ok(t) => (t.clone(), "ok".to_string()),
            Err(e) => (Vec::new(), format!("failed: {e}")),
        };
        self.trace.push(
            Actor::Attacker,
            TraceEvent::Attacker {
                action: action.to_json(),
                touches,
                outcome,
            },
        );
        match result {
            Err(e) if e.is_fatal() => return Err(e),
            _ => {}
        }
        self.settle();
        Ok(())
    }

    /// Delivers pending messages on channels the attacker does not control.
    pub fn settle(&mut self) {
        while let Some(id) = self
            .pool
            .iter()
            .find(|m| m.is_pending() && !self.is_controlled(&m.channel))
            .map(|m| m.id)
        {
            self.deliver(id);
        }
    }

    /// Delivers everything still pending, oldest first.
    pub fn flush(&mut self) {
        for _ in 0..MAX_FLUSH_STEPS {
            let Some(id) = self.pool.iter().find(|m| m.is_pending()).map(|m| m.id) else {
                return;
            };
            self.deliver(id);
        }
    }

    fn msg(&self, id: u64) -> Result<&InFlight, StrategyError> {
        self.pool
            .get(id as usize)
            .ok_or(StrategyError::DanglingMessage(id))
    }

    fn controlled_msg(&self, id: u64) -> Result<&InFlight, StrategyError> {
        let m = self.msg(id)?;
        if !self.is_controlled(&m.channel) {
            return Err(StrategyError::NotControlled(m.channel.clone()));
        }
        Ok(m)
    }

    fn pending_controlled(&self, id: u64) -> Result<&InFlight, StrategyError> {
        let m = self.controlled_msg(id)?;
        if !m.is_pending() {
            return Err(StrategyError::AlreadyDelivered(id));
        }
        Ok(m)
    }

    fn execute(&mut self, action: &Action) -> Result<Vec<MsgId>, StrategyError> {
        match action {
            Action::DeliverNext { channel } => {
                if !self.channels.contains_key(channel) {
                    return Err(StrategyError::UnknownChannel(channel.clone()));
                }
                if !self.is_controlled(channel) {
                    return Err(StrategyError::NotControlled(channel.clone()));
                }
                let id = self
                    .pool
                    .iter()
                    .find(|m| m.is_pending() && &m.channel == channel)
                    .map(|m| m.id)
                    .ok_or_else(|| StrategyError::NothingPending(channel.clone()))?;
                self.deliver(id);
                Ok(vec![id])
            }
            Action::Drop { msg } => {
                self.pending_controlled(*msg)?;
                self.pool[*msg as usize].dropped = true;
                Ok(vec![MsgId(*msg)])
            }
            Action::Duplicate { msg } => {
                let m = self.controlled_msg(*msg)?.clone();
                let id = self.queue(&m.channel, m.dest, m.payload, Some(m.origin));
                self.pool[id.0 as usize].tampered = m.tampered;
                Ok(vec![MsgId(*msg), id])
            }
            Action::MutateField { msg, field, hex } => {
                let value = hex::decode(hex)
                    .map_err(|_| StrategyError::InvalidValue(format!("not hex: {hex:?}")))?;
                self.pending_controlled(*msg)?;
                self.overwrite(*msg, field, &value)?;
                Ok(vec![MsgId(*msg)])
            }
            Action::SwapField { a, b, field } => {
                let va = get_field(&self.pending_controlled(*a)?.payload, field)
                    .map_err(|e| err_field(*a, field, e))?;
                let vb = get_field(&self.pending_controlled(*b)?.payload, field)
                    .map_err(|e| err_field(*b, field, e))?;
                for (id, v) in [(*a, &vb), (*b, &va)] {
                    self.overwrite(id, field, v)?;
                }
                Ok(vec![MsgId(*a), MsgId(*b)])
            }
            Action::InjectClear { channel, event } => self.inject(channel, event),
            Action::StartSession {
                principal,
                sn,
                imsi,
                network,
            } => {
                self.start_session(*principal, sn, imsi, *network)?;
                Ok(vec![])
            }
            Action::CorruptSubscriber { imsi } => {
                let imsi = Imsi::new(imsi.as_str())
                    .map_err(|_| StrategyError::UnknownSubscriber(imsi.clone()))?;
                let k = self
                    .hn
                    .subscriber(&imsi)
                    .ok_or_else(|| StrategyError::UnknownSubscriber(imsi.to_string()))?
                    .k;
                self.knowledge.learn(Sort::SubscriberKey, k.0.to_vec());
                Ok(vec![])
            }
            Action::RevealLinkKeys { link } => {
                let keys = self
                    .channels
                    .get(link)
                    .and_then(|c| c.core.as_ref())
                    .map(|c| c.keys)
                    .ok_or_else(|| StrategyError::UnknownChannel(link.clone()))?;
                self.knowledge.learn(Sort::LinkEncKey, keys.ke.to_vec());
                self.knowledge.learn(Sort::LinkMacKey, keys.km.to_vec());
                Ok(vec![])
            }
        }
    }

    /// Sets a field, remembering it as tampered when the value changed.
    fn overwrite(&mut self, id: u64, field: &str, value: &[u8]) -> Result<(), StrategyError> {
        let m = &mut self.pool[id as usize];
        let before = get_field(&m.payload, field).map_err(|e| err_field(id, field, e))?;
        set_field(&mut m.payload, field, value).map_err(|e| err_field(id, field, e))?;
        if before != value {
            m.tampered.insert(field.to_string());
        }
        Ok(())
    }

    fn inject(&mut self, channel: &str, event: &InjectEvent) -> Result<Vec<MsgId>, StrategyError> {
        let ch = self
            .channels
            .get(channel)
            .ok_or_else(|| StrategyError::UnknownChannel(channel.to_string()))?;
        if ch.core.is_some() {
            return Err(StrategyError::InvalidValue(format!(
                "{channel} is not a radio channel"
            )));
        }
        let sn = ch.sn.clone();
        let (event, dest) = match event {
            InjectEvent::ChallengeResponse {
                session,
                res,
                key_confirm,
            } => {
                let res = self.eval(res)?;
                let response = UserResponse::from_slice(&res)
                    .map_err(|e| StrategyError::InvalidValue(e.to_string()))?;
                let key_confirm = match key_confirm {
                    Some(t) => Some(MacTag::from_slice(&self.eval(t)?).map_err(invalid)?),
                    None => None,
                };
                (
                    ProtocolEvent::ChallengeResponse {
                        session: SessionRef(*session),
                        response,
                        key_confirm,
                    },
                    Endpoint::Sn(sn),
                )
            }
            InjectEvent::SyncFailure { session, auts } => {
                let auts = Auts::from_slice(&self.eval(auts)?).map_err(invalid)?;
                (
                    ProtocolEvent::SyncFailure {
                        session: SessionRef(*session),
                        auts,
                    },
                    Endpoint::Sn(sn),
                )
            }
            InjectEvent::MacFailure { session } => (
                ProtocolEvent::MacFailure {
                    session: SessionRef(*session),
                },
                Endpoint::Sn(sn),
            ),
            InjectEvent::Challenge {
                to,
                session,
                network,
                rand,
                autn,
                sn_id,
            } => {
                let imsi = Imsi::new(to.as_str())
                    .map_err(|_| StrategyError::UnknownSubscriber(to.clone()))?;
                if !self.ues.contains_key(&imsi) {
                    return Err(StrategyError::UnknownSubscriber(to.clone()));
                }
                let rand = Rand::from_slice(&self.eval(rand)?).map_err(invalid)?;
                let autn = match autn {
                    Some(t) => Some(Autn::from_slice(&self.eval(t)?).map_err(invalid)?),
                    None => None,
                };
                let sn_id = SnId::new(self.eval(sn_id)?).map_err(invalid)?;
                let ev = ProtocolEvent::Challenge {
                    session: SessionRef(*session),
                    network: *network,
                    rand,
                    autn,
                    sn_id,
                };
                (ev, Endpoint::Ue(imsi))
            }
        };
        let id = self.queue(channel, dest, Payload::Clear(event), None);
        self.deliver(id);
        Ok(vec![id])
    }

    fn eval(&self, term: &Term) -> Result<Vec<u8>, StrategyError> {
        match term {
            Term::Hex(h) => {
                hex::decode(h).map_err(|_| StrategyError::InvalidValue(format!("not hex: {h:?}")))
            }
            Term::MsgField { msg, name } => {
                let m = self.controlled_msg(*msg)?;
                get_field(&m.payload, name).map_err(|e| err_field(*msg, name, e))
            }
            Term::Observed {
                channel,
                session,
                name,
            } => {
                if !self.channels.contains_key(channel) {
                    return Err(StrategyError::UnknownChannel(channel.clone()));
                }
                self.pool
                    .iter()
                    .rev()
                    .filter(|m| &m.channel == channel)
                    .filter_map(|m| match &m.payload {
                        Payload::Clear(ev) if ev.session() == Some(SessionRef(*session)) => {
                            get_field(&m.payload, name).ok()
                        }
                        _ => None,
                    })
                    .next()
                    .ok_or_else(|| {
                        StrategyError::NotDerivable(format!(
                            "{name} of session {session} on {channel}"
                        ))
                    })
            }
            Term::SubscriberKey(imsi) => {
                let rec = Imsi::new(imsi.as_str())
                    .ok()
                    .and_then(|i| self.hn.subscriber(&i).cloned())
                    .ok_or_else(|| StrategyError::UnknownSubscriber(imsi.clone()))?;
                if !self
                    .knowledge
                    .base()
                    .iter()
                    .any(|a| a.sort == Sort::SubscriberKey && a.bytes == rec.k.0)
                {
                    return Err(StrategyError::NotDerivable(format!(
                        "key of {imsi} without corruption"
                    )));
                }
                Ok(rec.k.0.to_vec())
            }
            Term::Apply { func, args } => {
                if func.arity().is_some_and(|n| n != args.len()) {
                    return Err(StrategyError::InvalidValue(format!(
                        "{func:?} takes {} arguments",
                        func.arity().unwrap()
                    )));
                }
                let v: Vec<Vec<u8>> = args
                    .iter()
                    .map(|a| self.eval(a))
                    .collect::<Result<_, _>>()?;
                apply_func(*func, &v)
            }
        }
    }

    fn start_session(
        &mut self,
        principal: Principal,
        sn: &str,
        imsi: &str,
        network: Option<NetworkType>,
    ) -> Result<(), StrategyError> {
        let sn_id: SnId = sn
            .parse()
            .map_err(|_| StrategyError::UnknownServingNetwork(sn.to_string()))?;
        let imsi =
            Imsi::new(imsi).map_err(|_| StrategyError::UnknownSubscriber(imsi.to_string()))?;
        let node = self
            .sns
            .get_mut(&sn_id)
            .ok_or_else(|| StrategyError::UnknownServingNetwork(sn.to_string()))?;
        let peer = match principal {
            Principal::Ue if !self.ues.contains_key(&imsi) => {
                return Err(StrategyError::UnknownSubscriber(imsi.to_string()))
            }
            Principal::Ue => Peer::Ue,
            Principal::Attacker => Peer::Attacker,
        };
        let network = network.unwrap_or(node.network);
        let (session, request) = node.sn.start_auth(imsi.clone(), network);
        self.peers.insert((sn_id.clone(), session), peer.clone());
        self.trace.push(
            Actor::Sn {
                sn_id: sn_id.clone(),
            },
            TraceEvent::SessionStarted {
                sn_id: sn_id.clone(),
                session,
                claimed_imsi: imsi,
                network,
                peer,
            },
        );
        self.send_request(&sn_id, session, request);
        Ok(())
    }

    fn send_request(&mut self, sn_id: &SnId, session: SessionRef, request: ProtocolEvent) {
        let link = core_channel(sn_id);
        let resync = matches!(
            &request,
            ProtocolEvent::AuthDataRequest {
                resync: Some(_),
                ..
            }
        );
        let ch = self
            .channels
            .get_mut(&link)
            .expect("every serving network has a link");
        let core = ch.core.as_mut().expect("core channel");
        let tid = core.state.fresh_transaction_id(&mut self.rng);
        let (ty, body) = encode_body(&request).expect("request has a body");
        let wire = protect(
            core.profile,
            Some(&core.keys),
            tid,
            ty,
            &body,
            &mut self.rng,
        )
        .expect("body fits");
        self.sns
            .get_mut(sn_id)
            .expect("known sn")
            .sn
            .bind_transaction(session, tid);
        let msg = MsgId(self.pool.len() as u64);
        self.trace.push(
            Actor::Sn {
                sn_id: sn_id.clone(),
            },
            TraceEvent::RequestSent {
                sn_id: sn_id.clone(),
                session,
                link: link.clone(),
                tid,
                msg,
                resync,
            },
        );
        self.queue(&link, Endpoint::Hn, Payload::Wire(wire.encode()), None);
    }

    fn queue(
        &mut self,
        channel: &str,
        dest: Endpoint,
        payload: Payload,
        origin: Option<MsgId>,
    ) -> MsgId {
        let id = MsgId(self.pool.len() as u64);
        let ch = &self.channels[channel];
        let kind = match &payload {
            Payload::Clear(ev) => Some(ev.kind()),
            Payload::Wire(bytes) => parse(bytes).ok().and_then(|w| decode_kind(w.msg_type)),
        };
        if let (Payload::Wire(bytes), Some(core)) = (&payload, &ch.core) {
            let dir = if dest == Endpoint::Hn {
                Direction::SnToHn
            } else {
                Direction::HnToSn
            };
            self.wire_log.push(hex_dump_line(dir, core.profile, bytes));
        }
        if ch.controlled {
            match (&payload, &ch.core) {
                (Payload::Wire(bytes), Some(core)) => {
                    if let Ok(w) = parse(bytes) {
                        self.knowledge.learn_wire(&w, core.profile.is_protected());
                    }
                }
                (Payload::Clear(ev), _) => self.knowledge.learn_event(ev),
                _ => {}
            }
        }
        self.trace.push(
            Actor::Net,
            TraceEvent::Queued {
                msg: id,
                origin: origin.unwrap_or(id),
                channel: channel.to_string(),
                kind,
            },
        );
        self.pool.push(InFlight {
            id,
            origin: origin.unwrap_or(id),
            channel: channel.to_string(),
            dest,
            payload,
            delivered: false,
            dropped: false,
            tampered: BTreeSet::new(),
        });
        id
    }

    fn receive_error(
        &mut self,
        actor: Actor,
        msg: MsgId,
        kind: ReceiveErrorKind,
        detail: impl Into<String>,
    ) {
        self.trace.push(
            actor,
            TraceEvent::ReceiveError {
                msg,
                kind,
                detail: detail.into(),
            },
        );
    }

    /// Hands one message to its destination.
    pub fn deliver(&mut self, id: MsgId) {
        let m = {
            let m = &mut self.pool[id.0 as usize];
            m.delivered = true;
            m.clone()
        };
        self.trace.push(
            Actor::Net,
            TraceEvent::Delivered {
                msg: id,
                channel: m.channel.clone(),
                to: m.dest.to_string(),
                tampered: m.tampered.iter().cloned().collect(),
            },
        );
        match (&m.dest, &m.payload) {
            (Endpoint::Hn, Payload::Wire(bytes)) => self.hn_receive(&m, bytes),
            (Endpoint::Sn(sn), Payload::Wire(bytes)) => self.sn_receive_core(sn, &m, bytes),
            (Endpoint::Sn(sn), Payload::Clear(ev)) => self.sn_receive_radio(sn, id, ev),
            (Endpoint::Ue(imsi), Payload::Clear(ev)) => self.ue_receive(imsi, &m, ev),
            _ => {}
        }
    }

    fn open_core(
        &mut self,
        actor: &Actor,
        m: &InFlight,
        bytes: &[u8],
    ) -> Option<(crate::transport::TransactionId, ProtocolEvent)> {
        let core = self.channels[&m.channel]
            .core
            .as_ref()
            .expect("core channel");
        let opened = parse(bytes).and_then(|w| unprotect(core.profile, Some(&core.keys), &w));
        let (tid, ty, body) = match opened {
            Ok(x) => x,
            Err(TransportError::IntegrityError) => {
                self.receive_error(
                    actor.clone(),
                    m.id,
                    ReceiveErrorKind::Integrity,
                    "mac mismatch",
                );
                return None;
            }
            Err(e) => {
                self.receive_error(
                    actor.clone(),
                    m.id,
                    ReceiveErrorKind::Malformed,
                    e.to_string(),
                );
                return None;
            }
        };
        match decode_body(ty, &body) {
            Ok(ev) => Some((tid, ev)),
            Err(e) => {
                self.receive_error(
                    actor.clone(),
                    m.id,
                    ReceiveErrorKind::Malformed,
                    e.to_string(),
                );
                None
            }
        }
    }

    fn hn_receive(&mut self, m: &InFlight, bytes: &[u8]) {
        let Some((tid, request)) = self.open_core(&Actor::Hn, m, bytes) else {
            return;
        };
        let ProtocolEvent::AuthDataRequest { imsi, resync, .. } = &request else {
            self.receive_error(
                Actor::Hn,
                m.id,
                ReceiveErrorKind::Malformed,
                "expected auth_data_request",
            );
            return;
        };
        let response = self.hn.handle_request(&request, &mut self.rng);
        let ProtocolEvent::AuthDataResponse {
            status, vectors, ..
        } = &response
        else {
            unreachable!()
        };
        if resync.is_some() {
            let sqn_hn = self.hn.subscriber(imsi).map_or(0, |r| r.sqn_hn.value());
            self.trace.push(
                Actor::Hn,
                TraceEvent::Resync {
                    imsi: imsi.clone(),
                    ok: *status != ResponseStatus::ResyncFailed,
                    sqn_hn,
                },
            );
        }
        let core = self.channels[&m.channel]
            .core
            .as_ref()
            .expect("core channel");
        let (ty, body) = encode_body(&response).expect("response has a body");
        let wire = protect(
            core.profile,
            Some(&core.keys),
            tid,
            ty,
            &body,
            &mut self.rng,
        )
        .expect("body fits");
        let msg = MsgId(self.pool.len() as u64);
        self.trace.push(
            Actor::Hn,
            TraceEvent::AuthDataResponse {
                msg,
                reply_to: m.origin,
                link: m.channel.clone(),
                tid,
                imsi: imsi.clone(),
                status: *status,
                rands: vectors.iter().map(|v| v.rand()).collect(),
            },
        );
        let sn = self.channels[&m.channel].sn.clone();
        self.queue(
            &m.channel,
            Endpoint::Sn(sn),
            Payload::Wire(wire.encode()),
            None,
        );
    }

    fn sn_receive_core(&mut self, sn_id: &SnId, m: &InFlight, bytes: &[u8]) {
        let actor = Actor::Sn {
            sn_id: sn_id.clone(),
        };
        let Some((tid, response)) = self.open_core(&actor, m, bytes) else {
            return;
        };
        if !matches!(response, ProtocolEvent::AuthDataResponse { .. }) {
            self.receive_error(
                actor,
                m.id,
                ReceiveErrorKind::Malformed,
                "expected auth_data_response",
            );
            return;
        }
        let node = self.sns.get_mut(sn_id).expect("known sn");
        let Some(session) = node.sn.route_response(tid) else {
            self.receive_error(
                actor,
                m.id,
                ReceiveErrorKind::UnknownTransaction,
                format!("tid {tid}"),
            );
            return;
        };
        self.channels
            .get_mut(&m.channel)
            .and_then(|c| c.core.as_mut())
            .expect("core")
            .state
            .release(tid);
        self.trace.push(
            actor.clone(),
            TraceEvent::ResponseRouted {
                sn_id: sn_id.clone(),
                link: m.channel.clone(),
                msg: m.id,
                origin: m.origin,
                tid,
                session,
            },
        );
        let node = self.sns.get_mut(sn_id).expect("known sn");
        let outcome = node.sn.handle_av_response(session, &response);
        let s = node.sn.session(session).expect("session exists").clone();
        match outcome {
            Ok(challenge @ ProtocolEvent::Challenge { .. }) => {
                let ProtocolEvent::Challenge { rand, .. } = &challenge else {
                    unreachable!()
                };
                let msg = MsgId(self.pool.len() as u64);
                self.trace.push(
                    actor,
                    TraceEvent::Challenge {
                        sn_id: sn_id.clone(),
                        session,
                        claimed_imsi: s.claimed_imsi.clone(),
                        network: s.network_type,
                        rand: *rand,
                        msg,
                    },
                );
                let dest = match self.peers.get(&(sn_id.clone(), session)) {
                    Some(Peer::Ue) => Endpoint::Ue(s.claimed_imsi.clone()),
                    _ => Endpoint::Attacker,
                };
                self.queue(&radio_channel(sn_id), dest, Payload::Clear(challenge), None);
            }
            Ok(_) => {
                self.trace.push(
                    actor,
                    TraceEvent::Reject {
                        sn_id: sn_id.clone(),
                        session,
                        claimed_imsi: s.claimed_imsi,
                        reason: "no usable vector".into(),
                    },
                );
            }
            Err(e) => self.receive_error(actor, m.id, ReceiveErrorKind::State, e.to_string()),
        };
    }

    fn sn_receive_radio(&mut self, sn_id: &SnId, id: MsgId, ev: &ProtocolEvent) {
        let actor = Actor::Sn {
            sn_id: sn_id.clone(),
        };
        let node = self.sns.get_mut(sn_id).expect("known sn");
        let Some(session) = ev.session() else { return };
        let result = match ev {
            ProtocolEvent::ChallengeResponse {
                response,
                key_confirm,
                ..
            } => node
                .sn
                .verify_user_response(session, response, key_confirm.as_ref())
                .map(|r| (r, "response mismatch", None)),
            ProtocolEvent::MacFailure { .. } => node
                .sn
                .handle_mac_failure(session)
                .map(|r| (r, "authentication failure reported", None)),
            ProtocolEvent::SyncFailure { auts, .. } => {
                node.sn.handle_sync_failure(session, *auts).map(|next| {
                    (
                        ProtocolEvent::Reject { session },
                        "synchronisation failure",
                        Some(next),
                    )
                })
            }
            _ => {
                self.receive_error(
                    actor,
                    id,
                    ReceiveErrorKind::Malformed,
                    format!("unexpected {}", ev.kind()),
                );
                return;
            }
        };
        let (verdict, reason, next) = match result {
            Ok(x) => x,
            Err(e) => {
                self.receive_error(actor, id, ReceiveErrorKind::State, e.to_string());
                return;
            }
        };
        let s = node.sn.session(session).expect("session exists").clone();
        match verdict {
            ProtocolEvent::Accept { .. } => {
                let keys = s.established_keys.expect("accepted session has keys");
                let rand = s.av.expect("accepted session has a vector").rand();
                self.trace.push(
                    actor,
                    TraceEvent::Accept {
                        sn_id: sn_id.clone(),
                        session,
                        claimed_imsi: s.claimed_imsi,
                        network: s.network_type,
                        rand,
                        fingerprint: keys.fingerprint(),
                    },
                );
            }
            _ => {
                self.trace.push(
                    actor.clone(),
                    TraceEvent::Reject {
                        sn_id: sn_id.clone(),
                        session,
                        claimed_imsi: s.claimed_imsi.clone(),
                        reason: reason.into(),
                    },
                );
                if let Some((next, request)) = next {
                    let peer = self
                        .peers
                        .get(&(sn_id.clone(), session))
                        .cloned()
                        .unwrap_or(Peer::Attacker);
                    self.peers.insert((sn_id.clone(), next), peer.clone());
                    self.trace.push(
                        actor,
                        TraceEvent::SessionStarted {
                            sn_id: sn_id.clone(),
                            session: next,
                            claimed_imsi: s.claimed_imsi,
                            network: s.network_type,
                            peer,
                        },
                    );
                    self.send_request(sn_id, next, request);
                }
            }
        }
    }

    fn ue_receive(&mut self, imsi: &Imsi, m: &InFlight, ev: &ProtocolEvent) {
        let ProtocolEvent::Challenge {
            session,
            network,
            rand,
            autn,
            sn_id,
        } = ev
        else {
            return;
        };
        let actor = Actor::Ue { imsi: imsi.clone() };
        let Some(usim) = self.ues.get_mut(imsi) else {
            return;
        };
        let reply = match usim.process_challenge(rand, autn.as_ref(), *network) {
            Ok(out) => {
                let keys = ue_session_keys(&out, *network, sn_id);
                self.trace.push(
                    actor,
                    TraceEvent::UeKeysEstablished {
                        imsi: imsi.clone(),
                        session: *session,
                        rand: *rand,
                        sn_id: sn_id.clone(),
                        network: *network,
                        fingerprint: keys.fingerprint(),
                    },
                );
                let (response, key_confirm) = match (out, &keys) {
                    (UsimOutput::Gsm { sres, .. }, _) => (UserResponse::Sres(sres), None),
                    (UsimOutput::Aka { res, .. }, KeyMaterial::Lte { kasme }) => {
                        (UserResponse::Res(res), Some(key_confirmation(kasme, rand)))
                    }
                    (UsimOutput::Aka { res, .. }, _) => (UserResponse::Res(res), None),
                };
                ProtocolEvent::ChallengeResponse {
                    session: *session,
                    response,
                    key_confirm,
                }
            }
            Err(f) => {
                let reason = match f {
                    UsimFailure::MacFailure => UeFailureKind::MacFailure,
                    UsimFailure::SyncFailure(_) => UeFailureKind::SyncFailure,
                    UsimFailure::SeparationBitError => UeFailureKind::SeparationBit,
                };
                self.trace.push(
                    actor,
                    TraceEvent::UeFailure {
                        imsi: imsi.clone(),
                        session: *session,
                        rand: *rand,
                        reason,
                    },
                );
                match f {
                    UsimFailure::SyncFailure(auts) => ProtocolEvent::SyncFailure {
                        session: *session,
                        auts,
                    },
                    _ => ProtocolEvent::MacFailure { session: *session },
                }
            }
        };
        let sn = self.channels[&m.channel].sn.clone();
        self.queue(&m.channel, Endpoint::Sn(sn), Payload::Clear(reply), None);
    }
}

fn decode_kind(msg_type: u8) -> Option<crate::principals::EventKind> {
    use crate::principals::{EventKind, MSG_AUTH_DATA_REQUEST, MSG_AUTH_DATA_RESPONSE};
    match msg_type {
        MSG_AUTH_DATA_REQUEST => Some(EventKind::AuthDataRequest),
        MSG_AUTH_DATA_RESPONSE => Some(EventKind::AuthDataResponse),
        _ => None,
    }
}

fn invalid(e: impl std::fmt::Display) -> StrategyError {
    StrategyError::InvalidValue(e.to_string())
}

fn err_field(msg: u64, field: &str, detail: String) -> StrategyError {
    StrategyError::InvalidField {
        msg,
        field: field.to_string(),
        detail,
    }
}

/// Reads a named field of a wire frame or a clear radio event.
pub fn get_field(payload: &Payload, name: &str) -> Result<Vec<u8>, String> {
    match payload {
        Payload::Wire(bytes) => {
            let f = WireField::from_name(name).ok_or_else(|| format!("no wire field {name}"))?;
            get_field_raw(bytes, f).map_err(|e| e.to_string())
        }
        Payload::Clear(ev) => clear_field(ev, name),
    }
}

pub fn set_field(payload: &mut Payload, name: &str, value: &[u8]) -> Result<(), String> {
    match payload {
        Payload::Wire(bytes) => {
            let f = WireField::from_name(name).ok_or_else(|| format!("no wire field {name}"))?;
            set_field_raw(bytes, f, value).map_err(|e| e.to_string())
        }
        Payload::Clear(ev) => set_clear_field(ev, name, value),
    }
}

fn clear_field(ev: &ProtocolEvent, name: &str) -> Result<Vec<u8>, String> {
    let missing = || format!("{} has no field {name}", ev.kind());
    if name == "session" {
        return ev
            .session()
            .map(|s| s.0.to_be_bytes().to_vec())
            .ok_or_else(missing);
    }
    match (ev, name) {
        (ProtocolEvent::Challenge { rand, .. }, "rand") => Ok(rand.0.to_vec()),
        (ProtocolEvent::Challenge { autn: Some(a), .. }, "autn") => Ok(a.to_bytes().to_vec()),
        (ProtocolEvent::Challenge { sn_id, .. }, "sn_id") => Ok(sn_id.as_bytes().to_vec()),
        (ProtocolEvent::ChallengeResponse { response, .. }, "res") => {
            Ok(response.as_bytes().to_vec())
        }
        (
            ProtocolEvent::ChallengeResponse {
                key_confirm: Some(k),
                ..
            },
            "key_confirm",
        ) => Ok(k.0.to_vec()),
        (ProtocolEvent::SyncFailure { auts, .. }, "auts") => Ok(auts.to_bytes().to_vec()),
        _ => Err(missing()),
    }
}

fn set_clear_field(ev: &mut ProtocolEvent, name: &str, v: &[u8]) -> Result<(), String> {
    let kind = ev.kind();
    let e = |x: crate::crypto::CryptoError| x.to_string();
    match (ev, name) {
        (
            ProtocolEvent::Challenge { session, .. }
            | ProtocolEvent::ChallengeResponse { session, .. }
            | ProtocolEvent::SyncFailure { session, .. }
            | ProtocolEvent::MacFailure { session }
            | ProtocolEvent::Accept { session }
            | ProtocolEvent::Reject { session },
            "session",
        ) => {
            let b: [u8; 4] = v
                .try_into()
                .map_err(|_| "session takes 4 bytes".to_string())?;
            *session = SessionRef(u32::from_be_bytes(b));
        }
        (ProtocolEvent::Challenge { rand, .. }, "rand") => {
            *rand = Rand::from_slice(v).map_err(e)?
        }
        (ProtocolEvent::Challenge { autn, .. }, "autn") => {
            *autn = Some(Autn::from_slice(v).map_err(e)?)
        }
        (ProtocolEvent::Challenge { sn_id, .. }, "sn_id") => {
            *sn_id = SnId::new(v.to_vec()).map_err(e)?
        }
        (ProtocolEvent::ChallengeResponse { response, .. }, "res") => {
            *response = UserResponse::from_slice(v).map_err(e)?
        }
        (ProtocolEvent::ChallengeResponse { key_confirm, .. }, "key_confirm") => {
            *key_confirm = Some(MacTag::from_slice(v).map_err(e)?)
        }
        (ProtocolEvent::SyncFailure { auts, .. }, "auts") => {
            *auts = Auts::from_slice(v).map_err(e)?
        }
        _ => return Err(format!("{kind} has no field {name}")),
    }
    Ok(())
}

fn apply_func(func: Func, v: &[Vec<u8>]) -> Result<Vec<u8>, StrategyError> {
    let k = || SubscriberKey::from_slice(&v[0]).map_err(invalid);
    let r = || Rand::from_slice(&v[1]).map_err(invalid);
    let sqn_amf = || -> Result<(Sqn, Amf), StrategyError> {
        let sqn: [u8; 6] = v[2]
            .as_slice()
            .try_into()
            .map_err(|_| invalid("sqn takes 6 bytes"))?;
        let amf: [u8; 2] = v[3]
            .as_slice()
            .try_into()
            .map_err(|_| invalid("amf takes 2 bytes"))?;
        Ok((Sqn::from_bytes(sqn), Amf(amf)))
    };
    Ok(match func {
        Func::F1 => {
            let (sqn, amf) = sqn_amf()?;
            aka_f1(&k()?, &r()?, sqn, amf).0.to_vec()
        }
        Func::F1Star => {
            let (sqn, amf) = sqn_amf()?;
            aka_f1_star(&k()?, &r()?, sqn, amf).0.to_vec()
        }
        Func::F2 => aka_f2345(&k()?, &r()?).0 .0.to_vec(),
        Func::F3 => aka_f2345(&k()?, &r()?).1.ck.0.to_vec(),
        Func::F4 => aka_f2345(&k()?, &r()?).1.ik.0.to_vec(),
        Func::F5 => aka_f2345(&k()?, &r()?).2 .0.to_vec(),
        Func::F5Star => aka_f5_star(&k()?, &r()?).0.to_vec(),
        Func::Sres => gsm_derive(&k()?, &r()?).0 .0.to_vec(),
        Func::Kc => gsm_derive(&k()?, &r()?).1 .0.to_vec(),
        Func::Kasme => {
            let ckik: [u8; 32] = v[0]
                .as_slice()
                .try_into()
                .map_err(|_| invalid("ck||ik takes 32 bytes"))?;
            let conc = ConcealedSqn::from_slice(&v[2]).map_err(invalid)?;
            derive_kasme_raw(&ckik, &v[1], &conc)
                .map_err(invalid)?
                .0
                .to_vec()
        }
        Func::KeyConfirm => {
            let kasme = Kasme::from_slice(&v[0]).map_err(invalid)?;
            key_confirmation(&kasme, &r()?).0.to_vec()
        }
        Func::Xor => {
            if v[0].len() != v[1].len() {
                return Err(invalid("xor operands differ in length"));
            }
            v[0].iter().zip(&v[1]).map(|(a, b)| a ^ b).collect()
        }
        Func::Concat => v.concat(),
    })
}

/// Runs a strategy against a fresh world and flushes what remains.
pub fn run(
    world: &WorldConfig,
    strategy: &Strategy,
    seed: u64,
) -> Result<RunOutcome, StrategyError> {
    let mut sim = Simulation::new(world, seed)?;
    sim.start_configured_sessions(world)?;
    for action in &strategy.actions {
        sim.apply(action)?;
    }
    sim.flush();
    Ok(sim.finish())
}
