use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::crypto::{key_confirmation, KeyMaterial, MacTag, SnId};
use crate::transport::TransactionId;

use super::{
    ct_eq, AuthVector, Imsi, NetworkType, PrincipalError, ProtocolEvent, ResponseStatus,
    ResyncInfo, UserResponse,
};

/// Local handle of one authentication run at a serving network.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct SessionRef(pub u32);

impl fmt::Display for SessionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    AwaitingAv,
    AwaitingResponse,
    Accepted,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnSession {
    pub session_ref: SessionRef,
    pub claimed_imsi: Imsi,
    pub network_type: NetworkType,
    pub sn_id: SnId,
    pub state: SessionState,
    pub av: Option<AuthVector>,
    pub established_keys: Option<KeyMaterial>,
    pub challenges_issued: u32,
}

/// VLR/SGSN or MME.
#[derive(Clone, Debug)]
pub struct ServingNetwork {
    sn_id: SnId,
    sessions: BTreeMap<SessionRef, SnSession>,
    next_ref: u32,
    /// Open dialogues by carrier transaction id. A second dialogue with the
    /// same id replaces the first.
    pending: HashMap<TransactionId, SessionRef>,
    batch_size: u8,
}

impl ServingNetwork {
    pub fn new(sn_id: SnId) -> Self {
        Self {
            sn_id,
            sessions: BTreeMap::new(),
            next_ref: 0,
            pending: HashMap::new(),
            batch_size: 1,
        }
    }

    pub fn with_batch_size(mut self, batch_size: u8) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn sn_id(&self) -> &SnId {
        &self.sn_id
    }

    pub fn session(&self, r: SessionRef) -> Option<&SnSession> {
        self.sessions.get(&r)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &SnSession> {
        self.sessions.values()
    }

    fn new_session(&mut self, claimed_imsi: Imsi, network_type: NetworkType) -> SessionRef {
        let r = SessionRef(self.next_ref);
        self.next_ref += 1;
        self.sessions.insert(
            r,
            SnSession {
                session_ref: r,
                claimed_imsi,
                network_type,
                sn_id: self.sn_id.clone(),
                state: SessionState::AwaitingAv,
                av: None,
                established_keys: None,
                challenges_issued: 0,
            },
        );
        r
    }

    /// Opens a session for `claimed_imsi` and builds its AuthDataRequest.
    pub fn start_auth(
        &mut self,
        claimed_imsi: Imsi,
        network_type: NetworkType,
    ) -> (SessionRef, ProtocolEvent) {
        let r = self.new_session(claimed_imsi.clone(), network_type);
        let request = ProtocolEvent::AuthDataRequest {
            imsi: claimed_imsi,
            network: network_type,
            sn_id: self.sn_id.clone(),
            count: self.batch_size,
            resync: None,
        };
        (r, request)
    }

    /// Records the carrier transaction id the request of `session` went out on.
    pub fn bind_transaction(&mut self, session: SessionRef, tid: TransactionId) {
        self.pending.insert(tid, session);
    }

    /// Closes the dialogue `tid` and returns the session it was opened for.
    /// This lookup is the only link between a returned vector and a
    /// subscriber identity.
    pub fn route_response(&mut self, tid: TransactionId) -> Option<SessionRef> {
        self.pending.remove(&tid)
    }

    fn session_mut(&mut self, r: SessionRef) -> Result<&mut SnSession, PrincipalError> {
        self.sessions
            .get_mut(&r)
            .ok_or(PrincipalError::UnknownSession(r))
    }

    /// Stores the first vector of the response and issues the challenge.
    /// Nothing in the vector is checked against the claimed identity.
    pub fn handle_av_response(
        &mut self,
        r: SessionRef,
        response: &ProtocolEvent,
    ) -> Result<ProtocolEvent, PrincipalError> {
        let sn_id = self.sn_id.clone();
        let session = self.session_mut(r)?;
        if session.state != SessionState::AwaitingAv {
            return Err(PrincipalError::StateError {
                session: r,
                state: session.state,
                op: "accept a vector",
            });
        }
        let ProtocolEvent::AuthDataResponse {
            status, vectors, ..
        } = response
        else {
            return Err(PrincipalError::MalformedBody(
                "expected AuthDataResponse".into(),
            ));
        };
        let usable = vectors.first().filter(|av| {
            *status == ResponseStatus::Ok && av.network_type() == session.network_type
        });
        let Some(av) = usable.copied() else {
            session.state = SessionState::Rejected;
            return Ok(ProtocolEvent::Reject { session: r });
        };
        session.av = Some(av);
        session.state = SessionState::AwaitingResponse;
        session.challenges_issued += 1;
        Ok(ProtocolEvent::Challenge {
            session: r,
            network: session.network_type,
            rand: av.rand(),
            autn: av.autn(),
            sn_id,
        })
    }

    /// Compares RES with XRES (and, for EPS, the key confirmation).
    pub fn verify_user_response(
        &mut self,
        r: SessionRef,
        response: &UserResponse,
        key_confirm: Option<&MacTag>,
    ) -> Result<ProtocolEvent, PrincipalError> {
        let session = self.session_mut(r)?;
        if session.state != SessionState::AwaitingResponse {
            return Err(PrincipalError::StateError {
                session: r,
                state: session.state,
                op: "verify a response",
            });
        }
        let av = session.av.expect("vector present while awaiting response");
        let accepted = match (&av, response) {
            (AuthVector::Umts(av), UserResponse::Res(res)) => {
                ct_eq(&res.0, &av.xres.0).then_some(KeyMaterial::Umts(av.keys))
            }
            (AuthVector::Eps(av), UserResponse::Res(res)) => {
                let expected = key_confirmation(&av.kasme, &av.rand);
                let confirmed = key_confirm.is_some_and(|c| ct_eq(&c.0, &expected.0));
                (ct_eq(&res.0, &av.xres.0) && confirmed)
                    .then_some(KeyMaterial::Lte { kasme: av.kasme })
            }
            (AuthVector::Gsm(t), UserResponse::Sres(sres)) => {
                ct_eq(&sres.0, &t.sres.0).then_some(KeyMaterial::Gsm { kc: t.kc })
            }
            _ => None,
        };
        match accepted {
            Some(keys) => {
                session.state = SessionState::Accepted;
                session.established_keys = Some(keys);
                Ok(ProtocolEvent::Accept { session: r })
            }
            None => {
                session.state = SessionState::Rejected;
                Ok(ProtocolEvent::Reject { session: r })
            }
        }
    }

    /// Authentication failure reported by the user (MAC or separation bit).
    pub fn handle_mac_failure(&mut self, r: SessionRef) -> Result<ProtocolEvent, PrincipalError> {
        let session = self.session_mut(r)?;
        if session.state != SessionState::AwaitingResponse {
            return Err(PrincipalError::StateError {
                session: r,
                state: session.state,
                op: "handle a failure",
            });
        }
        session.state = SessionState::Rejected;
        Ok(ProtocolEvent::Reject { session: r })
    }

    /// Rejects the session and opens a fresh one whose request carries the
    /// resynchronisation data.
    pub fn handle_sync_failure(
        &mut self,
        r: SessionRef,
        auts: crate::crypto::Auts,
    ) -> Result<(SessionRef, ProtocolEvent), PrincipalError> {
        let session = self.session_mut(r)?;
        if session.state != SessionState::AwaitingResponse {
            return Err(PrincipalError::StateError {
                session: r,
                state: session.state,
                op: "resynchronise",
            });
        }
        session.state = SessionState::Rejected;
        let rand = session
            .av
            .expect("vector present while awaiting response")
            .rand();
        let (imsi, network) = (session.claimed_imsi.clone(), session.network_type);
        let (next, mut request) = self.start_auth(imsi, network);
        if let ProtocolEvent::AuthDataRequest { resync, .. } = &mut request {
            *resync = Some(ResyncInfo { rand, auts });
        }
        Ok((next, request))
    }
}
