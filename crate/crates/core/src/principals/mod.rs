//! Home network, serving network and USIM state machines.
//!
//! Principals never touch the carrier: they consume and produce
//! [`ProtocolEvent`]s and the scheduler moves those across channels. The
//! serving network binds a returned authentication vector to a session only
//! through the carrier transaction id ([`ServingNetwork::route_response`]);
//! nothing inside the vector names the subscriber it was generated for.

mod codec;
mod home;
mod serving;
mod usim;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{
    Autn, Auts, CryptoError, EpsAv, GsmTriplet, MacTag, Rand, Res, SnId, Sres, UmtsAv,
};

pub use codec::{decode_body, encode_body, MSG_AUTH_DATA_REQUEST, MSG_AUTH_DATA_RESPONSE};
pub use home::{parse_subscriber_db, HomeNetwork, SubscriberRecord, MAX_AV_BATCH};
pub use serving::{ServingNetwork, SessionRef, SessionState, SnSession};
pub use usim::{ue_session_keys, UsimFailure, UsimOutput, UsimState, SQN_WINDOW};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrincipalError {
    #[error("unknown subscriber {0}")]
    UnknownSubscriber(Imsi),
    #[error("AV batch size {0} outside 1..=8")]
    CountOutOfRange(u8),
    #[error("AUTS MAC-S verification failed")]
    MacSFailure,
    #[error("RAND was not issued by this home network for the subscriber")]
    UnknownRand,
    #[error("session {session} is {state:?}, cannot {op}")]
    StateError {
        session: SessionRef,
        state: SessionState,
        op: &'static str,
    },
    #[error("unknown session {0}")]
    UnknownSession(SessionRef),
    #[error("invalid IMSI {0:?}")]
    InvalidImsi(String),
    #[error("malformed body: {0}")]
    MalformedBody(String),
    #[error("subscriber database line {line}: {msg}")]
    Database { line: usize, msg: String },
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Subscriber identity: 6 to 15 decimal digits.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Imsi(String);

impl Imsi {
    pub fn new(digits: impl Into<String>) -> Result<Self, PrincipalError> {
        let digits = digits.into();
        if !(6..=15).contains(&digits.len()) || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(PrincipalError::InvalidImsi(digits));
        }
        Ok(Self(digits))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Imsi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Imsi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Imsi({})", self.0)
    }
}

impl std::str::FromStr for Imsi {
    type Err = PrincipalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl TryFrom<String> for Imsi {
    type Error = PrincipalError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<Imsi> for String {
    fn from(i: Imsi) -> String {
        i.0
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkType {
    Umts,
    Lte,
    Gsm,
}

impl NetworkType {
    pub fn to_byte(self) -> u8 {
        match self {
            NetworkType::Umts => 0,
            NetworkType::Lte => 1,
            NetworkType::Gsm => 2,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        [NetworkType::Umts, NetworkType::Lte, NetworkType::Gsm]
            .into_iter()
            .find(|n| n.to_byte() == b)
    }
}

impl fmt::Display for NetworkType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetworkType::Umts => "umts",
            NetworkType::Lte => "lte",
            NetworkType::Gsm => "gsm",
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AuthVector {
    Umts(UmtsAv),
    Eps(EpsAv),
    Gsm(GsmTriplet),
}

impl AuthVector {
    pub fn rand(&self) -> Rand {
        match self {
            AuthVector::Umts(av) => av.rand,
            AuthVector::Eps(av) => av.rand,
            AuthVector::Gsm(t) => t.rand,
        }
    }

    pub fn autn(&self) -> Option<Autn> {
        match self {
            AuthVector::Umts(av) => Some(av.autn),
            AuthVector::Eps(av) => Some(av.autn),
            AuthVector::Gsm(_) => None,
        }
    }

    pub fn network_type(&self) -> NetworkType {
        match self {
            AuthVector::Umts(_) => NetworkType::Umts,
            AuthVector::Eps(_) => NetworkType::Lte,
            AuthVector::Gsm(_) => NetworkType::Gsm,
        }
    }
}

/// What the user sends back: RES for UMTS/EPS, SRES for GSM.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserResponse {
    Res(Res),
    Sres(Sres),
}

impl UserResponse {
    pub fn as_bytes(&self) -> &[u8] {
        match self {
            UserResponse::Res(r) => r.as_ref(),
            UserResponse::Sres(s) => s.as_ref(),
        }
    }

    /// Interprets raw bytes by length: 8 → RES, 4 → SRES.
    pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
        match bytes.len() {
            4 => Ok(UserResponse::Sres(Sres::from_slice(bytes)?)),
            _ => Ok(UserResponse::Res(Res::from_slice(bytes)?)),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ResyncInfo {
    pub rand: Rand,
    pub auts: Auts,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    Ok,
    UnknownSubscriber,
    ResyncFailed,
    BadRequest,
}

impl ResponseStatus {
    pub fn to_byte(self) -> u8 {
        match self {
            ResponseStatus::Ok => 0,
            ResponseStatus::UnknownSubscriber => 1,
            ResponseStatus::ResyncFailed => 2,
            ResponseStatus::BadRequest => 3,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        [
            Self::Ok,
            Self::UnknownSubscriber,
            Self::ResyncFailed,
            Self::BadRequest,
        ]
        .into_iter()
        .find(|s| s.to_byte() == b)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    AuthDataRequest,
    AuthDataResponse,
    Challenge,
    ChallengeResponse,
    SyncFailure,
    MacFailure,
    Accept,
    Reject,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

/// Messages exchanged between principals. Core-network kinds travel as
/// protected bodies; radio kinds travel in clear.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ProtocolEvent {
    AuthDataRequest {
        imsi: Imsi,
        network: NetworkType,
        sn_id: SnId,
        count: u8,
        resync: Option<ResyncInfo>,
    },
    AuthDataResponse {
        status: ResponseStatus,
        network: NetworkType,
        vectors: Vec<AuthVector>,
    },
    Challenge {
        session: SessionRef,
        network: NetworkType,
        rand: Rand,
        autn: Option<Autn>,
        /// Serving-network identity as broadcast on the radio side.
        sn_id: SnId,
    },
    ChallengeResponse {
        session: SessionRef,
        response: UserResponse,
        key_confirm: Option<MacTag>,
    },
    SyncFailure {
        session: SessionRef,
        auts: Auts,
    },
    MacFailure {
        session: SessionRef,
    },
    Accept {
        session: SessionRef,
    },
    Reject {
        session: SessionRef,
    },
}

impl ProtocolEvent {
    pub fn kind(&self) -> EventKind {
        match self {
            ProtocolEvent::AuthDataRequest { .. } => EventKind::AuthDataRequest,
            ProtocolEvent::AuthDataResponse { .. } => EventKind::AuthDataResponse,
            ProtocolEvent::Challenge { .. } => EventKind::Challenge,
            ProtocolEvent::ChallengeResponse { .. } => EventKind::ChallengeResponse,
            ProtocolEvent::SyncFailure { .. } => EventKind::SyncFailure,
            ProtocolEvent::MacFailure { .. } => EventKind::MacFailure,
            ProtocolEvent::Accept { .. } => EventKind::Accept,
            ProtocolEvent::Reject { .. } => EventKind::Reject,
        }
    }

    /// Session a radio event belongs to.
    pub fn session(&self) -> Option<SessionRef> {
        match self {
            ProtocolEvent::Challenge { session, .. }
            | ProtocolEvent::ChallengeResponse { session, .. }
            | ProtocolEvent::SyncFailure { session, .. }
            | ProtocolEvent::MacFailure { session }
            | ProtocolEvent::Accept { session }
            | ProtocolEvent::Reject { session } => Some(*session),
            _ => None,
        }
    }
}

/// Byte comparison without early exit.
pub(crate) fn ct_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imsi_validation() {
        assert!(Imsi::new("001010000000001").is_ok());
        assert!(Imsi::new("123456").is_ok());
        assert!(Imsi::new("12345").is_err());
        assert!(Imsi::new("1234567890123456").is_err());
        assert!(Imsi::new("00101a").is_err());
    }

    #[test]
    fn user_response_by_length() {
        assert!(matches!(
            UserResponse::from_slice(&[0; 8]),
            Ok(UserResponse::Res(_))
        ));
        assert!(matches!(
            UserResponse::from_slice(&[0; 4]),
            Ok(UserResponse::Sres(_))
        ));
        assert!(UserResponse::from_slice(&[0; 5]).is_err());
    }

    #[test]
    fn constant_time_compare() {
        assert!(ct_eq(b"abc", b"abc"));
        assert!(!ct_eq(b"abc", b"abd"));
        assert!(!ct_eq(b"abc", b"ab"));
    }
}
