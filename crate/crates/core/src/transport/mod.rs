//! Core-network carrier layer.
//!
//! One fixed frame stands in for MAP/TCAP and Diameter. The four protection
//! profiles differ only in which header fields their MAC covers; the
//! transaction id sits outside the MAPsec envelope and inside the TCAPsec and
//! IPsec ones.
//!
//! Frame layout, big-endian:
//!
//! ```text
//! version(1) profile(1) transaction_id(4) msg_type(1) nonce(8) body_len(2) body mac(16)?
//! ```
//!
//! The MAC is absent under profile `None`.

mod link;
mod wire;

use std::collections::BTreeSet;
use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::hmac_sha256;

pub use link::{LinkState, TransactionIdMode};
pub use wire::{
    get_field_raw, hex_dump_line, parse, set_field_raw, Direction, WireField, WireMessage,
    WIRE_VERSION,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("link keys are required for profile {0}")]
    MissingKeys(ProtectionProfile),
    #[error("integrity check failed")]
    IntegrityError,
    #[error("malformed message: {0}")]
    MalformedMessage(String),
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum ProtectionProfile {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "mapsec")]
    MapSec,
    #[serde(rename = "tcapsec")]
    TcapSec,
    #[serde(rename = "diameter_ipsec")]
    DiameterIpsec,
}

impl ProtectionProfile {
    pub const ALL: [ProtectionProfile; 4] = [
        ProtectionProfile::None,
        ProtectionProfile::MapSec,
        ProtectionProfile::TcapSec,
        ProtectionProfile::DiameterIpsec,
    ];

    pub fn to_byte(self) -> u8 {
        match self {
            ProtectionProfile::None => 0,
            ProtectionProfile::MapSec => 1,
            ProtectionProfile::TcapSec => 2,
            ProtectionProfile::DiameterIpsec => 3,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.to_byte() == b)
    }

    pub fn is_protected(self) -> bool {
        self != ProtectionProfile::None
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtectionProfile::None => "none",
            ProtectionProfile::MapSec => "mapsec",
            ProtectionProfile::TcapSec => "tcapsec",
            ProtectionProfile::DiameterIpsec => "diameter_ipsec",
        }
    }
}

impl fmt::Display for ProtectionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fields covered by the MAC under `profile`.
pub fn integrity_envelope(profile: ProtectionProfile) -> BTreeSet<WireField> {
    use WireField::*;
    let fields: &[WireField] = match profile {
        ProtectionProfile::None => &[],
        ProtectionProfile::MapSec => &[MsgType, Nonce, Body],
        ProtectionProfile::TcapSec => &[TransactionId, MsgType, Nonce, Body],
        ProtectionProfile::DiameterIpsec => {
            &[Version, Profile, TransactionId, MsgType, Nonce, Body]
        }
    };
    fields.iter().copied().collect()
}

/// 4-byte carrier-session identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct TransactionId(pub [u8; 4]);

impl fmt::Debug for TransactionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TransactionId({})", hex::encode(self.0))
    }
}

impl fmt::Display for TransactionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl From<TransactionId> for String {
    fn from(t: TransactionId) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for TransactionId {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        let v = hex::decode(&s).map_err(|e| e.to_string())?;
        Ok(TransactionId(
            v.try_into().map_err(|_| "transaction id must be 4 bytes")?,
        ))
    }
}

/// Encryption and integrity keys of one SN↔HN link.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LinkKeys {
    pub ke: [u8; 16],
    pub km: [u8; 16],
}

impl LinkKeys {
    pub fn generate(rng: &mut impl RngCore) -> Self {
        let mut ke = [0u8; 16];
        let mut km = [0u8; 16];
        rng.fill_bytes(&mut ke);
        loop {
            rng.fill_bytes(&mut km);
            if km != ke {
                break;
            }
        }
        Self { ke, km }
    }
}

/// Keystream XOR: blocks of `PRF(ke, nonce ‖ counter)`.
pub fn apply_keystream(ke: &[u8; 16], nonce: &[u8; 8], data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len());
    for (counter, chunk) in data.chunks(32).enumerate() {
        let block = keystream_block(ke, nonce, counter as u32);
        out.extend(chunk.iter().zip(block.iter()).map(|(d, k)| d ^ k));
    }
    out
}

fn keystream_block(ke: &[u8; 16], nonce: &[u8; 8], counter: u32) -> [u8; 32] {
    hmac_sha256(ke, &[nonce, &counter.to_be_bytes()])
}

fn compute_mac(profile: ProtectionProfile, km: &[u8; 16], wire: &WireMessage) -> [u8; 16] {
    let envelope = integrity_envelope(profile);
    let mut covered = Vec::new();
    // wire order
    for field in WireField::HEADER_ORDER {
        if envelope.contains(&field) {
            covered.extend(wire.field_bytes(field));
        }
    }
    let full = hmac_sha256(km, &[&covered]);
    let mut mac = [0u8; 16];
    mac.copy_from_slice(&full[..16]);
    mac
}

/// Protects `body` with a fresh random nonce.
pub fn protect(
    profile: ProtectionProfile,
    keys: Option<&LinkKeys>,
    transaction_id: TransactionId,
    msg_type: u8,
    body: &[u8],
    rng: &mut impl RngCore,
) -> Result<WireMessage, TransportError> {
    let mut nonce = [0u8; 8];
    rng.fill_bytes(&mut nonce);
    protect_with_nonce(profile, keys, transaction_id, msg_type, body, nonce)
}

pub fn protect_with_nonce(
    profile: ProtectionProfile,
    keys: Option<&LinkKeys>,
    transaction_id: TransactionId,
    msg_type: u8,
    body: &[u8],
    nonce: [u8; 8],
) -> Result<WireMessage, TransportError> {
    if body.len() > u16::MAX as usize {
        return Err(TransportError::MalformedMessage(format!(
            "body of {} bytes",
            body.len()
        )));
    }
    let mut wire = WireMessage {
        version: WIRE_VERSION,
        profile: profile.to_byte(),
        transaction_id,
        msg_type,
        nonce,
        body: body.to_vec(),
        mac: None,
    };
    if profile.is_protected() {
        let keys = keys.ok_or(TransportError::MissingKeys(profile))?;
        wire.body = apply_keystream(&keys.ke, &nonce, body);
        wire.mac = Some(compute_mac(profile, &keys.km, &wire));
    }
    Ok(wire)
}

/// Checks the MAC over the link's envelope and decrypts the body.
///
/// The profile is the link's configured profile; the frame's own profile and
/// version bytes only matter when the envelope covers them.
pub fn unprotect(
    profile: ProtectionProfile,
    keys: Option<&LinkKeys>,
    wire: &WireMessage,
) -> Result<(TransactionId, u8, Vec<u8>), TransportError> {
    if !profile.is_protected() {
        return Ok((wire.transaction_id, wire.msg_type, wire.body.clone()));
    }
    let keys = keys.ok_or(TransportError::MissingKeys(profile))?;
    let mac = wire
        .mac
        .ok_or_else(|| TransportError::MalformedMessage("missing mac".into()))?;
    if compute_mac(profile, &keys.km, wire) != mac {
        return Err(TransportError::IntegrityError);
    }
    let body = apply_keystream(&keys.ke, &wire.nonce, &wire.body);
    Ok((wire.transaction_id, wire.msg_type, body))
}
