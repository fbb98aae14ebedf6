use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ProtectionProfile, TransactionId, TransportError};

pub const WIRE_VERSION: u8 = 0x01;

const OFF_VERSION: usize = 0;
const OFF_PROFILE: usize = 1;
const OFF_TID: usize = 2;
const OFF_MSG_TYPE: usize = 6;
const OFF_NONCE: usize = 7;
const OFF_BODY_LEN: usize = 15;
const HEADER_LEN: usize = 17;
const MAC_LEN: usize = 16;

/// Named frame fields, as used by the integrity envelope and by attacker
/// mutations.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireField {
    Version,
    Profile,
    TransactionId,
    MsgType,
    Nonce,
    Body,
    Mac,
}

impl WireField {
    /// The fields a MAC may cover, in wire order.
    pub const HEADER_ORDER: [WireField; 6] = [
        WireField::Version,
        WireField::Profile,
        WireField::TransactionId,
        WireField::MsgType,
        WireField::Nonce,
        WireField::Body,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WireField::Version => "version",
            WireField::Profile => "profile",
            WireField::TransactionId => "transaction_id",
            WireField::MsgType => "msg_type",
            WireField::Nonce => "nonce",
            WireField::Body => "body",
            WireField::Mac => "mac",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::Mac]
            .into_iter()
            .chain(Self::HEADER_ORDER)
            .find(|f| f.name() == name)
    }

    fn fixed_span(self) -> Option<(usize, usize)> {
        match self {
            WireField::Version => Some((OFF_VERSION, 1)),
            WireField::Profile => Some((OFF_PROFILE, 1)),
            WireField::TransactionId => Some((OFF_TID, 4)),
            WireField::MsgType => Some((OFF_MSG_TYPE, 1)),
            WireField::Nonce => Some((OFF_NONCE, 8)),
            WireField::Body | WireField::Mac => None,
        }
    }
}

impl fmt::Display for WireField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    SnToHn,
    HnToSn,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::SnToHn => "sn->hn",
            Direction::HnToSn => "hn->sn",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WireMessage {
    pub version: u8,
    pub profile: u8,
    pub transaction_id: TransactionId,
    pub msg_type: u8,
    pub nonce: [u8; 8],
    pub body: Vec<u8>,
    pub mac: Option<[u8; 16]>,
}

impl WireMessage {
    /// Encoding of one field as it appears on the wire; the body includes its
    /// length prefix.
    pub fn field_bytes(&self, field: WireField) -> Vec<u8> {
        match field {
            WireField::Version => vec![self.version],
            WireField::Profile => vec![self.profile],
            WireField::TransactionId => self.transaction_id.0.to_vec(),
            WireField::MsgType => vec![self.msg_type],
            WireField::Nonce => self.nonce.to_vec(),
            WireField::Body => {
                let mut out = (self.body.len() as u16).to_be_bytes().to_vec();
                out.extend_from_slice(&self.body);
                out
            }
            WireField::Mac => self.mac.map(|m| m.to_vec()).unwrap_or_default(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.body.len() + MAC_LEN);
        for field in WireField::HEADER_ORDER {
            out.extend(self.field_bytes(field));
        }
        if let Some(mac) = self.mac {
            out.extend_from_slice(&mac);
        }
        out
    }
}

fn malformed(msg: impl Into<String>) -> TransportError {
    TransportError::MalformedMessage(msg.into())
}

/// Decodes one frame. Trailing bytes, truncation, an unknown version or
/// profile byte are all rejected.
pub fn parse(bytes: &[u8]) -> Result<WireMessage, TransportError> {
    if bytes.len() < HEADER_LEN {
        return Err(malformed(format!(
            "truncated header: {} bytes",
            bytes.len()
        )));
    }
    let version = bytes[OFF_VERSION];
    if version != WIRE_VERSION {
        return Err(malformed(format!("unsupported version {version:#04x}")));
    }
    let profile_byte = bytes[OFF_PROFILE];
    let profile = ProtectionProfile::from_byte(profile_byte)
        .ok_or_else(|| malformed(format!("unknown profile {profile_byte:#04x}")))?;
    let body_len = u16::from_be_bytes([bytes[OFF_BODY_LEN], bytes[OFF_BODY_LEN + 1]]) as usize;
    let mac_len = if profile.is_protected() { MAC_LEN } else { 0 };
    let expected = HEADER_LEN + body_len + mac_len;
    if bytes.len() != expected {
        return Err(malformed(format!(
            "expected {expected} bytes, got {}",
            bytes.len()
        )));
    }
    let body_end = HEADER_LEN + body_len;
    Ok(WireMessage {
        version,
        profile: profile_byte,
        transaction_id: TransactionId(bytes[OFF_TID..OFF_TID + 4].try_into().unwrap()),
        msg_type: bytes[OFF_MSG_TYPE],
        nonce: bytes[OFF_NONCE..OFF_NONCE + 8].try_into().unwrap(),
        body: bytes[HEADER_LEN..body_end].to_vec(),
        mac: (mac_len > 0).then(|| bytes[body_end..].try_into().unwrap()),
    })
}

fn raw_body_span(bytes: &[u8]) -> Result<(usize, usize), TransportError> {
    if bytes.len() < HEADER_LEN {
        return Err(malformed("truncated header"));
    }
    let len = u16::from_be_bytes([bytes[OFF_BODY_LEN], bytes[OFF_BODY_LEN + 1]]) as usize;
    if bytes.len() < HEADER_LEN + len {
        return Err(malformed("truncated body"));
    }
    Ok((HEADER_LEN, len))
}

/// Reads a field straight from frame bytes by offset, without validating the
/// rest of the frame.
pub fn get_field_raw(bytes: &[u8], field: WireField) -> Result<Vec<u8>, TransportError> {
    if let Some((off, len)) = field.fixed_span() {
        return bytes
            .get(off..off + len)
            .map(<[u8]>::to_vec)
            .ok_or_else(|| malformed("truncated header"));
    }
    let (off, len) = raw_body_span(bytes)?;
    match field {
        WireField::Body => Ok(bytes[off..off + len].to_vec()),
        _ => Ok(bytes[off + len..].to_vec()),
    }
}

/// Overwrites a field in frame bytes. Fixed-width fields keep their width; a
/// new body rewrites the length prefix; the mac is whatever trails the body.
pub fn set_field_raw(
    bytes: &mut Vec<u8>,
    field: WireField,
    value: &[u8],
) -> Result<(), TransportError> {
    if let Some((off, len)) = field.fixed_span() {
        if value.len() != len {
            return Err(malformed(format!(
                "{field} must be {len} bytes, got {}",
                value.len()
            )));
        }
        let slot = bytes
            .get_mut(off..off + len)
            .ok_or_else(|| malformed("truncated header"))?;
        slot.copy_from_slice(value);
        return Ok(());
    }
    let (off, len) = raw_body_span(bytes)?;
    match field {
        WireField::Body => {
            if value.len() > u16::MAX as usize {
                return Err(malformed("body too long"));
            }
            let tail = bytes[off + len..].to_vec();
            bytes.truncate(off);
            bytes.extend_from_slice(value);
            bytes.extend_from_slice(&tail);
            bytes[OFF_BODY_LEN..OFF_BODY_LEN + 2]
                .copy_from_slice(&(value.len() as u16).to_be_bytes());
        }
        _ => {
            bytes.truncate(off + len);
            bytes.extend_from_slice(value);
        }
    }
    Ok(())
}

/// `dir profile hex_bytes`
pub fn hex_dump_line(dir: Direction, profile: ProtectionProfile, bytes: &[u8]) -> String {
    format!("{dir} {profile} {}", hex::encode(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> WireMessage {
        WireMessage {
            version: WIRE_VERSION,
            profile: ProtectionProfile::MapSec.to_byte(),
            transaction_id: TransactionId([1, 2, 3, 4]),
            msg_type: 2,
            nonce: [9; 8],
            body: b"hello".to_vec(),
            mac: Some([7; 16]),
        }
    }

    #[test]
    fn layout_is_fixed() {
        let bytes = sample().encode();
        assert_eq!(bytes.len(), 17 + 5 + 16);
        assert_eq!(&bytes[..7], &[1, 1, 1, 2, 3, 4, 2]);
        assert_eq!(&bytes[15..17], &[0, 5]);
    }

    #[test]
    fn truncation_and_bad_version_rejected() {
        let bytes = sample().encode();
        for cut in [0, 5, 16, 20, bytes.len() - 1] {
            assert!(matches!(
                parse(&bytes[..cut]),
                Err(TransportError::MalformedMessage(_))
            ));
        }
        let mut bad = bytes.clone();
        bad[0] = 0x02;
        assert!(matches!(
            parse(&bad),
            Err(TransportError::MalformedMessage(_))
        ));
        let mut trailing = bytes;
        trailing.push(0);
        assert!(parse(&trailing).is_err());
    }

    #[test]
    fn raw_field_rewrite() {
        let mut bytes = sample().encode();
        set_field_raw(&mut bytes, WireField::TransactionId, &[0xa, 0xb, 0xc, 0xd]).unwrap();
        assert_eq!(
            parse(&bytes).unwrap().transaction_id,
            TransactionId([0xa, 0xb, 0xc, 0xd])
        );
        set_field_raw(&mut bytes, WireField::Body, b"longer body").unwrap();
        let m = parse(&bytes).unwrap();
        assert_eq!(m.body, b"longer body");
        assert_eq!(m.mac, Some([7; 16]));
        assert_eq!(get_field_raw(&bytes, WireField::Mac).unwrap(), vec![7; 16]);
        assert!(set_field_raw(&mut bytes, WireField::Nonce, &[1, 2]).is_err());
    }

    #[test]
    fn hex_dump_format() {
        let line = hex_dump_line(Direction::HnToSn, ProtectionProfile::TcapSec, &[0xab, 0x01]);
        assert_eq!(line, "hn->sn tcapsec ab01");
    }

    fn arb_wire() -> impl Strategy<Value = WireMessage> {
        (
            0u8..4,
            any::<[u8; 4]>(),
            any::<u8>(),
            any::<[u8; 8]>(),
            proptest::collection::vec(any::<u8>(), 0..300),
            any::<[u8; 16]>(),
        )
            .prop_map(|(profile, tid, msg_type, nonce, body, mac)| WireMessage {
                version: WIRE_VERSION,
                profile,
                transaction_id: TransactionId(tid),
                msg_type,
                nonce,
                body,
                mac: (profile != 0).then_some(mac),
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn encode_parse_roundtrip(m in arb_wire()) {
            prop_assert_eq!(parse(&m.encode()).unwrap(), m);
        }
    }
}
