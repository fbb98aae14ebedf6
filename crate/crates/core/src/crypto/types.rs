//! Fixed-width value types shared by every AKA derivation.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CryptoError;

macro_rules! fixed_bytes {
    ($(#[$meta:meta])* $name:ident, $len:expr) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
                let arr: [u8; $len] = bytes.try_into().map_err(|_| CryptoError::InvalidLength {
                    what: stringify!($name),
                    expected: $len,
                    actual: bytes.len(),
                })?;
                Ok(Self(arr))
            }

            pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
                let bytes = hex::decode(s).map_err(|_| CryptoError::InvalidInput(format!(
                    "{} is not valid hex: {s:?}",
                    stringify!($name)
                )))?;
                Self::from_slice(&bytes)
            }

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }
        }

        impl From<[u8; $len]> for $name {
            fn from(bytes: [u8; $len]) -> Self {
                Self(bytes)
            }
        }

        impl AsRef<[u8]> for $name {
            fn as_ref(&self) -> &[u8] {
                &self.0
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.to_hex())
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                Self::from_hex(&s).map_err(serde::de::Error::custom)
            }
        }
    };
}

fixed_bytes!(
    /// Long-term subscriber key K shared by the USIM and the home network.
    SubscriberKey,
    16
);
fixed_bytes!(
    /// Authentication challenge RAND.
    Rand,
    16
);
fixed_bytes!(
    /// MAC-A or MAC-S.
    MacTag,
    8
);
fixed_bytes!(
    /// RES / XRES.
    Res,
    8
);
fixed_bytes!(
    /// Anonymity key, output of f5 or f5*.
    Ak,
    6
);
fixed_bytes!(
    /// SQN concealed under an anonymity key.
    ConcealedSqn,
    6
);
fixed_bytes!(
    /// LTE anchor key.
    Kasme,
    32
);
fixed_bytes!(
    /// GSM signed response.
    Sres,
    4
);
fixed_bytes!(
    /// GSM cipher key.
    Kc,
    8
);
fixed_bytes!(Ck, 16);
fixed_bytes!(Ik, 16);

/// 48-bit sequence number.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize,
)]
#[serde(try_from = "u64", into = "u64")]
pub struct Sqn(u64);

impl Sqn {
    pub const MAX: u64 = (1 << 48) - 1;

    pub fn new(value: u64) -> Result<Self, CryptoError> {
        if value > Self::MAX {
            return Err(CryptoError::InvalidInput(format!(
                "SQN {value} exceeds 48 bits"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn to_bytes(self) -> [u8; 6] {
        let be = self.0.to_be_bytes();
        let mut out = [0u8; 6];
        out.copy_from_slice(&be[2..]);
        out
    }

    pub fn from_bytes(bytes: [u8; 6]) -> Self {
        let mut be = [0u8; 8];
        be[2..].copy_from_slice(&bytes);
        Self(u64::from_be_bytes(be))
    }

    /// Next value, wrapping is treated as an error by callers via `None`.
    pub fn checked_add(self, delta: u64) -> Option<Self> {
        self.0
            .checked_add(delta)
            .filter(|v| *v <= Self::MAX)
            .map(Self)
    }
}

impl TryFrom<u64> for Sqn {
    type Error = CryptoError;
    fn try_from(value: u64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Sqn> for u64 {
    fn from(sqn: Sqn) -> u64 {
        sqn.0
    }
}

impl fmt::Display for Sqn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Authentication management field. The most significant bit of the first
/// byte is the network-type separation bit: 1 for EPS vectors, 0 for UMTS.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Amf(pub [u8; 2]);

impl Amf {
    pub const UMTS: Amf = Amf([0x00, 0x00]);
    pub const EPS: Amf = Amf([0x80, 0x00]);
    pub const RESYNC: Amf = Amf([0x00, 0x00]);

    pub fn separation_bit(self) -> bool {
        self.0[0] & 0x80 != 0
    }

    pub fn as_bytes(&self) -> &[u8; 2] {
        &self.0
    }
}

impl fmt::Debug for Amf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Amf({})", hex::encode(self.0))
    }
}

/// CK and IK as produced by f3/f4.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct SessionKeys {
    pub ck: Ck,
    pub ik: Ik,
}

impl SessionKeys {
    /// `CK ‖ IK`.
    pub fn concat(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        out[..16].copy_from_slice(&self.ck.0);
        out[16..].copy_from_slice(&self.ik.0);
        out
    }

    pub fn from_concat(bytes: &[u8; 32]) -> Self {
        let mut ck = [0u8; 16];
        let mut ik = [0u8; 16];
        ck.copy_from_slice(&bytes[..16]);
        ik.copy_from_slice(&bytes[16..]);
        Self {
            ck: Ck(ck),
            ik: Ik(ik),
        }
    }
}

/// Network authentication token: `SQN⊕AK ‖ AMF ‖ MAC-A`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Autn {
    pub concealed_sqn: ConcealedSqn,
    pub amf: Amf,
    pub mac_a: MacTag,
}

impl Autn {
    pub const LEN: usize = 16;

    pub fn to_bytes(&self) -> [u8; 16] {
        let mut out = [0u8; 16];
        out[..6].copy_from_slice(&self.concealed_sqn.0);
        out[6..8].copy_from_slice(&self.amf.0);
        out[8..].copy_from_slice(&self.mac_a.0);
        out
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != Self::LEN {
            return Err(CryptoError::InvalidLength {
                what: "Autn",
                expected: 16,
                actual: bytes.len(),
            });
        }
        Ok(Self {
            concealed_sqn: ConcealedSqn::from_slice(&bytes[..6])?,
            amf: Amf([bytes[6], bytes[7]]),
            mac_a: MacTag::from_slice(&bytes[8..])?,
        })
    }
}

/// Resynchronisation token: `SQN_MS⊕AK* ‖ MAC-S`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Auts {
    pub concealed_sqn_ms: ConcealedSqn,
    pub mac_s: MacTag,
}

impl Auts {
    pub const LEN: usize = 14;

    pub fn to_bytes(&self) -> [u8; 14] {
        let mut out = [0u8; 14];
        out[..6].copy_from_slice(&self.concealed_sqn_ms.0);
        out[6..].copy_from_slice(&self.mac_s.0);
        out
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != Self::LEN {
            return Err(CryptoError::InvalidLength {
                what: "Auts",
                expected: 14,
                actual: bytes.len(),
            });
        }
        Ok(Self {
            concealed_sqn_ms: ConcealedSqn::from_slice(&bytes[..6])?,
            mac_s: MacTag::from_slice(&bytes[6..])?,
        })
    }
}

/// Serving-network identity, 1 to 32 bytes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SnId(Vec<u8>);

impl SnId {
    pub const MAX_LEN: usize = 32;

    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self, CryptoError> {
        let bytes = bytes.into();
        if bytes.is_empty() || bytes.len() > Self::MAX_LEN {
            return Err(CryptoError::InvalidInput(format!(
                "serving network id must be 1..=32 bytes, got {}",
                bytes.len()
            )));
        }
        Ok(Self(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for SnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from_utf8_lossy(&self.0))
    }
}

impl fmt::Debug for SnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SnId({self})")
    }
}

impl std::str::FromStr for SnId {
    type Err = CryptoError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s.as_bytes().to_vec())
    }
}

impl Serialize for SnId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SnId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// UMTS quintet.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct UmtsAv {
    pub rand: Rand,
    pub xres: Res,
    pub keys: SessionKeys,
    pub autn: Autn,
}

/// EPS quadruplet; CK and IK stay in the home network.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct EpsAv {
    pub rand: Rand,
    pub xres: Res,
    pub kasme: Kasme,
    pub autn: Autn,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GsmTriplet {
    pub rand: Rand,
    pub sres: Sres,
    pub kc: Kc,
}
