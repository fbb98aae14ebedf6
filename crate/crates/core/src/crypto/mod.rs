//! AKA derivation functions over a single keyed PRF.
//!
//! Every function is `HMAC-SHA-256(key, tag ‖ operands)` truncated to the
//! first `n` bytes, with a one-byte domain-separation tag per function:
//!
//! | function | tag  | output |
//! |----------|------|--------|
//! | f1       | 0x01 | MAC-A (8) |
//! | f1*      | 0x02 | MAC-S (8) |
//! | f2       | 0x03 | RES (8) |
//! | f3       | 0x04 | CK (16) |
//! | f4       | 0x05 | IK (16) |
//! | f5       | 0x06 | AK (6) |
//! | f5*      | 0x07 | AK* (6) |
//! | A3       | 0x08 | SRES (4) |
//! | A8       | 0x09 | Kc (8) |
//! | K_ASME   | 0x10 | K_ASME (32), keyed with CK ‖ IK |
//!
//! Two auxiliary derivations are used by the rest of the crate: a key
//! fingerprint (tag 0x7F) so traces never carry raw keys, and an LTE key
//! confirmation tag (0x20) standing in for the integrity-protected security
//! mode exchange that follows a successful EPS AKA.

mod types;
pub mod vectors;

use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

pub use types::{
    Ak, Amf, Autn, Auts, Ck, ConcealedSqn, EpsAv, GsmTriplet, Ik, Kasme, Kc, MacTag, Rand, Res,
    SessionKeys, SnId, Sqn, Sres, SubscriberKey, UmtsAv,
};

pub const TAG_F1: u8 = 0x01;
pub const TAG_F1_STAR: u8 = 0x02;
pub const TAG_F2: u8 = 0x03;
pub const TAG_F3: u8 = 0x04;
pub const TAG_F4: u8 = 0x05;
pub const TAG_F5: u8 = 0x06;
pub const TAG_F5_STAR: u8 = 0x07;
pub const TAG_GSM_SRES: u8 = 0x08;
pub const TAG_GSM_KC: u8 = 0x09;
pub const TAG_KASME: u8 = 0x10;
pub const TAG_KEY_CONFIRM: u8 = 0x20;
pub const TAG_FINGERPRINT: u8 = 0x7F;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{what} must be {expected} bytes, got {actual}")]
    InvalidLength {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("MAC-S verification failed")]
    MacSFailure,
}

/// `HMAC-SHA-256(key, parts...)` without a domain tag.
pub fn hmac_sha256(key: &[u8], parts: &[&[u8]]) -> [u8; 32] {
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("HMAC accepts keys of any length");
    for part in parts {
        mac.update(part);
    }
    mac.finalize().into_bytes().into()
}

/// Reference PRF: `HMAC-SHA-256(key, tag ‖ parts...)`.
pub fn prf(key: &[u8], tag: u8, parts: &[&[u8]]) -> [u8; 32] {
    let mut all: Vec<&[u8]> = Vec::with_capacity(parts.len() + 1);
    let tag = [tag];
    all.push(&tag);
    all.extend_from_slice(parts);
    hmac_sha256(key, &all)
}

fn trunc<const N: usize>(full: [u8; 32]) -> [u8; N] {
    let mut out = [0u8; N];
    out.copy_from_slice(&full[..N]);
    out
}

fn mac_with_tag(tag: u8, k: &SubscriberKey, rand: &Rand, sqn: Sqn, amf: Amf) -> MacTag {
    MacTag(trunc(prf(&k.0, tag, &[&rand.0, &sqn.to_bytes(), &amf.0])))
}

/// f1: network authentication code MAC-A.
pub fn aka_f1(k: &SubscriberKey, rand: &Rand, sqn: Sqn, amf: Amf) -> MacTag {
    mac_with_tag(TAG_F1, k, rand, sqn, amf)
}

/// f1*: resynchronisation code MAC-S.
pub fn aka_f1_star(k: &SubscriberKey, rand: &Rand, sqn: Sqn, amf: Amf) -> MacTag {
    mac_with_tag(TAG_F1_STAR, k, rand, sqn, amf)
}

/// f2..f5 in one call: `(RES, CK‖IK, AK)`.
pub fn aka_f2345(k: &SubscriberKey, rand: &Rand) -> (Res, SessionKeys, Ak) {
    let res = Res(trunc(prf(&k.0, TAG_F2, &[&rand.0])));
    let ck = Ck(trunc(prf(&k.0, TAG_F3, &[&rand.0])));
    let ik = Ik(trunc(prf(&k.0, TAG_F4, &[&rand.0])));
    let ak = Ak(trunc(prf(&k.0, TAG_F5, &[&rand.0])));
    (res, SessionKeys { ck, ik }, ak)
}

/// f5*: anonymity key concealing SQN_MS inside AUTS.
pub fn aka_f5_star(k: &SubscriberKey, rand: &Rand) -> Ak {
    Ak(trunc(prf(&k.0, TAG_F5_STAR, &[&rand.0])))
}

fn xor6(a: &[u8; 6], b: &[u8; 6]) -> [u8; 6] {
    std::array::from_fn(|i| a[i] ^ b[i])
}

pub fn conceal_sqn(sqn: Sqn, ak: &Ak) -> ConcealedSqn {
    ConcealedSqn(xor6(&sqn.to_bytes(), &ak.0))
}

pub fn build_autn(sqn: Sqn, ak: &Ak, amf: Amf, mac_a: MacTag) -> Autn {
    Autn {
        concealed_sqn: conceal_sqn(sqn, ak),
        amf,
        mac_a,
    }
}

pub fn recover_sqn(autn: &Autn, ak: &Ak) -> Sqn {
    Sqn::from_bytes(xor6(&autn.concealed_sqn.0, &ak.0))
}

/// K_ASME = PRF(CK‖IK, 0x10 ‖ len(sn_id) ‖ sn_id ‖ SQN⊕AK).
pub fn derive_kasme(keys: &SessionKeys, sn_id: &SnId, concealed_sqn: &ConcealedSqn) -> Kasme {
    let id = sn_id.as_bytes();
    // SnId guarantees 1..=32 bytes, so the length always fits one byte
    let len = [id.len() as u8];
    Kasme(prf(
        &keys.concat(),
        TAG_KASME,
        &[&len, id, &concealed_sqn.0],
    ))
}

/// Same derivation from raw key bytes; rejects an empty serving-network id.
pub fn derive_kasme_raw(
    ck_ik: &[u8; 32],
    sn_id: &[u8],
    concealed_sqn: &ConcealedSqn,
) -> Result<Kasme, CryptoError> {
    let sn_id = SnId::new(sn_id.to_vec())?;
    Ok(derive_kasme(
        &SessionKeys::from_concat(ck_ik),
        &sn_id,
        concealed_sqn,
    ))
}

pub fn build_auts(k: &SubscriberKey, rand: &Rand, sqn_ms: Sqn, amf_resync: Amf) -> Auts {
    let ak_star = aka_f5_star(k, rand);
    Auts {
        concealed_sqn_ms: conceal_sqn(sqn_ms, &ak_star),
        mac_s: aka_f1_star(k, rand, sqn_ms, amf_resync),
    }
}

/// Recovers SQN_MS from an AUTS, checking MAC-S under the fixed resync AMF.
pub fn verify_auts(k: &SubscriberKey, rand: &Rand, auts: &Auts) -> Result<Sqn, CryptoError> {
    let ak_star = aka_f5_star(k, rand);
    let sqn_ms = Sqn::from_bytes(xor6(&auts.concealed_sqn_ms.0, &ak_star.0));
    if aka_f1_star(k, rand, sqn_ms, Amf::RESYNC) != auts.mac_s {
        return Err(CryptoError::MacSFailure);
    }
    Ok(sqn_ms)
}

/// GSM A3/A8 analogue: `(SRES, Kc)`.
pub fn gsm_derive(k: &SubscriberKey, rand: &Rand) -> (Sres, Kc) {
    let sres = Sres(trunc(prf(&k.0, TAG_GSM_SRES, &[&rand.0])));
    let kc = Kc(trunc(prf(&k.0, TAG_GSM_KC, &[&rand.0])));
    (sres, kc)
}

/// Key material a run establishes between the user and the serving network.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KeyMaterial {
    Umts(SessionKeys),
    Lte { kasme: Kasme },
    Gsm { kc: Kc },
}

impl KeyMaterial {
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            KeyMaterial::Umts(keys) => keys.concat().to_vec(),
            KeyMaterial::Lte { kasme } => kasme.0.to_vec(),
            KeyMaterial::Gsm { kc } => kc.0.to_vec(),
        }
    }

    pub fn fingerprint(&self) -> KeyFingerprint {
        KeyFingerprint(trunc(prf(&self.to_bytes(), TAG_FINGERPRINT, &[])))
    }
}

/// First 8 bytes of `PRF(key material, 0x7F)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KeyFingerprint(#[serde(with = "hex_array")] pub [u8; 8]);

impl std::fmt::Debug for KeyFingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "KeyFingerprint({})", hex::encode(self.0))
    }
}

impl std::fmt::Display for KeyFingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

mod hex_array {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8; 8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 8], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(&s).map_err(serde::de::Error::custom)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("fingerprint must be 8 bytes"))
    }
}

/// LTE key confirmation sent with RES: `Trunc8 PRF(K_ASME, 0x20 ‖ RAND)`.
pub fn key_confirmation(kasme: &Kasme, rand: &Rand) -> MacTag {
    MacTag(trunc(prf(&kasme.0, TAG_KEY_CONFIRM, &[&rand.0])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Frozen from tools/oracle_vectors.py (Python hmac/hashlib).
    const T1: &str = "630b5f25ac29468d";
    const T2: &str = "3451a969c8874227";
    const V0_RES: &str = "c7d78b5fd8b74988";
    const V0_CK: &str = "b42b07e89d913e95d07a5e1a65702682";
    const V0_IK: &str = "15414e00aad4f7d5da7093a3c21547d1";
    const V0_AK: &str = "c9073a7f5442";
    const AK_STAR0: &str = "2f760f726529";
    const G0_SRES: &str = "1b72d0d5";
    const G0_KC: &str = "abc3822be34e32ba";
    const KAS0: &str = "2a0472c79427d6f625573a117efbb053fcf48e40a4c619db1a0a68e1abfe61ca";

    fn zero_key() -> SubscriberKey {
        SubscriberKey([0; 16])
    }

    fn zero_rand() -> Rand {
        Rand([0; 16])
    }

    fn sqn(v: u64) -> Sqn {
        Sqn::new(v).unwrap()
    }

    #[test]
    fn f1_all_zero_matches_oracle() {
        let t = aka_f1(&zero_key(), &zero_rand(), sqn(0), Amf([0, 0]));
        assert_eq!(t.to_hex(), T1);
        assert_eq!(t, aka_f1(&zero_key(), &zero_rand(), sqn(0), Amf([0, 0])));
    }

    #[test]
    fn f1_single_bit_flips_change_output() {
        let t1 = aka_f1(&zero_key(), &zero_rand(), sqn(0), Amf([0, 0]));
        // 16+16+6+2 input bytes = 320 bit positions
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let bit: usize = rng.gen_range(0..320);
            let mut input = [0u8; 40];
            input[bit / 8] ^= 1 << (bit % 8);
            let k = SubscriberKey::from_slice(&input[..16]).unwrap();
            let rand = Rand::from_slice(&input[16..32]).unwrap();
            let s = Sqn::from_bytes(input[32..38].try_into().unwrap());
            let amf = Amf([input[38], input[39]]);
            assert_ne!(aka_f1(&k, &rand, s, amf), t1, "bit {bit}");
        }
    }

    #[test]
    fn f1_star_all_zero_matches_oracle_and_is_separated() {
        let t2 = aka_f1_star(&zero_key(), &zero_rand(), sqn(0), Amf([0, 0]));
        assert_eq!(t2.to_hex(), T2);
        assert_ne!(t2.to_hex(), T1);
    }

    #[test]
    fn f2345_all_zero_matches_oracle() {
        let (res, keys, ak) = aka_f2345(&zero_key(), &zero_rand());
        assert_eq!(res.to_hex(), V0_RES);
        assert_eq!(keys.ck.to_hex(), V0_CK);
        assert_eq!(keys.ik.to_hex(), V0_IK);
        assert_eq!(ak.to_hex(), V0_AK);
    }

    #[test]
    fn f2345_distinct_keys_give_distinct_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let k1 = SubscriberKey(rng.gen());
            let k2 = SubscriberKey(rng.gen());
            let rand = Rand(rng.gen());
            let a = aka_f2345(&k1, &rand);
            let b = aka_f2345(&k2, &rand);
            assert_ne!(a.0, b.0);
            assert_ne!(a.1.ck, b.1.ck);
            assert_ne!(a.1.ik, b.1.ik);
            assert_ne!(a.2, b.2);
        }
    }

    #[test]
    fn f5_star_all_zero_matches_oracle() {
        let ak_star = aka_f5_star(&zero_key(), &zero_rand());
        assert_eq!(ak_star.to_hex(), AK_STAR0);
        assert_ne!(ak_star.to_hex(), V0_AK);
    }

    #[test]
    fn gsm_all_zero_matches_oracle() {
        let (sres, kc) = gsm_derive(&zero_key(), &zero_rand());
        assert_eq!(sres.to_hex(), G0_SRES);
        assert_eq!(kc.to_hex(), G0_KC);
        let (sres2, _) = gsm_derive(&SubscriberKey([1; 16]), &zero_rand());
        assert_ne!(sres, sres2);
    }

    #[test]
    fn kasme_all_zero_matches_oracle() {
        let keys = SessionKeys::from_concat(&[0; 32]);
        let kasme = derive_kasme(&keys, &"SN-A".parse().unwrap(), &ConcealedSqn([0; 6]));
        assert_eq!(kasme.to_hex(), KAS0);
    }

    #[test]
    fn kasme_binds_serving_network() {
        let (_, keys, _) = aka_f2345(&SubscriberKey([3; 16]), &Rand([9; 16]));
        let c = ConcealedSqn([1, 2, 3, 4, 5, 6]);
        let a = derive_kasme(&keys, &"SN-A".parse().unwrap(), &c);
        let b = derive_kasme(&keys, &"SN-B".parse().unwrap(), &c);
        assert_ne!(a, b);
        assert_eq!(a, derive_kasme(&keys, &"SN-A".parse().unwrap(), &c));
    }

    #[test]
    fn kasme_rejects_empty_sn_id() {
        let err = derive_kasme_raw(&[0; 32], b"", &ConcealedSqn([0; 6])).unwrap_err();
        assert!(matches!(err, CryptoError::InvalidInput(_)));
    }

    #[test]
    fn autn_zero_ak_is_identity_and_roundtrips() {
        let s = sqn(0x0102_0304_0506);
        let autn = build_autn(s, &Ak([0; 6]), Amf::UMTS, MacTag([7; 8]));
        assert_eq!(autn.concealed_sqn.0, s.to_bytes());
        assert_eq!(autn.to_bytes().len(), 16);
        let ak = Ak([0xaa, 0x55, 0x01, 0x02, 0x03, 0xff]);
        let autn = build_autn(s, &ak, Amf::EPS, MacTag([7; 8]));
        assert_eq!(recover_sqn(&autn, &ak), s);
        assert_eq!(Autn::from_slice(&autn.to_bytes()).unwrap(), autn);
    }

    #[test]
    fn auts_roundtrip_and_failures() {
        let k = SubscriberKey([5; 16]);
        let rand = Rand([6; 16]);
        let auts = build_auts(&k, &rand, sqn(42), Amf::RESYNC);
        assert_eq!(auts.to_bytes().len(), 14);
        assert_eq!(auts.mac_s, aka_f1_star(&k, &rand, sqn(42), Amf::RESYNC));
        assert_eq!(verify_auts(&k, &rand, &auts), Ok(sqn(42)));

        let mut tampered = auts;
        tampered.concealed_sqn_ms.0[2] ^= 0x10;
        assert_eq!(
            verify_auts(&k, &rand, &tampered),
            Err(CryptoError::MacSFailure)
        );

        assert_eq!(
            verify_auts(&SubscriberKey([4; 16]), &rand, &auts),
            Err(CryptoError::MacSFailure)
        );
    }

    #[test]
    fn sqn_rejects_values_above_48_bits() {
        assert!(Sqn::new(1 << 48).is_err());
        assert_eq!(Sqn::new(Sqn::MAX).unwrap().to_bytes(), [0xff; 6]);
    }

    #[test]
    fn separation_bit_convention() {
        assert!(Amf::EPS.separation_bit());
        assert!(!Amf::UMTS.separation_bit());
    }

    #[test]
    fn domain_separation_over_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000);
        let mut distinct = 0;
        for _ in 0..1000 {
            let k = SubscriberKey(rng.gen());
            let rand = Rand(rng.gen());
            let s = sqn(rng.gen_range(0..=Sqn::MAX));
            let amf = Amf(rng.gen());
            let (res, keys, ak) = aka_f2345(&k, &rand);
            // compare the common 6-byte prefix of every output
            let outs: Vec<[u8; 6]> = vec![
                aka_f1(&k, &rand, s, amf).0[..6].try_into().unwrap(),
                aka_f1_star(&k, &rand, s, amf).0[..6].try_into().unwrap(),
                res.0[..6].try_into().unwrap(),
                keys.ck.0[..6].try_into().unwrap(),
                keys.ik.0[..6].try_into().unwrap(),
                ak.0,
                aka_f5_star(&k, &rand).0,
            ];
            let mut sorted = outs.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() == outs.len() {
                distinct += 1;
            }
        }
        assert!(distinct >= 990, "only {distinct}/1000 pairwise distinct");
    }

    #[test]
    fn fingerprint_is_deterministic_and_key_dependent() {
        let a = KeyMaterial::Gsm { kc: Kc([1; 8]) };
        let b = KeyMaterial::Gsm { kc: Kc([2; 8]) };
        assert_eq!(a.fingerprint(), a.fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn conceal_recover_roundtrip(s in 0..=Sqn::MAX, ak in any::<[u8; 6]>(), mac in any::<[u8; 8]>(), amf in any::<[u8; 2]>()) {
                let s = Sqn::new(s).unwrap();
                let ak = Ak(ak);
                let autn = build_autn(s, &ak, Amf(amf), MacTag(mac));
                prop_assert_eq!(recover_sqn(&autn, &ak), s);
                prop_assert_eq!(autn.to_bytes().len(), Autn::LEN);
                prop_assert_eq!(Sqn::from_bytes(s.to_bytes()), s);
            }

            #[test]
            fn auts_roundtrip(k in any::<[u8; 16]>(), r in any::<[u8; 16]>(), s in 0..=Sqn::MAX) {
                let (k, r, s) = (SubscriberKey(k), Rand(r), Sqn::new(s).unwrap());
                let auts = build_auts(&k, &r, s, Amf::RESYNC);
                prop_assert_eq!(auts.to_bytes().len(), Auts::LEN);
                prop_assert_eq!(verify_auts(&k, &r, &auts), Ok(s));
            }

            #[test]
            fn kasme_differs_for_distinct_ids(keys in any::<[u8; 32]>(), a in "[A-Z0-9-]{1,32}", b in "[A-Z0-9-]{1,32}", c in any::<[u8; 6]>()) {
                prop_assume!(a != b);
                let keys = SessionKeys::from_concat(&keys);
                let c = ConcealedSqn(c);
                let ka = derive_kasme(&keys, &a.parse().unwrap(), &c);
                let kb = derive_kasme(&keys, &b.parse().unwrap(), &c);
                prop_assert_ne!(ka, kb);
                prop_assert_eq!(ka.0.len(), 32);
            }
        }
    }
}
