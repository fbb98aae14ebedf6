//! Dolev-Yao style attacker knowledge over typed atoms.
//!
//! The base set only grows as the attacker observes traffic. The closure
//! applies the derivation rules below in rounds until nothing new appears or
//! the depth bound is reached.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::crypto::{
    aka_f1, aka_f1_star, aka_f2345, aka_f5_star, derive_kasme_raw, gsm_derive, key_confirmation,
    Amf, ConcealedSqn, Kasme, Kc, KeyFingerprint, KeyMaterial, Rand, SessionKeys, Sqn,
    SubscriberKey,
};
use crate::principals::{decode_body, AuthVector, ProtocolEvent, UserResponse};
use crate::transport::{apply_keystream, WireMessage};

pub const CLOSURE_DEPTH: usize = 6;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sort {
    SubscriberKey,
    LinkEncKey,
    LinkMacKey,
    Rand,
    Sqn,
    Ak,
    AkStar,
    ConcealedSqn,
    ConcealedSqnMs,
    Amf,
    Mac,
    Res,
    Ck,
    Ik,
    CkIk,
    Kasme,
    SnId,
    Sres,
    Kc,
    Autn,
    Auts,
    Imsi,
    TransactionId,
    Nonce,
    /// Ciphertext of a core body under the given msg_type and nonce.
    Sealed {
        msg_type: u8,
        nonce: [u8; 8],
    },
    /// Cleartext core body.
    Plain {
        msg_type: u8,
    },
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
pub struct Atom {
    pub sort: Sort,
    #[serde(with = "hex_vec")]
    pub bytes: Vec<u8>,
}

mod hex_vec {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Knowledge {
    base: BTreeSet<Atom>,
}

impl Knowledge {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn learn(&mut self, sort: Sort, bytes: impl Into<Vec<u8>>) {
        self.base.insert(Atom {
            sort,
            bytes: bytes.into(),
        });
    }

    pub fn base(&self) -> &BTreeSet<Atom> {
        &self.base
    }

    /// Everything visible in a frame on a tapped link.
    pub fn learn_wire(&mut self, wire: &WireMessage, protected: bool) {
        self.learn(Sort::TransactionId, wire.transaction_id.0.to_vec());
        self.learn(Sort::Nonce, wire.nonce.to_vec());
        if protected {
            self.learn(
                Sort::Sealed {
                    msg_type: wire.msg_type,
                    nonce: wire.nonce,
                },
                wire.body.clone(),
            );
        } else {
            self.learn(
                Sort::Plain {
                    msg_type: wire.msg_type,
                },
                wire.body.clone(),
            );
        }
    }

    pub fn learn_event(&mut self, event: &ProtocolEvent) {
        for atom in event_atoms(event) {
            self.base.insert(atom);
        }
    }

    pub fn closure(&self) -> Closure {
        let mut atoms = self.base.clone();
        let mut rounds = 0;
        while rounds < CLOSURE_DEPTH {
            rounds += 1;
            let new: Vec<Atom> = derive_round(&atoms)
                .into_iter()
                .filter(|a| !atoms.contains(a))
                .collect();
            if new.is_empty() {
                break;
            }
            atoms.extend(new);
        }
        Closure { atoms, rounds }
    }

    pub fn can_derive(&self, target: &[u8]) -> bool {
        self.closure().contains_bytes(target)
    }
}

#[derive(Clone, Debug)]
pub struct Closure {
    atoms: BTreeSet<Atom>,
    pub rounds: usize,
}

impl Closure {
    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.atoms
    }

    pub fn contains(&self, sort: Sort, bytes: &[u8]) -> bool {
        self.atoms.contains(&Atom {
            sort,
            bytes: bytes.to_vec(),
        })
    }

    pub fn contains_bytes(&self, target: &[u8]) -> bool {
        self.atoms.iter().any(|a| a.bytes == target)
    }

    /// Whether some derivable key material has the given fingerprint.
    pub fn derives_key(&self, fp: &KeyFingerprint) -> bool {
        self.atoms.iter().any(|a| {
            let km = match a.sort {
                Sort::CkIk => KeyMaterial::Umts(SessionKeys::from_concat(
                    a.bytes.as_slice().try_into().unwrap(),
                )),
                Sort::Kasme => KeyMaterial::Lte {
                    kasme: Kasme::from_slice(&a.bytes).unwrap(),
                },
                Sort::Kc => KeyMaterial::Gsm {
                    kc: Kc::from_slice(&a.bytes).unwrap(),
                },
                _ => return false,
            };
            km.fingerprint() == *fp
        })
    }

    pub fn is_superset_of(&self, other: &Closure) -> bool {
        self.atoms.is_superset(&other.atoms)
    }
}

fn atom(sort: Sort, bytes: &[u8]) -> Atom {
    Atom {
        sort,
        bytes: bytes.to_vec(),
    }
}

fn event_atoms(event: &ProtocolEvent) -> Vec<Atom> {
    let mut out = Vec::new();
    match event {
        ProtocolEvent::AuthDataRequest {
            imsi,
            sn_id,
            resync,
            ..
        } => {
            out.push(atom(Sort::Imsi, imsi.as_str().as_bytes()));
            out.push(atom(Sort::SnId, sn_id.as_bytes()));
            if let Some(r) = resync {
                out.push(atom(Sort::Rand, &r.rand.0));
                out.push(atom(Sort::Auts, &r.auts.to_bytes()));
            }
        }
        ProtocolEvent::AuthDataResponse { vectors, .. } => {
            for av in vectors {
                out.push(atom(Sort::Rand, &av.rand().0));
                match av {
                    AuthVector::Umts(v) => {
                        out.push(atom(Sort::Res, &v.xres.0));
                        out.push(atom(Sort::CkIk, &v.keys.concat()));
                        out.push(atom(Sort::Autn, &v.autn.to_bytes()));
                    }
                    AuthVector::Eps(v) => {
                        out.push(atom(Sort::Res, &v.xres.0));
                        out.push(atom(Sort::Kasme, &v.kasme.0));
                        out.push(atom(Sort::Autn, &v.autn.to_bytes()));
                    }
                    AuthVector::Gsm(t) => {
                        out.push(atom(Sort::Sres, &t.sres.0));
                        out.push(atom(Sort::Kc, &t.kc.0));
                    }
                }
            }
        }
        ProtocolEvent::Challenge {
            rand, autn, sn_id, ..
        } => {
            out.push(atom(Sort::Rand, &rand.0));
            out.push(atom(Sort::SnId, sn_id.as_bytes()));
            if let Some(a) = autn {
                out.push(atom(Sort::Autn, &a.to_bytes()));
            }
        }
        ProtocolEvent::ChallengeResponse {
            response,
            key_confirm,
            ..
        } => {
            match response {
                UserResponse::Res(r) => out.push(atom(Sort::Res, &r.0)),
                UserResponse::Sres(s) => out.push(atom(Sort::Sres, &s.0)),
            }
            if let Some(k) = key_confirm {
                out.push(atom(Sort::Mac, &k.0));
            }
        }
        ProtocolEvent::SyncFailure { auts, .. } => out.push(atom(Sort::Auts, &auts.to_bytes())),
        _ => {}
    }
    out
}

fn of(atoms: &BTreeSet<Atom>, sort: Sort) -> impl Iterator<Item = &[u8]> {
    atoms
        .iter()
        .filter(move |a| a.sort == sort)
        .map(|a| a.bytes.as_slice())
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

fn derive_round(s: &BTreeSet<Atom>) -> Vec<Atom> {
    let mut out = Vec::new();
    let keys: Vec<SubscriberKey> = of(s, Sort::SubscriberKey)
        .filter_map(|b| SubscriberKey::from_slice(b).ok())
        .collect();
    let rands: Vec<Rand> = of(s, Sort::Rand)
        .filter_map(|b| Rand::from_slice(b).ok())
        .collect();

    for a in s {
        match a.sort {
            Sort::Sealed { msg_type, nonce } => {
                for ke in of(s, Sort::LinkEncKey) {
                    let Ok(ke) = <[u8; 16]>::try_from(ke) else {
                        continue;
                    };
                    let plain = apply_keystream(&ke, &nonce, &a.bytes);
                    if decode_body(msg_type, &plain).is_ok() {
                        out.push(Atom {
                            sort: Sort::Plain { msg_type },
                            bytes: plain,
                        });
                    }
                }
            }
            Sort::Plain { msg_type } => {
                if let Ok(ev) = decode_body(msg_type, &a.bytes) {
                    out.extend(event_atoms(&ev));
                }
            }
            Sort::Autn if a.bytes.len() == 16 => {
                out.push(atom(Sort::ConcealedSqn, &a.bytes[..6]));
                out.push(atom(Sort::Amf, &a.bytes[6..8]));
                out.push(atom(Sort::Mac, &a.bytes[8..]));
            }
            Sort::Auts if a.bytes.len() == 14 => {
                out.push(atom(Sort::ConcealedSqnMs, &a.bytes[..6]));
                out.push(atom(Sort::Mac, &a.bytes[6..]));
            }
            Sort::CkIk if a.bytes.len() == 32 => {
                out.push(atom(Sort::Ck, &a.bytes[..16]));
                out.push(atom(Sort::Ik, &a.bytes[16..]));
            }
            _ => {}
        }
    }

    for ck in of(s, Sort::Ck) {
        for ik in of(s, Sort::Ik) {
            out.push(atom(Sort::CkIk, &[ck, ik].concat()));
        }
    }

    for k in &keys {
        for r in &rands {
            let (res, ks, ak) = aka_f2345(k, r);
            out.push(atom(Sort::Res, &res.0));
            out.push(atom(Sort::Ck, &ks.ck.0));
            out.push(atom(Sort::Ik, &ks.ik.0));
            out.push(atom(Sort::Ak, &ak.0));
            out.push(atom(Sort::AkStar, &aka_f5_star(k, r).0));
            let (sres, kc) = gsm_derive(k, r);
            out.push(atom(Sort::Sres, &sres.0));
            out.push(atom(Sort::Kc, &kc.0));
            for sqn in of(s, Sort::Sqn) {
                let Ok(sqn6) = <[u8; 6]>::try_from(sqn) else {
                    continue;
                };
                let sqn = Sqn::from_bytes(sqn6);
                for amf in of(s, Sort::Amf) {
                    let Ok(amf) = <[u8; 2]>::try_from(amf) else {
                        continue;
                    };
                    out.push(atom(Sort::Mac, &aka_f1(k, r, sqn, Amf(amf)).0));
                    out.push(atom(Sort::Mac, &aka_f1_star(k, r, sqn, Amf(amf)).0));
                }
            }
        }
    }

    for (conc, mask, unmask) in [
        (Sort::ConcealedSqn, Sort::Ak, Sort::Sqn),
        (Sort::ConcealedSqnMs, Sort::AkStar, Sort::Sqn),
    ] {
        for c in of(s, conc) {
            for m in of(s, mask) {
                out.push(atom(unmask, &xor(c, m)));
            }
            for q in of(s, Sort::Sqn) {
                out.push(atom(mask, &xor(c, q)));
            }
        }
    }

    for ckik in of(s, Sort::CkIk) {
        for sn in of(s, Sort::SnId) {
            for conc in of(s, Sort::ConcealedSqn) {
                let (Ok(ckik), Ok(conc)) =
                    (<&[u8; 32]>::try_from(ckik), ConcealedSqn::from_slice(conc))
                else {
                    continue;
                };
                if let Ok(k) = derive_kasme_raw(ckik, sn, &conc) {
                    out.push(atom(Sort::Kasme, &k.0));
                }
            }
        }
    }

    for kasme in of(s, Sort::Kasme) {
        let Ok(kasme) = Kasme::from_slice(kasme) else {
            continue;
        };
        for r in &rands {
            out.push(atom(Sort::Mac, &key_confirmation(&kasme, r).0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::principals::{encode_body, HomeNetwork, Imsi, NetworkType, SubscriberRecord};
    use crate::transport::{protect_with_nonce, LinkKeys, ProtectionProfile, TransactionId};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn response() -> (ProtocolEvent, SubscriberKey) {
        let k = SubscriberKey([7; 16]);
        let imsi = Imsi::new("001010000000001").unwrap();
        let mut hn = HomeNetwork::new([SubscriberRecord {
            imsi: imsi.clone(),
            k,
            sqn_hn: Sqn::new(3).unwrap(),
        }]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vectors = hn
            .generate_avs(
                &imsi,
                1,
                NetworkType::Umts,
                &"SN-A".parse().unwrap(),
                &mut rng,
            )
            .unwrap();
        (
            ProtocolEvent::AuthDataResponse {
                status: crate::principals::ResponseStatus::Ok,
                network: NetworkType::Umts,
                vectors,
            },
            k,
        )
    }

    #[test]
    fn ciphertext_needs_the_encryption_key() {
        let (ev, _) = response();
        let (ty, body) = encode_body(&ev).unwrap();
        let keys = LinkKeys {
            ke: [1; 16],
            km: [2; 16],
        };
        let wire = protect_with_nonce(
            ProtectionProfile::MapSec,
            Some(&keys),
            TransactionId([0; 4]),
            ty,
            &body,
            [3; 8],
        )
        .unwrap();
        let mut kn = Knowledge::new();
        kn.learn_wire(&wire, true);
        assert!(!kn.can_derive(&body));
        kn.learn(Sort::LinkEncKey, keys.ke.to_vec());
        assert!(kn.can_derive(&body));
        let ProtocolEvent::AuthDataResponse { vectors, .. } = &ev else {
            unreachable!()
        };
        let AuthVector::Umts(av) = vectors[0] else {
            unreachable!()
        };
        assert!(kn.closure().contains(Sort::CkIk, &av.keys.concat()));
    }

    #[test]
    fn subscriber_key_and_rand_give_session_keys_and_sqn() {
        let (ev, k) = response();
        let ProtocolEvent::AuthDataResponse { vectors, .. } = &ev else {
            unreachable!()
        };
        let AuthVector::Umts(av) = vectors[0] else {
            unreachable!()
        };
        let mut kn = Knowledge::new();
        kn.learn_event(&ProtocolEvent::Challenge {
            session: crate::principals::SessionRef(0),
            network: NetworkType::Umts,
            rand: av.rand,
            autn: Some(av.autn),
            sn_id: "SN-A".parse().unwrap(),
        });
        assert!(!kn
            .closure()
            .derives_key(&KeyMaterial::Umts(av.keys).fingerprint()));
        kn.learn(Sort::SubscriberKey, k.0.to_vec());
        let c = kn.closure();
        assert!(c.derives_key(&KeyMaterial::Umts(av.keys).fingerprint()));
        assert!(c.contains(Sort::Sqn, &Sqn::new(4).unwrap().to_bytes()));
        assert!(c.contains(Sort::Mac, &av.autn.mac_a.0));
        assert!(c.rounds <= CLOSURE_DEPTH);
    }

    #[test]
    fn closure_is_monotone_in_base() {
        let (ev, k) = response();
        let mut small = Knowledge::new();
        small.learn_event(&ev);
        let mut big = small.clone();
        big.learn(Sort::SubscriberKey, k.0.to_vec());
        assert!(big.closure().is_superset_of(&small.closure()));
    }
}
