//! Body encodings of the two core-network messages.
//!
//! Request:  `imsi_len imsi network sn_len sn_id count resync_flag [rand auts]`
//! Response: `status network count AV*` where a UMTS AV is
//! `rand xres ck ik autn`, an EPS AV `rand xres kasme autn`, a GSM triplet
//! `rand sres kc`.

use crate::crypto::{
    Autn, Auts, EpsAv, GsmTriplet, Kasme, Kc, Rand, Res, SessionKeys, SnId, Sres, UmtsAv,
};

use super::{
    AuthVector, Imsi, NetworkType, PrincipalError, ProtocolEvent, ResponseStatus, ResyncInfo,
};

pub const MSG_AUTH_DATA_REQUEST: u8 = 0x01;
pub const MSG_AUTH_DATA_RESPONSE: u8 = 0x02;

fn bad(msg: impl Into<String>) -> PrincipalError {
    PrincipalError::MalformedBody(msg.into())
}

/// Encodes a core-network event to `(msg_type, body)`. Radio events have no
/// body encoding and yield `None`.
pub fn encode_body(event: &ProtocolEvent) -> Option<(u8, Vec<u8>)> {
    let mut out = Vec::new();
    match event {
        ProtocolEvent::AuthDataRequest {
            imsi,
            network,
            sn_id,
            count,
            resync,
        } => {
            out.push(imsi.as_str().len() as u8);
            out.extend_from_slice(imsi.as_str().as_bytes());
            out.push(network.to_byte());
            out.push(sn_id.as_bytes().len() as u8);
            out.extend_from_slice(sn_id.as_bytes());
            out.push(*count);
            match resync {
                None => out.push(0),
                Some(r) => {
                    out.push(1);
                    out.extend_from_slice(&r.rand.0);
                    out.extend_from_slice(&r.auts.to_bytes());
                }
            }
            Some((MSG_AUTH_DATA_REQUEST, out))
        }
        ProtocolEvent::AuthDataResponse {
            status,
            network,
            vectors,
        } => {
            out.push(status.to_byte());
            out.push(network.to_byte());
            out.push(vectors.len() as u8);
            for av in vectors {
                match av {
                    AuthVector::Umts(av) => {
                        out.extend_from_slice(&av.rand.0);
                        out.extend_from_slice(&av.xres.0);
                        out.extend_from_slice(&av.keys.concat());
                        out.extend_from_slice(&av.autn.to_bytes());
                    }
                    AuthVector::Eps(av) => {
                        out.extend_from_slice(&av.rand.0);
                        out.extend_from_slice(&av.xres.0);
                        out.extend_from_slice(&av.kasme.0);
                        out.extend_from_slice(&av.autn.to_bytes());
                    }
                    AuthVector::Gsm(t) => {
                        out.extend_from_slice(&t.rand.0);
                        out.extend_from_slice(&t.sres.0);
                        out.extend_from_slice(&t.kc.0);
                    }
                }
            }
            Some((MSG_AUTH_DATA_RESPONSE, out))
        }
        _ => None,
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PrincipalError> {
        let end = self.pos + n;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| bad("truncated"))?;
        self.pos = end;
        Ok(s)
    }

    fn byte(&mut self) -> Result<u8, PrincipalError> {
        Ok(self.take(1)?[0])
    }

    fn finish(&self) -> Result<(), PrincipalError> {
        if self.pos != self.buf.len() {
            return Err(bad(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

pub fn decode_body(msg_type: u8, body: &[u8]) -> Result<ProtocolEvent, PrincipalError> {
    let mut r = Reader { buf: body, pos: 0 };
    let event = match msg_type {
        MSG_AUTH_DATA_REQUEST => {
            let n = r.byte()? as usize;
            let imsi = std::str::from_utf8(r.take(n)?).map_err(|_| bad("imsi not utf-8"))?;
            let imsi = Imsi::new(imsi)?;
            let network = NetworkType::from_byte(r.byte()?).ok_or_else(|| bad("network type"))?;
            let n = r.byte()? as usize;
            let sn_id = SnId::new(r.take(n)?.to_vec())?;
            let count = r.byte()?;
            let resync = match r.byte()? {
                0 => None,
                1 => Some(ResyncInfo {
                    rand: Rand::from_slice(r.take(16)?)?,
                    auts: Auts::from_slice(r.take(14)?)?,
                }),
                _ => return Err(bad("resync flag")),
            };
            ProtocolEvent::AuthDataRequest {
                imsi,
                network,
                sn_id,
                count,
                resync,
            }
        }
        MSG_AUTH_DATA_RESPONSE => {
            let status = ResponseStatus::from_byte(r.byte()?).ok_or_else(|| bad("status"))?;
            let network = NetworkType::from_byte(r.byte()?).ok_or_else(|| bad("network type"))?;
            let count = r.byte()?;
            let mut vectors = Vec::with_capacity(count as usize);
            for _ in 0..count {
                let rand = Rand::from_slice(r.take(16)?)?;
                let av = match network {
                    NetworkType::Umts => AuthVector::Umts(UmtsAv {
                        rand,
                        xres: Res::from_slice(r.take(8)?)?,
                        keys: SessionKeys::from_concat(r.take(32)?.try_into().unwrap()),
                        autn: Autn::from_slice(r.take(16)?)?,
                    }),
                    NetworkType::Lte => AuthVector::Eps(EpsAv {
                        rand,
                        xres: Res::from_slice(r.take(8)?)?,
                        kasme: Kasme::from_slice(r.take(32)?)?,
                        autn: Autn::from_slice(r.take(16)?)?,
                    }),
                    NetworkType::Gsm => AuthVector::Gsm(GsmTriplet {
                        rand,
                        sres: Sres::from_slice(r.take(4)?)?,
                        kc: Kc::from_slice(r.take(8)?)?,
                    }),
                };
                vectors.push(av);
            }
            ProtocolEvent::AuthDataResponse {
                status,
                network,
                vectors,
            }
        }
        other => return Err(bad(format!("unknown msg_type {other:#04x}"))),
    };
    r.finish()?;
    Ok(event)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{Amf, Ck, ConcealedSqn, Ik, MacTag};
    use proptest::prelude::*;

    fn autn(b: u8) -> Autn {
        Autn {
            concealed_sqn: ConcealedSqn([b; 6]),
            amf: Amf::EPS,
            mac_a: MacTag([b; 8]),
        }
    }

    fn arb_event() -> impl Strategy<Value = ProtocolEvent> {
        let request = (
            "[0-9]{6,15}",
            0u8..3,
            "[A-Za-z0-9.-]{1,32}",
            1u8..=8,
            proptest::option::of((any::<[u8; 16]>(), any::<[u8; 14]>())),
        )
            .prop_map(
                |(imsi, net, sn, count, resync)| ProtocolEvent::AuthDataRequest {
                    imsi: Imsi::new(imsi).unwrap(),
                    network: NetworkType::from_byte(net).unwrap(),
                    sn_id: sn.parse().unwrap(),
                    count,
                    resync: resync.map(|(rand, auts)| ResyncInfo {
                        rand: Rand(rand),
                        auts: Auts::from_slice(&auts).unwrap(),
                    }),
                },
            );
        let response = (0u8..3, proptest::collection::vec(any::<[u8; 16]>(), 0..4)).prop_map(
            |(net, rands)| {
                let network = NetworkType::from_byte(net).unwrap();
                let vectors = rands
                    .into_iter()
                    .map(|r| match network {
                        NetworkType::Umts => AuthVector::Umts(UmtsAv {
                            rand: Rand(r),
                            xres: Res([r[0]; 8]),
                            keys: SessionKeys {
                                ck: Ck([r[1]; 16]),
                                ik: Ik([r[2]; 16]),
                            },
                            autn: autn(r[3]),
                        }),
                        NetworkType::Lte => AuthVector::Eps(EpsAv {
                            rand: Rand(r),
                            xres: Res([r[0]; 8]),
                            kasme: Kasme([r[1]; 32]),
                            autn: autn(r[3]),
                        }),
                        NetworkType::Gsm => AuthVector::Gsm(GsmTriplet {
                            rand: Rand(r),
                            sres: Sres([r[0]; 4]),
                            kc: Kc([r[1]; 8]),
                        }),
                    })
                    .collect();
                ProtocolEvent::AuthDataResponse {
                    status: ResponseStatus::Ok,
                    network,
                    vectors,
                }
            },
        );
        prop_oneof![request, response]
    }

    proptest! {
        #[test]
        fn body_roundtrip(event in arb_event()) {
            let (ty, body) = encode_body(&event).unwrap();
            prop_assert_eq!(decode_body(ty, &body).unwrap(), event);
        }
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(decode_body(MSG_AUTH_DATA_RESPONSE, &[0, 0, 1, 1, 2]).is_err());
        assert!(decode_body(0x77, &[]).is_err());
        assert!(decode_body(MSG_AUTH_DATA_RESPONSE, &[0, 0, 0, 9]).is_err());
    }
}
