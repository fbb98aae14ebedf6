use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;

use crate::crypto::{
    aka_f1, aka_f2345, build_autn, derive_kasme, gsm_derive, verify_auts, Amf, Auts, CryptoError,
    EpsAv, GsmTriplet, Rand, SnId, Sqn, SubscriberKey, UmtsAv,
};

use super::{AuthVector, Imsi, NetworkType, PrincipalError, ProtocolEvent, ResponseStatus};

pub const MAX_AV_BATCH: u8 = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubscriberRecord {
    pub imsi: Imsi,
    pub k: SubscriberKey,
    pub sqn_hn: Sqn,
}

/// HLR/AuC or HSS.
#[derive(Clone, Debug, Default)]
pub struct HomeNetwork {
    subscribers: BTreeMap<Imsi, SubscriberRecord>,
    issued: BTreeSet<(Imsi, Rand)>,
}

impl HomeNetwork {
    pub fn new(records: impl IntoIterator<Item = SubscriberRecord>) -> Self {
        Self {
            subscribers: records.into_iter().map(|r| (r.imsi.clone(), r)).collect(),
            issued: BTreeSet::new(),
        }
    }

    pub fn subscriber(&self, imsi: &Imsi) -> Option<&SubscriberRecord> {
        self.subscribers.get(imsi)
    }

    pub fn subscribers(&self) -> impl Iterator<Item = &SubscriberRecord> {
        self.subscribers.values()
    }

    pub fn was_issued(&self, imsi: &Imsi, rand: &Rand) -> bool {
        self.issued.contains(&(imsi.clone(), *rand))
    }

    /// Generates `count` vectors, bumping SQN_HN by one before each.
    pub fn generate_avs(
        &mut self,
        imsi: &Imsi,
        count: u8,
        network: NetworkType,
        sn_id: &SnId,
        rng: &mut impl RngCore,
    ) -> Result<Vec<AuthVector>, PrincipalError> {
        if !(1..=MAX_AV_BATCH).contains(&count) {
            return Err(PrincipalError::CountOutOfRange(count));
        }
        let record = self
            .subscribers
            .get_mut(imsi)
            .ok_or_else(|| PrincipalError::UnknownSubscriber(imsi.clone()))?;
        let mut out = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let mut rand = [0u8; 16];
            rng.fill_bytes(&mut rand);
            let rand = Rand(rand);
            let av = match network {
                NetworkType::Gsm => {
                    let (sres, kc) = gsm_derive(&record.k, &rand);
                    AuthVector::Gsm(GsmTriplet { rand, sres, kc })
                }
                NetworkType::Umts | NetworkType::Lte => {
                    record.sqn_hn = record
                        .sqn_hn
                        .checked_add(1)
                        .ok_or_else(|| CryptoError::InvalidInput("SQN space exhausted".into()))?;
                    let sqn = record.sqn_hn;
                    let amf = if network == NetworkType::Lte {
                        Amf::EPS
                    } else {
                        Amf::UMTS
                    };
                    let mac_a = aka_f1(&record.k, &rand, sqn, amf);
                    let (xres, keys, ak) = aka_f2345(&record.k, &rand);
                    let autn = build_autn(sqn, &ak, amf, mac_a);
                    if network == NetworkType::Lte {
                        let kasme = derive_kasme(&keys, sn_id, &autn.concealed_sqn);
                        AuthVector::Eps(EpsAv {
                            rand,
                            xres,
                            kasme,
                            autn,
                        })
                    } else {
                        AuthVector::Umts(UmtsAv {
                            rand,
                            xres,
                            keys,
                            autn,
                        })
                    }
                }
            };
            self.issued.insert((imsi.clone(), rand));
            out.push(av);
        }
        Ok(out)
    }

    /// Verifies AUTS and moves SQN_HN past the USIM's counter.
    pub fn handle_resync(
        &mut self,
        imsi: &Imsi,
        rand: &Rand,
        auts: &Auts,
    ) -> Result<Sqn, PrincipalError> {
        let record = self
            .subscribers
            .get_mut(imsi)
            .ok_or_else(|| PrincipalError::UnknownSubscriber(imsi.clone()))?;
        if !self.issued.contains(&(imsi.clone(), *rand)) {
            return Err(PrincipalError::UnknownRand);
        }
        let sqn_ms = verify_auts(&record.k, rand, auts).map_err(|_| PrincipalError::MacSFailure)?;
        let next = record
            .sqn_hn
            .max(sqn_ms)
            .checked_add(1)
            .ok_or_else(|| CryptoError::InvalidInput("SQN space exhausted".into()))?;
        record.sqn_hn = next;
        Ok(next)
    }

    /// Serves one AuthDataRequest; any failure is reported in the response
    /// status rather than as an error.
    pub fn handle_request(
        &mut self,
        request: &ProtocolEvent,
        rng: &mut impl RngCore,
    ) -> ProtocolEvent {
        let ProtocolEvent::AuthDataRequest {
            imsi,
            network,
            sn_id,
            count,
            resync,
        } = request
        else {
            return ProtocolEvent::AuthDataResponse {
                status: ResponseStatus::BadRequest,
                network: NetworkType::Umts,
                vectors: vec![],
            };
        };
        let fail = |status| ProtocolEvent::AuthDataResponse {
            status,
            network: *network,
            vectors: vec![],
        };
        if let Some(r) = resync {
            if self.handle_resync(imsi, &r.rand, &r.auts).is_err() {
                return fail(ResponseStatus::ResyncFailed);
            }
        }
        match self.generate_avs(imsi, *count, *network, sn_id, rng) {
            Ok(vectors) => ProtocolEvent::AuthDataResponse {
                status: ResponseStatus::Ok,
                network: *network,
                vectors,
            },
            Err(PrincipalError::UnknownSubscriber(_)) => fail(ResponseStatus::UnknownSubscriber),
            Err(_) => fail(ResponseStatus::BadRequest),
        }
    }
}

/// Parses `imsi hex_k initial_sqn_decimal` lines; blank lines and `#`
/// comments are skipped.
pub fn parse_subscriber_db(text: &str) -> Result<Vec<SubscriberRecord>, PrincipalError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: String| PrincipalError::Database { line: line_no, msg };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [imsi, k, sqn] = fields[..] else {
            return Err(err(format!("expected 3 fields, got {}", fields.len())));
        };
        let imsi = Imsi::new(imsi).map_err(|e| err(e.to_string()))?;
        let k = SubscriberKey::from_hex(k).map_err(|e| err(e.to_string()))?;
        let sqn: u64 = sqn.parse().map_err(|_| err(format!("bad sqn {sqn:?}")))?;
        let sqn_hn = Sqn::new(sqn).map_err(|e| err(e.to_string()))?;
        if !seen.insert(imsi.clone()) {
            return Err(err(format!("duplicate IMSI {imsi}")));
        }
        out.push(SubscriberRecord { imsi, k, sqn_hn });
    }
    Ok(out)
}
