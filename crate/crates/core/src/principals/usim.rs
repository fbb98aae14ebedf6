use crate::crypto::{
    aka_f1, aka_f2345, build_auts, derive_kasme, gsm_derive, recover_sqn, Amf, Autn, Auts,
    ConcealedSqn, Kc, KeyMaterial, Rand, Res, SessionKeys, SnId, Sqn, Sres, SubscriberKey,
};

use super::{ct_eq, Imsi, NetworkType};

/// Largest accepted forward jump of SQN.
pub const SQN_WINDOW: u64 = 1 << 28;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UsimState {
    pub imsi: Imsi,
    pub k: SubscriberKey,
    /// Highest SQN accepted so far.
    pub sqn_ms: Sqn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UsimFailure {
    MacFailure,
    SyncFailure(Auts),
    SeparationBitError,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UsimOutput {
    Aka {
        res: Res,
        keys: SessionKeys,
        concealed_sqn: ConcealedSqn,
    },
    Gsm {
        sres: Sres,
        kc: Kc,
    },
}

impl UsimState {
    pub fn new(imsi: Imsi, k: SubscriberKey, sqn_ms: Sqn) -> Self {
        Self { imsi, k, sqn_ms }
    }

    /// Verifies AUTN, checks freshness and computes the response.
    ///
    /// GSM challenges carry no AUTN and are answered unconditionally.
    pub fn process_challenge(
        &mut self,
        rand: &Rand,
        autn: Option<&Autn>,
        network: NetworkType,
    ) -> Result<UsimOutput, UsimFailure> {
        if network == NetworkType::Gsm {
            let (sres, kc) = gsm_derive(&self.k, rand);
            return Ok(UsimOutput::Gsm { sres, kc });
        }
        let autn = autn.ok_or(UsimFailure::MacFailure)?;
        let (res, keys, ak) = aka_f2345(&self.k, rand);
        let sqn = recover_sqn(autn, &ak);
        let xmac = aka_f1(&self.k, rand, sqn, autn.amf);
        if !ct_eq(&xmac.0, &autn.mac_a.0) {
            return Err(UsimFailure::MacFailure);
        }
        if network == NetworkType::Lte && !autn.amf.separation_bit() {
            return Err(UsimFailure::SeparationBitError);
        }
        let in_window = sqn > self.sqn_ms && sqn.value() - self.sqn_ms.value() <= SQN_WINDOW;
        if !in_window {
            return Err(UsimFailure::SyncFailure(build_auts(
                &self.k,
                rand,
                self.sqn_ms,
                Amf::RESYNC,
            )));
        }
        self.sqn_ms = sqn;
        Ok(UsimOutput::Aka {
            res,
            keys,
            concealed_sqn: autn.concealed_sqn,
        })
    }
}

/// Key material the UE ends up with. EPS binds K_ASME to the serving-network
/// id the UE saw broadcast.
pub fn ue_session_keys(
    output: &UsimOutput,
    network: NetworkType,
    sn_id_broadcast: &SnId,
) -> KeyMaterial {
    match (output, network) {
        (UsimOutput::Gsm { kc, .. }, _) => KeyMaterial::Gsm { kc: *kc },
        (
            UsimOutput::Aka {
                keys,
                concealed_sqn,
                ..
            },
            NetworkType::Lte,
        ) => KeyMaterial::Lte {
            kasme: derive_kasme(keys, sn_id_broadcast, concealed_sqn),
        },
        (UsimOutput::Aka { keys, .. }, _) => KeyMaterial::Umts(*keys),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::verify_auts;
    use crate::principals::{AuthVector, HomeNetwork, SubscriberRecord};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const K: SubscriberKey = SubscriberKey([0x42; 16]);

    fn imsi() -> Imsi {
        Imsi::new("001010123456789").unwrap()
    }

    fn sn(s: &str) -> SnId {
        s.parse().unwrap()
    }

    fn setup(sqn_hn: u64, sqn_ms: u64) -> (HomeNetwork, UsimState, ChaCha8Rng) {
        let hn = HomeNetwork::new([SubscriberRecord {
            imsi: imsi(),
            k: K,
            sqn_hn: Sqn::new(sqn_hn).unwrap(),
        }]);
        (
            hn,
            UsimState::new(imsi(), K, Sqn::new(sqn_ms).unwrap()),
            ChaCha8Rng::seed_from_u64(9),
        )
    }

    #[test]
    fn honest_challenge_matches_xres_and_keys() {
        let (mut hn, mut usim, mut rng) = setup(0, 0);
        let av = hn
            .generate_avs(&imsi(), 1, NetworkType::Umts, &sn("SN-A"), &mut rng)
            .unwrap()[0];
        let AuthVector::Umts(q) = av else { panic!() };
        let out = usim
            .process_challenge(&q.rand, Some(&q.autn), NetworkType::Umts)
            .unwrap();
        let UsimOutput::Aka { res, keys, .. } = out else {
            panic!()
        };
        assert_eq!(res, q.xres);
        assert_eq!(keys, q.keys);
        assert_eq!(usim.sqn_ms.value(), 1);
        assert_eq!(
            ue_session_keys(&out, NetworkType::Umts, &sn("SN-A")),
            KeyMaterial::Umts(q.keys)
        );
        // no serving-network dependence for UMTS
        assert_eq!(
            ue_session_keys(&out, NetworkType::Umts, &sn("SN-Z")),
            KeyMaterial::Umts(q.keys)
        );
    }

    #[test]
    fn replayed_vector_triggers_sync_failure_with_valid_auts() {
        let (mut hn, mut usim, mut rng) = setup(0, 0);
        let av = hn
            .generate_avs(&imsi(), 1, NetworkType::Umts, &sn("SN-A"), &mut rng)
            .unwrap()[0];
        let autn = av.autn().unwrap();
        usim.process_challenge(&av.rand(), Some(&autn), NetworkType::Umts)
            .unwrap();
        let Err(UsimFailure::SyncFailure(auts)) =
            usim.process_challenge(&av.rand(), Some(&autn), NetworkType::Umts)
        else {
            panic!("expected sync failure");
        };
        assert_eq!(verify_auts(&K, &av.rand(), &auts).unwrap().value(), 1);
        assert_eq!(usim.sqn_ms.value(), 1);
    }

    #[test]
    fn jump_beyond_window_is_rejected() {
        let (mut hn, mut usim, mut rng) = setup(SQN_WINDOW, 0);
        let av = hn
            .generate_avs(&imsi(), 1, NetworkType::Umts, &sn("SN-A"), &mut rng)
            .unwrap()[0];
        let r = usim.process_challenge(&av.rand(), av.autn().as_ref(), NetworkType::Umts);
        assert!(matches!(r, Err(UsimFailure::SyncFailure(_))));

        let (mut hn, mut usim, mut rng) = setup(SQN_WINDOW - 1, 0);
        let av = hn
            .generate_avs(&imsi(), 1, NetworkType::Umts, &sn("SN-A"), &mut rng)
            .unwrap()[0];
        assert!(usim
            .process_challenge(&av.rand(), av.autn().as_ref(), NetworkType::Umts)
            .is_ok());
    }

    #[test]
    fn flipped_mac_byte_is_mac_failure() {
        let (mut hn, mut usim, mut rng) = setup(0, 0);
        let av = hn
            .generate_avs(&imsi(), 1, NetworkType::Umts, &sn("SN-A"), &mut rng)
            .unwrap()[0];
        for i in 0..8 {
            let mut autn = av.autn().unwrap();
            autn.mac_a.0[i] ^= 0x80;
            let r = usim.process_challenge(&av.rand(), Some(&autn), NetworkType::Umts);
            assert_eq!(r, Err(UsimFailure::MacFailure));
        }
        assert_eq!(usim.sqn_ms.value(), 0);
    }

    #[test]
    fn umts_vector_in_lte_run_is_rejected() {
        let (mut hn, mut usim, mut rng) = setup(0, 0);
        let av = hn
            .generate_avs(&imsi(), 1, NetworkType::Umts, &sn("SN-A"), &mut rng)
            .unwrap()[0];
        let r = usim.process_challenge(&av.rand(), av.autn().as_ref(), NetworkType::Lte);
        assert_eq!(r, Err(UsimFailure::SeparationBitError));
    }

    #[test]
    fn lte_kasme_binds_broadcast_id() {
        let (mut hn, mut usim, mut rng) = setup(0, 0);
        let av = hn
            .generate_avs(&imsi(), 1, NetworkType::Lte, &sn("SN-A"), &mut rng)
            .unwrap()[0];
        let AuthVector::Eps(eps) = av else { panic!() };
        let out = usim
            .process_challenge(&eps.rand, Some(&eps.autn), NetworkType::Lte)
            .unwrap();
        assert_eq!(
            ue_session_keys(&out, NetworkType::Lte, &sn("SN-A")),
            KeyMaterial::Lte { kasme: eps.kasme }
        );
        assert_ne!(
            ue_session_keys(&out, NetworkType::Lte, &sn("SN-B")),
            KeyMaterial::Lte { kasme: eps.kasme }
        );
    }

    #[test]
    fn gsm_challenge_answers_with_triplet_values() {
        let (mut hn, mut usim, mut rng) = setup(0, 0);
        let av = hn
            .generate_avs(&imsi(), 1, NetworkType::Gsm, &sn("SN-A"), &mut rng)
            .unwrap()[0];
        let AuthVector::Gsm(t) = av else { panic!() };
        let out = usim
            .process_challenge(&t.rand, None, NetworkType::Gsm)
            .unwrap();
        assert_eq!(
            out,
            UsimOutput::Gsm {
                sres: t.sres,
                kc: t.kc
            }
        );
    }
}
