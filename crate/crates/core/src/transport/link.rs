use std::collections::BTreeSet;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::TransactionId;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransactionIdMode {
    /// Random ids, redrawn on collision with a live id.
    #[default]
    Unique,
    /// The next draw after the first returns an already issued id, once.
    ForceCollision,
}

/// Transaction-id bookkeeping of one SN↔HN link.
#[derive(Clone, Debug, Default)]
pub struct LinkState {
    mode: TransactionIdMode,
    live: BTreeSet<TransactionId>,
    issued: Vec<TransactionId>,
    collision_spent: bool,
}

impl LinkState {
    pub fn new(mode: TransactionIdMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn mode(&self) -> TransactionIdMode {
        self.mode
    }

    pub fn fresh_transaction_id(&mut self, rng: &mut impl RngCore) -> TransactionId {
        if self.mode == TransactionIdMode::ForceCollision && !self.collision_spent {
            if let Some(&prev) = self.issued.last() {
                self.collision_spent = true;
                self.live.insert(prev);
                self.issued.push(prev);
                return prev;
            }
        }
        loop {
            let mut b = [0u8; 4];
            rng.fill_bytes(&mut b);
            let tid = TransactionId(b);
            if self.live.insert(tid) {
                self.issued.push(tid);
                return tid;
            }
        }
    }

    /// Ends the dialogue using `tid`.
    pub fn release(&mut self, tid: TransactionId) {
        self.live.remove(&tid);
    }

    pub fn is_live(&self, tid: &TransactionId) -> bool {
        self.live.contains(tid)
    }

    pub fn issued(&self) -> &[TransactionId] {
        &self.issued
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unique_mode_never_repeats_live_ids() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut link = LinkState::new(TransactionIdMode::Unique);
        let ids: BTreeSet<_> = (0..1000)
            .map(|_| link.fresh_transaction_id(&mut rng))
            .collect();
        assert_eq!(ids.len(), 1000);
    }

    #[test]
    fn force_collision_duplicates_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut link = LinkState::new(TransactionIdMode::ForceCollision);
        let a = link.fresh_transaction_id(&mut rng);
        let b = link.fresh_transaction_id(&mut rng);
        assert_eq!(a, b);
        let rest: BTreeSet<_> = (0..50)
            .map(|_| link.fresh_transaction_id(&mut rng))
            .collect();
        assert_eq!(rest.len(), 50);
        assert!(!rest.contains(&a));
    }

    #[test]
    fn released_ids_are_no_longer_live() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut link = LinkState::default();
        let a = link.fresh_transaction_id(&mut rng);
        assert!(link.is_live(&a));
        link.release(a);
        assert!(!link.is_live(&a));
        assert_eq!(link.issued(), &[a]);
    }
}
