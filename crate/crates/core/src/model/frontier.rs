use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{hex_string, Fingerprint, Trajectory};

/// Digest reported for a frontier with no entries.
pub const EMPTY_FRONTIER_DIGEST: &str = "empty";

/// The `capacity` highest-value trajectories seen so far, ordered by
/// `(peak_value desc, id desc)`. Equal values keep the newer trajectory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frontier {
    pub capacity: usize,
    pub entries: Vec<Trajectory>,
}

fn rank(a: &Trajectory, b: &Trajectory) -> Ordering {
    b.peak_value.cmp(&a.peak_value).then(b.id.cmp(&a.id))
}

impl Frontier {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "frontier capacity must be positive");
        Frontier { capacity, entries: Vec::with_capacity(capacity + 1) }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Offers `traj` to the frontier. Returns whether it was retained; a
    /// trajectory ranking below the cutoff leaves the frontier untouched.
    pub fn insert(&mut self, traj: Trajectory) -> bool {
        let pos = self.entries.partition_point(|e| rank(e, &traj) == Ordering::Less);
        if pos >= self.capacity {
            return false;
        }
        self.entries.insert(pos, traj);
        self.entries.truncate(self.capacity);
        true
    }

    /// Value-returning form of [`Frontier::insert`].
    pub fn with(&self, traj: Trajectory) -> Frontier {
        let mut next = self.clone();
        next.insert(traj);
        next
    }

    pub fn best(&self) -> Option<&Trajectory> {
        self.entries.first()
    }

    /// Lowest retained value once the frontier is full.
    pub fn cutoff(&self) -> Option<i64> {
        if self.entries.len() < self.capacity {
            None
        } else {
            self.entries.last().map(|t| t.peak_value)
        }
    }

    /// Highest peak among frontier trajectories passing through `fingerprint`.
    /// Every trajectory passes through `root`, the initial state.
    pub fn achieved_value(&self, fingerprint: &Fingerprint, root: &Fingerprint) -> Option<i64> {
        self.entries
            .iter()
            .filter(|t| fingerprint == root || t.contains(fingerprint))
            .map(|t| t.peak_value)
            .max()
    }

    /// Content digest used as the cache key for frontier analyses.
    pub fn digest(&self) -> String {
        if self.entries.is_empty() {
            return EMPTY_FRONTIER_DIGEST.to_string();
        }
        let mut h = Sha256::new();
        for t in &self.entries {
            h.update(t.id.to_le_bytes());
            h.update(t.peak_value.to_le_bytes());
        }
        hex_string(&h.finalize()[..8])
    }

    pub fn ids(&self) -> Vec<u64> {
        self.entries.iter().map(|t| t.id).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::trajectory::tests::steps_from_rewards;
    use proptest::prelude::*;

    fn traj(id: u64, value: i64) -> Trajectory {
        Trajectory::new(id, 0, 0, steps_from_rewards(&[value])).unwrap()
    }

    fn values(f: &Frontier) -> Vec<i64> {
        f.entries.iter().map(|t| t.peak_value).collect()
    }

    #[test]
    fn strict_dominance_replaces() {
        let mut f = Frontier::new(1);
        f.insert(traj(0, 10));
        assert!(f.insert(traj(1, 20)));
        assert_eq!(values(&f), vec![20]);
    }

    #[test]
    fn keeps_top_five() {
        let mut f = Frontier::new(5);
        for (id, v) in [3, 9, 1, 9, 4, 2, 8].into_iter().enumerate() {
            f.insert(traj(id as u64, v));
        }
        assert_eq!(values(&f), vec![9, 9, 8, 4, 3]);
        // equal values ordered newest first
        assert_eq!(f.entries[0].id, 3);
    }

    #[test]
    fn tie_at_cutoff_keeps_newer() {
        let mut f = Frontier::new(5);
        for id in 0..5 {
            f.insert(traj(id, 10 + id as i64));
        }
        assert_eq!(f.cutoff(), Some(10));
        assert!(f.insert(traj(9, 10)));
        assert_eq!(f.entries.last().unwrap().id, 9);
        assert!(!f.ids().contains(&0));
    }

    #[test]
    fn below_cutoff_is_noop() {
        let mut f = Frontier::new(2);
        f.insert(traj(0, 5));
        f.insert(traj(1, 6));
        let before = f.clone();
        assert!(!f.insert(traj(2, 4)));
        assert_eq!(f, before);
        assert_eq!(before.with(traj(3, 1)), before);
    }

    #[test]
    fn achieved_value_examples() {
        let root = Fingerprint::new("root");
        let mut f = Frontier::new(5);
        assert_eq!(f.achieved_value(&Fingerprint::new("f0"), &root), None);
        let mut a = traj(0, 40);
        a.steps[0].fingerprint_after = Fingerprint::new("x");
        let mut b = traj(1, 20);
        b.steps[0].fingerprint_after = Fingerprint::new("x");
        f.insert(a);
        f.insert(b);
        assert_eq!(f.achieved_value(&Fingerprint::new("x"), &root), Some(40));
        assert_eq!(f.achieved_value(&Fingerprint::new("nowhere"), &root), None);
        assert_eq!(f.achieved_value(&root, &root), Some(40));
    }

    #[test]
    fn digest_tracks_contents() {
        let mut f = Frontier::new(2);
        assert_eq!(f.digest(), EMPTY_FRONTIER_DIGEST);
        f.insert(traj(0, 5));
        let d1 = f.digest();
        f.insert(traj(1, 1));
        assert_ne!(f.digest(), d1);
    }

    proptest! {
        #[test]
        fn cutoff_never_decreases(vals in prop::collection::vec(-10i64..50, 1..100), k in 1usize..6) {
            let mut f = Frontier::new(k);
            let mut last = i64::MIN;
            for (id, v) in vals.into_iter().enumerate() {
                f.insert(traj(id as u64, v));
                if let Some(c) = f.cutoff() {
                    prop_assert!(c >= last);
                    last = c;
                }
            }
        }
    }
}
