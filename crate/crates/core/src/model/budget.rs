use serde::{Deserialize, Serialize};

/// Environment-interaction budget. Replay steps are tracked separately and
/// only count against `total` when `count_replay_toward_total` is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub total: u64,
    pub used_exploration: u64,
    pub used_replay: u64,
    pub count_replay_toward_total: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(1000, false)
    }
}

impl Budget {
    pub fn new(total: u64, count_replay_toward_total: bool) -> Self {
        Budget { total, used_exploration: 0, used_replay: 0, count_replay_toward_total }
    }

    pub fn used(&self) -> u64 {
        if self.count_replay_toward_total {
            self.used_exploration + self.used_replay
        } else {
            self.used_exploration
        }
    }

    pub fn remaining(&self) -> u64 {
        self.total.saturating_sub(self.used())
    }

    pub fn is_exhausted(&self) -> bool {
        self.remaining() == 0
    }

    /// Whether a replay of `steps` actions fits in what is left.
    pub fn can_replay(&self, steps: u64) -> bool {
        !self.count_replay_toward_total || steps <= self.remaining()
    }

    /// Consumes one exploration step; returns false when nothing is left.
    pub fn take_exploration_step(&mut self) -> bool {
        if self.is_exhausted() {
            return false;
        }
        self.used_exploration += 1;
        true
    }

    pub fn record_replay(&mut self, steps: u64) {
        self.used_replay += steps;
    }
}
