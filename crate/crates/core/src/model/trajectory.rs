use serde::{Deserialize, Serialize};

use super::{Fingerprint, ModelError};

/// One environment transition as recorded in a trajectory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub action: String,
    pub observation: String,
    pub reward: i64,
    pub score_after: i64,
    pub done: bool,
    /// Actions offered by the environment before `action` was taken.
    pub valid_actions: Vec<String>,
    pub fingerprint_after: Fingerprint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inventory: Option<String>,
}

/// A complete episode rooted at the environment's initial state: the replayed
/// archive prefix followed by the exploration suffix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: u64,
    pub seed: u64,
    pub prefix_len: usize,
    pub steps: Vec<Step>,
    pub peak_value: i64,
    pub final_value: i64,
}

/// Maximum cumulative reward over all prefixes of `steps`.
pub fn trajectory_value(steps: &[Step]) -> Result<i64, ModelError> {
    max_prefix_sum(steps.iter().map(|s| s.reward)).ok_or(ModelError::EmptyTrajectory)
}

pub(crate) fn max_prefix_sum(rewards: impl IntoIterator<Item = i64>) -> Option<i64> {
    let mut total = 0i64;
    let mut best = None;
    for r in rewards {
        total += r;
        best = Some(best.map_or(total, |b: i64| b.max(total)));
    }
    best
}

impl Trajectory {
    pub fn new(id: u64, seed: u64, prefix_len: usize, steps: Vec<Step>) -> Result<Self, ModelError> {
        let peak_value = trajectory_value(&steps)?;
        let final_value: i64 = steps.iter().map(|s| s.reward).sum();
        if prefix_len > steps.len() {
            return Err(ModelError::invalid("prefix_len", "exceeds step count"));
        }
        Ok(Trajectory { id, seed, prefix_len, steps, peak_value, final_value })
    }

    pub fn actions(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.action.clone()).collect()
    }

    /// Steps taken after the replayed prefix.
    pub fn exploration_steps(&self) -> &[Step] {
        &self.steps[self.prefix_len..]
    }

    pub fn last(&self) -> &Step {
        // Construction guarantees at least one step.
        self.steps.last().expect("trajectory has steps")
    }

    pub fn died(&self) -> bool {
        let last = self.last();
        last.done && last.reward < 0
    }

    pub fn contains(&self, fingerprint: &Fingerprint) -> bool {
        self.steps.iter().any(|s| &s.fingerprint_after == fingerprint)
    }

    /// Checks the score bookkeeping invariants of the recorded steps.
    pub fn check_invariants(&self) -> Result<(), ModelError> {
        let mut score = 0;
        for (i, step) in self.steps.iter().enumerate() {
            score += step.reward;
            if step.score_after != score {
                return Err(ModelError::invalid(
                    "score_after",
                    format!("step {i}: expected {score}, found {}", step.score_after),
                ));
            }
            if step.done && i + 1 != self.steps.len() {
                return Err(ModelError::invalid("done", format!("step {i} is terminal but not last")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn steps_from_rewards(rewards: &[i64]) -> Vec<Step> {
        let mut score = 0;
        rewards
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                score += r;
                Step {
                    action: format!("a{i}"),
                    observation: format!("o{i}"),
                    reward: r,
                    score_after: score,
                    done: false,
                    valid_actions: vec![],
                    fingerprint_after: Fingerprint::new(format!("f{i}")),
                    inventory: None,
                }
            })
            .collect()
    }

    #[test]
    fn value_examples() {
        assert_eq!(trajectory_value(&steps_from_rewards(&[5, 10, 25])).unwrap(), 40);
        assert_eq!(trajectory_value(&steps_from_rewards(&[5, -10, 25])).unwrap(), 20);
        assert_eq!(trajectory_value(&steps_from_rewards(&[0])).unwrap(), 0);
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        assert_eq!(trajectory_value(&[]), Err(ModelError::EmptyTrajectory));
        assert!(Trajectory::new(0, 1, 0, vec![]).is_err());
    }

    #[test]
    fn peak_dominates_final() {
        let t = Trajectory::new(3, 1, 0, steps_from_rewards(&[5, 10, -10])).unwrap();
        assert_eq!(t.peak_value, 15);
        assert_eq!(t.final_value, 5);
        t.check_invariants().unwrap();
    }

    proptest! {
        #[test]
        fn value_is_max_score_after(rewards in prop::collection::vec(-10i64..=25, 1..200)) {
            let steps = steps_from_rewards(&rewards);
            let by_score = steps.iter().map(|s| s.score_after).max().unwrap();
            prop_assert_eq!(trajectory_value(&steps).unwrap(), by_score);
        }
    }
}
