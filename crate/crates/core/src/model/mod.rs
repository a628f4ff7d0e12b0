//! Shared data model: steps, trajectories, the value-ranked frontier, the
//! state archive, the interaction budget and run configuration.

mod archive;
mod budget;
mod config;
mod frontier;
pub(crate) mod trajectory;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use archive::{ArchiveEntry, ArchiveUpdate, StateArchive};
pub use budget::Budget;
pub use config::{ReflectionStrategy, RunConfig, SelectionMode, SelectionStrategy};
pub use frontier::{Frontier, EMPTY_FRONTIER_DIGEST};
pub use trajectory::{trajectory_value, Step, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
}

impl ModelError {
    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        ModelError::Invalid { field, message: message.into() }
    }
}

/// Opaque digest identifying a complete world state.
///
/// Stored as lowercase hex so that digests from the built-in game and from
/// remote engines share one representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fingerprint(String);

impl Fingerprint {
    pub fn new(hex: impl Into<String>) -> Self {
        Fingerprint(hex.into())
    }

    /// First 64 bits of SHA-256 over `bytes`.
    pub fn of_bytes(bytes: &[u8]) -> Self {
        let digest = Sha256::digest(bytes);
        Fingerprint(hex_string(&digest[..8]))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    use std::fmt::Write;
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// One environment transition as seen by the agent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvStepResult {
    pub observation: String,
    pub reward: i64,
    pub score: i64,
    pub done: bool,
    pub valid_actions: Vec<String>,
    pub fingerprint: Fingerprint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inventory: Option<String>,
}

impl EnvStepResult {
    /// Converts the result of executing `action` into a trajectory step.
    /// `offered` is the valid-action list shown before the action.
    pub fn into_step(self, action: &str, offered: Vec<String>) -> Step {
        Step {
            action: action.to_string(),
            observation: self.observation,
            reward: self.reward,
            score_after: self.score,
            done: self.done,
            valid_actions: offered,
            fingerprint_after: self.fingerprint,
            inventory: self.inventory,
        }
    }
}

/// Minimum number of state selections a run is guaranteed to make when every
/// episode uses its full step cap: `floor(budget / (episode_cap * n)) - 1`.
pub fn min_state_selections(budget: i64, episode_cap: i64, n: i64) -> Result<i64, ModelError> {
    if budget <= 0 {
        return Err(ModelError::invalid("budget", "must be positive"));
    }
    if episode_cap <= 0 {
        return Err(ModelError::invalid("episode_cap", "must be positive"));
    }
    if n <= 0 {
        return Err(ModelError::invalid("n_explorations", "must be positive"));
    }
    Ok(budget / (episode_cap * n) - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_selections_match_table() {
        let expected = [(1, 19), (2, 9), (3, 5), (4, 4), (5, 3)];
        for (n, want) in expected {
            assert_eq!(min_state_selections(1000, 50, n).unwrap(), want, "n={n}");
        }
        assert_eq!(min_state_selections(150, 50, 3).unwrap(), 0);
    }

    #[test]
    fn min_selections_rejects_non_positive() {
        assert!(min_state_selections(0, 50, 3).is_err());
        assert!(min_state_selections(1000, -1, 3).is_err());
        let err = min_state_selections(1000, 50, 0).unwrap_err();
        assert!(err.to_string().contains("n_explorations"));
    }

    #[test]
    fn fingerprint_is_stable_hex() {
        let a = Fingerprint::of_bytes(b"room=Field");
        let b = Fingerprint::of_bytes(b"room=Field");
        assert_eq!(a, b);
        assert_eq!(a.as_str().len(), 16);
        assert_ne!(a, Fingerprint::of_bytes(b"room=Path"));
    }
}
