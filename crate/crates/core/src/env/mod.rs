//! Environment contract, deterministic replay, the built-in MiniQuest game
//! and the subprocess bridge client.

mod bridge;
mod miniquest;
mod replay;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

pub use crate::model::EnvStepResult;
use crate::model::Fingerprint;
pub use bridge::{BridgeEnv, BridgeMeta, BridgeRequest, BridgeResponse, BridgeErrorBody};
pub use miniquest::{MiniQuest, MiniQuestData, QuestState, MINIQUEST_JSON};
pub use replay::{replay_path, verify_steps, Replay};

/// Observation returned for commands the game does not recognise.
pub const UNKNOWN_COMMAND: &str = "I don't understand that.";

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("environment failed to start: {0}")]
    Startup(String),
    #[error("environment unavailable: {0}")]
    Unavailable(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("nondeterminism detected at step {step}: expected fingerprint {expected}, found {actual}")]
    Nondeterminism { step: usize, expected: Fingerprint, actual: Fingerprint },
    #[error("replay diverged at step {step} ({action:?}): {reason}")]
    ReplayDivergence { step: usize, action: String, reason: String },
}

/// A resettable, deterministic text environment.
pub trait Environment: Send {
    /// Identifier recorded in event logs (`miniquest`, `bridge:<cmd>`).
    fn name(&self) -> String;
    fn reset(&mut self, seed: u64) -> Result<EnvStepResult, EnvError>;
    /// Executes a free-form command. Fails once the session is done.
    fn step(&mut self, action: &str) -> Result<EnvStepResult, EnvError>;
    fn fingerprint(&mut self) -> Result<Fingerprint, EnvError>;
}

/// Which environment backend to construct (`--env`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnvSpec {
    MiniQuest,
    Bridge { command: String },
}

impl fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvSpec::MiniQuest => f.write_str("miniquest"),
            EnvSpec::Bridge { command } => write!(f, "bridge:{command}"),
        }
    }
}

impl FromStr for EnvSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "miniquest" {
            return Ok(EnvSpec::MiniQuest);
        }
        match s.strip_prefix("bridge:") {
            Some(cmd) if !cmd.trim().is_empty() => Ok(EnvSpec::Bridge { command: cmd.to_string() }),
            Some(_) => Err("bridge environment needs a command: bridge:<command>".into()),
            None => Err(format!("unknown environment {s:?} (expected miniquest or bridge:<command>)")),
        }
    }
}

impl serde::Serialize for EnvSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for EnvSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Options for opening an environment.
#[derive(Clone, Debug, Default)]
pub struct EnvOptions {
    pub game_path: Option<PathBuf>,
    pub timeout: Option<Duration>,
}

pub fn open_env(spec: &EnvSpec, opts: &EnvOptions) -> Result<Box<dyn Environment>, EnvError> {
    match spec {
        EnvSpec::MiniQuest => Ok(Box::new(MiniQuest::new())),
        EnvSpec::Bridge { command } => {
            let timeout = opts.timeout.unwrap_or(Duration::from_secs(30));
            Ok(Box::new(BridgeEnv::spawn(command, opts.game_path.clone(), timeout)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_spec_parsing() {
        assert_eq!("miniquest".parse::<EnvSpec>().unwrap(), EnvSpec::MiniQuest);
        let b: EnvSpec = "bridge:python3 serve.py --x".parse().unwrap();
        assert_eq!(b.to_string(), "bridge:python3 serve.py --x");
        assert!("bridge:".parse::<EnvSpec>().is_err());
        assert!("zork".parse::<EnvSpec>().is_err());
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::from_str::<EnvSpec>(&json).unwrap(), b);
    }
}
