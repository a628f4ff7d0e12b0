use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// How the next state to explore from is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStrategy {
    /// Frontier analysis followed by alignment-based selection.
    Glow,
    Uniform,
    /// Sampling proportional to `visits^-alpha`.
    Novelty { alpha: f64 },
    /// Direct "most promising state" query without frontier analysis.
    Ige,
}

/// How local experience is distilled between episodes of a phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectionStrategy {
    Mar,
    Reflexion,
    None,
}

/// Whether alignment selection asks for one index or scores each candidate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    Index,
    PerState,
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionStrategy::Glow => f.write_str("glow"),
            SelectionStrategy::Uniform => f.write_str("uniform"),
            SelectionStrategy::Novelty { alpha } => write!(f, "novelty:{alpha}"),
            SelectionStrategy::Ige => f.write_str("ige"),
        }
    }
}

impl FromStr for SelectionStrategy {
    type Err = String;

    /// Accepts `glow`, `uniform`, `ige`, `novelty` (alpha 1) or `novelty:<alpha>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "glow" => Ok(SelectionStrategy::Glow),
            "uniform" => Ok(SelectionStrategy::Uniform),
            "ige" => Ok(SelectionStrategy::Ige),
            "novelty" => Ok(SelectionStrategy::Novelty { alpha: 1.0 }),
            other => match other.strip_prefix("novelty:") {
                Some(a) => a
                    .parse::<f64>()
                    .map(|alpha| SelectionStrategy::Novelty { alpha })
                    .map_err(|_| format!("invalid novelty exponent {a:?}")),
                None => Err(format!("unknown selection strategy {other:?}")),
            },
        }
    }
}

impl fmt::Display for ReflectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReflectionStrategy::Mar => "mar",
            ReflectionStrategy::Reflexion => "reflexion",
            ReflectionStrategy::None => "none",
        })
    }
}

impl FromStr for ReflectionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mar" => Ok(ReflectionStrategy::Mar),
            "reflexion" => Ok(ReflectionStrategy::Reflexion),
            "none" => Ok(ReflectionStrategy::None),
            other => Err(format!("unknown reflection strategy {other:?}")),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub budget: u64,
    pub episode_cap: u32,
    pub n_explorations: u32,
    pub frontier_k: u32,
    pub temperature: f64,
    #[serde(default)]
    pub seed: u64,
    pub selection_strategy: SelectionStrategy,
    pub reflection_strategy: ReflectionStrategy,
    #[serde(default = "default_true")]
    pub use_frontier_in_context: bool,
    #[serde(default)]
    pub selection_mode: SelectionMode,
    #[serde(default)]
    pub count_replay_steps: bool,
    #[serde(default)]
    pub verify_replay: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            budget: 1000,
            episode_cap: 50,
            n_explorations: 3,
            frontier_k: 5,
            temperature: 0.5,
            seed: 1,
            selection_strategy: SelectionStrategy::Glow,
            reflection_strategy: ReflectionStrategy::Mar,
            use_frontier_in_context: true,
            selection_mode: SelectionMode::Index,
            count_replay_steps: false,
            verify_replay: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.budget == 0 {
            return Err(ModelError::invalid("budget", "must be at least 1"));
        }
        if self.episode_cap == 0 {
            return Err(ModelError::invalid("episode_cap", "must be at least 1"));
        }
        if self.n_explorations == 0 {
            return Err(ModelError::invalid("n_explorations", "must be at least 1"));
        }
        if self.frontier_k == 0 {
            return Err(ModelError::invalid("frontier_k", "must be at least 1"));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ModelError::invalid("temperature", "must lie in [0, 2]"));
        }
        if let SelectionStrategy::Novelty { alpha } = self.selection_strategy {
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return Err(ModelError::invalid("selection_strategy", "novelty alpha must be >= 0"));
            }
        }
        Ok(())
    }

    /// Short human label, e.g. `glow+mar`.
    pub fn label(&self) -> String {
        let mut label = format!("{}+{}", self.selection_strategy, self.reflection_strategy);
        if !self.use_frontier_in_context {
            label.push_str("-nofrontier");
        }
        label
    }
}
