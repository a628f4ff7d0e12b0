//! The two world-model scales: frontier analysis (W_global) driving state
//! selection, and per-phase advantage reflection (W_local) feeding the
//! acting policy. Also owns prompt templates, renderers and parsers.

mod global;
mod local;
mod parse;
pub mod prompts;
pub mod render;

use serde::{Deserialize, Serialize};

pub use global::{candidate_indices, select_greedy, select_ige, select_state, Analysis, GlobalModel, Selection, CANDIDATE_CAP};
pub use local::{reflect_mar, reflect_reflexion};
pub use parse::{parse_key_states, parse_w_local, MAX_LOCAL_ENTRIES};
pub use prompts::PromptSet;

use crate::model::EMPTY_FRONTIER_DIGEST;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyStateKind {
    Bottleneck,
    Goal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyState {
    pub descriptor: String,
    pub kind: KeyStateKind,
    pub achieved_value: Option<f64>,
    pub potential_value: Option<f64>,
}

impl KeyState {
    /// Potential exceeds what the frontier already achieves there.
    pub fn is_high_potential(&self) -> bool {
        match (self.achieved_value, self.potential_value) {
            (Some(a), Some(p)) => p > a,
            (None, Some(_)) => true,
            _ => false,
        }
    }

    /// Whether the observation's location is named in the descriptor.
    pub fn mentions(&self, observation: &str) -> bool {
        let loc = render::location_of(observation).to_lowercase();
        !loc.is_empty() && self.descriptor.to_lowercase().contains(&loc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WGlobal {
    pub analysis_text: String,
    pub key_states: Vec<KeyState>,
    pub frontier_digest: String,
}

impl WGlobal {
    pub fn empty() -> Self {
        WGlobal { analysis_text: String::new(), key_states: Vec::new(), frontier_digest: EMPTY_FRONTIER_DIGEST.into() }
    }

    /// No analysis is available (empty frontier).
    pub fn is_empty(&self) -> bool {
        self.analysis_text.trim().is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advantage {
    pub action: String,
    pub effect: String,
    pub score_note: Option<String>,
    /// The bullet warns against the action.
    pub avoid: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalEntry {
    pub state_descriptor: String,
    pub advantages: Vec<Advantage>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WLocal {
    pub raw_text: String,
    pub entries: Vec<LocalEntry>,
}

impl WLocal {
    pub fn is_empty(&self) -> bool {
        self.raw_text.trim().is_empty()
    }
}
