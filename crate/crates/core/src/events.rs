//! Line-delimited JSON event log: one `{seq, type, payload}` object per line
//! with strictly increasing sequence numbers.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::llm::TokenUsage;
use crate::model::{hex_string, Budget, RunConfig, Step, Trajectory};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EventError {
    #[error("event log i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed event on line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Explore,
    Replay,
    Verify,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    RunStart {
        schema_version: u32,
        label: String,
        config_digest: String,
        env: String,
        backend: String,
        seed: u64,
        config: RunConfig,
    },
    Reset {
        reason: StepKind,
        observation: String,
        score: i64,
        fingerprint: String,
    },
    Step {
        kind: StepKind,
        trajectory_id: Option<u64>,
        index: usize,
        #[serde(flatten)]
        step: Step,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        thought: Option<String>,
    },
    Select {
        strategy: String,
        archive_index: usize,
        fingerprint: String,
        score: i64,
        path_len: usize,
        candidates: usize,
        fallback: bool,
        backend_calls: usize,
        thought: String,
    },
    Analyze {
        frontier_digest: String,
        key_states: usize,
        analysis_text: String,
    },
    Reflect {
        strategy: String,
        phase: u64,
        after_trajectory: u64,
        entries: usize,
        raw_text: String,
    },
    FrontierInsert {
        trajectory: Trajectory,
        accepted: bool,
        frontier_ids: Vec<u64>,
    },
    PhaseStart {
        phase: u64,
        fingerprint: String,
        score: i64,
        path_len: usize,
    },
    PhaseEnd {
        phase: u64,
        trajectory_ids: Vec<u64>,
        archive_size: usize,
        best_value: Option<i64>,
        exploration_steps: u64,
    },
    RunEnd {
        max_score: i64,
        best_trajectory_id: Option<u64>,
        selections: u64,
        phases: u64,
        budget: Budget,
        archive_size: usize,
        token_usage: TokenUsage,
    },
}

impl EventBody {
    pub fn type_name(&self) -> &'static str {
        match self {
            EventBody::RunStart { .. } => "run_start",
            EventBody::Reset { .. } => "reset",
            EventBody::Step { .. } => "step",
            EventBody::Select { .. } => "select",
            EventBody::Analyze { .. } => "analyze",
            EventBody::Reflect { .. } => "reflect",
            EventBody::FrontierInsert { .. } => "frontier_insert",
            EventBody::PhaseStart { .. } => "phase_start",
            EventBody::PhaseEnd { .. } => "phase_end",
            EventBody::RunEnd { .. } => "run_end",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

/// Collects events in memory and optionally streams them to a file.
pub struct EventLog {
    next_seq: u64,
    events: Vec<Event>,
    sink: Option<BufWriter<File>>,
}

impl EventLog {
    pub fn in_memory() -> Self {
        EventLog { next_seq: 0, events: Vec::new(), sink: None }
    }

    pub fn to_file(path: &Path) -> Result<Self, EventError> {
        let file = File::create(path)?;
        Ok(EventLog { next_seq: 0, events: Vec::new(), sink: Some(BufWriter::new(file)) })
    }

    pub fn emit(&mut self, body: EventBody) -> Result<(), EventError> {
        let event = Event { seq: self.next_seq, body };
        self.next_seq += 1;
        if let Some(sink) = self.sink.as_mut() {
            serde_json::to_writer(&mut *sink, &event).map_err(io::Error::from)?;
            sink.write_all(b"\n")?;
        }
        self.events.push(event);
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), EventError> {
        if let Some(sink) = self.sink.as_mut() {
            sink.flush()?;
        }
        Ok(())
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn count(&self, type_name: &str) -> usize {
        self.events.iter().filter(|e| e.body.type_name() == type_name).count()
    }
}

pub fn read_events(path: &Path) -> Result<Vec<Event>, EventError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| EventError::Malformed { line: i + 1, message: e.to_string() })?;
        out.push(event);
    }
    Ok(out)
}

/// Digest of a configuration with the seed removed, so runs that differ
/// only by seed group together.
pub fn config_digest(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.seed = 0;
    let canonical = serde_json::to_string(&c).expect("config serializes");
    hex_string(&Sha256::digest(canonical.as_bytes())[..8])
}
