//! Experiment files, multi-seed orchestration, log-driven reports and
//! replay of logged trajectories.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::seq::IndexedRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::engine::{self, EngineError, RunResult};
use crate::env::{open_env, replay_path, EnvError, EnvOptions, EnvSpec, Environment};
use crate::events::{config_digest, read_events, Event, EventBody, EventError, EventLog, StepKind, SCHEMA_VERSION};
use crate::llm::{build_backend, BackendConfig, LlmError};
use crate::model::{ReflectionStrategy, RunConfig, SelectionStrategy, Step, Trajectory};

/// Version of the experiment file format.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_SEEDS: [u64; 3] = [1, 2, 3];

const REQUIRED: [&str; 7] = [
    "schema_version",
    "budget",
    "episode_cap",
    "n_explorations",
    "frontier_k",
    "selection_strategy",
    "reflection_strategy",
];

const OPTIONAL: [&str; 11] = [
    "env",
    "game_path",
    "seeds",
    "backend",
    "cache_dir",
    "temperature",
    "use_frontier_in_context",
    "selection_mode",
    "count_replay_steps",
    "verify_replay",
    "bridge_timeout_secs",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<String>),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: schema version {found} is not supported (expected {expected})")]
    SchemaMismatch { path: PathBuf, found: u64, expected: u32 },
    #[error("{path}: {message}")]
    BadLog { path: PathBuf, message: String },
    #[error("trajectory {0} not found in log")]
    NotFound(u64),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Events(#[from] EventError),
}

fn io_err(path: &Path, e: impl ToString) -> ExperimentError {
    ExperimentError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// A run configuration plus everything needed to execute it over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub env: EnvSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game_path: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub backend: BackendConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge_timeout_secs: Option<u64>,
    #[serde(flatten)]
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            env: EnvSpec::MiniQuest,
            game_path: None,
            seeds: DEFAULT_SEEDS.to_vec(),
            backend: BackendConfig::Scripted,
            cache_dir: None,
            bridge_timeout_secs: None,
            run: RunConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates an experiment document, reporting every
    /// problem found with the field it concerns.
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| ExperimentError::Invalid(vec![format!("not valid JSON: {e}")]))?;
        let Value::Object(mut obj) = value else {
            return Err(ExperimentError::Invalid(vec!["top level must be a JSON object".into()]));
        };
        let mut diags = Vec::new();
        for field in REQUIRED {
            if !obj.contains_key(field) {
                diags.push(format!("{field}: required field is missing"));
            }
        }
        for key in obj.keys() {
            if !REQUIRED.contains(&key.as_str()) && !OPTIONAL.contains(&key.as_str()) {
                diags.push(format!("{key}: unknown field"));
            }
        }
        if let Some(v) = obj.get("schema_version") {
            if v.as_u64() != Some(CONFIG_SCHEMA_VERSION as u64) {
                diags.push(format!("schema_version: expected {CONFIG_SCHEMA_VERSION}, found {v}"));
            }
        }
        let defaults = ExperimentConfig::default();
        obj.entry("env").or_insert_with(|| Value::String(defaults.env.to_string()));
        obj.entry("seeds").or_insert_with(|| serde_json::json!(defaults.seeds));
        obj.entry("backend").or_insert_with(|| serde_json::json!({"kind": "scripted"}));
        obj.entry("temperature").or_insert_with(|| serde_json::json!(defaults.run.temperature));
        // the seed list replaces the single run seed
        obj.remove("seed");
        for field in REQUIRED.iter().chain(OPTIONAL.iter()) {
            let Some(v) = obj.get(*field) else { continue };
            if let Err(msg) = check_field(field, v) {
                diags.push(format!("{field}: {msg}"));
            }
        }
        if !diags.is_empty() {
            return Err(ExperimentError::Invalid(diags));
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(Value::Object(obj)).map_err(|e| ExperimentError::Invalid(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let mut diags = Vec::new();
        if let Err(e) = self.run.validate() {
            diags.push(e.to_string());
        }
        if self.seeds.is_empty() {
            diags.push("seeds: at least one seed is required".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            diags.push("seeds: duplicate seeds".into());
        }
        if diags.is_empty() {
            Ok(())
        } else {
            Err(ExperimentError::Invalid(diags))
        }
    }

    /// Canonical JSON: sorted keys, defaults made explicit.
    pub fn to_canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(obj) = &mut v {
            obj.remove("seed");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    /// The engine configuration for one seed.
    pub fn run_config(&self, seed: u64) -> RunConfig {
        RunConfig { seed, ..self.run.clone() }
    }

    pub fn env_options(&self) -> EnvOptions {
        EnvOptions { game_path: self.game_path.clone(), timeout: self.bridge_timeout_secs.map(Duration::from_secs) }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ExperimentError> {
        if let Some(env) = &o.env {
            self.env = env.clone();
        }
        if let Some(seeds) = &o.seeds {
            self.seeds = seeds.clone();
        }
        if let Some(b) = o.budget {
            self.run.budget = b;
        }
        if let Some(c) = o.episode_cap {
            self.run.episode_cap = c;
        }
        if let Some(n) = o.n {
            self.run.n_explorations = n;
        }
        if let Some(k) = o.k {
            self.run.frontier_k = k;
        }
        if let Some(s) = o.selection {
            self.run.selection_strategy = s;
        }
        if let Some(r) = o.reflection {
            self.run.reflection_strategy = r;
        }
        if let Some(b) = &o.backend {
            self.backend = b.clone();
        }
        if o.verify_replay {
            self.run.verify_replay = true;
        }
        if o.count_replay_steps {
            self.run.count_replay_steps = true;
        }
        self.validate()
    }
}

fn check_field(field: &str, v: &Value) -> Result<(), String> {
    let positive_int = |v: &Value| match v.as_u64() {
        Some(0) => Err("must be at least 1".to_string()),
        Some(_) => Ok(()),
        None => Err(format!("expected a positive integer, found {v}")),
    };
    let parse_str = |v: &Value, f: &dyn Fn(&str) -> Result<(), String>| match v.as_str() {
        Some(s) => f(s),
        None => Err(format!("expected a string, found {v}")),
    };
    match field {
        "budget" | "episode_cap" | "n_explorations" | "frontier_k" => positive_int(v),
        "bridge_timeout_secs" => positive_int(v),
        "temperature" => match v.as_f64() {
            Some(t) if (0.0..=2.0).contains(&t) => Ok(()),
            Some(_) => Err("must lie in [0, 2]".into()),
            None => Err(format!("expected a number, found {v}")),
        },
        "env" => parse_str(v, &|s| s.parse::<EnvSpec>().map(drop)),
        "selection_strategy" => match v {
            Value::String(s) => s.parse::<SelectionStrategy>().map(drop),
            _ => serde_json::from_value::<SelectionStrategy>(v.clone()).map(drop).map_err(|e| e.to_string()),
        },
        "reflection_strategy" => parse_str(v, &|s| s.parse::<ReflectionStrategy>().map(drop)),
        "seeds" => match v.as_array() {
            Some(a) if a.iter().all(|s| s.as_u64().is_some()) => Ok(()),
            _ => Err(format!("expected a list of non-negative integers, found {v}")),
        },
        "backend" => serde_json::from_value::<BackendConfig>(v.clone()).map(drop).map_err(|e| e.to_string()),
        "use_frontier_in_context" | "count_replay_steps" | "verify_replay" => {
            v.as_bool().map(drop).ok_or_else(|| format!("expected true or false, found {v}"))
        }
        "game_path" | "cache_dir" => parse_str(v, &|_| Ok(())),
        "selection_mode" => {
            serde_json::from_value::<crate::model::SelectionMode>(v.clone()).map(drop).map_err(|e| e.to_string())
        }
        _ => Ok(()),
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub env: Option<EnvSpec>,
    pub seeds: Option<Vec<u64>>,
    pub budget: Option<u64>,
    pub episode_cap: Option<u32>,
    pub n: Option<u32>,
    pub k: Option<u32>,
    pub selection: Option<SelectionStrategy>,
    pub reflection: Option<ReflectionStrategy>,
    pub backend: Option<BackendConfig>,
    pub verify_replay: bool,
    pub count_replay_steps: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub max_score: i64,
    pub selections: u64,
    pub phases: u64,
    pub archive_size: usize,
    pub steps_used: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub config_digest: String,
    pub env: String,
    pub seeds: Vec<SeedOutcome>,
    pub mean: f64,
    /// Population standard deviation over seeds.
    pub std: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs one seed, streaming its events to `log_path` when given.
pub fn run_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    log_path: Option<&Path>,
) -> Result<(RunResult, EventLog), ExperimentError> {
    let run_cfg = cfg.run_config(seed);
    run_cfg.validate().map_err(|e| ExperimentError::Invalid(vec![e.to_string()]))?;
    let mut env = open_env(&cfg.env, &cfg.env_options())?;
    let mut backend = build_backend(&cfg.backend, seed, cfg.cache_dir.as_ref())?;
    let mut log = match log_path {
        Some(p) => EventLog::to_file(p)?,
        None => EventLog::in_memory(),
    };
    let result = engine::run(&run_cfg, env.as_mut(), backend.as_mut(), &mut log)?;
    Ok((result, log))
}

/// Runs every seed in parallel, writing `seed<S>.jsonl` logs and
/// `summary.json` under `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunSummary, ExperimentError> {
    cfg.validate()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let outcomes: Vec<Result<SeedOutcome, ExperimentError>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let log_path = out_dir.map(|d| d.join(format!("seed{seed}.jsonl")));
            let (result, _) = run_seed(cfg, seed, log_path.as_deref())?;
            Ok(SeedOutcome {
                seed,
                max_score: result.max_score,
                selections: result.selections,
                phases: result.phases,
                archive_size: result.archive.len(),
                steps_used: result.budget.used(),
                log: log_path,
            })
        })
        .collect();
    let seeds = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    let scores: Vec<f64> = seeds.iter().map(|s| s.max_score as f64).collect();
    let (mean, std) = mean_std(&scores);
    let summary = RunSummary {
        label: cfg.run.label(),
        config_digest: config_digest(&cfg.run),
        env: cfg.env.to_string(),
        seeds,
        mean,
        std,
    };
    if let Some(dir) = out_dir {
        let path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    }
    Ok(summary)
}

/// What a report needs from one event log, recomputed from raw events.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogDigest {
    pub path: PathBuf,
    pub label: String,
    pub config_digest: String,
    pub env: String,
    pub seed: u64,
    pub max_score: i64,
    pub selections: usize,
    pub analyze_calls: usize,
    pub reflect_calls: usize,
}

fn run_start(events: &[Event], path: &Path) -> Result<(u32, String, String, String, u64, RunConfig), ExperimentError> {
    match events.first().map(|e| &e.body) {
        Some(EventBody::RunStart { schema_version, label, config_digest, env, seed, config, .. }) => {
            Ok((*schema_version, label.clone(), config_digest.clone(), env.clone(), *seed, config.clone()))
        }
        _ => Err(ExperimentError::BadLog { path: path.to_path_buf(), message: "log does not start with run_start".into() }),
    }
}

fn load_log(path: &Path) -> Result<Vec<Event>, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let first = text.lines().find(|l| !l.trim().is_empty()).ok_or_else(|| ExperimentError::BadLog {
        path: path.to_path_buf(),
        message: "empty log".into(),
    })?;
    // check the version before the typed parse so old logs get a clear error
    let head: Value = serde_json::from_str(first)
        .map_err(|e| ExperimentError::BadLog { path: path.to_path_buf(), message: e.to_string() })?;
    let found = head.pointer("/payload/schema_version").and_then(Value::as_u64).ok_or_else(|| {
        ExperimentError::BadLog { path: path.to_path_buf(), message: "first event carries no schema_version".into() }
    })?;
    if found != SCHEMA_VERSION as u64 {
        return Err(ExperimentError::SchemaMismatch { path: path.to_path_buf(), found, expected: SCHEMA_VERSION });
    }
    read_events(path).map_err(|e| ExperimentError::BadLog { path: path.to_path_buf(), message: e.to_string() })
}

pub fn digest_log(path: &Path) -> Result<LogDigest, ExperimentError> {
    let events = load_log(path)?;
    let (_, label, config_digest, env, seed, _) = run_start(&events, path)?;
    let mut max_score = None::<i64>;
    let mut bump = |s: i64| max_score = Some(max_score.map_or(s, |m: i64| m.max(s)));
    let count = |name: &str| events.iter().filter(|e| e.body.type_name() == name).count();
    for e in &events {
        match &e.body {
            EventBody::Reset { reason: StepKind::Explore, score, .. } => bump(*score),
            EventBody::Step { kind: StepKind::Explore, step, .. } => bump(step.score_after),
            _ => {}
        }
    }
    let max_score = max_score
        .ok_or_else(|| ExperimentError::BadLog { path: path.to_path_buf(), message: "no scores in log".into() })?;
    Ok(LogDigest {
        path: path.to_path_buf(),
        label,
        config_digest,
        env,
        seed,
        max_score,
        selections: count("select"),
        analyze_calls: count("analyze"),
        reflect_calls: count("reflect"),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: f64,
    pub std: f64,
    pub scores: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub config_digest: String,
    pub cells: BTreeMap<String, Cell>,
}

/// Ablation grid: one row per configuration, one column per environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub environments: Vec<String>,
    pub rows: Vec<ReportRow>,
}

pub fn build_report(paths: &[PathBuf]) -> Result<Report, ExperimentError> {
    if paths.is_empty() {
        return Err(ExperimentError::Usage("report needs at least one event log".into()));
    }
    let digests = paths.iter().map(|p| digest_log(p)).collect::<Result<Vec<_>, _>>()?;
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<&LogDigest>> = BTreeMap::new();
    for d in &digests {
        let key = (d.config_digest.clone(), d.env.clone());
        if !order.iter().any(|(c, _)| c == &d.config_digest) {
            order.push((d.config_digest.clone(), d.label.clone()));
        }
        groups.entry(key).or_default().push(d);
    }
    let mut environments: Vec<String> = digests.iter().map(|d| d.env.clone()).collect();
    environments.sort();
    environments.dedup();
    let rows = order
        .into_iter()
        .map(|(digest, label)| {
            let cells = environments
                .iter()
                .filter_map(|env| {
                    let logs = groups.get(&(digest.clone(), env.clone()))?;
                    let mut logs = logs.clone();
                    logs.sort_by_key(|d| d.seed);
                    let scores: Vec<i64> = logs.iter().map(|d| d.max_score).collect();
                    let (mean, std) = mean_std(&scores.iter().map(|&s| s as f64).collect::<Vec<_>>());
                    Some((env.clone(), Cell { mean, std, scores }))
                })
                .collect();
            ReportRow { label, config_digest: digest, cells }
        })
        .collect();
    Ok(Report { environments, rows })
}

impl Report {
    pub fn render_text(&self) -> String {
        let mut header = vec![String::from("config")];
        header.extend(self.environments.iter().cloned());
        let mut table = vec![header];
        for row in &self.rows {
            let mut line = vec![format!("{} [{}]", row.label, row.config_digest)];
            for env in &self.environments {
                line.push(match row.cells.get(env) {
                    Some(c) => format!("{:.1} ± {:.1} (n={})", c.mean, c.std, c.scores.len()),
                    None => "-".into(),
                });
            }
            table.push(line);
        }
        let widths: Vec<usize> =
            (0..table[0].len()).map(|i| table.iter().map(|r| r[i].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (i, r) in table.iter().enumerate() {
            let cells: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
                out.push('\n');
            }
        }
        out
    }
}

/// One replayed step of a transcript.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub index: usize,
    pub action: String,
    pub observation: String,
    pub score: i64,
    pub reward: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub trajectory_id: u64,
    pub seed: u64,
    pub initial_observation: String,
    pub lines: Vec<TranscriptLine>,
}

impl Transcript {
    pub fn final_score(&self) -> i64 {
        self.lines.last().map_or(0, |l| l.score)
    }

    pub fn render(&self) -> String {
        let mut out = format!("trajectory {} (seed {})\n{}\n", self.trajectory_id, self.seed, self.initial_observation);
        for l in &self.lines {
            out.push_str(&format!("\n[{}] > {}\n{}\n(score {}, reward {:+})\n", l.index, l.action, l.observation, l.score, l.reward));
        }
        out
    }
}

/// Finds a logged trajectory by id.
pub fn find_trajectory(events: &[Event], id: u64) -> Option<&Trajectory> {
    events.iter().find_map(|e| match &e.body {
        EventBody::FrontierInsert { trajectory, .. } if trajectory.id == id => Some(trajectory),
        _ => None,
    })
}

/// Trajectory ids in the final frontier of a log.
pub fn final_frontier_ids(events: &[Event]) -> Vec<u64> {
    events
        .iter()
        .rev()
        .find_map(|e| match &e.body {
            EventBody::FrontierInsert { frontier_ids, .. } => Some(frontier_ids.clone()),
            _ => None,
        })
        .unwrap_or_default()
}

/// Re-executes `steps` against `env`, failing at the first step whose
/// fingerprint, reward or observation differs from the record.
pub fn replay_steps(env: &mut dyn Environment, seed: u64, id: u64, steps: &[Step]) -> Result<Transcript, EnvError> {
    let start = env.reset(seed)?;
    let mut lines = Vec::with_capacity(steps.len());
    for (i, recorded) in steps.iter().enumerate() {
        let r = env.step(&recorded.action).map_err(|e| match e {
            EnvError::Protocol(reason) => EnvError::ReplayDivergence { step: i, action: recorded.action.clone(), reason },
            other => other,
        })?;
        if r.fingerprint != recorded.fingerprint_after || r.reward != recorded.reward || r.observation != recorded.observation {
            return Err(EnvError::Nondeterminism {
                step: i,
                expected: recorded.fingerprint_after.clone(),
                actual: r.fingerprint,
            });
        }
        lines.push(TranscriptLine { index: i, action: recorded.action.clone(), observation: r.observation, score: r.score, reward: r.reward });
    }
    Ok(Transcript { trajectory_id: id, seed, initial_observation: start.observation, lines })
}

/// Replays trajectory `id` from the log at `path` in a fresh environment.
/// `id = None` picks the best trajectory of the run.
pub fn replay_from_log(path: &Path, id: Option<u64>, opts: &EnvOptions) -> Result<Transcript, ExperimentError> {
    let events = load_log(path)?;
    let (_, _, _, env_name, seed, _) = run_start(&events, path)?;
    let id = match id {
        Some(id) => id,
        None => events
            .iter()
            .find_map(|e| match &e.body {
                EventBody::RunEnd { best_trajectory_id, .. } => *best_trajectory_id,
                _ => None,
            })
            .ok_or_else(|| ExperimentError::BadLog { path: path.to_path_buf(), message: "log records no best trajectory".into() })?,
    };
    let traj = find_trajectory(&events, id).ok_or(ExperimentError::NotFound(id))?;
    let spec: EnvSpec = env_name
        .parse()
        .map_err(|e: String| ExperimentError::BadLog { path: path.to_path_buf(), message: e })?;
    let mut env = open_env(&spec, opts)?;
    Ok(replay_steps(env.as_mut(), seed, id, &traj.steps)?)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayAudit {
    pub frontier_checked: usize,
    pub archive_checked: usize,
    pub failures: Vec<String>,
}

impl ReplayAudit {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Replays every frontier trajectory step by step and `samples` randomly
/// chosen archive entries to their stored fingerprints. Entries are drawn
/// without replacement when the archive is large enough, with replacement
/// otherwise.
pub fn audit_replay(
    result: &RunResult,
    env: &mut dyn Environment,
    seed: u64,
    samples: usize,
    sample_seed: u64,
) -> ReplayAudit {
    let mut audit = ReplayAudit::default();
    for t in &result.frontier.entries {
        audit.frontier_checked += 1;
        if let Err(e) = replay_steps(env, seed, t.id, &t.steps) {
            audit.failures.push(format!("frontier trajectory {}: {e}", t.id));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    let entries = result.archive.entries();
    let picks: Vec<&crate::model::ArchiveEntry> = if entries.len() >= samples {
        entries.sample(&mut rng, samples).collect()
    } else if entries.is_empty() {
        Vec::new()
    } else {
        (0..samples).map(|_| &entries[rng.random_range(0..entries.len())]).collect()
    };
    for entry in picks {
        audit.archive_checked += 1;
        if let Err(e) = replay_path(env, seed, &entry.path, Some(&entry.fingerprint), None) {
            audit.failures.push(format!("archive entry {}: {e}", entry.fingerprint));
        }
    }
    audit
}
