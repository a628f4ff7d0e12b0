//! The exploration loop: pick an archived state, replay to it, run a phase
//! of n policy-driven episodes with reflection in between, then fold the
//! results into the archive and frontier. Repeats until the budget is spent.

mod select;

use rand::SeedableRng;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use select::{novelty_weights, select_novelty, select_uniform};

use crate::env::{replay_path, verify_steps, EnvError, Environment, Replay};
use crate::events::{config_digest, EventBody, EventError, EventLog, StepKind, SCHEMA_VERSION};
use crate::llm::{parse_action, ChatBackend, ChatRequest, LlmError, Message, Purpose, TokenUsage};
use crate::model::{
    ArchiveEntry, Budget, EnvStepResult, Frontier, ModelError, ReflectionStrategy, RunConfig, SelectionStrategy,
    StateArchive, Step, Trajectory,
};
use crate::world::render::{render_act_context, render_act_initial, render_attempts, render_frontier, render_step_block};
use crate::world::{reflect_mar, reflect_reflexion, select_ige, select_state, GlobalModel, PromptSet, Selection, WLocal};

/// Extra attempts after an unparsable action reply.
pub const ACT_REASKS: usize = 2;

const REASK_TEXT: &str = "Your reply could not be parsed. Respond in JSON format with \"thought\" and \"action\" fields.";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ModelError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Events(#[from] EventError),
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub best: Option<Trajectory>,
    pub max_score: i64,
    /// Completed state selections (the bootstrap phase has none).
    pub selections: u64,
    pub phases: u64,
    pub budget: Budget,
    pub archive: StateArchive,
    pub frontier: Frontier,
    pub token_usage: TokenUsage,
    /// Initial state of the environment.
    pub root: EnvStepResult,
}

/// Runs with the built-in prompt templates.
pub fn run(
    config: &RunConfig,
    env: &mut dyn Environment,
    backend: &mut dyn ChatBackend,
    log: &mut EventLog,
) -> Result<RunResult, EngineError> {
    run_with_prompts(config, env, backend, log, &PromptSet::builtin())
}

pub fn run_with_prompts(
    config: &RunConfig,
    env: &mut dyn Environment,
    backend: &mut dyn ChatBackend,
    log: &mut EventLog,
    prompts: &PromptSet,
) -> Result<RunResult, EngineError> {
    config.validate()?;
    log.emit(EventBody::RunStart {
        schema_version: SCHEMA_VERSION,
        label: config.label(),
        config_digest: config_digest(config),
        env: env.name(),
        backend: backend.backend_id(),
        seed: config.seed,
        config: config.clone(),
    })?;
    let root = env.reset(config.seed)?;
    log.emit(EventBody::Reset {
        reason: StepKind::Explore,
        observation: root.observation.clone(),
        score: root.score,
        fingerprint: root.fingerprint.to_string(),
    })?;
    let mut archive = StateArchive::new();
    archive.insert_root(&root);
    let mut engine = Engine {
        config,
        env,
        backend,
        prompts,
        log,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        budget: Budget::new(config.budget, config.count_replay_steps),
        archive,
        frontier: Frontier::new(config.frontier_k as usize),
        global: GlobalModel::new(),
        root,
        next_id: 0,
        selections: 0,
        phases: 0,
        usage: TokenUsage::default(),
    };
    engine.run_loop()?;
    let best = engine.frontier.best().cloned();
    let max_score = best.as_ref().map_or(engine.root.score, |t| t.peak_value);
    engine.log.emit(EventBody::RunEnd {
        max_score,
        best_trajectory_id: best.as_ref().map(|t| t.id),
        selections: engine.selections,
        phases: engine.phases,
        budget: engine.budget,
        archive_size: engine.archive.len(),
        token_usage: engine.usage,
    })?;
    engine.log.flush()?;
    Ok(RunResult {
        best,
        max_score,
        selections: engine.selections,
        phases: engine.phases,
        budget: engine.budget,
        archive: engine.archive,
        frontier: engine.frontier,
        token_usage: engine.usage,
        root: engine.root,
    })
}

struct Engine<'a> {
    config: &'a RunConfig,
    env: &'a mut dyn Environment,
    backend: &'a mut dyn ChatBackend,
    prompts: &'a PromptSet,
    log: &'a mut EventLog,
    rng: ChaCha8Rng,
    budget: Budget,
    archive: StateArchive,
    frontier: Frontier,
    global: GlobalModel,
    root: EnvStepResult,
    next_id: u64,
    selections: u64,
    phases: u64,
    usage: TokenUsage,
}

impl Engine<'_> {
    fn run_loop(&mut self) -> Result<(), EngineError> {
        while !self.budget.is_exhausted() {
            let start = if self.phases == 0 {
                0
            } else {
                let s = self.select()?;
                self.selections += 1;
                s
            };
            let entry = self.archive.entries()[start].clone();
            if !self.budget.can_replay(entry.path.len() as u64) {
                break;
            }
            self.explore_phase(&entry)?;
            self.phases += 1;
        }
        Ok(())
    }

    fn select(&mut self) -> Result<usize, EngineError> {
        let strategy = self.config.selection_strategy;
        let selection = match strategy {
            SelectionStrategy::Glow => {
                let analysis = self.global.analyze(&self.frontier, self.backend, self.prompts, self.config.temperature)?;
                if let Some(resp) = &analysis.response {
                    self.usage.add(resp.token_usage);
                    self.log.emit(EventBody::Analyze {
                        frontier_digest: analysis.w_global.frontier_digest.clone(),
                        key_states: analysis.w_global.key_states.len(),
                        analysis_text: analysis.w_global.analysis_text.clone(),
                    })?;
                }
                select_state(
                    &self.archive,
                    &analysis.w_global,
                    self.config.selection_mode,
                    self.backend,
                    self.prompts,
                    self.config.temperature,
                )?
            }
            SelectionStrategy::Ige => select_ige(&self.archive, self.backend, self.prompts, self.config.temperature)?,
            SelectionStrategy::Uniform => plain(select_uniform(&self.archive, &mut self.rng)),
            SelectionStrategy::Novelty { alpha } => plain(select_novelty(&self.archive, alpha, &mut self.rng)),
        };
        for r in &selection.responses {
            self.usage.add(r.token_usage);
        }
        let entry = &self.archive.entries()[selection.index];
        self.log.emit(EventBody::Select {
            strategy: strategy.to_string(),
            archive_index: selection.index,
            fingerprint: entry.fingerprint.to_string(),
            score: entry.score,
            path_len: entry.path.len(),
            candidates: selection.candidates.len(),
            fallback: selection.fallback,
            backend_calls: selection.responses.len(),
            thought: selection.thought.clone(),
        })?;
        Ok(selection.index)
    }

    fn replay_to(&mut self, entry: &ArchiveEntry) -> Result<Replay, EngineError> {
        let replay = replay_path(self.env, self.config.seed, &entry.path, Some(&entry.fingerprint), Some(&mut self.budget))?;
        self.log.emit(EventBody::Reset {
            reason: StepKind::Replay,
            observation: replay.start.observation.clone(),
            score: replay.start.score,
            fingerprint: replay.start.fingerprint.to_string(),
        })?;
        for (i, s) in replay.steps.iter().enumerate() {
            self.log.emit(EventBody::Step {
                kind: StepKind::Replay,
                trajectory_id: None,
                index: i,
                step: s.clone(),
                thought: None,
            })?;
        }
        Ok(replay)
    }

    fn explore_phase(&mut self, entry: &ArchiveEntry) -> Result<(), EngineError> {
        let phase = self.phases;
        self.log.emit(EventBody::PhaseStart {
            phase,
            fingerprint: entry.fingerprint.to_string(),
            score: entry.score,
            path_len: entry.path.len(),
        })?;
        let n = self.config.n_explorations as usize;
        let mut attempts: Vec<Trajectory> = Vec::with_capacity(n);
        let mut first_steps: Vec<u64> = Vec::with_capacity(n);
        let mut w_local = WLocal::default();
        // the frontier only changes between phases
        let frontier_text = render_frontier(&self.frontier);
        for i in 0..n {
            if self.budget.is_exhausted() || !self.budget.can_replay(entry.path.len() as u64) {
                break;
            }
            let replay = self.replay_to(entry)?;
            let start_observation = replay.end.observation.clone();
            let first_step = self.budget.used_exploration;
            let Some(traj) = self.episode(replay, &w_local, &attempts, &frontier_text)? else { break };
            attempts.push(traj);
            first_steps.push(first_step);
            let more = i + 1 < n && !self.budget.is_exhausted();
            if more {
                w_local = self.reflect(phase, &attempts, &start_observation, &w_local, &frontier_text)?;
            }
        }
        for (traj, first_step) in attempts.iter().zip(first_steps) {
            self.archive.update(&self.root, traj, first_step);
            let ranks = self.frontier.with(traj.clone()).ids().contains(&traj.id);
            if ranks && self.config.verify_replay {
                self.verify(traj)?;
            }
            let accepted = self.frontier.insert(traj.clone());
            self.log.emit(EventBody::FrontierInsert {
                trajectory: traj.clone(),
                accepted,
                frontier_ids: self.frontier.ids(),
            })?;
        }
        self.log.emit(EventBody::PhaseEnd {
            phase,
            trajectory_ids: attempts.iter().map(|t| t.id).collect(),
            archive_size: self.archive.len(),
            best_value: self.frontier.best().map(|t| t.peak_value),
            exploration_steps: self.budget.used_exploration,
        })?;
        Ok(())
    }

    /// One policy-driven episode from the replayed state. Returns None when
    /// the budget allowed no exploration step at all.
    fn episode(
        &mut self,
        replay: Replay,
        w_local: &WLocal,
        attempts: &[Trajectory],
        frontier_text: &str,
    ) -> Result<Option<Trajectory>, EngineError> {
        let id = self.next_id;
        let prefix_len = replay.steps.len();
        let start_obs = replay.end.observation.clone();
        let frontier_text = if self.config.use_frontier_in_context { frontier_text } else { "" };
        let context = render_act_context(&w_local.raw_text, frontier_text, &render_attempts(attempts, &start_obs));
        let mut messages = vec![Message::system(self.prompts.act_system.trim_end())];
        let mut steps: Vec<Step> = replay.steps;
        let mut current = replay.end;
        let cap = self.config.episode_cap as usize;
        for t in 0..cap {
            if current.done || !self.budget.take_exploration_step() {
                break;
            }
            let block = render_step_block(self.prompts, t + 1, &current.observation, current.score, &current.valid_actions);
            let user = if t == 0 { render_act_initial(self.prompts, &context, &block) } else { block };
            messages.push(Message::user(user));
            let (action, thought, reply) = self.decide(&messages, &current.valid_actions)?;
            messages.push(Message::assistant(reply));
            let offered = current.valid_actions.clone();
            current = self.env.step(&action)?;
            let step = current.clone().into_step(&action, offered);
            self.log.emit(EventBody::Step {
                kind: StepKind::Explore,
                trajectory_id: Some(id),
                index: steps.len(),
                step: step.clone(),
                thought: Some(thought),
            })?;
            steps.push(step);
        }
        if steps.len() == prefix_len {
            return Ok(None);
        }
        self.next_id += 1;
        Ok(Some(Trajectory::new(id, self.config.seed, prefix_len, steps)?))
    }

    /// Asks the policy for an action, re-asking on unparsable replies and
    /// finally falling back to a seeded uniform valid action.
    fn decide(&mut self, messages: &[Message], valid: &[String]) -> Result<(String, String, String), EngineError> {
        let mut convo = messages.to_vec();
        for attempt in 0..=ACT_REASKS {
            let request = ChatRequest::new(Purpose::Act, convo.clone(), self.config.temperature);
            let response = self.backend.complete(&request)?;
            self.usage.add(response.token_usage);
            match parse_action(&response.text) {
                Ok(d) => return Ok((d.action, d.thought, response.text)),
                Err(e) => {
                    log::warn!("unparsable action reply (attempt {}): {e}", attempt + 1);
                    convo.push(Message::assistant(response.text));
                    convo.push(Message::user(REASK_TEXT));
                }
            }
        }
        let action = if valid.is_empty() {
            "look".to_string()
        } else {
            valid[self.rng.random_range(0..valid.len())].clone()
        };
        let thought = "fallback: reply could not be parsed".to_string();
        let reply = serde_json::json!({"thought": thought, "action": action}).to_string();
        Ok((action, thought, reply))
    }

    fn reflect(
        &mut self,
        phase: u64,
        attempts: &[Trajectory],
        start_observation: &str,
        previous: &WLocal,
        frontier_text: &str,
    ) -> Result<WLocal, EngineError> {
        let temperature = self.config.temperature;
        let (w_local, response) = match self.config.reflection_strategy {
            ReflectionStrategy::None => return Ok(WLocal::default()),
            ReflectionStrategy::Mar => reflect_mar(
                attempts,
                start_observation,
                frontier_text,
                previous,
                self.backend,
                self.prompts,
                temperature,
            )?,
            ReflectionStrategy::Reflexion => {
                let latest = attempts.last().expect("reflection follows an attempt");
                reflect_reflexion(latest, start_observation, previous, self.backend, self.prompts, temperature)?
            }
        };
        self.usage.add(response.token_usage);
        self.log.emit(EventBody::Reflect {
            strategy: self.config.reflection_strategy.to_string(),
            phase,
            after_trajectory: attempts.last().map_or(0, |t| t.id),
            entries: w_local.entries.len(),
            raw_text: w_local.raw_text.clone(),
        })?;
        Ok(w_local)
    }

    /// Replays a trajectory from reset and checks every step; not charged
    /// to the budget.
    fn verify(&mut self, traj: &Trajectory) -> Result<(), EngineError> {
        let fresh = verify_steps(self.env, self.config.seed, &traj.steps)?;
        for (i, s) in fresh.into_iter().enumerate() {
            self.log.emit(EventBody::Step {
                kind: StepKind::Verify,
                trajectory_id: Some(traj.id),
                index: i,
                step: s,
                thought: None,
            })?;
        }
        Ok(())
    }
}

fn plain(index: usize) -> Selection {
    Selection { index, thought: String::new(), fallback: false, candidates: Vec::new(), responses: Vec::new() }
}
