use super::{EnvError, Environment};
use crate::model::{Budget, EnvStepResult, Fingerprint, Step};

/// Outcome of restoring a state by re-executing its action path.
#[derive(Clone, Debug)]
pub struct Replay {
    /// Result of the fresh reset.
    pub start: EnvStepResult,
    pub steps: Vec<Step>,
    /// Result of the last replayed action (or `start` for an empty path).
    pub end: EnvStepResult,
}

/// Resets `env` and executes `actions` in order.
///
/// Fails with `ReplayDivergence` if the episode ends before the final action
/// and with `Nondeterminism` if the final fingerprint differs from
/// `expected`. Replayed steps are charged to `budget.used_replay`.
pub fn replay_path(
    env: &mut dyn Environment,
    seed: u64,
    actions: &[String],
    expected: Option<&Fingerprint>,
    budget: Option<&mut Budget>,
) -> Result<Replay, EnvError> {
    let start = env.reset(seed)?;
    let mut current = start.clone();
    let mut steps = Vec::with_capacity(actions.len());
    for (i, action) in actions.iter().enumerate() {
        if current.done {
            return Err(EnvError::ReplayDivergence {
                step: i,
                action: action.clone(),
                reason: "episode ended before the path was complete".into(),
            });
        }
        let offered = current.valid_actions.clone();
        current = env.step(action)?;
        steps.push(current.clone().into_step(action, offered));
    }
    if let Some(budget) = budget {
        budget.record_replay(actions.len() as u64);
    }
    if let Some(expected) = expected {
        if &current.fingerprint != expected {
            return Err(EnvError::Nondeterminism {
                step: actions.len(),
                expected: expected.clone(),
                actual: current.fingerprint,
            });
        }
    }
    Ok(Replay { start, steps, end: current })
}

/// Re-executes recorded `steps` from reset, checking every fingerprint,
/// reward and done flag. Returns the freshly produced steps.
pub fn verify_steps(env: &mut dyn Environment, seed: u64, steps: &[Step]) -> Result<Vec<Step>, EnvError> {
    let mut current = env.reset(seed)?;
    let mut out = Vec::with_capacity(steps.len());
    for (i, recorded) in steps.iter().enumerate() {
        if current.done {
            return Err(EnvError::ReplayDivergence {
                step: i,
                action: recorded.action.clone(),
                reason: "episode ended early".into(),
            });
        }
        let offered = current.valid_actions.clone();
        current = env.step(&recorded.action)?;
        if current.fingerprint != recorded.fingerprint_after
            || current.reward != recorded.reward
            || current.done != recorded.done
        {
            return Err(EnvError::Nondeterminism {
                step: i,
                expected: recorded.fingerprint_after.clone(),
                actual: current.fingerprint,
            });
        }
        out.push(current.clone().into_step(&recorded.action, offered));
    }
    Ok(out)
}
