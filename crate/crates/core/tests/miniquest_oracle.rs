use std::collections::{HashSet, VecDeque};

use glow_core::env::{replay_path, Environment, MiniQuest, MINIQUEST_JSON};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Breadth-first search over every reachable state, restoring each state by
/// replaying its path. Returns (best score, a shortest path to it, states).
fn explore_all() -> (i64, Vec<String>, usize, Vec<Vec<String>>) {
    let mut env = MiniQuest::new();
    let root = env.reset(0).unwrap();
    let mut seen = HashSet::from([root.fingerprint.clone()]);
    let mut queue = VecDeque::from([(Vec::<String>::new(), root)]);
    let mut best = (0, Vec::new());
    let mut winning = Vec::new();
    while let Some((path, state)) = queue.pop_front() {
        if state.score > best.0 {
            best = (state.score, path.clone());
        }
        if state.score == 100 {
            winning.push(path.clone());
        }
        if state.done {
            continue;
        }
        for action in &state.valid_actions {
            let mut next_path = path.clone();
            next_path.push(action.clone());
            let r = replay_path(&mut env, 0, &next_path, None, None).unwrap().end;
            if seen.insert(r.fingerprint.clone()) {
                queue.push_back((next_path, r));
            }
        }
    }
    (best.0, best.1, seen.len(), winning)
}

#[test]
fn breadth_first_maximum_is_one_hundred() {
    let (best, path, states, winning) = explore_all();
    assert_eq!(best, 100);
    assert!(states > 10);
    for p in &winning {
        for needed in ["take lamp", "take sword", "unlock vault"] {
            assert!(p.iter().any(|a| a == needed), "{p:?} lacks {needed}");
        }
    }
    let data: serde_json::Value = serde_json::from_str(MINIQUEST_JSON).unwrap();
    assert!(data.is_object());
    assert!(path.len() >= 10, "{path:?}");
}

fn random_run(seed: u64, len: usize) -> Vec<glow_core::env::EnvStepResult> {
    let mut env = MiniQuest::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![env.reset(0).unwrap()];
    for _ in 0..len {
        let last = out.last().unwrap();
        if last.done {
            break;
        }
        let action = if rng.random_range(0..10) == 0 {
            "xyzzy".to_string()
        } else {
            last.valid_actions[rng.random_range(0..last.valid_actions.len())].clone()
        };
        out.push(env.step(&action).unwrap());
    }
    out
}

#[test]
fn random_sequences_are_deterministic_and_conserve_score() {
    for seed in 0..1000 {
        let a = random_run(seed, 50);
        let b = random_run(seed, 50);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let rewards: i64 = a[1..].iter().map(|r| r.reward).sum();
        assert_eq!(a.last().unwrap().score, rewards);
        assert!(a.iter().all(|r| r.done || !r.valid_actions.is_empty()));
    }
}

proptest! {
    #[test]
    fn free_form_commands_never_crash(cmds in proptest::collection::vec(".{0,20}", 0..30)) {
        let mut env = MiniQuest::new();
        let mut r = env.reset(0).unwrap();
        for c in &cmds {
            if r.done {
                prop_assert!(env.step(c).is_err());
                break;
            }
            let before = r.score;
            r = env.step(c).unwrap();
            prop_assert_eq!(r.score, before + r.reward);
        }
    }
}
