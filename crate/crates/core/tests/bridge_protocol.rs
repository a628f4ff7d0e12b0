mod common;

use std::path::PathBuf;
use std::time::Duration;

use glow_core::engine::run;
use glow_core::env::{BridgeEnv, EnvError, Environment};
use glow_core::events::EventLog;
use glow_core::experiment::{replay_from_log, ExperimentError};
use glow_core::llm::ScriptedOracle;
use glow_core::model::RunConfig;

fn stub() -> String {
    format!("python3 {}/tests/fixtures/mock_bridge.py", env!("CARGO_MANIFEST_DIR"))
}

fn spawn() -> BridgeEnv {
    BridgeEnv::spawn(&stub(), None, Duration::from_secs(20)).unwrap()
}

#[test]
fn five_hundred_exchanges_keep_order_and_schema() {
    let mut env = spawn();
    let actions = ["forward", "wait", "back", "look", "forward", "xyzzy"];
    let mut exchanges = 0;
    let mut last_id = 0;
    while exchanges < 500 {
        let r = env.request("reset", None).unwrap();
        exchanges += 1;
        assert!(r.request_id.unwrap() > last_id);
        last_id = r.request_id.unwrap();
        assert_eq!(r.score, Some(0));
        for (i, a) in actions.iter().cycle().take(40).enumerate() {
            if exchanges >= 500 {
                break;
            }
            let op = if i % 7 == 6 { "fingerprint" } else { "step" };
            let r = env.request(op, (op == "step").then_some(*a)).unwrap();
            exchanges += 1;
            let id = r.request_id.unwrap();
            assert_eq!(id, last_id + 1);
            last_id = id;
            assert!(r.fingerprint.is_some());
            if op == "step" {
                if r.error.is_some() {
                    break;
                }
                assert!(r.observation.is_some() && r.score.is_some() && r.done.is_some() && r.valid_actions.is_some());
                if r.done == Some(true) {
                    break;
                }
            }
        }
    }
    assert_eq!(last_id, 500);
}

#[test]
fn malformed_line_keeps_the_session() {
    let mut env = spawn();
    env.reset(0).unwrap();
    let before = env.step("forward").unwrap();
    env.send_raw("{not json").unwrap();
    let bad = env.read_response().unwrap();
    assert_eq!(bad.error.unwrap().code, "bad_request");
    env.send_raw(r#"{"op":"step"}"#).unwrap();
    assert_eq!(env.read_response().unwrap().error.unwrap().code, "bad_request");
    let after = env.step("forward").unwrap();
    assert_eq!(after.score, before.score + 1);
}

#[test]
fn step_before_reset_is_no_session() {
    let mut env = spawn();
    let r = env.request("step", Some("forward")).unwrap();
    assert_eq!(r.error.unwrap().code, "no_session");
    assert!(env.step("forward").is_err());
}

#[test]
fn missing_game_file_is_startup_error() {
    let mut env = BridgeEnv::spawn(&stub(), Some(PathBuf::from("/nonexistent/zork1.z5")), Duration::from_secs(20)).unwrap();
    assert!(matches!(env.reset(0), Err(EnvError::Startup(_))));
}

#[test]
fn absent_server_is_unavailable() {
    let mut env = BridgeEnv::spawn("exit 0", None, Duration::from_secs(5)).unwrap();
    assert!(matches!(env.reset(0), Err(EnvError::Unavailable(_))));
}

#[test]
fn sessions_replay_identically() {
    let mut a = spawn();
    let mut b = spawn();
    let actions = ["forward", "forward", "back", "look", "forward"];
    let mut fa = vec![a.reset(0).unwrap().fingerprint];
    let mut fb = vec![b.reset(0).unwrap().fingerprint];
    for act in actions {
        fa.push(a.step(act).unwrap().fingerprint);
        fb.push(b.step(act).unwrap().fingerprint);
    }
    assert_eq!(fa, fb);
    assert_eq!(a.meta().unwrap().max_score, Some(9));
}

#[test]
fn engine_runs_over_the_bridge() {
    let config = RunConfig { budget: 60, episode_cap: 10, n_explorations: 2, ..RunConfig::default() };
    let mut env = spawn();
    let mut backend = ScriptedOracle::new(1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bridge.jsonl");
    let mut log = EventLog::to_file(&path).unwrap();
    let result = run(&config, &mut env, &mut backend, &mut log).unwrap();
    assert!(result.max_score > 0);
    assert_eq!(result.budget.used_exploration, 60);

    // the logged command no longer exists in a fresh shell
    let text = std::fs::read_to_string(&path).unwrap().replace("mock_bridge.py", "missing_bridge.py");
    std::fs::write(&path, text).unwrap();
    let err = replay_from_log(&path, None, &Default::default()).unwrap_err();
    assert!(matches!(err, ExperimentError::Env(EnvError::Unavailable(_))), "{err}");
}
