use std::path::PathBuf;

use glow_core::experiment::{
    build_report, digest_log, mean_std, replay_from_log, run_experiment, ExperimentConfig, ExperimentError, Overrides,
};
use glow_core::events::read_events;
use glow_core::events::EventBody;
use glow_core::model::{ReflectionStrategy, SelectionStrategy};

fn small(seeds: Vec<u64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { seeds, ..ExperimentConfig::default() };
    cfg.run.budget = 300;
    cfg
}

#[test]
fn summary_matches_raw_logs() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&small(vec![1, 2, 3]), Some(dir.path())).unwrap();
    assert_eq!(summary.seeds.len(), 3);
    let mut scores = Vec::new();
    for s in &summary.seeds {
        let path = s.log.as_ref().unwrap();
        let d = digest_log(path).unwrap();
        assert_eq!(d.max_score, s.max_score);
        let run_end = read_events(path)
            .unwrap()
            .into_iter()
            .find_map(|e| match e.body {
                EventBody::RunEnd { max_score, .. } => Some(max_score),
                _ => None,
            })
            .unwrap();
        assert_eq!(run_end, s.max_score);
        scores.push(d.max_score as f64);
    }
    assert_eq!(mean_std(&scores), (summary.mean, summary.std));
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(written["mean"].as_f64().unwrap(), summary.mean);
}

#[test]
fn report_groups_by_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let full = small(vec![1, 2]);
    let mut no_mar = full.clone();
    no_mar
        .apply(&Overrides { reflection: Some(ReflectionStrategy::None), ..Default::default() })
        .unwrap();
    let a = run_experiment(&full, Some(&dir.path().join("full"))).unwrap();
    let b = run_experiment(&no_mar, Some(&dir.path().join("nomar"))).unwrap();
    let one = build_report(&[a.seeds[0].log.clone().unwrap()]).unwrap();
    assert_eq!((one.rows.len(), one.environments.len()), (1, 1));
    let logs: Vec<PathBuf> = a.seeds.iter().chain(&b.seeds).map(|s| s.log.clone().unwrap()).collect();
    let report = build_report(&logs).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.environments, vec!["miniquest".to_string()]);
    let cell = &report.rows[0].cells["miniquest"];
    assert_eq!(cell.mean, a.mean);
    assert_eq!(cell.std, a.std);
    let text = report.render_text();
    assert!(text.contains("glow+mar") && text.contains("glow+none"), "{text}");
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn uniform_override_logs_no_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(vec![1]);
    cfg.apply(&Overrides { selection: Some(SelectionStrategy::Uniform), ..Default::default() }).unwrap();
    let s = run_experiment(&cfg, Some(dir.path())).unwrap();
    let d = digest_log(s.seeds[0].log.as_ref().unwrap()).unwrap();
    assert_eq!(d.analyze_calls, 0);
    assert!(d.selections > 0);
}

#[test]
fn best_trajectory_replays_to_the_vault() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { seeds: vec![3], ..ExperimentConfig::default() };
    let s = run_experiment(&cfg, Some(dir.path())).unwrap();
    assert_eq!(s.seeds[0].max_score, 100);
    let log = s.seeds[0].log.clone().unwrap();
    let t = replay_from_log(&log, None, &Default::default()).unwrap();
    assert_eq!(t.final_score(), 100);
    assert!(t.lines.last().unwrap().observation.contains("Vault"), "{}", t.render());
    assert!(matches!(replay_from_log(&log, Some(999_999), &Default::default()), Err(ExperimentError::NotFound(999_999))));
}

#[test]
fn tampered_log_reports_divergent_step() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_experiment(&small(vec![2]), Some(dir.path())).unwrap();
    let log = s.seeds[0].log.clone().unwrap();
    let events = read_events(&log).unwrap();
    let (id, len) = events
        .iter()
        .find_map(|e| match &e.body {
            EventBody::FrontierInsert { trajectory, .. } if trajectory.steps.len() > 3 => {
                Some((trajectory.id, trajectory.steps.len()))
            }
            _ => None,
        })
        .unwrap();
    assert!(len > 3);
    let mut text = String::new();
    for line in std::fs::read_to_string(&log).unwrap().lines() {
        let mut v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v["type"] == "frontier_insert" && v["payload"]["trajectory"]["id"] == id {
            v["payload"]["trajectory"]["steps"][2]["fingerprint_after"] = "0000".into();
        }
        text.push_str(&v.to_string());
        text.push('\n');
    }
    std::fs::write(&log, text).unwrap();
    let err = replay_from_log(&log, Some(id), &Default::default()).unwrap_err();
    assert!(matches!(err, ExperimentError::Env(glow_core::env::EnvError::Nondeterminism { step: 2, .. })), "{err}");
}

#[test]
fn example_configs_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 1);
}
