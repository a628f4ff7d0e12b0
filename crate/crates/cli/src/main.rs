use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use glow_core::env::{BridgeEnv, EnvError, EnvSpec, Environment};
use glow_core::experiment::{build_report, replay_from_log, run_experiment, ExperimentConfig, ExperimentError, Overrides};
use glow_core::llm::{BackendConfig, HttpConfig};
use glow_core::model::{ReflectionStrategy, SelectionStrategy};
use glow_core::variance::{simulate_baseline_stability, simulate_estimators, ReturnModel, VarianceError, VarianceExperiment};
use thiserror::Error;

/// Number of steps taken by `bridge-check` after the handshake.
const SMOKE_STEPS: usize = 5;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Variance(#[from] VarianceError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Experiment(ExperimentError::Invalid(_))
            | CliError::Experiment(ExperimentError::Usage(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "glow", version, about = "Go-Explore with LLM world models on text games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment over its seeds and write logs plus a summary.
    Run(RunArgs),
    /// Aggregate event logs into a configuration by environment grid.
    Report(ReportArgs),
    /// Re-execute a logged trajectory and print its transcript.
    Replay(ReplayArgs),
    /// Monte-Carlo check of multi-path advantage variance.
    VarianceLab(VarianceArgs),
    /// Handshake with a bridge server and take a few steps.
    BridgeCheck(BridgeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendKind {
    Scripted,
    Http,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON config file; built-in defaults when omitted.
    config: Option<PathBuf>,
    /// Directory for seed logs and summary.json.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// `miniquest` or `bridge:<command>`.
    #[arg(long)]
    env: Option<EnvSpec>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    episode_cap: Option<u32>,
    /// Explorations per selected state.
    #[arg(long)]
    n: Option<u32>,
    /// Frontier size.
    #[arg(long)]
    k: Option<u32>,
    /// glow, uniform, ige, novelty or novelty:<alpha>.
    #[arg(long)]
    selection: Option<SelectionStrategy>,
    /// mar, reflexion or none.
    #[arg(long)]
    reflection: Option<ReflectionStrategy>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// Chat-completions URL for the http backend.
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name for the http backend.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    verify_replay: bool,
    #[arg(long)]
    count_replay_steps: bool,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    logs: Vec<PathBuf>,
    /// Print the grid as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    log: PathBuf,
    /// Trajectory to replay; the best one when omitted.
    #[arg(long)]
    id: Option<u64>,
    /// Game file for bridge logs.
    #[arg(long)]
    game_path: Option<PathBuf>,
    #[arg(long)]
    timeout_secs: Option<u64>,
}

#[derive(Debug, Args)]
struct VarianceArgs {
    /// Comma-separated return standard deviations, one per action.
    #[arg(long, value_delimiter = ',', default_value = "1,1,1")]
    sigmas: Vec<f64>,
    /// Comma-separated sample counts, one per action.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    m: Vec<u32>,
    #[arg(long, default_value_t = 10_000)]
    trials: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Use a two-point return law with this success probability.
    #[arg(long)]
    bernoulli: Option<f64>,
    /// Also report inflation under a noisy baseline with this std.
    #[arg(long)]
    baseline_noise: Option<f64>,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BridgeArgs {
    /// `bridge:<command>` or a bare server command.
    #[arg(long)]
    env: String,
    #[arg(long)]
    game_path: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Report(a) => cmd_report(a),
        Command::Replay(a) => cmd_replay(a),
        Command::VarianceLab(a) => cmd_variance(a),
        Command::BridgeCheck(a) => cmd_bridge_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn backend_override(args: &RunArgs, current: &BackendConfig) -> Result<Option<BackendConfig>, CliError> {
    let wants_http = matches!(args.backend, Some(BackendKind::Http))
        || (args.backend.is_none() && (args.endpoint.is_some() || args.model.is_some()));
    if !wants_http {
        return Ok(args.backend.map(|_| BackendConfig::Scripted));
    }
    let mut http = match current {
        BackendConfig::Http(h) => h.clone(),
        BackendConfig::Scripted => match (&args.endpoint, &args.model) {
            (Some(e), Some(m)) => HttpConfig::new(e, m),
            _ => return Err(CliError::Usage("the http backend needs --endpoint and --model or an http backend in the config".into())),
        },
    };
    if let Some(e) = &args.endpoint {
        http.endpoint = e.clone();
    }
    if let Some(m) = &args.model {
        http.model = m.clone();
    }
    Ok(Some(BackendConfig::Http(http)))
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let overrides = Overrides {
        env: args.env.clone(),
        seeds: args.seeds.clone(),
        budget: args.budget,
        episode_cap: args.episode_cap,
        n: args.n,
        k: args.k,
        selection: args.selection,
        reflection: args.reflection,
        backend: backend_override(&args, &cfg.backend)?,
        verify_replay: args.verify_replay,
        count_replay_steps: args.count_replay_steps,
    };
    cfg.apply(&overrides)?;
    let summary = run_experiment(&cfg, Some(&args.out))?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
        return Ok(());
    }
    println!("{} on {} ({} seeds)", summary.label, summary.env, summary.seeds.len());
    for s in &summary.seeds {
        println!(
            "  seed {:>3}: max score {:>4}  selections {:>4}  archive {:>4}  steps {:>5}",
            s.seed, s.max_score, s.selections, s.archive_size, s.steps_used
        );
    }
    println!("mean {:.2} ± {:.2}", summary.mean, summary.std);
    println!("logs and summary.json in {}", args.out.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let report = build_report(&args.logs)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{}", report.render_text());
    }
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<(), CliError> {
    let opts = glow_core::env::EnvOptions { game_path: args.game_path, timeout: args.timeout_secs.map(Duration::from_secs) };
    let transcript = replay_from_log(&args.log, args.id, &opts)?;
    print!("{}", transcript.render());
    Ok(())
}

fn cmd_variance(args: VarianceArgs) -> Result<(), CliError> {
    let mut exp = VarianceExperiment::new(&args.sigmas, &args.m, args.trials, args.seed);
    if let Some(p) = args.bernoulli {
        exp.returns = ReturnModel::Bernoulli { p };
    }
    let report = simulate_estimators(&exp)?;
    println!(
        "{:>6} {:>6} {:>4} {:>11} {:>11} {:>8} {:>8} {:>19}  result",
        "action", "sigma", "m", "var_single", "var_mar", "ratio", "bound", "interval"
    );
    for a in &report.actions {
        println!(
            "{:>6} {:>6.3} {:>4} {:>11.5} {:>11.5} {:>8.4} {:>8.4} [{:>7.4}, {:>7.4}]  {}",
            a.action,
            a.sigma,
            a.m,
            a.var_single,
            a.var_mar,
            a.ratio,
            a.bound,
            a.ci_low,
            a.ci_high,
            if a.pass { "PASS" } else { "FAIL" }
        );
    }
    let mut json = serde_json::to_value(&report).expect("report serializes");
    if let Some(noise) = args.baseline_noise {
        let inflation = simulate_baseline_stability(&exp, noise)?;
        println!("baseline noise {noise}:");
        for i in &inflation {
            println!("  action {} m={} inflation {:.4} (expected {:.4})", i.action, i.m, i.factor, i.expected);
        }
        json["baseline_stability"] = serde_json::to_value(&inflation).expect("inflation serializes");
    }
    if let Some(path) = &args.json {
        write_json(path, &json)?;
    }
    if report.all_pass() {
        Ok(())
    } else {
        Err(CliError::Failed("variance ratio outside its confidence band".into()))
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    fs::write(path, text + "\n").map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })
}

fn cmd_bridge_check(args: BridgeArgs) -> Result<(), CliError> {
    let command = match args.env.parse::<EnvSpec>() {
        Ok(EnvSpec::Bridge { command }) => command,
        Ok(EnvSpec::MiniQuest) => return Err(CliError::Usage("bridge-check needs a bridge command".into())),
        Err(_) if !args.env.starts_with("bridge:") && !args.env.trim().is_empty() => args.env.clone(),
        Err(e) => return Err(CliError::Usage(e)),
    };
    let mut env = BridgeEnv::spawn(&command, args.game_path, Duration::from_secs(args.timeout_secs))?;
    let meta = env.meta()?;
    println!(
        "handshake ok: {} (max score {}, engine {})",
        meta.title.as_deref().unwrap_or("untitled"),
        meta.max_score.map_or("unknown".to_string(), |m| m.to_string()),
        meta.engine_version.as_deref().unwrap_or("unknown")
    );
    let mut state = env.reset(0)?;
    println!("reset: score {} fingerprint {}", state.score, state.fingerprint.as_str());
    for i in 1..=SMOKE_STEPS {
        if state.done {
            println!("episode ended after {} steps", i - 1);
            break;
        }
        let Some(action) = state.valid_actions.first().cloned() else {
            return Err(CliError::Failed(format!("no valid actions offered before step {i}")));
        };
        state = env.step(&action)?;
        let fp = env.fingerprint()?;
        if fp != state.fingerprint {
            return Err(CliError::Failed(format!("step {i}: fingerprint op disagrees with step response")));
        }
        println!("step {i}: {action:?} -> score {} reward {} done {}", state.score, state.reward, state.done);
    }
    println!("bridge ok");
    Ok(())
}
