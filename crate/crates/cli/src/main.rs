#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod grid;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use nsbandit::config::load_config;
use nsbandit::env::{describe_presets, EnvPreset, Schedule};
use nsbandit::exact::{mc_prob_suboptimal, prob_suboptimal_report, ProbQuery};
use nsbandit::harness::{
    run_experiment, sweep_arms, sweep_gamma, write_sweep, EnvSpec, Execution, ExperimentConfig, RegretMode,
};
use nsbandit::hypergeometric::SeriesControl;
use nsbandit::policy::{PolicyKind, PolicySpec};
use nsbandit::rng::RngStream;

/// Environment variable naming the default output directory.
const OUT_DIR_VAR: &str = "NSBANDIT_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "results";

#[derive(Parser)]
#[command(
    name = "nsbandit",
    version,
    about = "Non-stationary bandit experiments and exact sub-optimal-pick probabilities"
)]
struct Cli {
    /// Worker threads for replications (default: all processors).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run policies on an environment and write regret/reward CSVs.
    Run(ExperimentArgs),
    /// Sweep the discount factor or the number of arms.
    Sweep {
        kind: SweepKind,
        /// `start:stop:step` (inclusive) or a comma-separated list.
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
    /// Exact probability that the sub-optimal arm's sample wins.
    Prob(ProbArgs),
    /// List the preset environments.
    Envs {
        #[arg(long, default_value_t = 4)]
        arms: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Gamma,
    Arms,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset name (fast, slow, abrupt) or a schedule CSV.
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    arms: Option<usize>,
    /// Comma-separated policy names, each with default parameters.
    #[arg(long)]
    policies: Option<String>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["expected", "realized"])]
    regret_mode: Option<String>,
    /// Output directory (default: $NSBANDIT_OUT_DIR, else ./results).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbArgs {
    alpha1: f64,
    beta1: f64,
    alpha2: f64,
    beta2: f64,
    /// Also estimate by Monte Carlo with this many draws.
    #[arg(long)]
    mc: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_terms: u64,
    #[arg(long)]
    json: bool,
}

enum CliError {
    Usage(String),
    Core(nsbandit::Error),
    Output(String),
}

impl From<nsbandit::Error> for CliError {
    fn from(e: nsbandit::Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Output(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = Execution { jobs: cli.jobs.map(|j| j.max(1)) };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args, exec),
        Command::Sweep { kind, grid, experiment } => cmd_sweep(kind, &grid, &experiment, exec),
        Command::Prob(args) => cmd_prob(&args),
        Command::Envs { arms, json } => cmd_envs(arms, json),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Core(nsbandit::Error::Convergence(_)) => {
                    eprintln!("hint: pass --mc <N> for a Monte-Carlo estimate instead");
                    ExitCode::FAILURE
                }
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn build_config(args: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => Some(load_config(path)?),
        None => None,
    };
    let env = match (&args.env, &config) {
        (Some(e), _) => match e.parse::<EnvPreset>() {
            Ok(p) => EnvSpec::Preset(p),
            Err(_) if e.ends_with(".csv") => EnvSpec::Csv(PathBuf::from(e)),
            Err(err) => return Err(CliError::Usage(err.to_string())),
        },
        (None, Some(c)) => c.env.clone(),
        (None, None) => return Err(CliError::Usage("no environment: pass --env or --config".into())),
    };
    let mut c = config.take().unwrap_or_else(|| ExperimentConfig::new(env.clone()));
    c.env = env;
    if let Some(v) = args.arms {
        c.arms = v;
    }
    if let Some(v) = args.horizon {
        c.horizon = v;
    }
    if let Some(v) = args.runs {
        c.runs = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = &args.regret_mode {
        c.regret_mode = v.parse::<RegretMode>()?;
    }
    if let Some(list) = &args.policies {
        c.policies = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|name| name.parse::<PolicyKind>().map(PolicySpec::new))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    c.out = args
        .out
        .clone()
        .or(c.out)
        .or_else(|| std::env::var_os(OUT_DIR_VAR).map(PathBuf::from))
        .or_else(|| Some(PathBuf::from(DEFAULT_OUT_DIR)));
    Ok(c)
}

fn env_label(config: &ExperimentConfig) -> String {
    match &config.env {
        EnvSpec::Preset(p) => format!("{p}, K={}", config.arms),
        EnvSpec::Csv(path) => path.display().to_string(),
    }
}

fn cmd_run(args: &ExperimentArgs, exec: Execution) -> CliResult {
    let config = build_config(args)?;
    let result = run_experiment(&config, exec)?;
    println!(
        "env {}  T={}  runs={}  seed={}  regret={}",
        env_label(&config),
        config.horizon,
        config.runs,
        config.seed,
        config.regret_mode
    );
    let width = result.curves.iter().map(|c| c.policy.len()).max().unwrap_or(6).max(6);
    println!("{:<width$}  {:>14}  {:>10}  parameters", "policy", "norm_regret", "stderr");
    for pc in &result.curves {
        println!(
            "{:<width$}  {:>14.6}  {:>10.6}  {}",
            pc.policy,
            pc.curve.terminal_norm_regret(),
            pc.curve.terminal_norm_stderr(),
            pc.params
        );
    }
    for f in &result.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_sweep(kind: SweepKind, grid_text: &str, args: &ExperimentArgs, exec: Execution) -> CliResult {
    let config = build_config(args)?;
    let rows = match kind {
        SweepKind::Gamma => {
            let grid = grid::parse_real_grid(grid_text).map_err(CliError::Usage)?;
            if let Some(bad) = grid.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
                return Err(CliError::Usage(format!("gamma values must lie in (0, 1], got {bad}")));
            }
            sweep_gamma(&config, &grid, exec)?
        }
        SweepKind::Arms => {
            let grid = grid::parse_int_grid(grid_text).map_err(CliError::Usage)?;
            if let Some(bad) = grid.iter().find(|&&k| k < 2) {
                return Err(CliError::Usage(format!("arm counts must be at least 2, got {bad}")));
            }
            sweep_arms(&config, &grid, exec)?
        }
    };
    println!(
        "env {}  T={}  runs={}  seed={}  regret={}",
        env_label(&config),
        config.horizon,
        config.runs,
        config.seed,
        config.regret_mode
    );
    println!("{:>8}  {:<10}  {:>14}  {:>10}", "param", "policy", "norm_regret", "stderr");
    for r in &rows {
        println!("{:>8}  {:<10}  {:>14.6}  {:>10.6}", r.param, r.policy, r.terminal_norm_regret, r.stderr);
    }
    let dir = config.out.as_deref().expect("output directory always resolved");
    let path = write_sweep(&rows, dir)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_prob(args: &ProbArgs) -> CliResult {
    let query = ProbQuery::new(args.alpha1, args.beta1, args.alpha2, args.beta2)?;
    let ctl = SeriesControl::new(args.tolerance, args.max_terms)?;
    let mc = match args.mc {
        Some(n) => {
            let estimate = mc_prob_suboptimal(&query, n, &mut RngStream::new(args.seed))?;
            Some((n, estimate, (estimate * (1.0 - estimate) / n as f64).sqrt()))
        }
        None => None,
    };
    let report = match prob_suboptimal_report(&query, &ctl) {
        Ok(r) => r,
        Err(e @ nsbandit::Error::Convergence(_)) if mc.is_some() => {
            let (n, estimate, se) = mc.expect("checked above");
            eprintln!("warning: exact evaluation failed ({e}); Monte-Carlo only");
            println!("mc        {estimate}  (n = {n}, stderr {se:.2e})");
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    if args.json {
        let mut value = serde_json::to_value(&report).map_err(|e| CliError::Output(e.to_string()))?;
        if let Some((n, estimate, se)) = mc {
            value["mc"] = json!({
                "n": n,
                "estimate": estimate,
                "stderr": se,
                "abs_diff": (estimate - report.probability).abs(),
            });
        }
        println!("{}", serde_json::to_string_pretty(&value).map_err(|e| CliError::Output(e.to_string()))?);
    } else {
        println!("exact     {}", report.probability);
        if let Some((n, estimate, se)) = mc {
            println!("mc        {estimate}  (n = {n}, stderr {se:.2e})");
            println!("abs diff  {:.3e}", (estimate - report.probability).abs());
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn cmd_envs(arms: usize, json: bool) -> CliResult {
    let presets = describe_presets(arms)?;
    if json {
        let text = serde_json::to_string_pretty(&presets).map_err(|e| CliError::Output(e.to_string()))?;
        println!("{text}");
        return Ok(());
    }
    for d in &presets {
        match &d.schedule {
            Schedule::Sinusoidal(s) => {
                let offsets: Vec<String> = s.offsets().iter().map(|o| format!("{o:.4}")).collect();
                println!(
                    "{:<7} sinusoidal  K={}  period={}  offsets=[{}]",
                    d.name,
                    d.num_arms,
                    s.period(),
                    offsets.join(", ")
                );
            }
            Schedule::Abrupt(s) => {
                println!("{:<7} abrupt      K={}  cycle={}  all arms 0 at cycle start", d.name, d.num_arms, s.cycle());
                for c in s.changes() {
                    println!("        arm {} -> {:.2} at step {}", c.arm + 1, c.value, c.at);
                }
            }
            Schedule::Custom(_) => unreachable!("presets are never custom"),
        }
    }
    Ok(())
}
