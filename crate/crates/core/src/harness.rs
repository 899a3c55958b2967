//! Seeded policy-vs-environment runs, dynamic-oracle regret and the three
//! experiment families: regret over time, a discount sweep and an arm-count
//! sweep.
//!
//! Replication `i` of every policy draws from substream `i` of the base seed,
//! so policies are compared on common random numbers. Results are collected
//! in replication order and aggregated with sorted compensated sums, which
//! makes serial and parallel execution byte-identical.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::env::{preset_environment, EnvPreset, Schedule};
use crate::error::{Error, Result};
use crate::hypergeometric::KahanSum;
use crate::policy::{binarize_reward, Policy, PolicyContext, PolicyKind, PolicySpec};
use crate::rng::{derive_substream, RngStream};

pub const DEFAULT_HORIZON: u64 = 5000;
pub const DEFAULT_RUNS: u64 = 1000;
pub const DEFAULT_ARMS: usize = 4;

pub const REGRET_FILE: &str = "regret.csv";
pub const REWARDS_FILE: &str = "rewards.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegretMode {
    /// Increment `μ*_t - μ_{I_t}(t)`.
    #[default]
    Expected,
    /// Increment `μ*_t - X_t`.
    Realized,
}

impl fmt::Display for RegretMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegretMode::Expected => "expected",
            RegretMode::Realized => "realized",
        })
    }
}

impl FromStr for RegretMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "expected" => Ok(RegretMode::Expected),
            "realized" | "realised" => Ok(RegretMode::Realized),
            other => Err(Error::config(format!("unknown regret mode '{other}' (expected or realized)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum EnvSpec {
    Preset(EnvPreset),
    Csv(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    /// Arm count for preset environments; ignored for CSV schedules.
    pub arms: usize,
    pub policies: Vec<PolicySpec>,
    pub horizon: u64,
    pub runs: u64,
    pub seed: u64,
    pub regret_mode: RegretMode,
    pub out: Option<PathBuf>,
}

/// The comparison set used when a config lists no policies.
pub fn default_policies() -> Vec<PolicySpec> {
    [PolicyKind::Ts, PolicyKind::Dts, PolicyKind::Dots, PolicyKind::DynamicTs, PolicyKind::Rexp3]
        .into_iter()
        .map(PolicySpec::new)
        .collect()
}

impl ExperimentConfig {
    pub fn new(env: EnvSpec) -> Self {
        Self {
            env,
            arms: DEFAULT_ARMS,
            policies: Vec::new(),
            horizon: DEFAULT_HORIZON,
            runs: DEFAULT_RUNS,
            seed: 0,
            regret_mode: RegretMode::Expected,
            out: None,
        }
    }

    pub fn plan(&self) -> RunPlan {
        RunPlan { horizon: self.horizon, runs: self.runs, seed: self.seed, mode: self.regret_mode }
    }

    pub fn preset(&self) -> Option<EnvPreset> {
        match self.env {
            EnvSpec::Preset(p) => Some(p),
            EnvSpec::Csv(_) => None,
        }
    }

    pub fn schedule(&self) -> Result<Schedule> {
        match &self.env {
            EnvSpec::Preset(p) => preset_environment(*p, self.arms),
            EnvSpec::Csv(path) => Schedule::from_csv_path(path),
        }
    }

    /// Configured policies, or the default comparison set.
    pub fn policy_specs(&self) -> Vec<PolicySpec> {
        if self.policies.is_empty() {
            default_policies()
        } else {
            self.policies.clone()
        }
    }

    /// Checks sizes, label uniqueness and every policy's parameters.
    pub fn validate(&self) -> Result<Arc<Schedule>> {
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        let schedule = Arc::new(self.schedule()?);
        schedule.check_horizon(self.horizon)?;
        let ctx = PolicyContext::new(schedule.clone(), self.horizon, self.preset());
        let specs = self.policy_specs();
        for (i, spec) in specs.iter().enumerate() {
            spec.build(&ctx)?;
            let label = spec.display_label();
            if specs[..i].iter().any(|s| s.display_label() == label) {
                return Err(Error::config(format!("duplicate policy label '{label}'; set 'label' to tell them apart")));
            }
        }
        Ok(schedule)
    }
}

/// How replications are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Execution {
    /// Worker threads; `None` uses every available processor, `Some(1)` runs
    /// serially.
    pub jobs: Option<usize>,
}

impl Execution {
    pub fn serial() -> Self {
        Self { jobs: Some(1) }
    }

    pub fn with_jobs(jobs: usize) -> Self {
        Self { jobs: Some(jobs.max(1)) }
    }

    fn map<T, F>(&self, n: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            match self.jobs {
                Some(1) => {}
                None => return (0..n).into_par_iter().map(&f).collect(),
                Some(j) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(j)
                        .build()
                        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
                    return pool.install(|| (0..n).into_par_iter().map(&f).collect());
                }
            }
        }
        (0..n).map(f).collect()
    }
}

/// Per-step record of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunTrajectory {
    pub arms: Vec<u32>,
    /// `μ_{I_t}(t)`.
    pub expected: Vec<f64>,
    /// Environment draw `X_t ∈ {0, 1}`.
    pub realized: Vec<f64>,
    /// `μ*_t`.
    pub oracle: Vec<f64>,
}

impl RunTrajectory {
    fn with_capacity(n: usize) -> Self {
        Self {
            arms: Vec::with_capacity(n),
            expected: Vec::with_capacity(n),
            realized: Vec::with_capacity(n),
            oracle: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    /// Per-step regret increments.
    pub fn increments(&self, mode: RegretMode) -> impl Iterator<Item = f64> + '_ {
        let rewards = match mode {
            RegretMode::Expected => &self.expected,
            RegretMode::Realized => &self.realized,
        };
        self.oracle.iter().zip(rewards).map(|(o, r)| o - r)
    }

    fn series(&self, mode: RegretMode) -> RunSeries {
        let mut total = 0.0;
        let cum_regret = self
            .increments(mode)
            .map(|d| {
                total += d;
                total
            })
            .collect();
        let inst_reward = match mode {
            RegretMode::Expected => self.expected.clone(),
            RegretMode::Realized => self.realized.clone(),
        };
        RunSeries { cum_regret, inst_reward }
    }
}

/// The two series a run contributes to the aggregate.
struct RunSeries {
    cum_regret: Vec<f64>,
    inst_reward: Vec<f64>,
}

/// Plays `policy` against `schedule` for `horizon` steps. Each step draws in
/// the order select, reward, binarization.
pub fn run_single(schedule: &Schedule, mut policy: Policy, horizon: u64, rng: &mut RngStream) -> Result<RunTrajectory> {
    schedule.check_horizon(horizon)?;
    let k = schedule.num_arms();
    let mut means = vec![0.0; k];
    let mut traj = RunTrajectory::with_capacity(horizon as usize);
    for t in 1..=horizon {
        for (arm, m) in means.iter_mut().enumerate() {
            *m = schedule.mean_at(arm, t)?;
        }
        let arm = policy.choose(t, rng)?;
        let reward = schedule.draw_reward(arm, t, rng)?;
        let observed = if policy.binarizes() { binarize_reward(reward, rng)? } else { reward };
        policy.update(arm, observed)?;

        traj.arms.push(arm as u32);
        traj.expected.push(means[arm]);
        traj.realized.push(reward);
        traj.oracle.push(means.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(traj)
}

/// Replication-averaged regret of one policy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretCurve {
    pub mean_cum_regret: Vec<f64>,
    /// `mean_cum_regret[t] / t`.
    pub norm_regret: Vec<f64>,
    /// Standard error of the cumulative regret.
    pub stderr: Vec<f64>,
    /// Mean expected (or realized, in realized mode) reward per step.
    pub mean_inst_reward: Vec<f64>,
    pub n_runs: u64,
}

impl RegretCurve {
    pub fn horizon(&self) -> usize {
        self.mean_cum_regret.len()
    }

    pub fn terminal_norm_regret(&self) -> f64 {
        *self.norm_regret.last().expect("curves are non-empty")
    }

    /// Standard error of the terminal normalized regret.
    pub fn terminal_norm_stderr(&self) -> f64 {
        self.stderr.last().expect("curves are non-empty") / self.horizon() as f64
    }
}

/// Mean and standard error of `values`, independent of their order.
fn mean_and_stderr(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mut sum = KahanSum::default();
    values.iter().for_each(|&v| sum.add(v));
    let mean = sum.total() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq = KahanSum::default();
    values.iter().for_each(|&v| sq.add((v - mean) * (v - mean)));
    let var = sq.total() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn aggregate_series(runs: &[RunSeries]) -> Result<RegretCurve> {
    let Some(first) = runs.first() else {
        return Err(Error::Aggregation("no trajectories to aggregate".into()));
    };
    let len = first.cum_regret.len();
    if len == 0 {
        return Err(Error::Aggregation("trajectories are empty".into()));
    }
    if runs.iter().any(|r| r.cum_regret.len() != len) {
        return Err(Error::Aggregation("trajectories differ in length".into()));
    }
    let mut column = vec![0.0; runs.len()];
    let mut curve = RegretCurve {
        mean_cum_regret: Vec::with_capacity(len),
        norm_regret: Vec::with_capacity(len),
        stderr: Vec::with_capacity(len),
        mean_inst_reward: Vec::with_capacity(len),
        n_runs: runs.len() as u64,
    };
    for t in 0..len {
        column.iter_mut().zip(runs).for_each(|(c, r)| *c = r.cum_regret[t]);
        let (mean, se) = mean_and_stderr(&mut column);
        column.iter_mut().zip(runs).for_each(|(c, r)| *c = r.inst_reward[t]);
        let (reward, _) = mean_and_stderr(&mut column);
        curve.mean_cum_regret.push(mean);
        curve.norm_regret.push(mean / (t + 1) as f64);
        curve.stderr.push(se);
        curve.mean_inst_reward.push(reward);
    }
    Ok(curve)
}

/// Averages cumulative regret over trajectories. The result does not depend
/// on the order of `trajectories`.
pub fn aggregate(trajectories: &[RunTrajectory], mode: RegretMode) -> Result<RegretCurve> {
    let series: Vec<RunSeries> = trajectories.iter().map(|t| t.series(mode)).collect();
    aggregate_series(&series)
}

/// Horizon, replication count, seed and regret mode of a batch of runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunPlan {
    pub horizon: u64,
    pub runs: u64,
    pub seed: u64,
    pub mode: RegretMode,
}

/// Runs `plan.runs` replications of one policy and aggregates them.
pub fn run_replications(
    spec: &PolicySpec,
    ctx: &PolicyContext,
    schedule: &Schedule,
    plan: RunPlan,
    exec: Execution,
) -> Result<RegretCurve> {
    spec.build(ctx)?;
    let base = RngStream::new(plan.seed);
    let series = exec.map(plan.runs, |i| {
        let mut rng = derive_substream(&base, i);
        let traj = run_single(schedule, spec.build(ctx)?, plan.horizon, &mut rng)?;
        Ok(traj.series(plan.mode))
    })?;
    aggregate_series(&series)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyCurve {
    pub policy: String,
    /// Resolved parameters.
    pub params: String,
    pub curve: RegretCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub curves: Vec<PolicyCurve>,
    /// Files written, if the config named an output directory.
    pub files: Vec<PathBuf>,
}

/// Runs every configured policy and, when `config.out` is set, writes
/// `regret.csv` and `rewards.csv` there.
pub fn run_experiment(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentResult> {
    let schedule = config.validate()?;
    let ctx = PolicyContext::new(schedule.clone(), config.horizon, config.preset());
    let mut curves = Vec::new();
    for spec in config.policy_specs() {
        let curve = run_replications(&spec, &ctx, &schedule, config.plan(), exec)?;
        curves.push(PolicyCurve { policy: spec.display_label(), params: spec.build(&ctx)?.describe(), curve });
    }
    let mut files = Vec::new();
    if let Some(dir) = &config.out {
        files = write_curves(&curves, dir)?;
    }
    Ok(ExperimentResult { curves, files })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::File::create(path).and_then(|mut f| f.write_all(contents)).map_err(|e| Error::io(path, e))
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Aggregation(format!("CSV encoding failed: {e}"));
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(&row).map_err(to_err)?;
    }
    w.into_inner().map_err(|e| Error::Aggregation(format!("CSV encoding failed: {e}")))
}

/// Regret CSV: `policy,t,mean_cum_regret,norm_regret,stderr,n_runs`.
pub fn regret_csv(curves: &[PolicyCurve]) -> Result<Vec<u8>> {
    let rows = curves.iter().flat_map(|pc| {
        let c = &pc.curve;
        (0..c.horizon()).map(move |i| {
            vec![
                pc.policy.clone(),
                (i + 1).to_string(),
                c.mean_cum_regret[i].to_string(),
                c.norm_regret[i].to_string(),
                c.stderr[i].to_string(),
                c.n_runs.to_string(),
            ]
        })
    });
    csv_bytes(&["policy", "t", "mean_cum_regret", "norm_regret", "stderr", "n_runs"], rows)
}

/// Rewards CSV: `policy,t,mean_inst_reward`.
pub fn rewards_csv(curves: &[PolicyCurve]) -> Result<Vec<u8>> {
    let rows = curves.iter().flat_map(|pc| {
        let c = &pc.curve;
        (0..c.horizon()).map(move |i| vec![pc.policy.clone(), (i + 1).to_string(), c.mean_inst_reward[i].to_string()])
    });
    csv_bytes(&["policy", "t", "mean_inst_reward"], rows)
}

/// Writes both CSVs into `dir`, creating it if needed.
pub fn write_curves(curves: &[PolicyCurve], dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let regret = dir.join(REGRET_FILE);
    let rewards = dir.join(REWARDS_FILE);
    write_file(&regret, &regret_csv(curves)?)?;
    write_file(&rewards, &rewards_csv(curves)?)?;
    Ok(vec![regret, rewards])
}

/// One cell of a sweep table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub policy: String,
    pub terminal_norm_regret: f64,
    pub stderr: f64,
}

/// Sweep CSV: `param,policy,terminal_norm_regret,stderr`.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let rows = rows
        .iter()
        .map(|r| vec![r.param.to_string(), r.policy.clone(), r.terminal_norm_regret.to_string(), r.stderr.to_string()]);
    csv_bytes(&["param", "policy", "terminal_norm_regret", "stderr"], rows)
}

pub fn write_sweep(rows: &[SweepRow], dir: &Path) -> Result<PathBuf> {
    create_dir(dir)?;
    let path = dir.join(SWEEP_FILE);
    write_file(&path, &sweep_csv(rows)?)?;
    Ok(path)
}

fn sweep_row(param: f64, spec: &PolicySpec, curve: &RegretCurve) -> SweepRow {
    SweepRow {
        param,
        policy: spec.display_label(),
        terminal_norm_regret: curve.terminal_norm_regret(),
        stderr: curve.terminal_norm_stderr(),
    }
}

/// Terminal normalized regret of dTS and dOTS at each discount in `grid`.
///
/// dTS/dOTS entries of the config are used (with their priors and labels);
/// when it has none, both run with default priors. Other policies are
/// ignored.
pub fn sweep_gamma(config: &ExperimentConfig, grid: &[f64], exec: Execution) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::config("gamma grid is empty"));
    }
    if let Some(&bad) = grid.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
        return Err(Error::config(format!("gamma grid values must lie in (0, 1], got {bad}")));
    }
    let mut specs: Vec<PolicySpec> =
        config.policies.iter().filter(|s| matches!(s.kind, PolicyKind::Dts | PolicyKind::Dots)).cloned().collect();
    if specs.is_empty() {
        specs = vec![PolicySpec::new(PolicyKind::Dts), PolicySpec::new(PolicyKind::Dots)];
    }
    let sweep_config = ExperimentConfig { policies: specs.clone(), ..config.clone() };
    let schedule = sweep_config.validate()?;
    let ctx = PolicyContext::new(schedule.clone(), config.horizon, config.preset());

    let mut rows = Vec::new();
    for &gamma in grid {
        for spec in &specs {
            let mut spec = spec.clone();
            spec.params.gamma = Some(gamma);
            let curve = run_replications(&spec, &ctx, &schedule, config.plan(), exec)?;
            rows.push(sweep_row(gamma, &spec, &curve));
        }
    }
    Ok(rows)
}

/// Terminal normalized regret for each arm count in `grid`, on the preset
/// environment rebuilt with that many arms. Policy parameters stay those of
/// the configured arm count.
pub fn sweep_arms(config: &ExperimentConfig, grid: &[usize], exec: Execution) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::config("arm grid is empty"));
    }
    let Some(preset) = config.preset() else {
        return Err(Error::config("the arms sweep needs a preset environment"));
    };
    if let Some(&bad) = grid.iter().find(|&&k| k < 2) {
        return Err(Error::config(format!("arm counts must be at least 2, got {bad}")));
    }
    config.validate()?;
    let specs = config.policy_specs();

    let mut rows = Vec::new();
    for &k in grid {
        let schedule = Arc::new(preset_environment(preset, k)?);
        let ctx = PolicyContext {
            num_arms: k,
            param_arms: config.arms,
            horizon: config.horizon,
            preset: Some(preset),
            schedule: Some(schedule.clone()),
        };
        for spec in &specs {
            let curve = run_replications(spec, &ctx, &schedule, config.plan(), exec)?;
            rows.push(sweep_row(k as f64, spec, &curve));
        }
    }
    Ok(rows)
}
