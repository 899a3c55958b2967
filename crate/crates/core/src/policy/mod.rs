//! Arm-selection policies behind one interface.
//!
//! A policy is driven as `choose(t) -> arm`, then `update(arm, reward)`.
//! Arms are 0-based and `t` starts at 1.

pub mod exp3;
pub mod params;
pub mod thompson;
pub mod ucb;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::env::{EnvPreset, Schedule};
use crate::error::{Error, Result};
use crate::rng::{sample_bernoulli, RngStream};

pub use exp3::{Exp3Ix, Rexp3};
pub use params::{ducb_gamma, exp3ix_params, preset_params, rexp3_gamma, swucb_tau, PresetParams};
pub use thompson::{DiscountedPosterior, DiscountedTs, DynamicTs};
pub use ucb::{DiscountedUcb, SlidingWindowUcb};

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Turns a reward in `[0, 1]` into a Bernoulli bit with that success
/// probability. Inputs of exactly 0 or 1 are returned without drawing.
pub fn binarize_reward(observed: f64, rng: &mut RngStream) -> Result<f64> {
    if !(0.0..=1.0).contains(&observed) {
        return Err(Error::InvalidReward(observed));
    }
    if observed == 0.0 || observed == 1.0 {
        return Ok(observed);
    }
    Ok(if sample_bernoulli(rng, observed)? { 1.0 } else { 0.0 })
}

/// One selection with the per-arm scores or probabilities behind it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArmChoice {
    pub arm: usize,
    pub scores: Vec<f64>,
    /// Set for the randomized exponential-weights policies.
    pub probabilities: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PolicyKind {
    Ts,
    Dts,
    Dots,
    DynamicTs,
    Rexp3,
    Ducb,
    Swucb,
    Exp3Ix,
    Oracle,
}

pub const POLICY_NAMES: &str = "ts, dts, dots, dyn-ts, rexp3, ducb, swucb, exp3ix, oracle";

impl PolicyKind {
    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::Ts => "TS",
            PolicyKind::Dts => "dTS",
            PolicyKind::Dots => "dOTS",
            PolicyKind::DynamicTs => "DynamicTS",
            PolicyKind::Rexp3 => "REXP3",
            PolicyKind::Ducb => "D-UCB",
            PolicyKind::Swucb => "SW-UCB",
            PolicyKind::Exp3Ix => "EXP3-IX",
            PolicyKind::Oracle => "Oracle",
        }
    }

    fn accepts(self, key: &str) -> bool {
        let keys: &[&str] = match self {
            PolicyKind::Ts => &["alpha0", "beta0"],
            PolicyKind::Dts | PolicyKind::Dots => &["gamma", "alpha0", "beta0"],
            PolicyKind::DynamicTs => &["c"],
            PolicyKind::Rexp3 => &["gamma", "delta"],
            PolicyKind::Ducb => &["gamma", "xi", "upsilon", "bound"],
            PolicyKind::Swucb => &["tau", "xi", "upsilon", "bound"],
            PolicyKind::Exp3Ix => &["eta", "gamma_ix"],
            PolicyKind::Oracle => &[],
        };
        keys.contains(&key)
    }

    /// Whether observations are turned into Bernoulli bits before updating.
    pub fn binarizes(self) -> bool {
        matches!(self, PolicyKind::Ts | PolicyKind::Dts | PolicyKind::Dots | PolicyKind::DynamicTs)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.trim().to_ascii_lowercase().chars().filter(|c| *c != '-' && *c != '_').collect();
        Ok(match norm.as_str() {
            "ts" => PolicyKind::Ts,
            "dts" => PolicyKind::Dts,
            "dots" => PolicyKind::Dots,
            "dynts" | "dynamicts" => PolicyKind::DynamicTs,
            "rexp3" => PolicyKind::Rexp3,
            "ducb" => PolicyKind::Ducb,
            "swucb" => PolicyKind::Swucb,
            "exp3ix" => PolicyKind::Exp3Ix,
            "oracle" => PolicyKind::Oracle,
            _ => return Err(Error::config(format!("unknown policy '{}'; valid names: {POLICY_NAMES}", s.trim()))),
        })
    }
}

/// Parameters as given by the user; anything left out is filled in by
/// [`PolicySpec::build`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PolicyParams {
    pub gamma: Option<f64>,
    pub alpha0: Option<f64>,
    pub beta0: Option<f64>,
    pub c: Option<f64>,
    pub delta: Option<u64>,
    pub xi: Option<f64>,
    pub tau: Option<u64>,
    pub eta: Option<f64>,
    pub gamma_ix: Option<f64>,
    pub upsilon: Option<u64>,
    pub bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub label: Option<String>,
    pub params: PolicyParams,
}

/// What a spec needs to know about the experiment to fill in defaults.
#[derive(Clone, Debug)]
pub struct PolicyContext {
    /// Arms the policy state is sized for.
    pub num_arms: usize,
    /// Arm count used in tuning formulas; differs from `num_arms` when a
    /// sweep keeps the four-arm tuning.
    pub param_arms: usize,
    pub horizon: u64,
    pub preset: Option<EnvPreset>,
    /// Needed only by the oracle.
    pub schedule: Option<Arc<Schedule>>,
}

impl PolicyContext {
    pub fn new(schedule: Arc<Schedule>, horizon: u64, preset: Option<EnvPreset>) -> Self {
        let k = schedule.num_arms();
        Self { num_arms: k, param_arms: k, horizon, preset, schedule: Some(schedule) }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::config(format!("invalid value '{value}' for '{key}'")))
}

fn required<T>(value: Option<T>, what: &str, kind: PolicyKind) -> Result<T> {
    value.ok_or_else(|| Error::config(format!("{kind} needs '{what}' (no preset environment to take it from)")))
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self { kind, label: None, params: PolicyParams::default() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_param(mut self, key: &str, value: &str) -> Result<Self> {
        self.set(key, value)?;
        Ok(self)
    }

    /// Name used in output files.
    pub fn display_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.label().to_owned())
    }

    /// Sets one parameter from text, rejecting keys the algorithm does not use.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase();
        if key == "label" {
            self.label = Some(value.trim().to_owned());
            return Ok(());
        }
        if !self.kind.accepts(&key) {
            return Err(Error::config(format!("{} does not take parameter '{key}'", self.kind)));
        }
        let p = &mut self.params;
        match key.as_str() {
            "gamma" => p.gamma = Some(parse_value(&key, value)?),
            "alpha0" => p.alpha0 = Some(parse_value(&key, value)?),
            "beta0" => p.beta0 = Some(parse_value(&key, value)?),
            "c" => p.c = Some(parse_value(&key, value)?),
            "delta" => p.delta = Some(parse_value(&key, value)?),
            "xi" => p.xi = Some(parse_value(&key, value)?),
            "tau" => p.tau = Some(parse_value(&key, value)?),
            "eta" => p.eta = Some(parse_value(&key, value)?),
            "gamma_ix" => p.gamma_ix = Some(parse_value(&key, value)?),
            "upsilon" => p.upsilon = Some(parse_value(&key, value)?),
            "bound" => p.bound = Some(parse_value(&key, value)?),
            _ => unreachable!("accepted keys are handled above"),
        }
        Ok(())
    }

    /// Initial policy state with every omitted parameter resolved from the
    /// preset tables or the tuning formulas.
    pub fn build(&self, ctx: &PolicyContext) -> Result<Policy> {
        let p = &self.params;
        let k = ctx.num_arms;
        let preset = ctx.preset.map(preset_params);
        let xi = p.xi.unwrap_or(0.5);
        let bound = p.bound.unwrap_or(1.0);
        let kind = self.kind;
        Ok(match kind {
            PolicyKind::Ts => Policy::Thompson(DiscountedTs::new(
                DiscountedPosterior::new(k, 1.0, p.alpha0.unwrap_or(1.0), p.beta0.unwrap_or(1.0))?,
                false,
            )),
            PolicyKind::Dts | PolicyKind::Dots => {
                let gamma = required(p.gamma.or(preset.map(|q| q.dts_gamma)), "gamma", kind)?;
                let posterior = DiscountedPosterior::new(k, gamma, p.alpha0.unwrap_or(1.0), p.beta0.unwrap_or(1.0))?;
                Policy::Thompson(DiscountedTs::new(posterior, kind == PolicyKind::Dots))
            }
            PolicyKind::DynamicTs => {
                let c = required(p.c.or(preset.map(|q| q.dynamic_c)), "C", kind)?;
                Policy::DynamicTs(DynamicTs::new(k, c)?)
            }
            PolicyKind::Rexp3 => {
                let delta = required(p.delta.or(preset.map(|q| q.rexp3_delta)), "delta", kind)?;
                let gamma = match (p.gamma, p.delta, preset) {
                    (Some(g), _, _) => g,
                    (None, None, Some(q)) => q.rexp3_gamma,
                    _ => rexp3_gamma(ctx.param_arms, delta)?,
                };
                Policy::Rexp3(Rexp3::new(k, gamma, delta)?)
            }
            PolicyKind::Ducb => {
                let gamma = match (p.gamma, p.upsilon, preset) {
                    (Some(g), _, _) => g,
                    (None, Some(u), _) => ducb_gamma(bound, u, ctx.horizon)?,
                    (None, None, Some(q)) => q.ducb_gamma,
                    _ => return Err(Error::config("D-UCB needs 'gamma' or 'upsilon'")),
                };
                Policy::Ducb(DiscountedUcb::new(k, gamma, xi, bound)?)
            }
            PolicyKind::Swucb => {
                let tau = match (p.tau, p.upsilon, preset) {
                    (Some(t), _, _) => t,
                    (None, Some(u), _) => swucb_tau(bound, ctx.horizon, u)?,
                    (None, None, Some(q)) => q.swucb_tau,
                    _ => return Err(Error::config("SW-UCB needs 'tau' or 'upsilon'")),
                };
                Policy::Swucb(SlidingWindowUcb::new(k, tau, xi, bound)?)
            }
            PolicyKind::Exp3Ix => {
                let (eta, gamma_ix) = match (p.eta, preset) {
                    (Some(eta), _) => (eta, p.gamma_ix.unwrap_or(eta / 2.0)),
                    (None, Some(q)) => (q.exp3ix_eta, p.gamma_ix.unwrap_or(q.exp3ix_gamma)),
                    (None, None) => {
                        let (eta, gix) = exp3ix_params(ctx.param_arms, ctx.horizon)?;
                        (eta, p.gamma_ix.unwrap_or(gix))
                    }
                };
                Policy::Exp3Ix(Exp3Ix::new(k, eta, gamma_ix)?)
            }
            PolicyKind::Oracle => {
                let schedule = ctx
                    .schedule
                    .clone()
                    .ok_or_else(|| Error::config("the oracle policy needs the environment schedule"))?;
                Policy::Oracle(DynamicOracle::new(schedule))
            }
        })
    }
}

/// Plays `argmax_k μ_k(t)` with full knowledge of the schedule.
#[derive(Clone, Debug)]
pub struct DynamicOracle {
    schedule: Arc<Schedule>,
    scores: Vec<f64>,
}

impl DynamicOracle {
    pub fn new(schedule: Arc<Schedule>) -> Self {
        let k = schedule.num_arms();
        Self { schedule, scores: vec![0.0; k] }
    }

    pub fn choose(&mut self, t: u64) -> Result<usize> {
        for (k, s) in self.scores.iter_mut().enumerate() {
            *s = self.schedule.mean_at(k, t)?;
        }
        Ok(argmax(&self.scores))
    }
}

/// Live state of any policy.
#[derive(Clone, Debug)]
pub enum Policy {
    Thompson(DiscountedTs),
    DynamicTs(DynamicTs),
    Rexp3(Rexp3),
    Ducb(DiscountedUcb),
    Swucb(SlidingWindowUcb),
    Exp3Ix(Exp3Ix),
    Oracle(DynamicOracle),
}

impl Policy {
    pub fn binarizes(&self) -> bool {
        matches!(self, Policy::Thompson(_) | Policy::DynamicTs(_))
    }

    pub fn choose(&mut self, t: u64, rng: &mut RngStream) -> Result<usize> {
        Ok(match self {
            Policy::Thompson(p) => p.choose(rng),
            Policy::DynamicTs(p) => p.choose(rng),
            Policy::Rexp3(p) => p.choose(rng),
            Policy::Ducb(p) => p.choose(),
            Policy::Swucb(p) => p.choose(),
            Policy::Exp3Ix(p) => p.choose(rng),
            Policy::Oracle(p) => p.choose(t)?,
        })
    }

    /// Per-arm values behind the most recent choice: samples, indices,
    /// selection probabilities or true means.
    pub fn scores(&self) -> &[f64] {
        match self {
            Policy::Thompson(p) => p.scores(),
            Policy::DynamicTs(p) => p.scores(),
            Policy::Rexp3(p) => p.probabilities(),
            Policy::Ducb(p) => p.scores(),
            Policy::Swucb(p) => p.scores(),
            Policy::Exp3Ix(p) => p.probabilities(),
            Policy::Oracle(p) => &p.scores,
        }
    }

    pub fn probabilities(&self) -> Option<&[f64]> {
        match self {
            Policy::Rexp3(p) => Some(p.probabilities()),
            Policy::Exp3Ix(p) => Some(p.probabilities()),
            _ => None,
        }
    }

    pub fn select(&mut self, t: u64, rng: &mut RngStream) -> Result<ArmChoice> {
        let arm = self.choose(t, rng)?;
        Ok(ArmChoice { arm, scores: self.scores().to_vec(), probabilities: self.probabilities().map(<[f64]>::to_vec) })
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        match self {
            Policy::Thompson(p) => p.update(arm, reward),
            Policy::DynamicTs(p) => p.update(arm, reward),
            Policy::Rexp3(p) => p.update(arm, reward),
            Policy::Ducb(p) => p.update(arm, reward),
            Policy::Swucb(p) => p.update(arm, reward),
            Policy::Exp3Ix(p) => p.update(arm, reward),
            Policy::Oracle(_) => Ok(()),
        }
    }

    /// Resolved parameters, for summaries.
    pub fn describe(&self) -> String {
        match self {
            Policy::Thompson(p) => {
                let q = p.posterior();
                format!("gamma={} alpha0={} beta0={}", q.gamma(), q.alpha0(), q.beta0())
            }
            Policy::DynamicTs(p) => format!("C={}", p.threshold()),
            Policy::Rexp3(p) => format!("delta={} gamma={}", p.delta(), p.gamma()),
            Policy::Ducb(p) => format!("gamma={}", p.gamma()),
            Policy::Swucb(p) => format!("tau={}", p.tau()),
            Policy::Exp3Ix(p) => format!("eta={} gamma_ix={}", p.eta(), p.gamma_ix()),
            Policy::Oracle(_) => String::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::preset_environment;

    fn ctx(preset: Option<EnvPreset>) -> PolicyContext {
        let schedule = Arc::new(preset_environment(preset.unwrap_or(EnvPreset::Fast), 4).unwrap());
        PolicyContext::new(schedule, 5000, preset)
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[1.0, 1.0]), 0);
        assert_eq!(argmax(&[f64::INFINITY, f64::INFINITY, 3.0]), 0);
    }

    #[test]
    fn binarize() {
        let mut rng = RngStream::new(51);
        assert_eq!(binarize_reward(1.0, &mut rng).unwrap(), 1.0);
        assert_eq!(binarize_reward(0.0, &mut rng).unwrap(), 0.0);
        assert!(matches!(binarize_reward(1.2, &mut rng), Err(Error::InvalidReward(_))));
        let n = 100_000;
        let m = (0..n).map(|_| binarize_reward(0.37, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((m - 0.37).abs() < 0.005, "{m}");
    }

    #[test]
    fn binary_inputs_do_not_consume_draws() {
        let mut a = RngStream::new(52);
        let mut b = RngStream::new(52);
        binarize_reward(1.0, &mut a).unwrap();
        assert_eq!(a.uniform(), b.uniform());
    }

    #[test]
    fn names_parse() {
        for (name, kind) in [
            ("TS", PolicyKind::Ts),
            ("dTS", PolicyKind::Dts),
            ("dots", PolicyKind::Dots),
            ("dyn-ts", PolicyKind::DynamicTs),
            ("DynamicTS", PolicyKind::DynamicTs),
            ("d-ucb", PolicyKind::Ducb),
            ("SW-UCB", PolicyKind::Swucb),
            ("exp3-ix", PolicyKind::Exp3Ix),
        ] {
            assert_eq!(name.parse::<PolicyKind>().unwrap(), kind);
        }
        let err = "ucb1".parse::<PolicyKind>().unwrap_err().to_string();
        assert!(err.contains("dyn-ts"));
    }

    #[test]
    fn dts_spec_builds_empty_posterior() {
        let spec = PolicySpec::new(PolicyKind::Dts)
            .with_param("gamma", "0.75")
            .unwrap()
            .with_param("alpha0", "1")
            .unwrap()
            .with_param("beta0", "1")
            .unwrap();
        let Policy::Thompson(p) = spec.build(&ctx(None)).unwrap() else { panic!() };
        assert_eq!(p.posterior().num_arms(), 4);
        assert!((0..4).all(|k| p.posterior().successes(k) == 0.0 && p.posterior().failures(k) == 0.0));
        assert_eq!(p.posterior().gamma(), 0.75);
    }

    #[test]
    fn ts_is_undiscounted() {
        let Policy::Thompson(p) = PolicySpec::new(PolicyKind::Ts).build(&ctx(None)).unwrap() else { panic!() };
        assert_eq!(p.posterior().gamma(), 1.0);
        assert!(!p.is_optimistic());
    }

    #[test]
    fn invalid_specs() {
        let zero = PolicySpec::new(PolicyKind::Dts).with_param("gamma", "0").unwrap();
        assert!(matches!(zero.build(&ctx(None)), Err(Error::Config(_))));
        assert!(PolicySpec::new(PolicyKind::Dts).with_param("tau", "3").is_err());
        assert!(PolicySpec::new(PolicyKind::Dts).with_param("gamma", "x").is_err());
        assert!(PolicySpec::new(PolicyKind::Dts).build(&ctx(None)).is_err());
        assert!(PolicySpec::new(PolicyKind::Ducb).build(&ctx(None)).is_err());
    }

    #[test]
    fn abrupt_preset_defaults() {
        let c = ctx(Some(EnvPreset::Abrupt));
        let describe = |k: PolicyKind| PolicySpec::new(k).build(&c).unwrap().describe();
        assert_eq!(describe(PolicyKind::Dts), "gamma=0.6 alpha0=1 beta0=1");
        assert_eq!(describe(PolicyKind::DynamicTs), "C=25");
        assert_eq!(describe(PolicyKind::Rexp3), "delta=25 gamma=0.5");
        assert_eq!(describe(PolicyKind::Ducb), "gamma=0.9646");
        assert_eq!(describe(PolicyKind::Swucb), "tau=37");
        assert_eq!(describe(PolicyKind::Exp3Ix), "eta=0.0263 gamma_ix=0.0132");
    }

    #[test]
    fn formulas_fill_gaps() {
        let c = ctx(None);
        let rexp3 = PolicySpec::new(PolicyKind::Rexp3).with_param("delta", "25").unwrap();
        let Policy::Rexp3(p) = rexp3.build(&c).unwrap() else { panic!() };
        assert!((p.gamma() - 0.3593).abs() < 1e-4);

        let sw = PolicySpec::new(PolicyKind::Swucb).with_param("upsilon", "20").unwrap();
        let c1000 = PolicyContext { horizon: 1000, ..c.clone() };
        let Policy::Swucb(p) = sw.build(&c1000).unwrap() else { panic!() };
        assert_eq!(p.tau(), 37);

        let Policy::Exp3Ix(p) = PolicySpec::new(PolicyKind::Exp3Ix).build(&c1000).unwrap() else { panic!() };
        assert!((p.eta() - 0.0263).abs() < 1e-4);
    }

    #[test]
    fn select_reports_argmax_of_scores() {
        let c = ctx(Some(EnvPreset::Slow));
        let mut rng = RngStream::new(53);
        for kind in [PolicyKind::Dts, PolicyKind::Dots, PolicyKind::DynamicTs, PolicyKind::Ducb, PolicyKind::Oracle] {
            let mut p = PolicySpec::new(kind).build(&c).unwrap();
            for t in 1..50 {
                let choice = p.select(t, &mut rng).unwrap();
                assert_eq!(choice.arm, argmax(&choice.scores), "{kind}");
                p.update(choice.arm, (t % 2) as f64).unwrap();
            }
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let c = ctx(Some(EnvPreset::Fast));
        let mut rng = RngStream::new(54);
        for kind in [PolicyKind::Rexp3, PolicyKind::Exp3Ix] {
            let mut p = PolicySpec::new(kind).build(&c).unwrap();
            for t in 1..500 {
                let arm = p.choose(t, &mut rng).unwrap();
                let s: f64 = p.probabilities().unwrap().iter().sum();
                assert!((s - 1.0).abs() < 1e-9);
                p.update(arm, if arm == 1 { 1.0 } else { 0.0 }).unwrap();
            }
        }
    }
}
