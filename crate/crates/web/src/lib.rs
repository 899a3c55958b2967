//! Browser bindings for the demo page in `www/`. Every export returns a JSON
//! string; the page parses it and draws on a canvas.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use nsbandit::env::{preset_environment, EnvPreset};
use nsbandit::exact::{mc_prob_suboptimal, prob_suboptimal_report, ratio_density, ProbQuery};
use nsbandit::harness::{run_experiment, EnvSpec, Execution, ExperimentConfig};
use nsbandit::hypergeometric::SeriesControl;
use nsbandit::policy::{PolicyKind, PolicySpec};
use nsbandit::rng::RngStream;

/// Largest `horizon * runs` a single simulation request may ask for.
const MAX_WORK: u64 = 2_000_000;
const CURVE_POINTS: usize = 200;

#[derive(Serialize)]
struct ProbabilityView {
    probability: f64,
    warnings: Vec<String>,
    mc_estimate: Option<f64>,
    mc_stderr: Option<f64>,
    /// `(ω, density of θ1/θ2 at ω)` pairs on `(0, 1]`.
    density: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct ScheduleView {
    preset: String,
    /// `means[k][t - 1]`.
    means: Vec<Vec<f64>>,
    best_arm: Vec<usize>,
}

#[derive(Serialize)]
struct CurveView {
    policy: String,
    params: String,
    t: Vec<u64>,
    norm_regret: Vec<f64>,
    terminal: f64,
    terminal_stderr: f64,
}

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn probability_json(
    alpha1: f64,
    beta1: f64,
    alpha2: f64,
    beta2: f64,
    mc_draws: u32,
    seed: u32,
) -> Result<String, String> {
    let q = ProbQuery::new(alpha1, beta1, alpha2, beta2).map_err(|e| e.to_string())?;
    let ctl = SeriesControl::default();
    let report = prob_suboptimal_report(&q, &ctl).map_err(|e| e.to_string())?;
    let (mc_estimate, mc_stderr) = if mc_draws > 0 {
        let p = mc_prob_suboptimal(&q, mc_draws.into(), &mut RngStream::new(seed.into())).map_err(|e| e.to_string())?;
        (Some(p), Some((p * (1.0 - p) / f64::from(mc_draws)).sqrt()))
    } else {
        (None, None)
    };
    let density = (1..=100)
        .map(|i| f64::from(i) / 100.0)
        .filter_map(|w| ratio_density(w, &q, &ctl).ok().filter(|d| d.is_finite()).map(|d| (w, d)))
        .collect();
    to_json(&ProbabilityView {
        probability: report.probability,
        warnings: report.warnings,
        mc_estimate,
        mc_stderr,
        density,
    })
}

fn schedule_json(preset: &str, arms: u32, steps: u32) -> Result<String, String> {
    let preset: EnvPreset = preset.parse().map_err(|e: nsbandit::Error| e.to_string())?;
    let env = preset_environment(preset, arms as usize).map_err(|e| e.to_string())?;
    let steps = u64::from(steps.clamp(1, 5000));
    let mut means = vec![Vec::with_capacity(steps as usize); arms as usize];
    let mut best_arm = Vec::with_capacity(steps as usize);
    for t in 1..=steps {
        for (k, row) in means.iter_mut().enumerate() {
            row.push(env.mean_at(k, t).map_err(|e| e.to_string())?);
        }
        best_arm.push(env.best_arm(t).map_err(|e| e.to_string())?);
    }
    to_json(&ScheduleView { preset: preset.to_string(), means, best_arm })
}

fn simulate_json(preset: &str, policies: &str, horizon: u32, runs: u32, seed: u32) -> Result<String, String> {
    let preset: EnvPreset = preset.parse().map_err(|e: nsbandit::Error| e.to_string())?;
    if u64::from(horizon) * u64::from(runs) > MAX_WORK {
        return Err(format!("horizon x runs is limited to {MAX_WORK} in the browser"));
    }
    let mut config = ExperimentConfig::new(EnvSpec::Preset(preset));
    config.horizon = horizon.into();
    config.runs = runs.into();
    config.seed = seed.into();
    config.policies = policies
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|name| name.parse::<PolicyKind>().map(PolicySpec::new))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let result = run_experiment(&config, Execution::serial()).map_err(|e| e.to_string())?;
    let stride = (horizon as usize).div_ceil(CURVE_POINTS).max(1);
    let curves: Vec<CurveView> = result
        .curves
        .iter()
        .map(|pc| {
            let c = &pc.curve;
            let idx: Vec<usize> = (stride - 1..c.horizon()).step_by(stride).collect();
            CurveView {
                policy: pc.policy.clone(),
                params: pc.params.clone(),
                t: idx.iter().map(|&i| i as u64 + 1).collect(),
                norm_regret: idx.iter().map(|&i| c.norm_regret[i]).collect(),
                terminal: c.terminal_norm_regret(),
                terminal_stderr: c.terminal_norm_stderr(),
            }
        })
        .collect();
    to_json(&curves)
}

/// Exact probability that the sub-optimal arm's Beta sample wins, with an
/// optional Monte-Carlo check and the ratio density on `(0, 1]`.
#[wasm_bindgen]
pub fn exact_probability(
    alpha1: f64,
    beta1: f64,
    alpha2: f64,
    beta2: f64,
    mc_draws: u32,
    seed: u32,
) -> Result<String, JsError> {
    probability_json(alpha1, beta1, alpha2, beta2, mc_draws, seed).map_err(|e| JsError::new(&e))
}

/// Per-arm expected rewards of a preset environment for `t = 1..=steps`.
#[wasm_bindgen]
pub fn environment_schedule(preset: &str, arms: u32, steps: u32) -> Result<String, JsError> {
    schedule_json(preset, arms, steps).map_err(|e| JsError::new(&e))
}

/// Normalized regret curves for a comma-separated policy list.
#[wasm_bindgen]
pub fn simulate(preset: &str, policies: &str, horizon: u32, runs: u32, seed: u32) -> Result<String, JsError> {
    simulate_json(preset, policies, horizon, runs, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn probability_view() {
        let v: Value = serde_json::from_str(&probability_json(2.0, 1.0, 1.0, 1.0, 20_000, 1).unwrap()).unwrap();
        assert!((v["probability"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((v["mc_estimate"].as_f64().unwrap() - 1.0 / 3.0).abs() < 0.02);
        assert_eq!(v["density"].as_array().unwrap().len(), 100);
        assert!(probability_json(0.0, 1.0, 1.0, 1.0, 0, 0).is_err());
    }

    #[test]
    fn schedule_view() {
        let v: Value = serde_json::from_str(&schedule_json("abrupt", 4, 250).unwrap()).unwrap();
        assert_eq!(v["means"].as_array().unwrap().len(), 4);
        assert_eq!(v["means"][3][199].as_f64(), Some(0.9));
        assert_eq!(v["best_arm"][120].as_u64(), Some(1));
        assert!(schedule_json("medium", 4, 10).is_err());
    }

    #[test]
    fn simulation_view() {
        let v: Value = serde_json::from_str(&simulate_json("fast", "ts,dots,oracle", 500, 3, 7).unwrap()).unwrap();
        let curves = v.as_array().unwrap();
        assert_eq!(curves.len(), 3);
        assert!(curves[0]["t"].as_array().unwrap().len() <= CURVE_POINTS);
        assert_eq!(curves[2]["terminal"].as_f64(), Some(0.0));
        assert!(simulate_json("fast", "ts", 100_000, 100, 0).is_err());
        assert!(simulate_json("fast", "nope", 10, 1, 0).is_err());
    }
}
