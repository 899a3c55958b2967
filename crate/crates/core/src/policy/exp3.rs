//! Exponential-weights policies: REXP3 and EXP3-IX.
//!
//! Weights are kept as logarithms shifted so the largest is 0, which is the
//! per-step renormalization.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Log-weights more than this far below the maximum are raised to it, so
/// every weight stays strictly positive as an `f64`.
const LOG_WEIGHT_FLOOR: f64 = 700.0;

fn check_observation(arm: usize, num_arms: usize, reward: f64) -> Result<()> {
    if arm >= num_arms {
        return Err(Error::Index(format!("arm {arm} out of range")));
    }
    if !(0.0..=1.0).contains(&reward) {
        return Err(Error::InvalidReward(reward));
    }
    Ok(())
}

fn renormalize(log_w: &mut [f64]) {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for w in log_w.iter_mut() {
        *w = (*w - max).max(-LOG_WEIGHT_FLOOR);
    }
}

/// `probs = softmax(log_w)`; `log_w` must already be renormalized.
fn softmax_into(log_w: &[f64], probs: &mut [f64]) {
    let mut total = 0.0;
    for (p, &w) in probs.iter_mut().zip(log_w) {
        *p = w.exp();
        total += *p;
    }
    probs.iter_mut().for_each(|p| *p /= total);
}

/// Inverse-CDF draw from a probability vector.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // Rounding left `u` beyond the last partial sum.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// EXP3 with uniform mixing, restarted every `delta` steps.
#[derive(Clone, Debug)]
pub struct Rexp3 {
    log_weights: Vec<f64>,
    probs: Vec<f64>,
    gamma: f64,
    delta: u64,
    steps: u64,
}

impl Rexp3 {
    pub fn new(num_arms: usize, gamma: f64, delta: u64) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::config("policy needs at least one arm"));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::config(format!("REXP3 gamma must lie in (0, 1], got {gamma}")));
        }
        if delta == 0 {
            return Err(Error::config("REXP3 batch length must be at least 1"));
        }
        Ok(Self {
            log_weights: vec![0.0; num_arms],
            probs: vec![1.0 / num_arms as f64; num_arms],
            gamma,
            delta,
            steps: 0,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    /// Weights scaled so the largest is 1.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    /// Selection probabilities of the most recent `choose`.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn choose(&mut self, rng: &mut RngStream) -> usize {
        if self.steps.is_multiple_of(self.delta) {
            self.log_weights.iter_mut().for_each(|w| *w = 0.0);
        }
        softmax_into(&self.log_weights, &mut self.probs);
        let k = self.probs.len() as f64;
        let g = self.gamma;
        self.probs.iter_mut().for_each(|p| *p = (1.0 - g) * *p + g / k);
        sample_index(&self.probs, rng.uniform())
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_observation(arm, self.probs.len(), reward)?;
        let estimate = reward / self.probs[arm];
        self.log_weights[arm] += self.gamma * estimate / self.probs.len() as f64;
        renormalize(&mut self.log_weights);
        self.steps += 1;
        Ok(())
    }
}

/// Loss estimate `ℓ / (p + γ_IX)`; with `γ_IX = 0` this is the plain
/// importance-weighted estimate.
pub fn ix_loss_estimate(loss: f64, prob: f64, gamma_ix: f64) -> f64 {
    loss / (prob + gamma_ix)
}

/// EXP3 with implicit exploration.
#[derive(Clone, Debug)]
pub struct Exp3Ix {
    log_weights: Vec<f64>,
    probs: Vec<f64>,
    eta: f64,
    gamma_ix: f64,
}

impl Exp3Ix {
    pub fn new(num_arms: usize, eta: f64, gamma_ix: f64) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::config("policy needs at least one arm"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::config(format!("EXP3-IX eta must be positive, got {eta}")));
        }
        if !(gamma_ix >= 0.0 && gamma_ix.is_finite()) {
            return Err(Error::config(format!("EXP3-IX gamma_ix must be non-negative, got {gamma_ix}")));
        }
        Ok(Self { log_weights: vec![0.0; num_arms], probs: vec![1.0 / num_arms as f64; num_arms], eta, gamma_ix })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma_ix(&self) -> f64 {
        self.gamma_ix
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn choose(&mut self, rng: &mut RngStream) -> usize {
        softmax_into(&self.log_weights, &mut self.probs);
        sample_index(&self.probs, rng.uniform())
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_observation(arm, self.probs.len(), reward)?;
        let estimate = ix_loss_estimate(1.0 - reward, self.probs[arm], self.gamma_ix);
        self.log_weights[arm] -= self.eta * estimate;
        renormalize(&mut self.log_weights);
        Ok(())
    }
}
