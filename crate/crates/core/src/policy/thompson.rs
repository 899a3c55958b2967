//! Thompson-sampling family: discounted (dTS), optimistic discounted (dOTS)
//! and Dynamic TS.

use crate::error::{Error, Result};
use crate::rng::{sample_beta, BetaParams, RngStream};

use super::argmax;

fn check_reward(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::InvalidReward(r))
    }
}

/// Discounted success/failure accumulators `S_k`, `F_k` with Beta prior
/// offsets.
///
/// Each arm is stored as its evidence `n = S + F` and success rate
/// `m = S / n`. Discounting scales `n` only, so the mean of `Beta(S, F)` of an
/// unplayed arm is preserved bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscountedPosterior {
    evidence: Vec<f64>,
    rate: Vec<f64>,
    alpha0: f64,
    beta0: f64,
    gamma: f64,
}

impl DiscountedPosterior {
    pub fn new(num_arms: usize, gamma: f64, alpha0: f64, beta0: f64) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::config("policy needs at least one arm"));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::config(format!("discount gamma must lie in (0, 1], got {gamma}")));
        }
        for (name, v) in [("alpha0", alpha0), ("beta0", beta0)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(Self { evidence: vec![0.0; num_arms], rate: vec![0.0; num_arms], alpha0, beta0, gamma })
    }

    /// Starts from explicit accumulators instead of zeros.
    pub fn with_counts(mut self, successes: &[f64], failures: &[f64]) -> Result<Self> {
        if successes.len() != self.evidence.len() || failures.len() != self.evidence.len() {
            return Err(Error::config("accumulator length must match the arm count"));
        }
        if let Some(&bad) = successes.iter().chain(failures).find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::config(format!("accumulators must be non-negative, got {bad}")));
        }
        for (k, (&s, &f)) in successes.iter().zip(failures).enumerate() {
            let n = s + f;
            self.evidence[k] = n;
            self.rate[k] = if n > 0.0 { s / n } else { 0.0 };
        }
        Ok(self)
    }

    pub fn num_arms(&self) -> usize {
        self.evidence.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    /// `S_k`.
    pub fn successes(&self, arm: usize) -> f64 {
        self.rate[arm] * self.evidence[arm]
    }

    /// `F_k`.
    pub fn failures(&self, arm: usize) -> f64 {
        (1.0 - self.rate[arm]) * self.evidence[arm]
    }

    /// `S_k + F_k`.
    pub fn evidence(&self, arm: usize) -> f64 {
        self.evidence[arm]
    }

    /// Mean of `Beta(S_k, F_k)`, prior offsets excluded; `None` without
    /// evidence.
    pub fn evidence_mean(&self, arm: usize) -> Option<f64> {
        (self.evidence[arm] > 0.0).then(|| self.rate[arm])
    }

    /// Variance of `Beta(S_k, F_k)`, prior offsets excluded.
    pub fn evidence_variance(&self, arm: usize) -> Option<f64> {
        let m = self.evidence_mean(arm)?;
        Some(m * (1.0 - m) / (self.evidence[arm] + 1.0))
    }

    /// Sampling shapes `(S_k + α0, F_k + β0)`.
    pub fn shapes(&self, arm: usize) -> BetaParams {
        BetaParams::clamped(self.successes(arm) + self.alpha0, self.failures(arm) + self.beta0)
    }

    /// Posterior mean `(S + α0) / (S + α0 + F + β0)`.
    pub fn mean(&self, arm: usize) -> f64 {
        self.shapes(arm).mean()
    }

    /// Discount every arm, then add the observation to the played arm:
    /// `S <- γS + r`, `F <- γF + 1 - r`.
    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_reward(reward)?;
        if arm >= self.num_arms() {
            return Err(Error::Index(format!("arm {arm} out of range")));
        }
        let g = self.gamma;
        if g < 1.0 {
            self.evidence.iter_mut().for_each(|n| *n *= g);
        }
        let n = self.evidence[arm];
        let total = n + 1.0;
        self.rate[arm] = (self.rate[arm] * n + reward) / total;
        self.evidence[arm] = total;
        Ok(())
    }
}

/// dTS, or dOTS when `optimistic`: each sample is raised to at least its
/// posterior mean before the argmax.
#[derive(Clone, Debug)]
pub struct DiscountedTs {
    posterior: DiscountedPosterior,
    optimistic: bool,
    scores: Vec<f64>,
}

impl DiscountedTs {
    pub fn new(posterior: DiscountedPosterior, optimistic: bool) -> Self {
        let k = posterior.num_arms();
        Self { posterior, optimistic, scores: vec![0.0; k] }
    }

    pub fn posterior(&self) -> &DiscountedPosterior {
        &self.posterior
    }

    pub fn is_optimistic(&self) -> bool {
        self.optimistic
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn choose(&mut self, rng: &mut RngStream) -> usize {
        for k in 0..self.posterior.num_arms() {
            let shapes = self.posterior.shapes(k);
            let theta = sample_beta(rng, shapes);
            self.scores[k] = if self.optimistic { theta.max(shapes.mean()) } else { theta };
        }
        argmax(&self.scores)
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.posterior.update(arm, reward)
    }
}

/// Dynamic Thompson Sampling: Beta counts on the played arm are capped near
/// `C` by scaling with `C / (C + 1)` once `α + β` reaches the threshold.
#[derive(Clone, Debug)]
pub struct DynamicTs {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    threshold: f64,
    scores: Vec<f64>,
}

impl DynamicTs {
    pub fn new(num_arms: usize, threshold: f64) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::config("policy needs at least one arm"));
        }
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::config(format!("Dynamic TS threshold C must be positive, got {threshold}")));
        }
        Ok(Self { alpha: vec![1.0; num_arms], beta: vec![1.0; num_arms], threshold, scores: vec![0.0; num_arms] })
    }

    pub fn with_counts(mut self, alpha: &[f64], beta: &[f64]) -> Result<Self> {
        if alpha.len() != self.alpha.len() || beta.len() != self.beta.len() {
            return Err(Error::config("count length must match the arm count"));
        }
        self.alpha = alpha.to_vec();
        self.beta = beta.to_vec();
        Ok(self)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn choose(&mut self, rng: &mut RngStream) -> usize {
        for k in 0..self.alpha.len() {
            self.scores[k] = sample_beta(rng, BetaParams::clamped(self.alpha[k], self.beta[k]));
        }
        argmax(&self.scores)
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_reward(reward)?;
        if arm >= self.alpha.len() {
            return Err(Error::Index(format!("arm {arm} out of range")));
        }
        let c = self.threshold;
        let (a, b) = (self.alpha[arm] + reward, self.beta[arm] + 1.0 - reward);
        if self.alpha[arm] + self.beta[arm] < c {
            self.alpha[arm] = a;
            self.beta[arm] = b;
        } else {
            self.alpha[arm] = a * c / (c + 1.0);
            self.beta[arm] = b * c / (c + 1.0);
        }
        Ok(())
    }
}
