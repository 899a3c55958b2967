//! Exact probability that Thompson-style sampling picks the sub-optimal arm
//! of a two-armed bandit.
//!
//! With `θ1 ~ Beta(α1, β1)` for the optimal arm and `θ2 ~ Beta(α2, β2)` for
//! the other one,
//!
//! ```text
//! P(θ2 > θ1) = B(α1+α2, β2) / (B(α1,β1) B(α2,β2)) / α1
//!              · 3F2(α1, α1+α2, 1-β1; 1+α1, α1+α2+β2; 1)
//! ```
//!
//! which is the integral over `ω ∈ (0, 1]` of the density of `θ1/θ2`,
//! [`ratio_density`]. Shapes need not be integers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergeometric::{hyp2f1, hyp3f2_at_1_detailed, SeriesControl};
use crate::rng::{sample_beta, BetaParams, RngStream};
use crate::special::log_beta;

/// Slack allowed when clamping a computed probability into `[0, 1]`.
const CLAMP_SLACK: f64 = 1e-9;

/// Beta shapes of the optimal arm (`alpha1`, `beta1`) and the sub-optimal
/// arm (`alpha2`, `beta2`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbQuery {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
}

impl ProbQuery {
    pub fn new(alpha1: f64, beta1: f64, alpha2: f64, beta2: f64) -> Result<Self> {
        for s in [alpha1, beta1, alpha2, beta2] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidShape(s));
            }
        }
        Ok(Self { alpha1, beta1, alpha2, beta2 })
    }

    /// Same query with the roles of the two arms exchanged.
    pub fn swapped(&self) -> Self {
        Self { alpha1: self.alpha2, beta1: self.beta2, alpha2: self.alpha1, beta2: self.beta1 }
    }

    fn ln_prefactor(&self) -> Result<f64> {
        Ok(log_beta(self.alpha1 + self.alpha2, self.beta2)?
            - log_beta(self.alpha1, self.beta1)?
            - log_beta(self.alpha2, self.beta2)?)
    }
}

/// Exact probability with the diagnostics gathered on the way.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbReport {
    pub query: ProbQuery,
    pub probability: f64,
    pub series_terms: u64,
    pub warnings: Vec<String>,
}

pub fn prob_suboptimal(q: &ProbQuery, ctl: &SeriesControl) -> Result<f64> {
    Ok(prob_suboptimal_report(q, ctl)?.probability)
}

pub fn prob_suboptimal_report(q: &ProbQuery, ctl: &SeriesControl) -> Result<ProbReport> {
    let s = q.alpha1 + q.alpha2;
    let series = hyp3f2_at_1_detailed(q.alpha1, s, 1.0 - q.beta1, 1.0 + q.alpha1, s + q.beta2, ctl)?;
    if !(series.value > 0.0) {
        return Err(Error::Precision(format!("3F2 evaluated to non-positive {}", series.value)));
    }
    let ln_p = q.ln_prefactor()? - q.alpha1.ln() + series.value.ln();
    let p = ln_p.exp();
    if !(p <= 1.0 + CLAMP_SLACK) {
        return Err(Error::Precision(format!("probability {p} exceeds 1")));
    }

    let mut warnings = series.warnings;
    // Any split of β into F + β0 gives the same condition, β1 + β2 > 1.
    let b0 = q.beta1.min(q.beta2);
    let check = beta0_condition_check(q.beta1 - b0, q.beta2 - b0, b0);
    if let Some(msg) = check.message {
        warnings.push(msg);
    }
    Ok(ProbReport { query: *q, probability: p.clamp(0.0, 1.0), series_terms: series.terms, warnings })
}

/// Fraction of `n` paired draws with `θ2 > θ1`.
pub fn mc_prob_suboptimal(q: &ProbQuery, n: u64, rng: &mut RngStream) -> Result<f64> {
    if n == 0 {
        return Err(Error::config("Monte-Carlo sample count must be at least 1"));
    }
    let optimal = BetaParams::new(q.alpha1, q.beta1)?;
    let other = BetaParams::new(q.alpha2, q.beta2)?;
    let mut wins = 0u64;
    for _ in 0..n {
        let t1 = sample_beta(rng, optimal);
        let t2 = sample_beta(rng, other);
        if t2 > t1 {
            wins += 1;
        }
    }
    Ok(wins as f64 / n as f64)
}

/// Density of `θ1 / θ2` at `ω ∈ (0, 1]`.
pub fn ratio_density(omega: f64, q: &ProbQuery, ctl: &SeriesControl) -> Result<f64> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::Domain(format!("ratio density requires 0 < omega <= 1, got {omega}")));
    }
    let s = q.alpha1 + q.alpha2;
    let f = hyp2f1(s, 1.0 - q.beta1, s + q.beta2, omega, ctl)?;
    Ok((q.ln_prefactor()? + (q.alpha1 - 1.0) * omega.ln()).exp() * f)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Beta0Check {
    pub satisfied: bool,
    pub message: Option<String>,
}

/// Validity condition of the closed form when each arm's β shape is
/// `F_k + β0`: the density series must converge at `ω = 1`, which needs
/// `β0 > (1 - (F1 + F2)) / 2`. With no failures observed this is `β0 > 1/2`.
pub fn beta0_condition_check(f1: f64, f2: f64, beta0: f64) -> Beta0Check {
    let bound = (1.0 - (f1 + f2)) / 2.0;
    if beta0 > bound {
        Beta0Check { satisfied: true, message: None }
    } else {
        Beta0Check {
            satisfied: false,
            message: Some(format!(
                "beta prior {beta0} does not exceed (1 - (F1 + F2)) / 2 = {bound}; the ratio \
                 density diverges at omega = 1 (with F1 = F2 = 0 the prior needs beta0 > 1/2)"
            )),
        }
    }
}
