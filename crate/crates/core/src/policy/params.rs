//! Baseline tuning formulas and the per-environment reference values.

use std::f64::consts::E;

use crate::env::EnvPreset;
use crate::error::{Error, Result};

fn check_arms(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::config(format!("need at least 2 arms, got {k}")));
    }
    Ok(())
}

/// REXP3 egalitarianism factor `min{1, sqrt(K ln K / ((e - 1) Δ))}`.
pub fn rexp3_gamma(k: usize, delta: u64) -> Result<f64> {
    check_arms(k)?;
    if delta == 0 {
        return Err(Error::config("REXP3 batch length must be at least 1"));
    }
    let k = k as f64;
    Ok((k * k.ln() / ((E - 1.0) * delta as f64)).sqrt().min(1.0))
}

/// D-UCB discount `1 - sqrt(Υ / T) / (4B)`.
pub fn ducb_gamma(bound: f64, upsilon: u64, horizon: u64) -> Result<f64> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::config(format!("reward bound must be positive, got {bound}")));
    }
    if upsilon == 0 || horizon == 0 || upsilon > horizon {
        return Err(Error::config(format!("D-UCB needs 1 <= change points ({upsilon}) <= horizon ({horizon})")));
    }
    Ok(1.0 - (upsilon as f64 / horizon as f64).sqrt() / (4.0 * bound))
}

/// SW-UCB window `round(2B sqrt(T ln T / Υ))`, halves rounded up, at least 1.
pub fn swucb_tau(bound: f64, horizon: u64, upsilon: u64) -> Result<u64> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::config(format!("reward bound must be positive, got {bound}")));
    }
    if upsilon == 0 || horizon == 0 {
        return Err(Error::config("SW-UCB needs a positive horizon and change-point count"));
    }
    let t = horizon as f64;
    let tau = (2.0 * bound * (t * t.ln() / upsilon as f64).sqrt()).round();
    Ok((tau as u64).max(1))
}

/// EXP3-IX `(η, γ_IX) = (sqrt(2 ln K / (K T)), η / 2)`.
pub fn exp3ix_params(k: usize, horizon: u64) -> Result<(f64, f64)> {
    check_arms(k)?;
    if horizon == 0 {
        return Err(Error::config("EXP3-IX needs a positive horizon"));
    }
    let k = k as f64;
    let eta = (2.0 * k.ln() / (k * horizon as f64)).sqrt();
    Ok((eta, eta / 2.0))
}

/// Reference tuning for the four-arm preset environments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PresetParams {
    pub dts_gamma: f64,
    pub rexp3_delta: u64,
    pub rexp3_gamma: f64,
    pub dynamic_c: f64,
    /// Horizon and change-point count the UCB/EXP3-IX values were tuned for.
    pub tuning_horizon: u64,
    pub upsilon: u64,
    pub ducb_gamma: f64,
    pub swucb_tau: u64,
    pub exp3ix_eta: f64,
    pub exp3ix_gamma: f64,
}

pub fn preset_params(preset: EnvPreset) -> PresetParams {
    match preset {
        EnvPreset::Fast => PresetParams {
            dts_gamma: 0.40,
            rexp3_delta: 25,
            rexp3_gamma: 0.3593,
            dynamic_c: 25.0,
            tuning_horizon: 500,
            upsilon: 20,
            ducb_gamma: 0.95,
            swucb_tau: 24,
            exp3ix_eta: 0.0263,
            exp3ix_gamma: 0.0132,
        },
        EnvPreset::Slow => PresetParams {
            dts_gamma: 0.75,
            rexp3_delta: 250,
            rexp3_gamma: 0.1136,
            dynamic_c: 250.0,
            tuning_horizon: 2500,
            upsilon: 10,
            ducb_gamma: 0.9842,
            swucb_tau: 89,
            exp3ix_eta: 0.01665,
            exp3ix_gamma: 0.00832,
        },
        EnvPreset::Abrupt => PresetParams {
            dts_gamma: 0.60,
            rexp3_delta: 25,
            rexp3_gamma: 0.5,
            dynamic_c: 25.0,
            tuning_horizon: 1000,
            upsilon: 20,
            ducb_gamma: 0.9646,
            swucb_tau: 37,
            exp3ix_eta: 0.0263,
            exp3ix_gamma: 0.0132,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rexp3_limits() {
        assert!(rexp3_gamma(4, u64::MAX).unwrap() < 1e-8);
        assert_eq!(rexp3_gamma(4, 1).unwrap(), 1.0);
        assert!(rexp3_gamma(1, 25).is_err());
        assert!(rexp3_gamma(4, 0).is_err());
    }

    #[test]
    fn swucb_rounding() {
        // 2 sqrt(500 ln 500 / 20) = 24.93...
        assert_eq!(swucb_tau(1.0, 500, 20).unwrap(), 25);
        assert_eq!(swucb_tau(1.0, 1000, 20).unwrap(), 37);
    }

    #[test]
    fn exp3ix_fast_row_differs_from_formula() {
        let (eta, gix) = exp3ix_params(4, 500).unwrap();
        assert!((eta - 0.0372).abs() < 1e-4);
        assert_eq!(gix, eta / 2.0);
        assert_ne!(preset_params(EnvPreset::Fast).exp3ix_eta, eta);
    }

    #[test]
    fn ducb_domain() {
        assert!(ducb_gamma(1.0, 30, 20).is_err());
        assert!(ducb_gamma(0.0, 1, 20).is_err());
    }
}
