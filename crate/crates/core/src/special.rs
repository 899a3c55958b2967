//! Gamma-family special functions.

use std::f64::consts::PI;
use std::ops::{Div, Mul};

use crate::error::{Error, Result};

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A real number stored as `sign * exp(ln_abs)`; `sign == 0` encodes an exact zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedLog {
    pub ln_abs: f64,
    pub sign: f64,
}

impl SignedLog {
    pub const ONE: SignedLog = SignedLog { ln_abs: 0.0, sign: 1.0 };
    pub const ZERO: SignedLog = SignedLog { ln_abs: f64::NEG_INFINITY, sign: 0.0 };

    pub fn from_value(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self { ln_abs: x.abs().ln(), sign: x.signum() }
        }
    }

    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0.0
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;

    fn mul(self, other: SignedLog) -> SignedLog {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        Self { ln_abs: self.ln_abs + other.ln_abs, sign: self.sign * other.sign }
    }
}

impl Div for SignedLog {
    type Output = SignedLog;

    fn div(self, other: SignedLog) -> SignedLog {
        assert!(!other.is_zero(), "division by zero");
        if self.is_zero() {
            return Self::ZERO;
        }
        Self { ln_abs: self.ln_abs - other.ln_abs, sign: self.sign * other.sign }
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_positive(x))
}

fn ln_gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x) Γ(1 - x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma_positive(1.0 - x);
    }
    let x = x - 1.0;
    let mut series = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + series.ln()
}

/// Returns true when `x` is 0, -1, -2, ...
pub fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// `Γ(x)` in sign/log form for any real `x`; `None` at the poles.
pub fn gamma_signed(x: f64) -> Option<SignedLog> {
    if is_nonpositive_integer(x) || !x.is_finite() {
        return None;
    }
    if x > 0.0 {
        return Some(SignedLog { ln_abs: ln_gamma_positive(x), sign: 1.0 });
    }
    // Reflection: Γ(x) = π / (sin(πx) Γ(1 - x)), with 1 - x > 1.
    let s = (PI * x).sin();
    Some(SignedLog { ln_abs: PI.ln() - s.abs().ln() - ln_gamma_positive(1.0 - x), sign: s.signum() })
}

/// `1 / Γ(x)` in sign/log form; exact zero at the poles of Γ.
pub fn recip_gamma_signed(x: f64) -> SignedLog {
    match gamma_signed(x) {
        Some(g) => SignedLog::ONE.div(g),
        None => SignedLog::ZERO,
    }
}

/// `ln B(a, b)` for `a, b > 0`.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    Ok(log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?)
}

/// The rising factorial `(q)_n = q (q + 1) ... (q + n - 1)` as a running
/// product in sign/log form. Valid for negative `q`, where the Γ-ratio form
/// is undefined; a zero factor gives an exact zero.
pub fn pochhammer_log_ratio(q: f64, n: u64) -> SignedLog {
    let mut acc = SignedLog::ONE;
    for k in 0..n {
        let factor = q + k as f64;
        if factor == 0.0 {
            return SignedLog::ZERO;
        }
        acc = acc.mul(SignedLog::from_value(factor));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        if b == 0.0 {
            a.abs()
        } else {
            ((a - b) / b).abs()
        }
    }

    #[test]
    fn log_gamma_known_values() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-15);
        assert!(rel(log_gamma(0.5).unwrap(), 0.5 * PI.ln()) < 1e-13);
        assert!(rel(log_gamma(10.0).unwrap(), 362_880f64.ln()) < 1e-13);
        // Γ(171) = 170!
        let ln_fact: f64 = (1..=170).map(|k| (k as f64).ln()).sum();
        assert!(rel(log_gamma(171.0).unwrap(), ln_fact) < 1e-13);
    }

    #[test]
    fn log_gamma_recurrence() {
        for &x in &[0.1, 0.37, 1.3, 4.75, 22.5, 150.25] {
            let lhs = log_gamma(x + 1.0).unwrap();
            let rhs = log_gamma(x).unwrap() + f64::ln(x);
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "x = {x}");
        }
    }

    #[test]
    fn log_gamma_domain() {
        assert!(matches!(log_gamma(0.0), Err(Error::Domain(_))));
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn signed_gamma_negative_arguments() {
        // Γ(-0.5) = -2 sqrt(π)
        let g = gamma_signed(-0.5).unwrap();
        assert!(rel(g.value(), -2.0 * PI.sqrt()) < 1e-13);
        // Γ(-1.5) = 4 sqrt(π) / 3
        let g = gamma_signed(-1.5).unwrap();
        assert!(rel(g.value(), 4.0 * PI.sqrt() / 3.0) < 1e-13);
        assert!(gamma_signed(-2.0).is_none());
        assert!(recip_gamma_signed(0.0).is_zero());
    }

    #[test]
    fn log_beta_values() {
        assert!(log_beta(1.0, 1.0).unwrap().abs() < 1e-15);
        assert!((log_beta(2.0, 1.0).unwrap() - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn pochhammer_values() {
        assert_eq!(pochhammer_log_ratio(3.7, 0).value(), 1.0);
        assert_eq!(pochhammer_log_ratio(-4.2, 0).value(), 1.0);
        assert!(rel(pochhammer_log_ratio(1.0, 5).value(), 120.0) < 1e-14);
        assert!(pochhammer_log_ratio(-2.0, 3).is_zero());
        // (-2.5)_3 = (-2.5)(-1.5)(-0.5)
        assert!(rel(pochhammer_log_ratio(-2.5, 3).value(), -1.875) < 1e-14);
    }
}
