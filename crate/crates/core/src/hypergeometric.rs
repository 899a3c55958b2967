//! Gauss `2F1` and unit-argument `3F2` hypergeometric series.
//!
//! Both are summed term-recursively. Inside the unit disc the Gauss series
//! converges geometrically once `|z|` is moderate; near `z = 1` it is mapped
//! onto `1 - z` with the standard connection formula. At `z = 1` a `pFq`
//! series converges only algebraically, like `k^-(1 + s)` where `s` is the
//! parameter excess, so the unit-argument `3F2` is accelerated by Richardson
//! extrapolation of the partial sums over doubling term counts.

use std::ops::{Div, Mul};

use crate::error::{Error, Result};
use crate::special::{gamma_signed, is_nonpositive_integer, recip_gamma_signed, SignedLog};

/// Below this parameter excess the unit-argument series is flagged as slow.
pub const SLOW_EXCESS: f64 = 0.05;

/// Largest tolerated ratio between `Σ|t_k|` and `|Σ t_k|` before the
/// cancellation is reported as a precision failure.
const MAX_CANCELLATION: f64 = 1e6;

/// Cancellation ratio above which a terminating alternating series is
/// re-evaluated through a Thomae transformation.
const PREFER_TRANSFORM: f64 = 1e3;

/// Beyond this `|z|` the Gauss series is re-expanded around `z = 1`.
const DIRECT_RADIUS: f64 = 0.6;

/// Deepest Richardson column used.
const MAX_RICHARDSON_DEPTH: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesControl {
    pub tolerance: f64,
    pub max_terms: u64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_terms: 1_000_000 }
    }
}

impl SeriesControl {
    pub fn new(tolerance: f64, max_terms: u64) -> Result<Self> {
        if !(tolerance > 0.0) || max_terms < 1 {
            return Err(Error::config(format!(
                "series control needs tolerance > 0 and max_terms >= 1, got {tolerance}, {max_terms}"
            )));
        }
        Ok(Self { tolerance, max_terms })
    }
}

/// Outcome of a series evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    /// Number of terms summed.
    pub terms: u64,
    pub warnings: Vec<String>,
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Generates the terms `Π(a_i)_k / Π(b_j)_k · z^k / k!`.
struct Terms<'a> {
    upper: &'a [f64],
    lower: &'a [f64],
    z: f64,
    k: u64,
    term: f64,
}

impl<'a> Terms<'a> {
    fn new(upper: &'a [f64], lower: &'a [f64], z: f64) -> Self {
        Self { upper, lower, z, k: 0, term: 1.0 }
    }
}

impl Iterator for Terms<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let current = self.term;
        let k = self.k as f64;
        let mut ratio = self.z / (k + 1.0);
        for a in self.upper {
            ratio *= a + k;
        }
        for b in self.lower {
            ratio /= b + k;
        }
        self.term *= ratio;
        self.k += 1;
        Some(current)
    }
}

fn terminates(upper: &[f64]) -> bool {
    upper.iter().any(|&a| is_nonpositive_integer(a))
}

fn check_cancellation(sum: f64, abs_sum: f64) -> Result<()> {
    if sum != 0.0 && abs_sum / sum.abs() > MAX_CANCELLATION {
        return Err(Error::Precision(format!("catastrophic cancellation: |terms| sum {abs_sum:e} vs result {sum:e}")));
    }
    Ok(())
}

/// Plain summation, stopping once three consecutive terms fall below
/// `tolerance * |partial sum|` or the series terminates.
fn direct_sum(upper: &[f64], lower: &[f64], z: f64, ctl: &SeriesControl) -> Result<SeriesSum> {
    let finite = terminates(upper);
    let mut acc = KahanSum::default();
    let mut abs_sum = 0.0;
    let mut small_run = 0;
    let mut terms = 0;
    for term in Terms::new(upper, lower, z) {
        if !term.is_finite() {
            return Err(Error::Precision(format!("series term overflowed after {terms} terms")));
        }
        terms += 1;
        acc.add(term);
        abs_sum += term.abs();
        if term == 0.0 && finite {
            break;
        }
        if term.abs() < ctl.tolerance * acc.total().abs() {
            small_run += 1;
            if small_run == 3 {
                break;
            }
        } else {
            small_run = 0;
        }
        if terms >= ctl.max_terms {
            return Err(Error::Precision(format!(
                "series not converged after {terms} terms (partial sum {})",
                acc.total()
            )));
        }
    }
    let value = acc.total();
    check_cancellation(value, abs_sum)?;
    Ok(SeriesSum { value, terms, warnings: Vec::new() })
}

/// Unit-argument summation for a non-terminating series with parameter
/// excess `excess > 0`.
///
/// The remainder after `N` terms expands in powers `N^-(excess + j)`,
/// `j = 0, 1, ...`, so partial sums at `N0, 2 N0, 4 N0, ...` are combined in
/// a Richardson table with those known exponents. Converged once three
/// consecutive diagonal estimates agree to the tolerance, or to the
/// rounding floor of the partial sums when that is coarser.
fn unit_argument_sum(upper: &[f64], lower: &[f64], excess: f64, ctl: &SeriesControl) -> Result<SeriesSum> {
    let scale = upper.iter().chain(lower).fold(0.0f64, |m, p| m.max(p.abs()));
    let mut checkpoint = (4.0 * scale).ceil().max(16.0) as u64;

    let mut acc = KahanSum::default();
    let mut abs_sum = 0.0;
    let mut terms = Terms::new(upper, lower, 1.0);
    let mut summed = 0u64;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut diagonal: Vec<f64> = Vec::new();

    while checkpoint <= ctl.max_terms {
        while summed < checkpoint {
            let term = terms.next().unwrap_or(0.0);
            if !term.is_finite() {
                return Err(Error::Precision(format!("series term overflowed after {summed} terms")));
            }
            acc.add(term);
            abs_sum += term.abs();
            summed += 1;
        }

        let mut row = vec![acc.total()];
        if let Some(prev) = rows.last() {
            let depth = prev.len().min(MAX_RICHARDSON_DEPTH);
            for j in 0..depth {
                let factor = 2f64.powf(excess + j as f64) - 1.0;
                let next = row[j] + (row[j] - prev[j]) / factor;
                row.push(next);
            }
        }
        diagonal.push(*row.last().expect("row is never empty"));
        rows.push(row);

        if let [.., a, b, c] = diagonal[..] {
            // Rounding in the term recurrence grows like sqrt(N) ulps.
            let noise = 16.0 * f64::EPSILON * (summed as f64).sqrt() * (abs_sum / c.abs()).max(1.0);
            let tol = ctl.tolerance.max(noise) * c.abs();
            if (c - b).abs() <= tol && (b - a).abs() <= tol {
                check_cancellation(c, abs_sum)?;
                return Ok(SeriesSum { value: c, terms: summed, warnings: Vec::new() });
            }
        }
        checkpoint *= 2;
    }

    Err(Error::Precision(format!(
        "unit-argument series not converged within {} terms (best estimate {})",
        ctl.max_terms,
        diagonal.last().copied().unwrap_or(f64::NAN)
    )))
}

/// Gauss hypergeometric function `2F1(a, b; c; z)` for `-1 < z <= 1`.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    Ok(hyp2f1_detailed(a, b, c, z, ctl)?.value)
}

pub fn hyp2f1_detailed(a: f64, b: f64, c: f64, z: f64, ctl: &SeriesControl) -> Result<SeriesSum> {
    if ![a, b, c, z].iter().all(|x| x.is_finite()) {
        return Err(Error::Domain("2F1 parameters must be finite".into()));
    }
    if is_nonpositive_integer(c) {
        return Err(Error::Convergence(format!("2F1 lower parameter c = {c} is a non-positive integer")));
    }
    if z.abs() > 1.0 || z == -1.0 {
        return Err(Error::Convergence(format!("2F1 requires -1 < z <= 1, got {z}")));
    }
    if terminates(&[a, b]) {
        return direct_sum(&[a, b], &[c], z, ctl);
    }
    if z == 1.0 {
        return gauss_at_one(a, b, c);
    }
    if z > 0.0 && (a < 0.0 || b < 0.0) && c > 0.0 && c - a > 0.0 && c - b > 0.0 {
        // Euler: 2F1(a, b; c; z) = (1 - z)^(c-a-b) 2F1(c - a, c - b; c; z), all terms positive.
        let inner = hyp2f1_detailed(c - a, c - b, c, z, ctl)?;
        return Ok(SeriesSum { value: (1.0 - z).powf(c - a - b) * inner.value, ..inner });
    }
    if z.abs() <= DIRECT_RADIUS {
        return direct_sum(&[a, b], &[c], z, ctl);
    }
    if z < 0.0 {
        // Pfaff: 2F1(a, b; c; z) = (1 - z)^-a 2F1(a, c - b; c; z / (z - 1))
        let inner = direct_sum(&[a, c - b], &[c], z / (z - 1.0), ctl)?;
        return Ok(SeriesSum { value: (1.0 - z).powf(-a) * inner.value, ..inner });
    }
    near_one(a, b, c, z, ctl)
}

/// Gauss summation `2F1(a, b; c; 1) = Γ(c) Γ(c-a-b) / (Γ(c-a) Γ(c-b))`.
fn gauss_at_one(a: f64, b: f64, c: f64) -> Result<SeriesSum> {
    let excess = c - a - b;
    if !(excess > 0.0) {
        return Err(Error::Convergence(format!("2F1 at z = 1 requires c - a - b > 0, got {excess}")));
    }
    let num = gamma_signed(c)
        .zip(gamma_signed(excess))
        .map(|(x, y)| x.mul(y))
        .ok_or_else(|| Error::Convergence("pole in 2F1 Gauss summation".into()))?;
    let value = num.mul(recip_gamma_signed(c - a)).mul(recip_gamma_signed(c - b)).value();
    Ok(SeriesSum { value, terms: 0, warnings: Vec::new() })
}

/// Connection formula around `z = 1`, valid for non-integer `d = c - a - b`:
///
/// `2F1(a,b;c;z) = A 2F1(a,b;1-d;1-z) + (1-z)^d B 2F1(c-a,c-b;1+d;1-z)`
/// with `A = Γ(c)Γ(d)/(Γ(c-a)Γ(c-b))`, `B = Γ(c)Γ(-d)/(Γ(a)Γ(b))`.
///
/// For `d` within `1e-6` of an integer the two halves blow up individually;
/// the value is then taken as the mean of the evaluations at `c ± 1e-5`.
fn near_one(a: f64, b: f64, c: f64, z: f64, ctl: &SeriesControl) -> Result<SeriesSum> {
    let d = c - a - b;
    if (d - d.round()).abs() < 1e-6 {
        const SHIFT: f64 = 1e-5;
        let lo = connection(a, b, c - SHIFT, z, ctl)?;
        let hi = connection(a, b, c + SHIFT, z, ctl)?;
        return Ok(SeriesSum { value: 0.5 * (lo.value + hi.value), terms: lo.terms + hi.terms, warnings: Vec::new() });
    }
    connection(a, b, c, z, ctl)
}

fn connection(a: f64, b: f64, c: f64, z: f64, ctl: &SeriesControl) -> Result<SeriesSum> {
    let d = c - a - b;
    let w = 1.0 - z;
    let gamma_c =
        gamma_signed(c).ok_or_else(|| Error::Convergence(format!("2F1 lower parameter c = {c} at a pole")))?;
    let pole = || Error::Precision(format!("2F1 connection formula hit a pole at d = {d}"));

    let coef_a =
        gamma_c.mul(gamma_signed(d).ok_or_else(pole)?).mul(recip_gamma_signed(c - a)).mul(recip_gamma_signed(c - b));
    let coef_b = gamma_c.mul(gamma_signed(-d).ok_or_else(pole)?).mul(recip_gamma_signed(a)).mul(recip_gamma_signed(b));

    let mut terms = 0;
    let mut total = 0.0;
    if !coef_a.is_zero() {
        let s = direct_sum(&[a, b], &[1.0 - d], w, ctl)?;
        terms += s.terms;
        total += coef_a.mul(SignedLog::from_value(s.value)).value();
    }
    if !coef_b.is_zero() {
        let s = direct_sum(&[c - a, c - b], &[1.0 + d], w, ctl)?;
        terms += s.terms;
        let weight = SignedLog { ln_abs: d * w.ln(), sign: 1.0 };
        total += coef_b.mul(weight).mul(SignedLog::from_value(s.value)).value();
    }
    Ok(SeriesSum { value: total, terms, warnings: Vec::new() })
}

/// `3F2(a1, a2, a3; b1, b2; 1)`.
pub fn hyp3f2_at_1(a1: f64, a2: f64, a3: f64, b1: f64, b2: f64, ctl: &SeriesControl) -> Result<f64> {
    Ok(hyp3f2_at_1_detailed(a1, a2, a3, b1, b2, ctl)?.value)
}

pub fn hyp3f2_at_1_detailed(a1: f64, a2: f64, a3: f64, b1: f64, b2: f64, ctl: &SeriesControl) -> Result<SeriesSum> {
    let upper = [a1, a2, a3];
    let lower = [b1, b2];
    if !upper.iter().chain(&lower).all(|x| x.is_finite()) {
        return Err(Error::Domain("3F2 parameters must be finite".into()));
    }
    if let Some(b) = lower.iter().find(|&&b| is_nonpositive_integer(b)) {
        return Err(Error::Convergence(format!("3F2 lower parameter {b} is a non-positive integer")));
    }
    if terminates(&upper) {
        let direct = direct_sum(&upper, &lower, 1.0, ctl);
        let cancels = match &direct {
            Ok(sum) => sum.value.abs() * PREFER_TRANSFORM < abs_terms(&upper, &lower),
            Err(Error::Precision(_)) => true,
            Err(_) => false,
        };
        if cancels {
            if let Some(t) = Thomae::positive(&upper, &lower) {
                return t.evaluate(ctl);
            }
        }
        return direct;
    }
    let excess = b1 + b2 - a1 - a2 - a3;
    if !(excess > 0.0) {
        return Err(Error::Convergence(format!("3F2 at z = 1 requires b1 + b2 - a1 - a2 - a3 > 0, got {excess}")));
    }
    if upper.iter().any(|&a| a < 0.0) {
        if let Some(t) = Thomae::positive(&upper, &lower) {
            return t.evaluate(ctl);
        }
    }
    unit_series(&upper, &lower, excess, ctl)
}

fn unit_series(upper: &[f64], lower: &[f64], excess: f64, ctl: &SeriesControl) -> Result<SeriesSum> {
    let mut sum = unit_argument_sum(upper, lower, excess, ctl)?;
    if excess < SLOW_EXCESS {
        sum.warnings.push(format!(
            "parameter excess {excess:.4} is below {SLOW_EXCESS}; the unit-argument series \
             converges slowly, cross-check with the Monte-Carlo estimate"
        ));
    }
    Ok(sum)
}

fn abs_terms(upper: &[f64], lower: &[f64]) -> f64 {
    Terms::new(upper, lower, 1.0).take_while(|t| *t != 0.0).map(f64::abs).sum()
}

/// Thomae's relation for a convergent unit-argument `3F2`, pivoting on the
/// upper parameter `a` (with the other two `b`, `c`, lower `d`, `e` and
/// excess `s = d + e - a - b - c`):
///
/// `3F2(a,b,c;d,e;1) = Γ(d)Γ(e)Γ(s) / (Γ(a)Γ(s+b)Γ(s+c)) · 3F2(d-a,e-a,s;s+b,s+c;1)`
///
/// The transformed series has excess `a`.
struct Thomae {
    prefactor: SignedLog,
    upper: [f64; 3],
    lower: [f64; 2],
    excess: f64,
}

impl Thomae {
    /// Picks a pivot for which every transformed parameter is positive, so
    /// that the new series has no sign changes. Prefers the largest excess.
    fn positive(upper: &[f64; 3], lower: &[f64; 2]) -> Option<Self> {
        let [d, e] = *lower;
        let s = d + e - upper.iter().sum::<f64>();
        (0..3)
            .filter_map(|i| {
                let a = upper[i];
                let (b, c) = (upper[(i + 1) % 3], upper[(i + 2) % 3]);
                let new_upper = [d - a, e - a, s];
                let new_lower = [s + b, s + c];
                if !(a > 0.0) || new_upper.iter().chain(&new_lower).any(|&p| !(p > 0.0)) {
                    return None;
                }
                let prefactor = gamma_signed(d)?
                    .mul(gamma_signed(e)?)
                    .mul(gamma_signed(s)?)
                    .div(gamma_signed(a)?)
                    .div(gamma_signed(s + b)?)
                    .div(gamma_signed(s + c)?);
                Some((a, Thomae { prefactor, upper: new_upper, lower: new_lower, excess: a }))
            })
            .max_by(|x, y| x.0.total_cmp(&y.0))
            .map(|(_, t)| t)
    }

    fn evaluate(&self, ctl: &SeriesControl) -> Result<SeriesSum> {
        let mut sum = unit_series(&self.upper, &self.lower, self.excess, ctl)?;
        sum.value = self.prefactor.mul(SignedLog::from_value(sum.value)).value();
        Ok(sum)
    }
}
