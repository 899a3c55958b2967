//! Seeded random streams and the sampling primitives every stochastic
//! component draws from.
//!
//! The generator is pinned to ChaCha8: a stream is identified by a 64-bit
//! seed plus a 64-bit stream number, and ChaCha's native stream parameter
//! gives each replication its own non-overlapping keystream.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest shape handed to the Gamma sampler.
///
/// Discounting drives the accumulators of long-unplayed arms towards zero; with
/// zero prior offsets the shape would otherwise collapse to `Gamma(0)`.
pub const MIN_SHAPE: f64 = 1e-12;

/// A single-owner random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent stream for replication `run_index`, a pure function of
    /// `(seed, run_index)`.
    pub fn substream(&self, run_index: u64) -> Self {
        Self::with_stream(self.seed, run_index)
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform draw on `(0, 1]`, safe to take logarithms of.
    pub fn uniform_nonzero(&mut self) -> f64 {
        1.0 - self.inner.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn derive_substream(base: &RngStream, run_index: u64) -> RngStream {
    base.substream(run_index)
}

pub fn sample_bernoulli(rng: &mut RngStream, p: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(rng.uniform() < p)
}

/// Shape parameters of a Beta distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_shape(alpha)?;
        check_shape(beta)?;
        Ok(Self { alpha, beta })
    }

    /// Builds shapes from possibly-degenerate accumulators, raising each to
    /// at least [`MIN_SHAPE`].
    pub fn clamped(alpha: f64, beta: f64) -> Self {
        Self { alpha: alpha.max(MIN_SHAPE), beta: beta.max(MIN_SHAPE) }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let total = self.alpha + self.beta;
        self.alpha * self.beta / (total * total * (total + 1.0))
    }
}

fn check_shape(shape: f64) -> Result<()> {
    if shape > 0.0 && shape.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidShape(shape))
    }
}

pub fn beta_mean(params: BetaParams) -> f64 {
    params.mean()
}

pub fn beta_variance(params: BetaParams) -> f64 {
    params.variance()
}

/// Draw from the unit-scale Gamma distribution.
pub fn sample_gamma(rng: &mut RngStream, shape: f64) -> Result<f64> {
    check_shape(shape)?;
    Ok(ln_gamma_variate(rng, shape).exp())
}

/// Draw from `Beta(alpha, beta)` as `G1 / (G1 + G2)`.
///
/// The ratio is formed from log-variates so that tiny shapes, whose Gamma
/// draws underflow, still produce a well-defined sample. The result is kept
/// strictly inside `(0, 1)`.
pub fn sample_beta(rng: &mut RngStream, params: BetaParams) -> f64 {
    let ln_g1 = ln_gamma_variate(rng, params.alpha);
    let ln_g2 = ln_gamma_variate(rng, params.beta);
    // g1 / (g1 + g2) = 1 / (1 + exp(ln_g2 - ln_g1))
    let x = 1.0 / (1.0 + (ln_g2 - ln_g1).exp());
    x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Logarithm of a unit-scale Gamma(shape) variate.
///
/// Marsaglia-Tsang squeeze/rejection for `shape >= 1`; smaller shapes are
/// boosted through `Gamma(shape + 1) * U^(1/shape)`.
fn ln_gamma_variate(rng: &mut RngStream, shape: f64) -> f64 {
    if shape < 1.0 {
        let boosted = ln_gamma_variate(rng, shape + 1.0);
        return boosted + rng.uniform_nonzero().ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.standard_normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.uniform_nonzero();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d.ln() + v.ln();
        }
    }
}
