//! Discounted UCB and sliding-window UCB.
//!
//! Both use the index `R_k / N_k + 2B sqrt(ξ ln n / N_k)` with `n = Σ N_k`.
//! Arms with no statistics get an infinite score, so they are played first
//! in index order.

use std::collections::VecDeque;

use crate::error::{Error, Result};

use super::argmax;

fn check_common(num_arms: usize, xi: f64, bound: f64) -> Result<()> {
    if num_arms == 0 {
        return Err(Error::config("policy needs at least one arm"));
    }
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::config(format!("exploration scale xi must be positive, got {xi}")));
    }
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::config(format!("reward bound must be positive, got {bound}")));
    }
    Ok(())
}

fn check_observation(arm: usize, num_arms: usize, reward: f64) -> Result<()> {
    if arm >= num_arms {
        return Err(Error::Index(format!("arm {arm} out of range")));
    }
    if !(0.0..=1.0).contains(&reward) {
        return Err(Error::InvalidReward(reward));
    }
    Ok(())
}

fn fill_indices(scores: &mut [f64], sums: &[f64], counts: &[f64], xi: f64, bound: f64) {
    let n: f64 = counts.iter().sum();
    let log_n = n.max(1.0).ln();
    for ((s, &r), &c) in scores.iter_mut().zip(sums).zip(counts) {
        *s = if c > 0.0 { r / c + 2.0 * bound * (xi * log_n / c).sqrt() } else { f64::INFINITY };
    }
}

#[derive(Clone, Debug)]
pub struct DiscountedUcb {
    sums: Vec<f64>,
    counts: Vec<f64>,
    gamma: f64,
    xi: f64,
    bound: f64,
    scores: Vec<f64>,
}

impl DiscountedUcb {
    pub fn new(num_arms: usize, gamma: f64, xi: f64, bound: f64) -> Result<Self> {
        check_common(num_arms, xi, bound)?;
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::config(format!("D-UCB discount must lie in (0, 1], got {gamma}")));
        }
        Ok(Self {
            sums: vec![0.0; num_arms],
            counts: vec![0.0; num_arms],
            gamma,
            xi,
            bound,
            scores: vec![0.0; num_arms],
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn choose(&mut self) -> usize {
        fill_indices(&mut self.scores, &self.sums, &self.counts, self.xi, self.bound);
        argmax(&self.scores)
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_observation(arm, self.counts.len(), reward)?;
        if self.gamma < 1.0 {
            let g = self.gamma;
            self.sums.iter_mut().for_each(|s| *s *= g);
            self.counts.iter_mut().for_each(|c| *c *= g);
        }
        self.sums[arm] += reward;
        self.counts[arm] += 1.0;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SlidingWindowUcb {
    window: VecDeque<(usize, f64)>,
    tau: usize,
    sums: Vec<f64>,
    counts: Vec<f64>,
    xi: f64,
    bound: f64,
    scores: Vec<f64>,
}

impl SlidingWindowUcb {
    pub fn new(num_arms: usize, tau: u64, xi: f64, bound: f64) -> Result<Self> {
        check_common(num_arms, xi, bound)?;
        if tau == 0 {
            return Err(Error::config("SW-UCB window tau must be at least 1"));
        }
        let tau = usize::try_from(tau).map_err(|_| Error::config("SW-UCB window too large"))?;
        Ok(Self {
            window: VecDeque::with_capacity(tau.min(1 << 16) + 1),
            tau,
            sums: vec![0.0; num_arms],
            counts: vec![0.0; num_arms],
            xi,
            bound,
            scores: vec![0.0; num_arms],
        })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Windowed mean of `arm`, if it was played within the window.
    pub fn windowed_mean(&self, arm: usize) -> Option<f64> {
        (self.counts[arm] > 0.0).then(|| self.sums[arm] / self.counts[arm])
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn choose(&mut self) -> usize {
        fill_indices(&mut self.scores, &self.sums, &self.counts, self.xi, self.bound);
        argmax(&self.scores)
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_observation(arm, self.counts.len(), reward)?;
        self.window.push_back((arm, reward));
        self.sums[arm] += reward;
        self.counts[arm] += 1.0;
        if self.window.len() > self.tau {
            let (old, r) = self.window.pop_front().expect("window is non-empty");
            self.counts[old] -= 1.0;
            // Snap to zero once the arm leaves the window entirely, so
            // rounding error in the running sum cannot build up.
            if self.counts[old] == 0.0 {
                self.sums[old] = 0.0;
            } else {
                self.sums[old] -= r;
            }
        }
        Ok(())
    }
}
