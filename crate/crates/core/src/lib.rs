//! Non-stationary Bernoulli bandits: discounted Thompson sampling and
//! baselines, reference environments, a seeded experiment harness, and exact
//! evaluation of the probability of a sub-optimal pick.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod env;
pub mod error;
pub mod exact;
pub mod harness;
pub mod hypergeometric;
pub mod policy;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
