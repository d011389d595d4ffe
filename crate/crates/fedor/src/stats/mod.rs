//! Self-contained statistics kernel: empirical CDFs, the probability
//! integral transform, the one-sample Kolmogorov-Smirnov test against
//! Uniform[0,1], and order-statistic reference values.
//!
//! Deliberately not a general statistics library; it covers exactly what the
//! allocation mechanism and the experiment scenarios need.

mod dist;
mod ks;
mod order;
mod special;

pub use dist::{BetaDist, NormalDist, UniformDist};
pub use ks::{ks_pvalue, ks_statistic, ks_statistic_sorted};
pub use order::expected_order_statistic;
pub use special::{erf, ln_gamma, reg_inc_beta};

use crate::core::{Error, Result};

/// A cumulative distribution function handle. Implementations clamp
/// out-of-domain arguments to {0, 1}.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;
}

/// Probability integral transform: maps `x` through `F` to a value in
/// [0, 1]. For a continuous `F` matching the law of `x`, the result is
/// Uniform[0,1].
pub fn pit<C: Cdf + ?Sized>(x: f64, cdf: &C) -> f64 {
    cdf.cdf(x).clamp(0.0, 1.0)
}

/// Empirical CDF over a sample from [0, 1].
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Argument("ecdf requires a non-empty sample".into()));
        }
        if sample.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Argument("ecdf sample values must lie in [0,1]".into()));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

impl Cdf for Ecdf {
    /// rank(x)/m, where rank counts sample points <= x (ties inclusive).
    fn cdf(&self, x: f64) -> f64 {
        let rank = self.sorted.partition_point(|&v| v <= x);
        rank as f64 / self.sorted.len() as f64
    }
}
