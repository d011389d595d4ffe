//! One-sample Kolmogorov-Smirnov test against Uniform[0,1].

use crate::core::{Error, Result};

/// KS statistic D for a sample from [0, 1]: the sup distance between the
/// sample ECDF and the Uniform[0,1] CDF,
/// `D = max_i max(i/m - x_(i), x_(i) - (i-1)/m)` over the ascending sort.
pub fn ks_statistic(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Argument("ks statistic requires a non-empty sample".into()));
    }
    debug_assert!(sample.iter().all(|v| (0.0..=1.0).contains(v)));
    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ks_statistic_sorted(&sorted))
}

/// Same as [`ks_statistic`] for a sample already sorted ascending.
pub fn ks_statistic_sorted(sorted: &[f64]) -> f64 {
    let m = sorted.len() as f64;
    let inv_m = 1.0 / m;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let hi = (i + 1) as f64 * inv_m - x;
        let lo = x - i as f64 * inv_m;
        d = d.max(hi).max(lo);
    }
    d
}

/// Asymptotic p-value for the one-sample statistic with Stephens'
/// small-sample correction:
/// `lambda = (sqrt(m) + 0.12 + 0.11/sqrt(m)) * D`, then the Kolmogorov tail
/// sum `Q(lambda) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2)`.
pub fn ks_pvalue(d: f64, m: usize) -> f64 {
    debug_assert!((0.0..=1.0).contains(&d));
    debug_assert!(m >= 1);
    let sqrt_m = (m as f64).sqrt();
    let lambda = (sqrt_m + 0.12 + 0.11 / sqrt_m) * d;
    kolmogorov_tail(lambda)
}

/// Kolmogorov distribution tail Q(lambda), series truncated when a term
/// drops below 1e-12 in magnitude; clamped to [0, 1].
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let neg_two_lambda_sq = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100_000u64 {
        let term = (neg_two_lambda_sq * (j * j) as f64).exp();
        if term < 1e-12 {
            break;
        }
        sum += sign * term;
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
