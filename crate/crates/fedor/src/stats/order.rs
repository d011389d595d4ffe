//! Expected order statistics of iid Uniform[0,1] draws.

use crate::core::{Error, Result};

/// Expected value of the j-th largest of n iid Uniform[0,1] variables:
/// `(n + 1 - j) / (n + 1)`.
pub fn expected_order_statistic(n: usize, j: usize) -> Result<f64> {
    if n == 0 || j == 0 || j > n {
        return Err(Error::Argument(format!(
            "order statistic requires 1 <= j <= n, got j={j}, n={n}"
        )));
    }
    Ok((n + 1 - j) as f64 / (n + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RngStream, StreamPurpose};

    #[test]
    fn closed_form_values() {
        assert_eq!(expected_order_statistic(1, 1).unwrap(), 0.5);
        assert_eq!(expected_order_statistic(9, 1).unwrap(), 0.9);
        assert_eq!(expected_order_statistic(9, 3).unwrap(), 0.7);
        assert_eq!(expected_order_statistic(9, 9).unwrap(), 0.1);
    }

    #[test]
    fn out_of_range_is_an_error() {
        assert!(expected_order_statistic(9, 0).is_err());
        assert!(expected_order_statistic(9, 10).is_err());
        assert!(expected_order_statistic(0, 1).is_err());
    }

    #[test]
    fn monte_carlo_cross_check() {
        // 10^6 draws of 9-uniform vectors; the j-th largest must average to
        // the closed form within 1e-3.
        let mut s = RngStream::new(314, 0, 0, StreamPurpose::Aux);
        let trials = 1_000_000u32;
        let mut sums = [0.0f64; 9];
        for _ in 0..trials {
            let mut v = [0.0f64; 9];
            for x in &mut v {
                *x = s.next_f64();
            }
            v.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
            for (j, &x) in v.iter().enumerate() {
                sums[j] += x;
            }
        }
        for j in 1..=9 {
            let mc = sums[j - 1] / trials as f64;
            let exact = expected_order_statistic(9, j).unwrap();
            assert!((mc - exact).abs() < 1e-3, "j={j}: mc={mc}, exact={exact}");
        }
    }
}
