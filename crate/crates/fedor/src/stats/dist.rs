//! Parametric CDFs used by the strategies and the probability integral
//! transform: exactly the families that appear in the experiment scenarios.

use super::special::{erf, reg_inc_beta};
use super::Cdf;
use crate::core::{Error, Result};
use std::f64::consts::SQRT_2;

/// Uniform[a, b].
#[derive(Debug, Clone, Copy)]
pub struct UniformDist {
    a: f64,
    b: f64,
}

impl UniformDist {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Argument(format!("uniform requires a < b, got [{a}, {b}]")));
        }
        Ok(Self { a, b })
    }
}

impl Cdf for UniformDist {
    fn cdf(&self, x: f64) -> f64 {
        ((x - self.a) / (self.b - self.a)).clamp(0.0, 1.0)
    }
}

/// Normal(mu, sigma), CDF via erf.
#[derive(Debug, Clone, Copy)]
pub struct NormalDist {
    mu: f64,
    sigma: f64,
}

impl NormalDist {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0 && mu.is_finite()) {
            return Err(Error::Argument(format!(
                "normal requires finite mu and sigma > 0, got ({mu}, {sigma})"
            )));
        }
        Ok(Self { mu, sigma })
    }
}

impl Cdf for NormalDist {
    fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / (self.sigma * SQRT_2);
        (0.5 * (1.0 + erf(z))).clamp(0.0, 1.0)
    }
}

/// Beta(alpha, beta) on [0, 1], CDF via the regularized incomplete beta.
#[derive(Debug, Clone, Copy)]
pub struct BetaDist {
    alpha: f64,
    beta: f64,
}

impl BetaDist {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Argument(format!(
                "beta requires positive shape parameters, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }
}

impl Cdf for BetaDist {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            reg_inc_beta(self.alpha, self.beta, x).clamp(0.0, 1.0)
        }
    }
}
