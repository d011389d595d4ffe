//! Bid-generation policies: the honest identity strategy and the cheater
//! families used by the experiment scenarios.
//!
//! A player's true type is always Uniform[0,1]; strategies only change what
//! gets declared. The two beta families collapse to honest-looking uniform
//! reports at beta = 1:
//!   - `BetaUncorr(beta)` declares an independent Beta(1, beta) draw;
//!   - `BetaCorr(beta)` declares `theta^(1/beta)`, a monotone distortion of
//!     the true type whose marginal is Beta(beta, 1).

use crate::core::{Error, Result};
use crate::rng::RngStream;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategySpec {
    /// Declare the true type.
    Honest,
    /// Declare an independent truncated Normal(mu, sigma) draw (resampled
    /// until it lands in [0,1]).
    Normal { mu: f64, sigma: f64 },
    /// Declare an independent Beta(1, beta) draw.
    BetaUncorr { beta: f64 },
    /// Declare `theta^(1/beta)`.
    BetaCorr { beta: f64 },
    /// Declare an independent Uniform[0,1] draw, unrelated to the true type.
    RandomUniform,
}

impl StrategySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StrategySpec::Honest | StrategySpec::RandomUniform => Ok(()),
            StrategySpec::Normal { mu, sigma } => {
                if !(mu > 0.0 && mu < 1.0) {
                    return Err(Error::Config(format!("normal mu must lie in (0,1), got {mu}")));
                }
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::Config(format!("normal sigma must be positive, got {sigma}")));
                }
                Ok(())
            }
            StrategySpec::BetaUncorr { beta } | StrategySpec::BetaCorr { beta } => {
                if !(beta > 0.0 && beta <= 1.0) {
                    return Err(Error::Config(format!("beta parameter must lie in (0,1], got {beta}")));
                }
                Ok(())
            }
        }
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, StrategySpec::Honest)
    }

    /// Whether the declared values have a Uniform[0,1] marginal. This is
    /// exactly what an ideal goodness-of-fit test can verify; independence
    /// from the true type is invisible to it.
    pub fn declared_marginal_is_uniform(&self) -> bool {
        match *self {
            StrategySpec::Honest | StrategySpec::RandomUniform => true,
            StrategySpec::BetaUncorr { beta } | StrategySpec::BetaCorr { beta } => beta == 1.0,
            StrategySpec::Normal { .. } => false,
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StrategySpec::Honest => write!(f, "honest"),
            StrategySpec::Normal { mu, sigma } => write!(f, "normal:{mu}:{sigma}"),
            StrategySpec::BetaUncorr { beta } => write!(f, "beta_uncorr:{beta}"),
            StrategySpec::BetaCorr { beta } => write!(f, "beta_corr:{beta}"),
            StrategySpec::RandomUniform => write!(f, "random_uniform"),
        }
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    /// Parses the colon-separated form used in config files and CSV output,
    /// e.g. `honest`, `normal:0.5:0.15`, `beta_uncorr:0.9`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = |_| Error::Argument(format!("malformed strategy '{s}'"));
        let spec = match parts.as_slice() {
            ["honest"] => StrategySpec::Honest,
            ["random_uniform"] => StrategySpec::RandomUniform,
            ["normal", mu, sigma] => StrategySpec::Normal {
                mu: mu.parse().map_err(bad)?,
                sigma: sigma.parse().map_err(bad)?,
            },
            ["beta_uncorr", beta] => StrategySpec::BetaUncorr {
                beta: beta.parse().map_err(bad)?,
            },
            ["beta_corr", beta] => StrategySpec::BetaCorr {
                beta: beta.parse().map_err(bad)?,
            },
            _ => return Err(Error::Argument(format!("unknown strategy '{s}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// One true type: iid Uniform[0,1] from the player's dedicated stream.
pub fn draw_true_type(stream: &mut RngStream) -> f64 {
    stream.next_f64()
}

/// The value a player reports given her strategy and true type.
pub fn declare(strategy: &StrategySpec, theta: f64, stream: &mut RngStream) -> f64 {
    debug_assert!((0.0..=1.0).contains(&theta));
    match *strategy {
        StrategySpec::Honest => theta,
        StrategySpec::Normal { mu, sigma } => loop {
            let x = stream.next_normal(mu, sigma);
            if (0.0..=1.0).contains(&x) {
                break x;
            }
        },
        // Inverse-CDF sample of Beta(1, beta): F(x) = 1 - (1-x)^beta.
        StrategySpec::BetaUncorr { beta } => 1.0 - (1.0 - stream.next_f64()).powf(1.0 / beta),
        StrategySpec::BetaCorr { beta } => theta.powf(1.0 / beta),
        StrategySpec::RandomUniform => stream.next_f64(),
    }
}
