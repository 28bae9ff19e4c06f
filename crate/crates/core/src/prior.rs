//! Beta-Gamma prior on the GPD parameters.
//!
//! `π(σ,ξ) ∝ ξ^{a-1}(1-ξ)^{b-1} σ^{c-1} e^{-dσ}`: a Beta(a,b) on the tail
//! index and a Gamma(c,d) on the scale. The limit `c = d = 0` is the reference
//! prior (improper uniform on log σ), under which the posterior is proper
//! given at least three exceedances.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaGammaPrior {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl BetaGammaPrior {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta shapes must be positive and finite, got a={a}, b={b}"
            )));
        }
        if !(c >= 0.0 && d >= 0.0 && c.is_finite() && d.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma hyperparameters must be nonnegative, got c={c}, d={d}"
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Flat Beta(1,1) on ξ with the improper reference limit on σ.
    pub fn reference() -> Self {
        Self { a: 1.0, b: 1.0, c: 0.0, d: 0.0 }
    }

    /// Informative Beta(a,b) on ξ, reference limit on σ.
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, 0.0, 0.0)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }

    /// True when σ carries the improper c = d = 0 reference limit.
    pub fn is_reference_scale(&self) -> bool {
        self.c == 0.0 && self.d == 0.0
    }

    /// Minimum exceedance count for a proper posterior.
    pub fn min_exceedances(&self) -> usize {
        if self.is_reference_scale() {
            3
        } else {
            1
        }
    }

    /// Prior mean of the tail index.
    pub fn xi_mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }
}

/// Moment-matched Beta prior from a collection of tail-index estimates.
///
/// With sample mean `m` and variance `s²` of the estimates, returns
/// Beta(a,b) with `a = m·k`, `b = (1-m)·k`, `k = m(1-m)/s² - 1`; the scale
/// part stays at the reference limit. Fails when the moments are infeasible
/// for a Beta (`s² >= m(1-m)`).
pub fn fit_beta_prior(xi_estimates: &[f64]) -> Result<BetaGammaPrior> {
    if xi_estimates.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 tail-index estimates, got {}",
            xi_estimates.len()
        )));
    }
    if xi_estimates.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
        return Err(Error::InvalidParameter(
            "tail-index estimates must lie strictly in (0,1)".into(),
        ));
    }
    let n = xi_estimates.len() as f64;
    let mean = xi_estimates.iter().sum::<f64>() / n;
    let var = xi_estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let bound = mean * (1.0 - mean);
    if var >= bound {
        return Err(Error::DegenerateMoments { variance: var, bound });
    }
    let k = bound / var - 1.0;
    BetaGammaPrior::beta(mean * k, (1.0 - mean) * k)
}
