//! Generalized Pareto distribution on exceedances `v >= 0`.
//!
//! Density `(1/σ)(1 + ξv/σ)^{-(1/ξ+1)}` with tail index `ξ ∈ (0,1)` and scale
//! `σ > 0`. The open-interval domain keeps the tail heavy (ξ > 0) while the
//! mean `σ/(1-ξ)` stays finite (ξ < 1). All powers go through `ln_1p`/`exp_m1`
//! so optimizers probing tiny ξ do not lose precision.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Tail index and scale of a GPD exceedance model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    xi: f64,
    sigma: f64,
}

impl GpdParams {
    /// Validates `0 < xi < 1` and `sigma > 0`.
    pub fn new(xi: f64, sigma: f64) -> Result<Self> {
        if !(xi > 0.0 && xi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tail index xi must lie strictly in (0,1), got {xi}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { xi, sigma })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Log density at exceedance `v >= 0`.
    pub fn log_pdf(&self, v: f64) -> f64 {
        debug_assert!(v >= 0.0);
        -self.sigma.ln() - (1.0 / self.xi + 1.0) * (self.xi * v / self.sigma).ln_1p()
    }

    /// `P(V < v) = 1 - (1 + ξv/σ)^{-1/ξ}`.
    pub fn cdf(&self, v: f64) -> f64 {
        debug_assert!(v >= 0.0);
        -f64::exp_m1(-(self.xi * v / self.sigma).ln_1p() / self.xi)
    }

    /// Inverse CDF: `v = (σ/ξ)[(1-p)^{-ξ} - 1]` for `p ∈ [0,1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "quantile level must lie in [0,1), got {p}"
            )));
        }
        Ok(self.sigma / self.xi * f64::exp_m1(-self.xi * (-p).ln_1p()))
    }

    /// `count` i.i.d. draws by inverse-CDF on uniforms from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        (0..count)
            .map(|_| {
                let p: f64 = rng.gen();
                self.sigma / self.xi * f64::exp_m1(-self.xi * (-p).ln_1p())
            })
            .collect()
    }

    /// Mean exceedance `λ = σ/(1-ξ)`.
    pub fn mean(&self) -> f64 {
        self.sigma / (1.0 - self.xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;

    fn p(xi: f64, sigma: f64) -> GpdParams {
        GpdParams::new(xi, sigma).unwrap()
    }

    #[test]
    fn constructor_rejects_out_of_domain() {
        assert!(GpdParams::new(0.0, 1.0).is_err());
        assert!(GpdParams::new(1.0, 1.0).is_err());
        assert!(GpdParams::new(-0.2, 1.0).is_err());
        assert!(GpdParams::new(0.5, 0.0).is_err());
        assert!(GpdParams::new(0.5, -1.0).is_err());
        assert!(GpdParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn log_pdf_closed_form() {
        // density at the origin is 1/sigma
        assert!((p(0.5, 10.0).log_pdf(0.0) - 0.1f64.ln()).abs() < 1e-15);
        assert!((p(0.2, 1.0).log_pdf(0.0)).abs() < 1e-15);
        // hand-evaluated: log(0.1) - 3 log(1.5)
        let want = 0.1f64.ln() - 3.0 * 1.5f64.ln();
        assert!((p(0.5, 10.0).log_pdf(10.0) - want).abs() < 1e-14);
    }

    #[test]
    fn cdf_closed_form() {
        assert_eq!(p(0.5, 10.0).cdf(0.0), 0.0);
        assert!((p(0.5, 10.0).cdf(10.0) - 5.0 / 9.0).abs() < 1e-14);
        assert!((p(0.5, 1.0).cdf(2.0) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn quantile_closed_form() {
        assert_eq!(p(0.3, 2.0).quantile(0.0).unwrap(), 0.0);
        assert!((p(0.5, 1.0).quantile(0.75).unwrap() - 2.0).abs() < 1e-12);
        assert!((p(0.5, 10.0).quantile(5.0 / 9.0).unwrap() - 10.0).abs() < 1e-12);
        assert!(p(0.5, 1.0).quantile(1.0).is_err());
    }

    #[test]
    fn mean_formula() {
        assert_eq!(p(0.5, 10.0).mean(), 20.0);
        assert!((p(0.8, 10.0).mean() - 50.0).abs() < 1e-12);
        assert!((p(0.2, 1.0).mean() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic_and_sized() {
        let params = p(0.5, 10.0);
        let a = params.sample(100, &mut stream_rng(3, 0, 0));
        let b = params.sample(100, &mut stream_rng(3, 0, 0));
        assert_eq!(a, b);
        assert!(params.sample(0, &mut stream_rng(3, 0, 0)).is_empty());
    }

    #[test]
    fn monte_carlo_mean_matches_analytic() {
        // finite variance regime so the CLT standard error applies
        let params = p(0.4, 10.0);
        let n = 1_000_000usize;
        let draws = params.sample(n, &mut stream_rng(11, 0, 0));
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = (draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        let se = sd / (n as f64).sqrt();
        assert!(
            (mean - params.mean()).abs() < 4.0 * se,
            "mean {mean} vs {} (se {se})",
            params.mean()
        );
    }
}
