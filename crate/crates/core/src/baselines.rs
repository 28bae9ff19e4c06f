//! Reference estimators: naive mean, Winsorized mean, and subsampling
//! standard errors with a tail-index-adjusted learning rate.

use crate::error::{Error, Result};
use crate::prior::BetaGammaPrior;
use crate::seed::stream_rng;
use crate::threshold::{default_grid, select_threshold, threshold_scan};
use crate::mean::split_sample;
use crate::tail::map_fit;
use rand::seq::index::sample as index_sample;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Naive,
    Winsorized,
    Subsampling,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EstimateWithSe {
    pub estimate: f64,
    pub se: f64,
    pub method: BaselineMethod,
}

/// Sample standard deviation (n-1 denominator); 0 for fewer than 2 values.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
}

/// Sample mean with `sd(z)/sqrt(N)`.
pub fn naive_mean(values: &[f64]) -> Result<EstimateWithSe> {
    if values.len() < 2 {
        return Err(Error::EmptySample);
    }
    let n = values.len() as f64;
    Ok(EstimateWithSe {
        estimate: values.iter().sum::<f64>() / n,
        se: sample_sd(values) / n.sqrt(),
        method: BaselineMethod::Naive,
    })
}

/// Mean and `sd/sqrt(N)` after clipping every value strictly above `u` to `u`.
pub fn winsorized_mean(values: &[f64], u: f64) -> Result<EstimateWithSe> {
    if values.len() < 2 {
        return Err(Error::EmptySample);
    }
    let clipped: Vec<f64> = values.iter().map(|&z| if z > u { u } else { z }).collect();
    let mut est = naive_mean(&clipped)?;
    est.method = BaselineMethod::Winsorized;
    Ok(est)
}

/// Subsampling standard error with tail-adjusted rate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SubsamplingEstimate {
    pub estimate: f64,
    pub se: f64,
    /// Learning-rate exponent β = min(0.5, 1 - ξ̂).
    pub beta: f64,
    /// MAP tail index behind the rate; absent when the tail fit failed.
    pub xi_hat: Option<f64>,
    /// The tail fit failed and β fell back to 0.5.
    pub rate_fallback: bool,
}

impl SubsamplingEstimate {
    pub fn as_estimate(&self) -> EstimateWithSe {
        EstimateWithSe {
            estimate: self.estimate,
            se: self.se,
            method: BaselineMethod::Subsampling,
        }
    }
}

pub const DEFAULT_SUBSAMPLES: usize = 200;
const STREAM_SUBSAMPLE: u64 = 0x73;

/// Without-replacement subsampling SE for the sample mean.
///
/// Draws `num_subsamples` subsamples of size `b = N/2`, takes the standard
/// deviation of their means, and rescales by `(b/N)^β` with
/// `β = min(0.5, 1 - ξ̂)`; errors shrinking as `N^{-β}` imply exactly this
/// size-b-to-size-N extrapolation. Because subsamples are drawn without
/// replacement and `b` is half of `N`, the raw spread of subsample means
/// carries a finite-population shrinkage of `sqrt((N-b)/(N-1))`; the
/// spread is divided by that factor first so the extrapolation starts from
/// the independent-sampling scale at size `b`. ξ̂ is MAP-fit at `threshold`
/// (or the rule-selected threshold when `None`) under the reference prior.
pub fn subsampling_se(
    values: &[f64],
    num_subsamples: usize,
    threshold: Option<f64>,
    seed: u64,
) -> Result<SubsamplingEstimate> {
    let n = values.len();
    if n < 10 {
        return Err(Error::InvalidConfig(format!("need at least 10 values, got {n}")));
    }
    if num_subsamples < 50 {
        return Err(Error::InvalidConfig(format!(
            "need at least 50 subsamples, got {num_subsamples}"
        )));
    }

    let prior = BetaGammaPrior::reference();
    let xi_hat = match threshold {
        Some(u) => map_fit(&prior, split_sample(values, u).exceedances())
            .ok()
            .map(|f| f.params.xi()),
        None => {
            let grid = default_grid(values);
            threshold_scan(values, &grid, &prior)
                .ok()
                .and_then(|diags| {
                    let choice = select_threshold(&diags).ok()?;
                    diags[choice.index].fit.map(|f| f.xi)
                })
        }
    };
    let (beta, rate_fallback) = match xi_hat {
        Some(xi) => (0.5f64.min(1.0 - xi), false),
        None => (0.5, true),
    };

    let b = n / 2;
    let mut rng = stream_rng(seed, STREAM_SUBSAMPLE, 0);
    let mut means = Vec::with_capacity(num_subsamples);
    for _ in 0..num_subsamples {
        let idx = index_sample(&mut rng, n, b);
        let sum: f64 = idx.iter().map(|i| values[i]).sum();
        means.push(sum / b as f64);
    }
    let fpc = ((n as f64 - 1.0) / (n as f64 - b as f64)).sqrt();
    let scale = fpc * (b as f64 / n as f64).powf(beta);
    Ok(SubsamplingEstimate {
        estimate: values.iter().sum::<f64>() / n as f64,
        se: sample_sd(&means) * scale,
        beta,
        xi_hat,
        rate_fallback,
    })
}
