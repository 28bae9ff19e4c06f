//! Posterior inference for the mean of the full data generating process.
//!
//! The sample splits at a threshold `u` into bulk values (Bayesian-bootstrap
//! weights, Exp(1) per observation) and tail exceedances (GPD model, one
//! Gamma(n,1) weight for the whole tail). The DGP mean is then
//!
//! ```text
//! μ = [ Σ θ_i z_i + θ_{m+1} (u + λ) ] / |θ|,   λ = σ/(1-ξ)
//! ```
//!
//! and its posterior moments follow from the Dirichlet structure of the
//! normalized weights plus the tail posterior on λ:
//!
//! ```text
//! E[μ]   = [ Σ z_i + n (u + Eλ) ] / (m+n)
//! var(μ) = [ Σ (z_i-Eμ)² + n (u+Eλ-Eμ)² ] / [(m+n)(m+n+1)]
//!          + n(n+1) / [(m+n)(m+n+1)] · var(λ)
//! ```
//!
//! The var(λ) coefficient is derived directly from the Dirichlet(1,…,1,n)
//! posterior on the normalized weights; [`mc_mean_oracle`] validates the
//! closed form by brute-force simulation of the weight vector.

use crate::baselines::sample_sd;
use crate::error::{Error, Result};
use crate::prior::BetaGammaPrior;
use crate::seed::{derive_seed, stream_rng};
use crate::tail::{map_fit, ExceedanceSample};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A sample partitioned at threshold `u`; values with `z >= u` live in the
/// tail as exceedances `z - u`.
#[derive(Debug, Clone)]
pub struct SplitSample {
    bulk: Vec<f64>,
    exceedances: ExceedanceSample,
    u: f64,
}

impl SplitSample {
    pub fn bulk(&self) -> &[f64] {
        &self.bulk
    }
    pub fn exceedances(&self) -> &ExceedanceSample {
        &self.exceedances
    }
    pub fn u(&self) -> f64 {
        self.u
    }
    pub fn m(&self) -> usize {
        self.bulk.len()
    }
    pub fn n(&self) -> usize {
        self.exceedances.n()
    }
    pub fn total(&self) -> usize {
        self.m() + self.n()
    }
}

/// Partitions `values` at `u`, preserving multiplicity. The boundary `z = u`
/// goes to the tail with exceedance 0.
pub fn split_sample(values: &[f64], u: f64) -> SplitSample {
    let mut bulk = Vec::new();
    let mut tail = Vec::new();
    for &z in values {
        if z >= u {
            tail.push(z - u);
        } else {
            bulk.push(z);
        }
    }
    SplitSample {
        bulk,
        exceedances: ExceedanceSample::new(tail).expect("z - u >= 0 by construction"),
        u,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Laplace,
    Imh,
    BulkOnly,
}

/// Posterior summary of the mean exceedance λ.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailMeanPosterior {
    pub mean: f64,
    pub variance: f64,
    pub method: TailMethod,
}

/// Posterior mean and variance of the DGP mean μ.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanPosterior {
    pub mean: f64,
    pub variance: f64,
    pub lambda_mean: f64,
    pub lambda_variance: f64,
    pub method: TailMethod,
}

impl MeanPosterior {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Coefficient multiplying var(λ) in var(μ).
pub fn lambda_variance_coefficient(m: usize, n: usize) -> f64 {
    let s = (m + n) as f64;
    let nf = n as f64;
    nf * (nf + 1.0) / (s * (s + 1.0))
}

/// Combines the bulk and the tail λ posterior into moments for μ.
///
/// With an empty tail the result is the plain Bayesian-bootstrap posterior on
/// the bulk (`method = BulkOnly`); `tail` may then be `None`.
pub fn posterior_mean_moments(
    split: &SplitSample,
    tail: Option<&TailMeanPosterior>,
) -> Result<MeanPosterior> {
    let m = split.m();
    let n = split.n();
    let total = (m + n) as f64;
    if m + n == 0 {
        return Err(Error::EmptySample);
    }
    let bulk_sum: f64 = split.bulk.iter().sum();

    if n == 0 {
        let mean = bulk_sum / total;
        let ss: f64 = split.bulk.iter().map(|z| (z - mean).powi(2)).sum();
        return Ok(MeanPosterior {
            mean,
            variance: ss / (total * (total + 1.0)),
            lambda_mean: 0.0,
            lambda_variance: 0.0,
            method: TailMethod::BulkOnly,
        });
    }

    let tail = tail.ok_or_else(|| {
        Error::InvalidConfig("tail moments required when the tail is nonempty".into())
    })?;
    if tail.variance < 0.0 {
        return Err(Error::InvalidParameter("lambda variance must be nonnegative".into()));
    }
    let nf = n as f64;
    let tail_point = split.u + tail.mean;
    let mean = (bulk_sum + nf * tail_point) / total;
    let spread: f64 = split.bulk.iter().map(|z| (z - mean).powi(2)).sum::<f64>()
        + nf * (tail_point - mean).powi(2);
    let variance = spread / (total * (total + 1.0))
        + lambda_variance_coefficient(m, n) * tail.variance;
    Ok(MeanPosterior {
        mean,
        variance,
        lambda_mean: tail.mean,
        lambda_variance: tail.variance,
        method: tail.method,
    })
}

/// One realization of the Bayesian-bootstrap weight vector: Exp(1) on each
/// bulk observation and Gamma(n,1) on the tail (the limiting posterior weight
/// for the n tail observations pooled together).
#[derive(Debug, Clone)]
pub struct DirichletWeights {
    pub theta: Vec<f64>,
    pub total: f64,
}

pub fn draw_weights<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> DirichletWeights {
    let mut theta = Vec::with_capacity(m + 1);
    for _ in 0..m {
        theta.push(Exp1.sample(rng));
    }
    let tail_weight = if n == 0 {
        0.0
    } else {
        Gamma::new(n as f64, 1.0).expect("n >= 1").sample(rng)
    };
    theta.push(tail_weight);
    let total = theta.iter().sum();
    DirichletWeights { theta, total }
}

/// Brute-force Monte Carlo oracle for the posterior moments of μ.
///
/// Draws `r` weight vectors, pairs each with a λ value by cycling through
/// `lambda_draws` (θ and λ are independent, so any pairing is valid), and
/// returns the empirical mean and variance of the resulting μ realizations.
pub fn mc_mean_oracle(
    split: &SplitSample,
    lambda_draws: &[f64],
    r: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if r < 10_000 {
        return Err(Error::InvalidConfig(format!("need at least 1e4 replications, got {r}")));
    }
    if split.n() == 0 {
        return Err(Error::InvalidConfig("oracle requires a nonempty tail".into()));
    }
    if lambda_draws.is_empty() {
        return Err(Error::InvalidConfig("need at least one lambda draw".into()));
    }
    let m = split.m();
    let n = split.n();
    let mut rng = stream_rng(seed, 0x6f, 0);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..r {
        let w = draw_weights(m, n, &mut rng);
        let lambda = lambda_draws[i % lambda_draws.len()];
        let weighted: f64 = split
            .bulk
            .iter()
            .zip(&w.theta)
            .map(|(z, t)| z * t)
            .sum::<f64>()
            + w.theta[m] * (split.u + lambda);
        let mu = weighted / w.total;
        // Welford
        let delta = mu - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (mu - mean);
    }
    Ok((mean, m2 / (r as f64 - 1.0)))
}

/// One semiparametric frequentist bootstrap replicate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BootstrapReplicate {
    pub m_b: usize,
    pub n_b: usize,
    pub mu_hat: f64,
}

const STREAM_SEMIBOOT: u64 = 0x51;
const MAX_REPLICATE_ATTEMPTS: usize = 10;

/// Semiparametric frequentist bootstrap for the sampling distribution of μ̂.
///
/// Fits the MAP tail once; each replicate redraws the bulk/tail allocation
/// `m_b ~ Binomial(N, m/N)`, resamples the bulk with replacement, simulates
/// `n_b` exceedances from the fitted GPD, refits λ̂ᵇ by MAP under the same
/// prior, and records `μ̂ᵇ = [Σ bulk resample + n_b(u + λ̂ᵇ)]/N`. Replicates
/// run in parallel on index-derived streams.
pub fn semiparametric_bootstrap(
    split: &SplitSample,
    prior: &BetaGammaPrior,
    b: usize,
    seed: u64,
) -> Result<Vec<BootstrapReplicate>> {
    if b < 100 {
        return Err(Error::InvalidConfig(format!("need at least 100 replicates, got {b}")));
    }
    if split.n() < 3 {
        return Err(Error::TooFewExceedances { needed: 3, got: split.n() });
    }
    let fit = map_fit(prior, &split.exceedances)?;
    let n_total = split.total();
    let p_bulk = split.m() as f64 / n_total as f64;
    let binom = Binomial::new(n_total as u64, p_bulk)
        .map_err(|e| Error::InvalidConfig(format!("binomial setup failed: {e}")))?;

    (0..b)
        .into_par_iter()
        .map(|i| {
            for attempt in 0..MAX_REPLICATE_ATTEMPTS {
                let sub = derive_seed(seed, STREAM_SEMIBOOT, (i as u64) << 8 | attempt as u64);
                let mut rng = stream_rng(sub, 0, 0);
                let m_b = binom.sample(&mut rng) as usize;
                let n_b = n_total - m_b;
                let mut bulk_sum = 0.0;
                for _ in 0..m_b {
                    bulk_sum += split.bulk[rng.gen_range(0..split.bulk.len())];
                }
                if n_b < 3 {
                    continue;
                }
                let sim = fit.params.sample(n_b, &mut rng);
                let sample = ExceedanceSample::new(sim)?;
                let Ok(refit) = map_fit(prior, &sample) else { continue };
                let lambda_b = refit.params.mean();
                let mu_hat = (bulk_sum + n_b as f64 * (split.u + lambda_b)) / n_total as f64;
                return Ok(BootstrapReplicate { m_b, n_b, mu_hat });
            }
            Err(Error::ReplicateFailed { replicate: i, attempts: MAX_REPLICATE_ATTEMPTS })
        })
        .collect()
}

/// Difference of independent group means with summed variances.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TreatmentEffect {
    pub gamma: f64,
    pub sd: f64,
}

pub fn treatment_effect(post1: &MeanPosterior, post0: &MeanPosterior) -> TreatmentEffect {
    TreatmentEffect {
        gamma: post1.mean - post0.mean,
        sd: (post1.variance + post0.variance).sqrt(),
    }
}

/// Standard deviation of the bootstrap replicate means.
pub fn replicate_sd(replicates: &[BootstrapReplicate]) -> f64 {
    let mus: Vec<f64> = replicates.iter().map(|r| r.mu_hat).collect();
    sample_sd(&mus)
}
