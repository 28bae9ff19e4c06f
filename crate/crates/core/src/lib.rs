//! Semiparametric inference for the means of heavy-tailed samples.
//!
//! The estimator treats the bulk of a sample (below a threshold `u`)
//! nonparametrically, with Bayesian-bootstrap weights on the observed points,
//! and models exceedances above `u` with a generalized Pareto distribution
//! (GPD) whose tail index and scale get a Beta-Gamma prior. Posterior moments
//! of the tail mean come from either a Laplace approximation or a
//! bootstrap-based independence Metropolis-Hastings sampler, and combine with
//! the bulk into posterior mean and variance for the full distribution mean.
//!
//! Modules:
//! - [`gpd`]: exact GPD density, CDF, quantile, sampling, mean.
//! - [`prior`]: Beta-Gamma priors on (ξ, σ), including moment-matched fits.
//! - [`tail`]: log posterior, MAP fitting, Laplace approximation, parametric
//!   bootstrap, and the bootstrap-iMH posterior sampler.
//! - [`mean`]: threshold split, posterior moments of the mean, the
//!   semiparametric frequentist bootstrap, and A/B treatment effects.
//! - [`threshold`]: σ̂/(ξ̂u) diagnostics and the threshold-selection rule.
//! - [`baselines`]: naive, Winsorized, and subsampling reference estimators.
//! - [`study`]: simulation and subsample-validation harnesses.

pub mod baselines;
pub mod error;
pub mod gpd;
pub mod kde;
pub mod mean;
pub mod optim;
pub mod prior;
pub mod seed;
pub mod study;
pub mod tail;
pub mod threshold;

pub use error::{Error, Result};
pub use gpd::GpdParams;
pub use mean::{MeanPosterior, SplitSample, TailMeanPosterior, TreatmentEffect};
pub use prior::BetaGammaPrior;
pub use tail::{ExceedanceSample, LaplaceFit, PosteriorDraws};
pub use threshold::{ThresholdChoice, ThresholdDiagnostic};
