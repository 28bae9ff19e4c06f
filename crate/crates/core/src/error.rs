//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A domain-typed value failed its constructor checks.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A run configuration (counts, grids, flags) is unusable.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Too few exceedances for a proper posterior under the given prior.
    #[error("need at least {needed} exceedances, got {got}")]
    TooFewExceedances { needed: usize, got: usize },

    #[error("empty sample")]
    EmptySample,

    /// The log posterior is not concave in λ at the mode, even after the
    /// finite-difference fallback.
    #[error("posterior curvature in lambda is not negative at the mode")]
    DegenerateCurvature,

    /// Kernel smoothing needs spread in every coordinate.
    #[error("proposal draws have zero variance in coordinate {0}")]
    ZeroVariance(usize),

    /// Beta moment matching is infeasible: s^2 >= m(1-m).
    #[error("beta moment matching infeasible: variance {variance} >= bound {bound}")]
    DegenerateMoments { variance: f64, bound: f64 },

    #[error("threshold grid is empty")]
    EmptyGrid,

    #[error("no threshold in the grid produced a valid tail fit")]
    NoValidDiagnostics,

    /// A bootstrap replicate kept failing to refit after re-seeding.
    #[error("bootstrap replicate {replicate} failed after {attempts} attempts")]
    ReplicateFailed { replicate: usize, attempts: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
