//! Evaluation harnesses on synthetic data.
//!
//! Two designs: a simulation study on exponential-plus-GPD mixtures that
//! sweeps thresholds and scores every method against the analytic population
//! mean, and a subsample-validation protocol that scores estimators trained
//! on small subsamples against the full-sample mean of a big sample.

use crate::baselines::{naive_mean, sample_sd, subsampling_se, winsorized_mean};
use crate::error::{Error, Result};
use crate::mean::{posterior_mean_moments, split_sample, TailMeanPosterior, TailMethod};
use crate::prior::BetaGammaPrior;
use crate::seed::{derive_seed, stream_rng};
use crate::tail::{imh_sample, laplace_lambda, map_fit};
use crate::threshold::{
    johansson_variance, quantile_sorted, select_threshold, threshold_scan, ThresholdDiagnostic,
    ThresholdFit,
};
use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Synthetic DGP: Exponential bulk, with a GPD addend on a random fraction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimConfig {
    pub xi: f64,
    pub n_total: usize,
    pub exp_mean: f64,
    pub gpd_sigma: f64,
    pub tail_fraction: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            xi: 0.5,
            n_total: 100_000,
            exp_mean: 10.0,
            gpd_sigma: 10.0,
            tail_fraction: 0.5,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::InvalidConfig(format!("xi must be in (0,1), got {}", self.xi)));
        }
        if self.n_total < 100 {
            return Err(Error::InvalidConfig(format!(
                "n_total must be at least 100, got {}",
                self.n_total
            )));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tail_fraction must be in (0,1], got {}",
                self.tail_fraction
            )));
        }
        if !(self.exp_mean > 0.0 && self.gpd_sigma > 0.0) {
            return Err(Error::InvalidConfig("exp_mean and gpd_sigma must be positive".into()));
        }
        Ok(())
    }

    /// Analytic mean: `exp_mean + tail_fraction * gpd_sigma / (1 - xi)`.
    pub fn population_mean(&self) -> f64 {
        self.exp_mean + self.tail_fraction * self.gpd_sigma / (1.0 - self.xi)
    }
}

/// Draws `n_total` exponential values; each independently receives a GPD
/// addend with probability `tail_fraction`.
pub fn simulate_dgp<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Vec<f64> {
    let exp = Exp::new(1.0 / config.exp_mean).expect("positive rate");
    let gpd = crate::gpd::GpdParams::new(config.xi, config.gpd_sigma)
        .expect("validated config");
    (0..config.n_total)
        .map(|_| {
            let mut z: f64 = exp.sample(rng);
            if rng.gen::<f64>() < config.tail_fraction {
                z += gpd.sample(1, rng)[0];
            }
            z
        })
        .collect()
}

/// Estimators the harnesses know how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SemiparametricLaplace,
    SemiparametricImh,
    Naive,
    Winsorized,
    Subsampling,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::SemiparametricLaplace => "semiparametric-laplace",
            Method::SemiparametricImh => "semiparametric-imh",
            Method::Naive => "naive",
            Method::Winsorized => "winsorized",
            Method::Subsampling => "subsampling",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semiparametric-laplace" | "laplace" => Ok(Method::SemiparametricLaplace),
            "semiparametric-imh" | "imh" => Ok(Method::SemiparametricImh),
            "naive" => Ok(Method::Naive),
            "winsorized" => Ok(Method::Winsorized),
            "subsampling" => Ok(Method::Subsampling),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

/// One aggregated cell of a study: a method at a threshold (or
/// threshold-free when `level` is absent).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyRow {
    /// Tail index of the simulated DGP; absent for external data.
    pub xi: Option<f64>,
    pub method: String,
    /// Grid quantile level; absent for threshold-free or rule-selected rows.
    pub level: Option<f64>,
    /// Mean threshold across replicates.
    pub threshold: Option<f64>,
    pub rmse: f64,
    /// Mean reported posterior sd / standard error.
    pub mean_sd: f64,
    /// mean_sd / rmse; absent when rmse is 0.
    pub calibration: Option<f64>,
    /// Mean fitted ratio sigma/(xi u) across replicates.
    pub ratio: Option<f64>,
    /// Replicates contributing to the cell.
    pub replicates: usize,
}

/// Agreement between the threshold rule and the realized RMSE curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub xi: f64,
    /// Grid index minimizing the semiparametric RMSE.
    pub best_level_index: usize,
    /// Fraction of replicates whose rule-selected index is within two grid
    /// points of `best_level_index`.
    pub frac_within_two: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
    pub selection: Vec<SelectionSummary>,
}

impl StudyResult {
    /// Fixed column order: xi,method,level,threshold,rmse,mean_sd,calibration,ratio,replicates
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("xi,method,level,threshold,rmse,mean_sd,calibration,ratio,replicates\n");
        for r in &self.rows {
            let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                opt(&r.xi),
                r.method,
                opt(&r.level),
                opt(&r.threshold),
                r.rmse,
                r.mean_sd,
                opt(&r.calibration),
                opt(&r.ratio),
                r.replicates
            );
        }
        out
    }
}

struct Cell {
    errors: Vec<f64>,
    sds: Vec<f64>,
    ratios: Vec<f64>,
    thresholds: Vec<f64>,
}

impl Cell {
    fn new() -> Self {
        Cell { errors: Vec::new(), sds: Vec::new(), ratios: Vec::new(), thresholds: Vec::new() }
    }

    fn push(&mut self, err: f64, sd: f64, ratio: Option<f64>, u: Option<f64>) {
        self.errors.push(err);
        self.sds.push(sd);
        if let Some(r) = ratio {
            self.ratios.push(r);
        }
        if let Some(u) = u {
            self.thresholds.push(u);
        }
    }

    fn row(&self, xi: Option<f64>, method: &str, level: Option<f64>) -> Option<StudyRow> {
        if self.errors.is_empty() {
            return None;
        }
        let n = self.errors.len() as f64;
        let rmse = (self.errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
        let mean_sd = self.sds.iter().sum::<f64>() / n;
        let mean_of = |v: &Vec<f64>| {
            if v.is_empty() {
                None
            } else {
                Some(v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        Some(StudyRow {
            xi,
            method: method.to_string(),
            level,
            threshold: mean_of(&self.thresholds),
            rmse,
            mean_sd,
            calibration: if rmse > 0.0 { Some(mean_sd / rmse) } else { None },
            ratio: mean_of(&self.ratios),
            replicates: self.errors.len(),
        })
    }
}

/// Semiparametric Laplace estimate at one threshold.
fn laplace_estimate(
    values: &[f64],
    u: f64,
    prior: &BetaGammaPrior,
) -> Result<(crate::mean::MeanPosterior, ThresholdFit)> {
    let split = split_sample(values, u);
    let fit = map_fit(prior, split.exceedances())?;
    let lap = laplace_lambda(prior, split.exceedances(), &fit.params)?;
    let tail =
        TailMeanPosterior { mean: lap.lambda_hat, variance: lap.variance, method: TailMethod::Laplace };
    let post = posterior_mean_moments(&split, Some(&tail))?;
    Ok((
        post,
        ThresholdFit {
            xi: fit.params.xi(),
            sigma: fit.params.sigma(),
            ratio: fit.params.sigma() / (fit.params.xi() * u),
            q_n: johansson_variance(&fit.params),
            boundary: fit.boundary,
        },
    ))
}

/// iMH estimate at one threshold.
fn imh_estimate(
    values: &[f64],
    u: f64,
    prior: &BetaGammaPrior,
    draws: usize,
    seed: u64,
) -> Result<crate::mean::MeanPosterior> {
    let split = split_sample(values, u);
    let post = imh_sample(prior, split.exceedances(), draws, seed)?;
    let tail = TailMeanPosterior {
        mean: post.lambda_mean,
        variance: post.lambda_variance,
        method: TailMethod::Imh,
    };
    posterior_mean_moments(&split, Some(&tail))
}

struct RepOutcome {
    /// (error, sd, ratio, u) per grid level for the semiparametric fit.
    per_level: Vec<Option<(f64, f64, f64, f64)>>,
    winsorized: Vec<Option<(f64, f64, f64)>>,
    naive: Option<(f64, f64)>,
    subsampling: Option<(f64, f64)>,
    selected_index: Option<usize>,
    selected: Option<(f64, f64, f64)>,
    imh_selected: Option<(f64, f64, f64)>,
}

const STREAM_SIM: u64 = 0xa1;
const STREAM_VALIDATE: u64 = 0xa2;
const IMH_STUDY_DRAWS: usize = 1_000;

/// Simulation study: for each configuration and replicate, simulate,
/// evaluate every method over the threshold grid, and score errors against
/// the analytic population mean. Replicates run in parallel on derived
/// streams; aggregation is order-insensitive.
///
/// The iMH and subsampling methods evaluate once per replicate at the
/// rule-selected threshold; threshold-dependent methods (semiparametric
/// Laplace, Winsorized) evaluate at every grid level.
pub fn run_simulation_study(
    configs: &[SimConfig],
    levels: &[f64],
    replicates: usize,
    methods: &[Method],
    prior: &BetaGammaPrior,
    seed: u64,
) -> Result<StudyResult> {
    if replicates < 10 {
        return Err(Error::InvalidConfig(format!(
            "need at least 10 replicates, got {replicates}"
        )));
    }
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("levels must be nonempty and increasing".into()));
    }
    for config in configs {
        config.validate()?;
    }

    let mut rows = Vec::new();
    let mut selection = Vec::new();
    for (ci, config) in configs.iter().enumerate() {
        let truth = config.population_mean();
        let base = derive_seed(seed ^ config.seed, STREAM_SIM, ci as u64);

        let outcomes: Vec<RepOutcome> = (0..replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream_rng(base, 0, rep as u64);
                let data = simulate_dgp(config, &mut rng);
                let mut sorted: Vec<f64> = data.iter().copied().filter(|v| *v > 0.0).collect();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let grid: Vec<f64> =
                    levels.iter().map(|&l| quantile_sorted(&sorted, l)).collect();

                let mut per_level = Vec::with_capacity(grid.len());
                let mut winsorized = Vec::with_capacity(grid.len());
                let mut diags = Vec::with_capacity(grid.len());
                for &u in &grid {
                    match laplace_estimate(&data, u, prior) {
                        Ok((post, fit)) => {
                            per_level.push(Some((post.mean - truth, post.sd(), fit.ratio, u)));
                            diags.push(ThresholdDiagnostic {
                                u,
                                n: split_sample(&data, u).n(),
                                fit: Some(fit),
                            });
                        }
                        Err(_) => {
                            per_level.push(None);
                            diags.push(ThresholdDiagnostic { u, n: 0, fit: None });
                        }
                    }
                    winsorized.push(
                        winsorized_mean(&data, u)
                            .ok()
                            .map(|e| (e.estimate - truth, e.se, u)),
                    );
                }

                let naive = naive_mean(&data).ok().map(|e| (e.estimate - truth, e.se));
                let choice = select_threshold(&diags).ok();
                let selected_index = choice.map(|c| c.index);
                let selected = choice
                    .and_then(|c| per_level[c.index].map(|(e, sd, _, _)| (e, sd, c.u)));
                let subsampling = choice.and_then(|c| {
                    subsampling_se(&data, 200, Some(c.u), derive_seed(base, 1, rep as u64))
                        .ok()
                        .map(|e| (e.estimate - truth, e.se))
                });
                let imh_selected = if methods.contains(&Method::SemiparametricImh) {
                    choice.and_then(|c| {
                        imh_estimate(&data, c.u, prior, IMH_STUDY_DRAWS, derive_seed(base, 2, rep as u64))
                            .ok()
                            .map(|p| (p.mean - truth, p.sd(), c.u))
                    })
                } else {
                    None
                };

                RepOutcome {
                    per_level,
                    winsorized,
                    naive,
                    subsampling,
                    selected_index,
                    selected,
                    imh_selected,
                }
            })
            .collect();

        // aggregate
        let xi = Some(config.xi);
        if methods.contains(&Method::SemiparametricLaplace) {
            let mut level_rmse: Vec<Option<f64>> = vec![None; levels.len()];
            for (li, &level) in levels.iter().enumerate() {
                let mut cell = Cell::new();
                for o in &outcomes {
                    if let Some((e, sd, ratio, u)) = o.per_level[li] {
                        cell.push(e, sd, Some(ratio), Some(u));
                    }
                }
                if let Some(row) = cell.row(xi, Method::SemiparametricLaplace.name(), Some(level)) {
                    if row.replicates * 2 >= replicates {
                        level_rmse[li] = Some(row.rmse);
                    }
                    rows.push(row);
                }
            }
            let mut auto = Cell::new();
            for o in &outcomes {
                if let Some((e, sd, u)) = o.selected {
                    auto.push(e, sd, None, Some(u));
                }
            }
            if let Some(row) = auto.row(xi, "semiparametric-laplace@selected", None) {
                rows.push(row);
            }

            // how often the rule lands near the realized RMSE minimum
            if let Some((best_idx, _)) = level_rmse
                .iter()
                .enumerate()
                .filter_map(|(i, r)| r.map(|v| (i, v)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            {
                let with_choice: Vec<usize> =
                    outcomes.iter().filter_map(|o| o.selected_index).collect();
                if !with_choice.is_empty() {
                    let hits = with_choice
                        .iter()
                        .filter(|&&s| s.abs_diff(best_idx) <= 2)
                        .count();
                    selection.push(SelectionSummary {
                        xi: config.xi,
                        best_level_index: best_idx,
                        frac_within_two: hits as f64 / with_choice.len() as f64,
                        replicates: with_choice.len(),
                    });
                }
            }
        }
        if methods.contains(&Method::SemiparametricImh) {
            let mut cell = Cell::new();
            for o in &outcomes {
                if let Some((e, sd, u)) = o.imh_selected {
                    cell.push(e, sd, None, Some(u));
                }
            }
            if let Some(row) = cell.row(xi, "semiparametric-imh@selected", None) {
                rows.push(row);
            }
        }
        if methods.contains(&Method::Winsorized) {
            for (li, &level) in levels.iter().enumerate() {
                let mut cell = Cell::new();
                for o in &outcomes {
                    if let Some((e, se, u)) = o.winsorized[li] {
                        cell.push(e, se, None, Some(u));
                    }
                }
                if let Some(row) = cell.row(xi, Method::Winsorized.name(), Some(level)) {
                    rows.push(row);
                }
            }
        }
        if methods.contains(&Method::Naive) {
            let mut cell = Cell::new();
            for o in &outcomes {
                if let Some((e, se)) = o.naive {
                    cell.push(e, se, None, None);
                }
            }
            if let Some(row) = cell.row(xi, Method::Naive.name(), None) {
                rows.push(row);
            }
        }
        if methods.contains(&Method::Subsampling) {
            let mut cell = Cell::new();
            for o in &outcomes {
                if let Some((e, se)) = o.subsampling {
                    cell.push(e, se, None, None);
                }
            }
            if let Some(row) = cell.row(xi, Method::Subsampling.name(), None) {
                rows.push(row);
            }
        }
    }
    Ok(StudyResult { rows, selection })
}

/// Settings for [`run_subsample_validation`].
#[derive(Debug, Clone, Copy)]
pub struct ValidationConfig {
    pub subsample_size: usize,
    pub replicates: usize,
    /// Fixed threshold; `None` selects by rule on the big sample.
    pub threshold: Option<f64>,
    pub seed: u64,
    /// iMH draws when that method is requested.
    pub imh_draws: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { subsample_size: 50_000, replicates: 100, threshold: None, seed: 0, imh_draws: 1_000 }
    }
}

/// Subsample-validation protocol: score estimators trained on small
/// without-replacement subsamples against the full-sample mean.
pub fn run_subsample_validation(
    big_sample: &[f64],
    methods: &[Method],
    prior: &BetaGammaPrior,
    config: &ValidationConfig,
) -> Result<StudyResult> {
    if config.replicates == 0 {
        return Err(Error::InvalidConfig("need at least 1 replicate".into()));
    }
    if config.subsample_size == 0 || config.subsample_size > big_sample.len() {
        return Err(Error::InvalidConfig(format!(
            "subsample size {} out of range for N = {}",
            config.subsample_size,
            big_sample.len()
        )));
    }
    let full_mean = naive_mean(big_sample)?.estimate;
    let u = match config.threshold {
        Some(u) => u,
        None => {
            let grid = crate::threshold::default_grid(big_sample);
            let diags = threshold_scan(big_sample, &grid, prior)?;
            select_threshold(&diags)?.u
        }
    };

    struct ValOutcome {
        laplace: Option<(f64, f64)>,
        imh: Option<(f64, f64)>,
        naive: Option<(f64, f64)>,
        winsorized: Option<(f64, f64)>,
        subsampling: Option<(f64, f64)>,
    }

    let want_imh = methods.contains(&Method::SemiparametricImh);
    let want_sub = methods.contains(&Method::Subsampling);
    let outcomes: Vec<ValOutcome> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(config.seed, STREAM_VALIDATE, rep as u64);
            let idx = index_sample(&mut rng, big_sample.len(), config.subsample_size);
            let sub: Vec<f64> = idx.iter().map(|i| big_sample[i]).collect();
            ValOutcome {
                laplace: laplace_estimate(&sub, u, prior)
                    .ok()
                    .map(|(p, _)| (p.mean - full_mean, p.sd())),
                imh: if want_imh {
                    imh_estimate(&sub, u, prior, config.imh_draws,
                        derive_seed(config.seed, STREAM_VALIDATE + 1, rep as u64))
                        .ok()
                        .map(|p| (p.mean - full_mean, p.sd()))
                } else {
                    None
                },
                naive: naive_mean(&sub).ok().map(|e| (e.estimate - full_mean, e.se)),
                winsorized: winsorized_mean(&sub, u)
                    .ok()
                    .map(|e| (e.estimate - full_mean, e.se)),
                subsampling: if want_sub {
                    subsampling_se(&sub, 200, Some(u),
                        derive_seed(config.seed, STREAM_VALIDATE + 2, rep as u64))
                        .ok()
                        .map(|e| (e.estimate - full_mean, e.se))
                } else {
                    None
                },
            }
        })
        .collect();

    let mut rows = Vec::new();
    let mut collect = |name: &str, pick: &dyn Fn(&ValOutcome) -> Option<(f64, f64)>| {
        let mut cell = Cell::new();
        for o in &outcomes {
            if let Some((e, sd)) = pick(o) {
                cell.push(e, sd, None, Some(u));
            }
        }
        if let Some(row) = cell.row(None, name, None) {
            rows.push(row);
        }
    };
    if methods.contains(&Method::SemiparametricLaplace) {
        collect(Method::SemiparametricLaplace.name(), &|o| o.laplace);
    }
    if want_imh {
        collect(Method::SemiparametricImh.name(), &|o| o.imh);
    }
    if methods.contains(&Method::Naive) {
        collect(Method::Naive.name(), &|o| o.naive);
    }
    if methods.contains(&Method::Winsorized) {
        collect(Method::Winsorized.name(), &|o| o.winsorized);
    }
    if want_sub {
        collect(Method::Subsampling.name(), &|o| o.subsampling);
    }
    Ok(StudyResult { rows, selection: Vec::new() })
}

/// Informative prior on the tail index from a large background sample:
/// MAP-fits ξ̂ at `threshold` (rule-selected when `None`) and returns
/// `Beta(k ξ̂, k (1-ξ̂))` at the given concentration `k = a + b`.
pub fn background_prior(
    big_sample: &[f64],
    threshold: Option<f64>,
    concentration: f64,
) -> Result<BetaGammaPrior> {
    let reference = BetaGammaPrior::reference();
    let xi_hat = match threshold {
        Some(u) => map_fit(&reference, split_sample(big_sample, u).exceedances())?
            .params
            .xi(),
        None => {
            let grid = crate::threshold::default_grid(big_sample);
            let diags = threshold_scan(big_sample, &grid, &reference)?;
            let choice = select_threshold(&diags)?;
            diags[choice.index].fit.ok_or(Error::NoValidDiagnostics)?.xi
        }
    };
    BetaGammaPrior::beta(concentration * xi_hat, concentration * (1.0 - xi_hat))
}

/// Helper shared by tests and the CLI: standard deviation of replicate errors.
pub fn error_sd(errors: &[f64]) -> f64 {
    sample_sd(errors)
}
