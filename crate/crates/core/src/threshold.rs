//! Threshold diagnostics and the σ̂/(ξ̂u) selection rule.
//!
//! Along valid threshold sequences the true tail approaches a GPD with
//! σ = ξu, so the fitted ratio σ̂/(ξ̂u) should pass through one from below as
//! `u` enters the GPD regime. The rule: pick the smallest grid threshold
//! where the ratio is near one and increasing.

use crate::error::{Error, Result};
use crate::gpd::GpdParams;
use crate::mean::split_sample;
use crate::prior::BetaGammaPrior;
use crate::tail::map_fit;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default "near one" tolerance for [`select_threshold`].
pub const DEFAULT_RATIO_TOLERANCE: f64 = 0.15;

/// Quantile levels of the positive data used for the default grid.
pub const DEFAULT_GRID_LEVELS: [f64; 7] = [0.90, 0.925, 0.95, 0.975, 0.99, 0.995, 0.999];

/// Tail fit at one candidate threshold.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdFit {
    pub xi: f64,
    pub sigma: f64,
    /// σ̂ / (ξ̂ u)
    pub ratio: f64,
    /// Johansson asymptotic variance at this fit.
    pub q_n: f64,
    pub boundary: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdDiagnostic {
    pub u: f64,
    /// Exceedance count at this threshold.
    pub n: usize,
    /// Absent when the fit failed or too few exceedances remained.
    pub fit: Option<ThresholdFit>,
}

/// Johansson asymptotic variance `q_n = σ̂(1+ξ̂)(1-ξ̂+2ξ̂²)/(1-ξ̂)⁴`.
/// The implied standard error of λ̂ is `sqrt(q_n / n)`.
pub fn johansson_variance(params: &GpdParams) -> f64 {
    let xi = params.xi();
    params.sigma() * (1.0 + xi) * (1.0 - xi + 2.0 * xi * xi) / (1.0 - xi).powi(4)
}

/// MAP-fits the tail at each grid threshold and reports the ratio
/// diagnostic. Grid points whose fit fails carry `fit: None` rather than
/// aborting the scan. Grid points evaluate in parallel; output order follows
/// the grid.
pub fn threshold_scan(
    values: &[f64],
    grid: &[f64],
    prior: &BetaGammaPrior,
) -> Result<Vec<ThresholdDiagnostic>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) || grid.iter().any(|u| !(*u > 0.0)) {
        return Err(Error::InvalidConfig(
            "threshold grid must be positive and strictly increasing".into(),
        ));
    }
    Ok(grid
        .par_iter()
        .map(|&u| {
            let split = split_sample(values, u);
            let n = split.n();
            let fit = map_fit(prior, split.exceedances()).ok().map(|f| ThresholdFit {
                xi: f.params.xi(),
                sigma: f.params.sigma(),
                ratio: f.params.sigma() / (f.params.xi() * u),
                q_n: johansson_variance(&f.params),
                boundary: f.boundary,
            });
            ThresholdDiagnostic { u, n, fit }
        })
        .collect())
}

/// The rule's choice plus a flag when it had to fall back.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub u: f64,
    /// Index into the diagnostics list.
    pub index: usize,
    /// Set when no grid point was both near one and increasing; the choice
    /// is then the ratio closest to one.
    pub low_confidence: bool,
}

pub fn select_threshold(diagnostics: &[ThresholdDiagnostic]) -> Result<ThresholdChoice> {
    select_threshold_with(diagnostics, DEFAULT_RATIO_TOLERANCE)
}

/// Smallest grid `u` with `|ratio - 1| <= tolerance` and a positive forward
/// difference of the ratio over consecutive valid grid points. Falls back to
/// the `u` minimizing `|ratio - 1|`, flagged low-confidence.
pub fn select_threshold_with(
    diagnostics: &[ThresholdDiagnostic],
    tolerance: f64,
) -> Result<ThresholdChoice> {
    let valid: Vec<(usize, f64, f64)> = diagnostics
        .iter()
        .enumerate()
        .filter_map(|(i, d)| d.fit.map(|f| (i, d.u, f.ratio)))
        .collect();
    if valid.len() < 2 {
        return Err(Error::NoValidDiagnostics);
    }
    for w in valid.windows(2) {
        let (i, u, ratio) = w[0];
        let (_, _, next_ratio) = w[1];
        if (ratio - 1.0).abs() <= tolerance && next_ratio > ratio {
            return Ok(ThresholdChoice { u, index: i, low_confidence: false });
        }
    }
    let &(i, u, _) = valid
        .iter()
        .min_by(|a, b| {
            (a.2 - 1.0)
                .abs()
                .partial_cmp(&(b.2 - 1.0).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("nonempty");
    Ok(ThresholdChoice { u, index: i, low_confidence: true })
}

/// Empirical quantile with linear interpolation (sorted input).
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = level * (sorted.len() as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Default candidate grid: quantiles of the positive data at
/// [`DEFAULT_GRID_LEVELS`], deduplicated to stay strictly increasing.
pub fn default_grid(values: &[f64]) -> Vec<f64> {
    grid_at_levels(values, &DEFAULT_GRID_LEVELS)
}

pub fn grid_at_levels(values: &[f64], levels: &[f64]) -> Vec<f64> {
    let mut positive: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    if positive.is_empty() {
        return Vec::new();
    }
    positive.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut grid = Vec::with_capacity(levels.len());
    for &level in levels {
        let q = quantile_sorted(&positive, level);
        if q > 0.0 && grid.last().map_or(true, |last| q > *last) {
            grid.push(q);
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;

    #[test]
    fn johansson_hand_values() {
        // xi=0.5, sigma=10: 10 * 1.5 * (1 - 0.5 + 0.5) / 0.5^4 = 240
        let q = johansson_variance(&GpdParams::new(0.5, 10.0).unwrap());
        assert!((q - 240.0).abs() < 1e-10, "q = {q}");
        // xi -> 0 limit shape: q -> sigma
        let q0 = johansson_variance(&GpdParams::new(1e-9, 10.0).unwrap());
        assert!((q0 - 10.0).abs() < 1e-6);
    }

    #[test]
    fn scan_marks_absent_fits_past_the_data() {
        let truth = GpdParams::new(0.5, 5.0).unwrap();
        let mut rng = stream_rng(2, 0, 0);
        let data: Vec<f64> = truth.sample(500, &mut rng).iter().map(|v| v + 10.0).collect();
        let max = data.iter().cloned().fold(f64::MIN, f64::max);
        let prior = BetaGammaPrior::reference();
        let diags = threshold_scan(&data, &[10.0, 12.0, max + 1.0], &prior).unwrap();
        assert_eq!(diags.len(), 3);
        assert!(diags[0].fit.is_some());
        assert!(diags[2].fit.is_none());
        assert_eq!(diags[2].n, 0);
    }

    #[test]
    fn scan_validates_grid() {
        let prior = BetaGammaPrior::reference();
        assert!(matches!(threshold_scan(&[1.0], &[], &prior), Err(Error::EmptyGrid)));
        assert!(threshold_scan(&[1.0], &[2.0, 1.0], &prior).is_err());
        assert!(threshold_scan(&[1.0], &[-1.0, 1.0], &prior).is_err());
    }

    #[test]
    fn ratio_near_one_at_true_threshold() {
        // data exactly GPD above u* with sigma* = xi* u*: ratio at u* ~ 1
        let (xi_star, u_star) = (0.5, 8.0);
        let truth = GpdParams::new(xi_star, xi_star * u_star).unwrap();
        let mut rng = stream_rng(9, 0, 0);
        let data: Vec<f64> =
            truth.sample(50_000, &mut rng).iter().map(|v| v + u_star).collect();
        let prior = BetaGammaPrior::reference();
        let diags = threshold_scan(&data, &[u_star], &prior).unwrap();
        let ratio = diags[0].fit.unwrap().ratio;
        assert!((ratio - 1.0).abs() < 0.1, "ratio = {ratio}");
    }

    fn diag(u: f64, ratio: f64) -> ThresholdDiagnostic {
        ThresholdDiagnostic {
            u,
            n: 100,
            fit: Some(ThresholdFit { xi: 0.5, sigma: 1.0, ratio, q_n: 1.0, boundary: false }),
        }
    }

    #[test]
    fn rule_picks_first_near_one_and_increasing() {
        let diags: Vec<_> = [0.5, 0.8, 0.95, 1.05, 1.4]
            .iter()
            .enumerate()
            .map(|(i, &r)| diag((i + 1) as f64, r))
            .collect();
        let choice = select_threshold(&diags).unwrap();
        assert_eq!(choice.index, 2);
        assert!(!choice.low_confidence);
    }

    #[test]
    fn rule_falls_back_on_monotone_decreasing_ratios() {
        let diags: Vec<_> = [1.8, 1.5, 1.3, 1.2]
            .iter()
            .enumerate()
            .map(|(i, &r)| diag((i + 1) as f64, r))
            .collect();
        let choice = select_threshold(&diags).unwrap();
        assert!(choice.low_confidence);
        assert_eq!(choice.index, 3);
    }

    #[test]
    fn rule_needs_two_valid_diagnostics() {
        let one = vec![diag(1.0, 1.0)];
        assert!(matches!(select_threshold(&one), Err(Error::NoValidDiagnostics)));
        let none = vec![ThresholdDiagnostic { u: 1.0, n: 0, fit: None }; 3];
        assert!(select_threshold(&none).is_err());
    }

    #[test]
    fn default_grid_is_increasing_quantiles() {
        let data: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let grid = default_grid(&data);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(grid.len(), DEFAULT_GRID_LEVELS.len());
        assert!((grid[0] - 900.1).abs() < 1.0);
    }

    #[test]
    fn scale_equivariance() {
        let truth = GpdParams::new(0.5, 4.0).unwrap();
        let mut rng = stream_rng(30, 0, 0);
        let data: Vec<f64> = truth.sample(20_000, &mut rng).iter().map(|v| v + 8.0).collect();
        let scaled: Vec<f64> = data.iter().map(|z| z * 3.0).collect();
        let prior = BetaGammaPrior::reference();
        let grid = [8.0, 10.0, 12.0];
        let grid_scaled: Vec<f64> = grid.iter().map(|u| u * 3.0).collect();
        let d1 = threshold_scan(&data, &grid, &prior).unwrap();
        let d2 = threshold_scan(&scaled, &grid_scaled, &prior).unwrap();
        for (a, b) in d1.iter().zip(&d2) {
            let (fa, fb) = (a.fit.unwrap(), b.fit.unwrap());
            assert!((fa.xi - fb.xi).abs() < 5e-3, "{} vs {}", fa.xi, fb.xi);
            assert!((fb.sigma / fa.sigma - 3.0).abs() < 0.05);
            assert!((fa.ratio - fb.ratio).abs() < 0.02);
        }
    }
}
