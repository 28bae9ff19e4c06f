//! Gaussian product-kernel density in two dimensions.
//!
//! Backs the iMH proposal: the parametric-bootstrap cloud is smoothed in
//! (logit ξ, log σ) coordinates with per-dimension Scott's-rule bandwidths
//! `h_j = s_j B^{-1/6}`.

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Kernel-smoothed density over the transformed plane.
#[derive(Debug, Clone)]
pub struct ProposalDensity {
    centers: Vec<[f64; 2]>,
    bandwidths: [f64; 2],
}

impl ProposalDensity {
    /// Fits bandwidths from the centers themselves (Scott's rule per
    /// dimension). Fails if a coordinate has no spread.
    pub fn fit(centers: Vec<[f64; 2]>) -> Result<Self> {
        if centers.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "kernel smoothing needs at least 2 draws, got {}",
                centers.len()
            )));
        }
        let n = centers.len() as f64;
        let mut bandwidths = [0.0; 2];
        for j in 0..2 {
            let mean = centers.iter().map(|c| c[j]).sum::<f64>() / n;
            let var = centers.iter().map(|c| (c[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let sd = var.sqrt();
            if !(sd > 0.0) {
                return Err(Error::ZeroVariance(j));
            }
            bandwidths[j] = sd * n.powf(-1.0 / 6.0);
        }
        Ok(Self { centers, bandwidths })
    }

    pub fn bandwidths(&self) -> [f64; 2] {
        self.bandwidths
    }

    /// Multiplies both bandwidths by `factor` (> 0).
    pub fn scale_bandwidths(&mut self, factor: f64) {
        assert!(factor > 0.0, "bandwidth factor must be positive");
        self.bandwidths[0] *= factor;
        self.bandwidths[1] *= factor;
    }

    pub fn centers(&self) -> &[[f64; 2]] {
        &self.centers
    }

    /// Draws one point from the smoothed density: a uniformly chosen center
    /// plus bandwidth-scaled Gaussian jitter.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        use rand_distr::StandardNormal;
        let c = self.centers[rng.gen_range(0..self.centers.len())];
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        [c[0] + self.bandwidths[0] * z0, c[1] + self.bandwidths[1] * z1]
    }

    /// Log density at a point in the transformed plane.
    pub fn log_density(&self, x: [f64; 2]) -> f64 {
        let [h0, h1] = self.bandwidths;
        let norm = LN_SQRT_2PI * 2.0 + h0.ln() + h1.ln();
        // logsumexp over kernels
        let mut max = f64::NEG_INFINITY;
        let mut terms = Vec::with_capacity(self.centers.len());
        for c in &self.centers {
            let t0 = (x[0] - c[0]) / h0;
            let t1 = (x[1] - c[1]) / h1;
            let t = -0.5 * (t0 * t0 + t1 * t1);
            terms.push(t);
            if t > max {
                max = t;
            }
        }
        let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
        max + sum.ln() - norm - (self.centers.len() as f64).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_input() {
        assert!(ProposalDensity::fit(vec![[0.0, 0.0]]).is_err());
        match ProposalDensity::fit(vec![[0.0, 1.0], [0.0, 2.0]]) {
            Err(Error::ZeroVariance(0)) => {}
            other => panic!("expected ZeroVariance(0), got {other:?}"),
        }
    }

    #[test]
    fn integrates_to_one() {
        // two clusters; 400x400 trapezoid grid over a wide box
        let centers = vec![
            [-1.0, -1.0],
            [-1.1, -0.9],
            [-0.9, -1.1],
            [2.0, 1.5],
            [2.1, 1.4],
            [1.9, 1.6],
        ];
        let kde = ProposalDensity::fit(centers).unwrap();
        let (lo0, hi0, lo1, hi1) = (-6.0, 7.0, -6.0, 7.0);
        let n = 400usize;
        let (d0, d1) = ((hi0 - lo0) / n as f64, (hi1 - lo1) / n as f64);
        let mut total = 0.0;
        for i in 0..=n {
            let w0 = if i == 0 || i == n { 0.5 } else { 1.0 };
            for j in 0..=n {
                let w1 = if j == 0 || j == n { 0.5 } else { 1.0 };
                let x = [lo0 + i as f64 * d0, lo1 + j as f64 * d1];
                total += w0 * w1 * kde.log_density(x).exp();
            }
        }
        total *= d0 * d1;
        assert!((total - 1.0).abs() < 1e-3, "integral {total}");
    }

    #[test]
    fn bimodal_profile_dips_between_clusters() {
        let centers = vec![
            [-2.0, 0.0],
            [-2.05, 0.05],
            [-1.95, -0.05],
            [2.0, 0.0],
            [2.05, 0.05],
            [1.95, -0.05],
        ];
        let kde = ProposalDensity::fit(centers).unwrap();
        let at_a = kde.log_density([-2.0, 0.0]);
        let at_b = kde.log_density([2.0, 0.0]);
        let mid = kde.log_density([0.0, 0.0]);
        assert!(mid < at_a && mid < at_b);
    }

    #[test]
    fn mode_sits_at_a_tight_cloud() {
        let centers = vec![[0.5, 0.5], [0.51, 0.49], [0.49, 0.51], [0.5, 0.51]];
        let kde = ProposalDensity::fit(centers).unwrap();
        let at_center = kde.log_density([0.5, 0.5]);
        for step in 1..20 {
            let off = step as f64 * 0.05;
            assert!(kde.log_density([0.5 + off, 0.5]) <= at_center);
            assert!(kde.log_density([0.5, 0.5 - off]) <= at_center);
        }
    }
}
