//! Nelder-Mead simplex minimization.
//!
//! Used for MAP fitting in transformed (logit ξ, log σ) coordinates, where the
//! objective is smooth and unconstrained. Standard reflection/expansion/
//! contraction/shrink coefficients; converges on simplex diameter or on the
//! spread of function values.

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct NelderMead {
    pub initial_step: f64,
    pub diameter_tol: f64,
    pub f_tol: f64,
    pub max_iterations: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            initial_step: 0.5,
            diameter_tol: 1e-10,
            f_tol: 1e-13,
            max_iterations: 4000,
        }
    }
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, x0: &[f64], mut f: F) -> NelderMeadResult {
        let d = x0.len();
        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
        simplex.push(x0.to_vec());
        for i in 0..d {
            let mut v = x0.to_vec();
            v[i] += self.initial_step;
            simplex.push(v);
        }
        let mut fv: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iterations {
            iterations += 1;

            // order best..worst
            let mut idx: Vec<usize> = (0..=d).collect();
            idx.sort_by(|&i, &j| fv[i].partial_cmp(&fv[j]).unwrap_or(std::cmp::Ordering::Equal));
            let ordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
            let ordered_f: Vec<f64> = idx.iter().map(|&i| fv[i]).collect();
            simplex = ordered;
            fv = ordered_f;

            if self.diameter(&simplex) < self.diameter_tol || (fv[d] - fv[0]).abs() < self.f_tol {
                converged = true;
                break;
            }

            // centroid of all but the worst
            let mut centroid = vec![0.0; d];
            for v in simplex.iter().take(d) {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / d as f64;
                }
            }

            let worst = simplex[d].clone();
            let reflected: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + alpha * (c - w))
                .collect();
            let fr = f(&reflected);

            if fr < fv[0] {
                let expanded: Vec<f64> = centroid
                    .iter()
                    .zip(&reflected)
                    .map(|(c, r)| c + gamma * (r - c))
                    .collect();
                let fe = f(&expanded);
                if fe < fr {
                    simplex[d] = expanded;
                    fv[d] = fe;
                } else {
                    simplex[d] = reflected;
                    fv[d] = fr;
                }
            } else if fr < fv[d - 1] {
                simplex[d] = reflected;
                fv[d] = fr;
            } else {
                let (base, fb) = if fr < fv[d] { (&reflected, fr) } else { (&worst, fv[d]) };
                let contracted: Vec<f64> =
                    centroid.iter().zip(base).map(|(c, x)| c + rho * (x - c)).collect();
                let fc = f(&contracted);
                if fc < fb {
                    simplex[d] = contracted;
                    fv[d] = fc;
                } else {
                    // shrink toward the best vertex
                    let best = simplex[0].clone();
                    for i in 1..=d {
                        for (x, b) in simplex[i].iter_mut().zip(&best) {
                            *x = b + sigma * (*x - b);
                        }
                        fv[i] = f(&simplex[i]);
                    }
                }
            }
        }

        let mut best = 0;
        for i in 1..=d {
            if fv[i] < fv[best] {
                best = i;
            }
        }
        NelderMeadResult {
            x: simplex[best].clone(),
            f: fv[best],
            iterations,
            converged,
        }
    }

    fn diameter(&self, simplex: &[Vec<f64>]) -> f64 {
        let mut max = 0.0f64;
        for i in 0..simplex.len() {
            for j in (i + 1)..simplex.len() {
                let d2: f64 = simplex[i]
                    .iter()
                    .zip(&simplex[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                max = max.max(d2.sqrt());
            }
        }
        max
    }
}
