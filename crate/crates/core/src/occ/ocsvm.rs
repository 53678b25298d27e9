//! ν-parameterized one-class SVM with an RBF kernel.
//!
//! The dual `min 1/2 a'Ka  s.t. 0 <= a_i <= 1, sum a_i = nu * n` is solved
//! by sequential minimal optimization with second-order working-set
//! selection. The decision value `sum_i a_i k(x_i, x) - rho` is the
//! similarity; it is negative for points outside the learned support.

use crate::error::Result;
use crate::occ::{check_training, sq_dist, Gamma, OccConfig};

const KKT_TOL: f64 = 1e-6;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OcSvmModel {
    pub dim: usize,
    pub gamma: f64,
    pub rho: f64,
    pub support: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    /// Number of training rows and SMO iterations (diagnostics).
    pub n_train: usize,
    pub iterations: usize,
}

impl OcSvmModel {
    pub fn decision_function(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.alphas)
            .map(|(s, a)| a * (-self.gamma * sq_dist(s, x)).exp())
            .sum::<f64>()
            - self.rho
    }

    pub fn support_fraction(&self) -> f64 {
        self.support.len() as f64 / self.n_train as f64
    }
}

/// `1 / (2 * median^2)` over all pairwise Euclidean training distances.
pub fn median_heuristic_gamma(x: &[Vec<f64>]) -> f64 {
    let mut d2: Vec<f64> = Vec::with_capacity(x.len() * x.len().saturating_sub(1) / 2);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            d2.push(sq_dist(&x[i], &x[j]));
        }
    }
    if d2.is_empty() {
        return 1.0;
    }
    d2.sort_by(f64::total_cmp);
    let m = d2.len();
    let med_sq = if m % 2 == 1 {
        d2[m / 2]
    } else {
        // median of distances, squared
        let a = d2[m / 2 - 1].sqrt();
        let b = d2[m / 2].sqrt();
        (0.5 * (a + b)).powi(2)
    };
    if med_sq > 0.0 {
        1.0 / (2.0 * med_sq)
    } else {
        1.0
    }
}

pub fn ocsvm_fit(x: &[Vec<f64>], cfg: &OccConfig) -> Result<OcSvmModel> {
    cfg.validate()?;
    let dim = check_training(x, 10)?;
    let n = x.len();
    let gamma = match cfg.rbf_gamma {
        Gamma::Value(g) => g,
        Gamma::Heuristic(_) => median_heuristic_gamma(x),
    };
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (-gamma * sq_dist(&x[i], &x[j])).exp()).collect())
        .collect();

    let total = cfg.contamination_nu * n as f64;
    let full = (total.floor() as usize).min(n);
    let mut alpha = vec![0.0; n];
    for a in alpha.iter_mut().take(full) {
        *a = 1.0;
    }
    if full < n {
        alpha[full] = total - full as f64;
    }
    let mut grad: Vec<f64> = (0..n)
        .map(|t| (0..n).map(|s| q[t][s] * alpha[s]).sum())
        .collect();

    let max_iter = (100 * n).max(10_000_000);
    let mut iterations = 0;
    while iterations < max_iter {
        // i: steepest ascent among variables that may grow
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if alpha[t] < 1.0 && -grad[t] >= g_max {
                g_max = -grad[t];
                i = t;
            }
        }
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            if alpha[t] > 0.0 {
                g_max2 = g_max2.max(grad[t]);
                if i == usize::MAX {
                    continue;
                }
                let diff = g_max + grad[t];
                if diff > 0.0 {
                    let mut quad = q[i][i] + q[t][t] - 2.0 * q[i][t];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -diff * diff / quad;
                    if obj <= best_obj {
                        best_obj = obj;
                        j = t;
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max + g_max2 < KKT_TOL {
            break;
        }
        iterations += 1;

        let mut quad = q[i][i] + q[j][j] - 2.0 * q[i][j];
        if quad <= 0.0 {
            quad = TAU;
        }
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let delta = (grad[i] - grad[j]) / quad;
        let sum = old_i + old_j;
        let mut ai = old_i - delta;
        let mut aj = old_j + delta;
        if sum > 1.0 {
            if ai > 1.0 {
                ai = 1.0;
                aj = sum - 1.0;
            }
            if aj > 1.0 {
                aj = 1.0;
                ai = sum - 1.0;
            }
        } else {
            if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..n {
            grad[t] += q[t][i] * di + q[t][j] * dj;
        }
    }

    // rho from free variables, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        if alpha[t] >= 1.0 {
            lb = lb.max(grad[t]);
        } else if alpha[t] <= 0.0 {
            ub = ub.min(grad[t]);
        } else {
            sum_free += grad[t];
            n_free += 1;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub + lb)
    };

    let (support, alphas): (Vec<Vec<f64>>, Vec<f64>) = x
        .iter()
        .zip(&alpha)
        .filter(|(_, &a)| a > 0.0)
        .map(|(r, &a)| (r.clone(), a))
        .unzip();
    Ok(OcSvmModel {
        dim,
        gamma,
        rho,
        support,
        alphas,
        n_train: n,
        iterations,
    })
}
