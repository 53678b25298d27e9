//! Robust scaling and PCA. Both are fit on the training split only.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Quantile by linear interpolation between order statistics of `sorted`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-feature median and the distances from it to the lower and upper
/// quartile, so that Q1, the median and Q3 map to -1, 0 and +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustScalerModel {
    pub medians: Vec<f64>,
    /// `median - Q1` per feature.
    pub lower_spreads: Vec<f64>,
    /// `Q3 - median` per feature.
    pub upper_spreads: Vec<f64>,
}

pub fn fit_robust_scaler(x: &FeatureMatrix) -> Result<RobustScalerModel> {
    if x.n_rows() < 4 {
        return Err(Error::NotEnoughSamples {
            required: 4,
            actual: x.n_rows(),
        });
    }
    let mut m = RobustScalerModel {
        medians: Vec::with_capacity(x.n_cols()),
        lower_spreads: Vec::with_capacity(x.n_cols()),
        upper_spreads: Vec::with_capacity(x.n_cols()),
    };
    for j in 0..x.n_cols() {
        let mut col = x.column(j);
        col.sort_by(f64::total_cmp);
        let med = quantile_sorted(&col, 0.5);
        m.medians.push(med);
        m.lower_spreads.push(med - quantile_sorted(&col, 0.25));
        m.upper_spreads.push(quantile_sorted(&col, 0.75) - med);
    }
    Ok(m)
}

impl RobustScalerModel {
    pub fn dim(&self) -> usize {
        self.medians.len()
    }

    /// Half interquartile range per feature.
    pub fn half_iqrs(&self) -> Vec<f64> {
        self.lower_spreads
            .iter()
            .zip(&self.upper_spreads)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    /// `(x - median)` divided by the spread on its side of the median. A side
    /// with zero spread falls back to the half interquartile range; a feature
    /// with zero interquartile range maps to 0.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok((0..x.len())
            .map(|j| {
                let d = x[j] - self.medians[j];
                let (lo, hi) = (self.lower_spreads[j], self.upper_spreads[j]);
                let side = if d < 0.0 { lo } else { hi };
                let half = 0.5 * (lo + hi);
                if side > 0.0 {
                    d / side
                } else if half > 0.0 {
                    d / half
                } else {
                    0.0
                }
            })
            .collect())
    }
}

/// Principal axes kept to reach a target share of the training variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` orthonormal rows of length `d`.
    pub components: Vec<Vec<f64>>,
    /// Variance share of each kept component.
    pub explained_variance_fracs: Vec<f64>,
}

pub fn fit_pca(x: &FeatureMatrix, variance_target: f64) -> Result<PcaModel> {
    let (n, d) = (x.n_rows(), x.n_cols());
    if n < 2 {
        return Err(Error::NotEnoughSamples {
            required: 2,
            actual: n,
        });
    }
    if !(0.0..=1.0).contains(&variance_target) {
        return Err(Error::InvalidParameter(format!(
            "variance target must lie in [0, 1], got {variance_target}"
        )));
    }
    let mean: Vec<f64> = (0..d)
        .map(|j| x.rows().iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, d, |i, j| x.row(i)[j] - mean[j]);
    let scale = centered.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let svd = centered.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::InvalidParameter("SVD did not converge".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let variances: Vec<f64> = order
        .iter()
        .map(|&i| svd.singular_values[i].powi(2))
        .collect();
    let total: f64 = variances.iter().sum();
    if total <= (f64::EPSILON * scale).powi(2) * (n * d) as f64 || total == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut k = 0;
    let mut cum = 0.0;
    while k < variances.len() {
        cum += variances[k] / total;
        k += 1;
        if cum >= variance_target - 1e-12 {
            break;
        }
    }
    let components = order[..k]
        .iter()
        .map(|&i| {
            let mut row: Vec<f64> = v_t.row(i).iter().cloned().collect();
            let dominant = row
                .iter()
                .cloned()
                .fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
            if dominant < 0.0 {
                for v in &mut row {
                    *v = -*v;
                }
            }
            row
        })
        .collect();
    Ok(PcaModel {
        mean,
        components,
        explained_variance_fracs: variances[..k].iter().map(|v| v / total).collect(),
    })
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    /// `components * (x - mean)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(w, (v, m))| w * (v - m))
                    .sum()
            })
            .collect())
    }

    /// Maps projected coordinates back into feature space.
    pub fn reconstruct(&self, y: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &w) in self.components.iter().zip(y) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += w * v;
            }
        }
        out
    }
}

/// Transformation bound to a feature set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preprocessor {
    Identity { dim: usize },
    RobustScaler(RobustScalerModel),
    Pca(PcaModel),
}

impl Preprocessor {
    pub fn input_dim(&self) -> usize {
        match self {
            Preprocessor::Identity { dim } => *dim,
            Preprocessor::RobustScaler(m) => m.dim(),
            Preprocessor::Pca(m) => m.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Preprocessor::Identity { dim } => *dim,
            Preprocessor::RobustScaler(m) => m.dim(),
            Preprocessor::Pca(m) => m.output_dim(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Preprocessor::Identity { dim } => {
                if x.len() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        actual: x.len(),
                    });
                }
                Ok(x.to_vec())
            }
            Preprocessor::RobustScaler(m) => m.apply(x),
            Preprocessor::Pca(m) => m.apply(x),
        }
    }

    pub fn apply_rows(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        x.rows().iter().map(|r| self.apply(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn column(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_rows(values.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn scaler_on_odd_column() {
        let m = fit_robust_scaler(&column(&[1.0, 3.0, 5.0, 7.0, 9.0])).unwrap();
        assert_eq!(m.medians, vec![5.0]);
        assert_eq!(m.half_iqrs(), vec![2.0]);
        assert_eq!(m.apply(&[3.0]).unwrap(), vec![-1.0]);
        assert_eq!(m.apply(&[7.0]).unwrap(), vec![1.0]);
        assert_eq!(m.apply(&[5.0]).unwrap(), vec![0.0]);
        assert_eq!(m.apply(&[11.0]).unwrap(), vec![3.0]);
        assert!(m.apply(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn scaler_on_skewed_column() {
        // Q1 = 1, median = 2, Q3 = 6
        let m = fit_robust_scaler(&column(&[0.0, 1.0, 2.0, 6.0, 20.0])).unwrap();
        assert_eq!(m.apply(&[1.0]).unwrap(), vec![-1.0]);
        assert_eq!(m.apply(&[6.0]).unwrap(), vec![1.0]);
        assert_eq!(m.apply(&[0.0]).unwrap(), vec![-2.0]);
        assert_eq!(m.apply(&[10.0]).unwrap(), vec![2.0]);
        // Q1 = median = 1, Q3 = 3: the lower side uses the half IQR
        let m = fit_robust_scaler(&column(&[1.0, 1.0, 1.0, 3.0, 5.0])).unwrap();
        assert_eq!(m.apply(&[0.0]).unwrap(), vec![-1.0]);
        assert_eq!(m.apply(&[3.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn scaler_degenerate_and_duplicate_columns() {
        let x = FeatureMatrix::from_rows(vec![
            vec![2.0, 1.0, 1.0],
            vec![2.0, 4.0, 4.0],
            vec![2.0, 2.0, 2.0],
            vec![2.0, 8.0, 8.0],
        ])
        .unwrap();
        let m = fit_robust_scaler(&x).unwrap();
        assert_eq!(m.half_iqrs()[0], 0.0);
        assert_eq!(m.apply(&[123.0, 0.0, 0.0]).unwrap()[0], 0.0);
        assert_eq!(m.medians[1], m.medians[2]);
        assert_eq!(m.half_iqrs()[1], m.half_iqrs()[2]);
        assert!(fit_robust_scaler(&column(&[1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn pca_on_line() {
        let x = FeatureMatrix::from_rows(
            (0..10).map(|i| vec![i as f64, 2.0 * i as f64 + 1.0]).collect(),
        )
        .unwrap();
        let m = fit_pca(&x, 0.9).unwrap();
        assert_eq!(m.output_dim(), 1);
        assert!((m.explained_variance_fracs[0] - 1.0).abs() < 1e-12);
        let y = m.apply(&m.mean).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn pca_isotropic_keeps_all() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<Vec<f64>> = (0..1000)
            .map(|_| (0..3).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let x = FeatureMatrix::from_rows(rows).unwrap();
        assert_eq!(fit_pca(&x, 0.9).unwrap().output_dim(), 3);
        assert_eq!(fit_pca(&x, 0.0).unwrap().output_dim(), 1);
    }

    #[test]
    fn pca_identity_when_full_rank() {
        let x = FeatureMatrix::from_rows(vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 0.5],
            vec![0.0, -0.5],
        ])
        .unwrap();
        let m = fit_pca(&x, 1.0).unwrap();
        assert_eq!(m.output_dim(), 2);
        let p = [0.3, -0.2];
        let back = m.reconstruct(&m.apply(&p).unwrap());
        assert!((back[0] - p[0]).abs() < 1e-12 && (back[1] - p[1]).abs() < 1e-12);
    }

    #[test]
    fn pca_rejects_constant_data() {
        let x = FeatureMatrix::from_rows(vec![vec![1.0, 2.0]; 5]).unwrap();
        assert!(matches!(fit_pca(&x, 0.9), Err(Error::ZeroVariance)));
    }

    #[test]
    fn pca_sign_convention() {
        let x = FeatureMatrix::from_rows(
            (0..10).map(|i| vec![-(i as f64), 0.1 * i as f64]).collect(),
        )
        .unwrap();
        let m = fit_pca(&x, 0.9).unwrap();
        let c = &m.components[0];
        let dominant = c.iter().cloned().fold(0.0_f64, |a, v| if v.abs() > a.abs() { v } else { a });
        assert!(dominant > 0.0);
    }
}
