//! One-class classifiers. Every model maps a feature vector to a similarity
//! score where higher means closer to the training distribution, so that the
//! threshold calibration downstream does not depend on the model kind.

pub mod brm;
pub mod iforest;
pub mod ocsvm;

pub use brm::{brm_fit, BrmModel};
pub use iforest::{average_path_length, iforest_fit, IForestModel, Node};
pub use ocsvm::{median_heuristic_gamma, ocsvm_fit, OcSvmModel};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccKind {
    Ocsvm,
    Iforest,
    Brm,
}

impl OccKind {
    pub const ALL: [OccKind; 3] = [OccKind::Ocsvm, OccKind::Iforest, OccKind::Brm];

    pub fn as_str(&self) -> &'static str {
        match self {
            OccKind::Ocsvm => "ocsvm",
            OccKind::Iforest => "iforest",
            OccKind::Brm => "brm",
        }
    }
}

impl fmt::Display for OccKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OccKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ocsvm" => Ok(OccKind::Ocsvm),
            "iforest" => Ok(OccKind::Iforest),
            "brm" => Ok(OccKind::Brm),
            other => Err(Error::InvalidParameter(format!("unknown model `{other}`"))),
        }
    }
}

/// RBF kernel width: explicit or from the median pairwise distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Value(f64),
    Heuristic(GammaHeuristic),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaHeuristic {
    Median,
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma::Heuristic(GammaHeuristic::Median)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OccConfig {
    pub ensemble_size: usize,
    pub contamination_nu: f64,
    pub rbf_gamma: Gamma,
    pub iforest_subsample: usize,
    pub brm_sample_frac: f64,
    pub seed: u64,
}

impl Default for OccConfig {
    fn default() -> Self {
        Self {
            ensemble_size: 100,
            contamination_nu: 0.1,
            rbf_gamma: Gamma::default(),
            iforest_subsample: 256,
            brm_sample_frac: 1.0,
            seed: 0,
        }
    }
}

impl OccConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size == 0 {
            return Err(Error::InvalidParameter("ensemble size must be positive".into()));
        }
        if !(self.contamination_nu > 0.0 && self.contamination_nu < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "contamination must lie in (0, 1), got {}",
                self.contamination_nu
            )));
        }
        if let Gamma::Value(g) = self.rbf_gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("gamma must be positive, got {g}")));
            }
        }
        if self.iforest_subsample < 2 {
            return Err(Error::InvalidParameter("subsample must be at least 2".into()));
        }
        if !(self.brm_sample_frac > 0.0 && self.brm_sample_frac.is_finite()) {
            return Err(Error::InvalidParameter("BRM sample fraction must be positive".into()));
        }
        Ok(())
    }
}

/// A fitted one-class model.
#[derive(Debug, Clone, PartialEq)]
pub enum OccModel {
    Ocsvm(OcSvmModel),
    Iforest(IForestModel),
    Brm(BrmModel),
}

impl OccModel {
    pub fn kind(&self) -> OccKind {
        match self {
            OccModel::Ocsvm(_) => OccKind::Ocsvm,
            OccModel::Iforest(_) => OccKind::Iforest,
            OccModel::Brm(_) => OccKind::Brm,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            OccModel::Ocsvm(m) => m.dim,
            OccModel::Iforest(m) => m.dim,
            OccModel::Brm(m) => m.dim(),
        }
    }

    /// Similarity of `x` to the training data (higher = more normal).
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("query vector".into()));
        }
        Ok(match self {
            OccModel::Ocsvm(m) => m.decision_function(x),
            OccModel::Iforest(m) => m.mean_path_length(x),
            OccModel::Brm(m) => m.similarity(x),
        })
    }

    pub fn score_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.score(r)).collect()
    }
}

pub fn fit(kind: OccKind, x: &[Vec<f64>], cfg: &OccConfig) -> Result<OccModel> {
    Ok(match kind {
        OccKind::Ocsvm => OccModel::Ocsvm(ocsvm_fit(x, cfg)?),
        OccKind::Iforest => OccModel::Iforest(iforest_fit(x, cfg)?),
        OccKind::Brm => OccModel::Brm(brm_fit(x, cfg)?),
    })
}

pub(crate) fn check_training(x: &[Vec<f64>], min_rows: usize) -> Result<usize> {
    if x.len() < min_rows {
        return Err(Error::NotEnoughSamples {
            required: min_rows,
            actual: x.len(),
        });
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::InvalidParameter("training rows have no features".into()));
    }
    for r in x {
        if r.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training matrix".into()));
        }
    }
    Ok(d)
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `counter`-th independent stream under `root`.
pub fn stream_seed(root: u64, counter: u64) -> u64 {
    mix64(mix64(root) ^ counter.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Content hash of a feature row, independent of its position in the data.
pub(crate) fn row_hash(row: &[f64]) -> u64 {
    row.iter()
        .fold(0xcbf2_9ce4_8422_2325_u64, |h, v| mix64(h ^ v.to_bits()))
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
