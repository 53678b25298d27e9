//! Bagging random miner: an ensemble of bootstrap samples of the training
//! data, each scoring a query by a Gaussian of the distance to its nearest
//! sampled point relative to the sample's mean pairwise distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::occ::{check_training, sq_dist, stream_seed, OccConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BrmMember {
    /// Distinct training row indices drawn into this bootstrap.
    pub indices: Vec<usize>,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrmModel {
    pub train: Vec<Vec<f64>>,
    pub members: Vec<BrmMember>,
}

impl BrmModel {
    pub fn dim(&self) -> usize {
        self.train[0].len()
    }

    /// Mean over members of `exp(-0.5 (d / sigma)^2)`, with `d` the distance
    /// to the member's nearest sampled row. Lies in [0, 1].
    pub fn similarity(&self, x: &[f64]) -> f64 {
        let total: f64 = self
            .members
            .iter()
            .map(|m| {
                let d2 = m
                    .indices
                    .iter()
                    .map(|&i| sq_dist(&self.train[i], x))
                    .fold(f64::INFINITY, f64::min);
                (-0.5 * d2 / (m.sigma * m.sigma)).exp()
            })
            .sum();
        total / self.members.len() as f64
    }
}

pub fn brm_fit(x: &[Vec<f64>], cfg: &OccConfig) -> Result<BrmModel> {
    cfg.validate()?;
    check_training(x, 4)?;
    let n = x.len();
    let m = (cfg.brm_sample_frac * n as f64).round() as usize;
    if m == 0 {
        return Err(Error::InvalidParameter(
            "BRM sample fraction yields an empty bootstrap".into(),
        ));
    }
    let members = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, t as u64));
            let mut indices: Vec<usize> = (0..m).map(|_| rng.gen_range(0..n)).collect();
            indices.sort_unstable();
            indices.dedup();
            let sigma = member_sigma(x, &indices);
            BrmMember { indices, sigma }
        })
        .collect();
    Ok(BrmModel {
        train: x.to_vec(),
        members,
    })
}

/// Mean pairwise distance among the sampled rows; 1 when they coincide.
fn member_sigma(x: &[Vec<f64>], idx: &[usize]) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for (k, &i) in idx.iter().enumerate() {
        for &j in &idx[k + 1..] {
            sum += sq_dist(&x[i], &x[j]).sqrt();
            pairs += 1;
        }
    }
    if pairs > 0 && sum > 0.0 {
        sum / pairs as f64
    } else {
        1.0
    }
}
