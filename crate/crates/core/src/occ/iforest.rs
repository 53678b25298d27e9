//! Isolation forest. The score is the mean isolation path length, so that
//! larger values mean harder to isolate, i.e. more normal.
//!
//! Each tree draws its subsample as the rows with the smallest keyed hash of
//! their values, which makes the fit independent of row order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::occ::{check_training, mix64, row_hash, stream_seed, OccConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IForestModel {
    pub dim: usize,
    pub subsample: usize,
    /// Each tree is a flat node list rooted at index 0.
    pub trees: Vec<Vec<Node>>,
}

/// Expected path length of an unsuccessful search in a binary search tree
/// over `m` points: `2 H(m-1) - 2 (m-1) / m`.
pub fn average_path_length(m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let h: f64 = (1..m).map(|i| 1.0 / i as f64).sum();
    2.0 * h - 2.0 * (m - 1) as f64 / m as f64
}

impl IForestModel {
    pub fn depth_limit(&self) -> usize {
        (self.subsample as f64).log2().ceil() as usize
    }

    /// Upper bound of the similarity score.
    pub fn max_score(&self) -> f64 {
        self.depth_limit() as f64 + average_path_length(self.subsample)
    }

    pub fn path_length(&self, tree: usize, x: &[f64]) -> f64 {
        let nodes = &self.trees[tree];
        let mut at = 0;
        let mut depth = 0.0;
        loop {
            match nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[feature] < threshold { left } else { right };
                    depth += 1.0;
                }
                Node::Leaf { size } => return depth + average_path_length(size),
            }
        }
    }

    pub fn mean_path_length(&self, x: &[f64]) -> f64 {
        let total: f64 = (0..self.trees.len()).map(|t| self.path_length(t, x)).sum();
        total / self.trees.len() as f64
    }

    /// Conventional anomaly score `2^(-E[h] / c(psi))` in (0, 1].
    pub fn anomaly_score(&self, x: &[f64]) -> f64 {
        2f64.powf(-self.mean_path_length(x) / average_path_length(self.subsample))
    }
}

pub fn iforest_fit(x: &[Vec<f64>], cfg: &OccConfig) -> Result<IForestModel> {
    cfg.validate()?;
    let dim = check_training(x, 8)?;
    let psi = cfg.iforest_subsample.min(x.len());
    let limit = (psi as f64).log2().ceil() as usize;
    let hashes: Vec<u64> = x.iter().map(|r| row_hash(r)).collect();

    let trees = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|t| {
            let seed = stream_seed(cfg.seed, t as u64);
            let mut keyed: Vec<(u64, &Vec<f64>)> = hashes
                .iter()
                .zip(x)
                .map(|(&h, r)| (mix64(h ^ seed), r))
                .collect();
            keyed.sort_by(|a, b| {
                a.0.cmp(&b.0).then_with(|| {
                    a.1.iter()
                        .zip(b.1.iter())
                        .map(|(u, v)| u.total_cmp(v))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
            });
            let sample: Vec<&[f64]> = keyed[..psi].iter().map(|(_, r)| r.as_slice()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed));
            let mut nodes = Vec::new();
            grow(&sample, 0, limit, dim, &mut rng, &mut nodes);
            nodes
        })
        .collect();
    Ok(IForestModel {
        dim,
        subsample: psi,
        trees,
    })
}

fn grow(
    rows: &[&[f64]],
    depth: usize,
    limit: usize,
    dim: usize,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    nodes.push(Node::Leaf { size: rows.len() });
    if depth >= limit || rows.len() <= 1 {
        return id;
    }
    let ranges: Vec<(usize, f64, f64)> = (0..dim)
        .filter_map(|f| {
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[f]), hi.max(r[f]))
            });
            (hi > lo).then_some((f, lo, hi))
        })
        .collect();
    if ranges.is_empty() {
        return id;
    }
    let (feature, lo, hi) = ranges[rng.gen_range(0..ranges.len())];
    let threshold = lo + rng.gen::<f64>() * (hi - lo);
    let (l, r): (Vec<&[f64]>, Vec<&[f64]>) = rows.iter().partition(|row| row[feature] < threshold);
    let left = grow(&l, depth + 1, limit, dim, rng, nodes);
    let right = grow(&r, depth + 1, limit, dim, rng, nodes);
    nodes[id] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    id
}
