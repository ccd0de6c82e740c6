//! Distribution of the minimizer's location under the posterior, estimated
//! from conditional sample paths, and its Shannon entropy (in nats).

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::gp::{linalg::psd_sqrt, GPPosterior};
use crate::rng::seeded;
use crate::{Error, Result};

/// `S` sample paths of the posterior restricted to the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    /// Path-major storage: path `s` occupies `values[s*m .. (s+1)*m]`.
    values: Vec<f64>,
    m: usize,
    seed: u64,
}

impl PathSet {
    pub fn from_rows(rows: &[Vec<f64>], seed: u64) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidArgument("path set needs ≥ 1 row of equal, nonzero length".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("path values must be finite".into()));
        }
        Ok(Self { values: rows.concat(), m, seed })
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn grid_len(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self, s: usize) -> &[f64] {
        &self.values[s * self.m..(s + 1) * self.m]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.m)
    }
}

/// Draws `count` i.i.d. paths from `N(mean, covariance)`.
pub fn sample_paths(post: &GPPosterior, count: usize, seed: u64) -> Result<PathSet> {
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one sample path".into()));
    }
    let m = post.len();
    let factor = psd_sqrt(post.covariance())?;
    let mut rng = seeded(seed);
    let z: Vec<f64> = (0..count * m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let z = DMatrix::from_vec(m, count, z);
    let mut paths = factor * z;
    for mut column in paths.column_iter_mut() {
        column += post.mean();
    }
    Ok(PathSet { values: paths.as_slice().to_vec(), m, seed })
}

/// Index of the smallest entry, ties to the smallest index.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// `ℙ(x* = x)` for every grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerDistribution {
    pub probabilities: Vec<f64>,
}

impl MinimizerDistribution {
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidArgument("empty histogram".into()));
        }
        let total = total as f64;
        Ok(Self { probabilities: counts.iter().map(|&c| c as f64 / total).collect() })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

pub(crate) fn minimizer_counts(paths: &PathSet) -> Vec<usize> {
    let mut counts = vec![0usize; paths.grid_len()];
    for path in paths.iter() {
        counts[argmin(path)] += 1;
    }
    counts
}

/// Empirical distribution of the per-path argmin.
pub fn minimizer_histogram(paths: &PathSet) -> MinimizerDistribution {
    MinimizerDistribution::from_counts(&minimizer_counts(paths)).expect("a path set is never empty")
}

/// `−Σ p ln p` with `0 ln 0 = 0`.
pub fn shannon_entropy(dist: &MinimizerDistribution) -> f64 {
    let h: f64 = dist
        .probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    h.max(0.0)
}

/// Entropy of a histogram given as counts summing to `total`.
pub(crate) fn entropy_from_counts(counts: &[u32], total: usize) -> f64 {
    let total = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = f64::from(c) / total;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// Plug-in Monte-Carlo estimate of the minimizer entropy.
pub fn entropy_of_posterior(post: &GPPosterior, count: usize, seed: u64) -> Result<f64> {
    Ok(shannon_entropy(&minimizer_histogram(&sample_paths(post, count, seed)?)))
}
