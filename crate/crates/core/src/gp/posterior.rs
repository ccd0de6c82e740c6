use nalgebra::{DMatrix, DVector};

use super::grid::check_permutation;
use super::linalg::cholesky_with_jitter;
use super::{cov_matrix, CandidateGrid, CovarianceSpec, NoiseModel, Observation, ObservationSet};
use crate::{Error, Result};

/// Posterior variances at or below this fraction of the prior variance are
/// treated as exactly known: conditioning there carries no information.
pub const KNOWN_VARIANCE_REL: f64 = 1e-10;

/// Gaussian law of the process restricted to the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GPPosterior {
    grid: CandidateGrid,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    /// Reference variance for the known-point threshold.
    scale: f64,
}

impl GPPosterior {
    /// Builds a posterior from an explicit mean and covariance.
    pub fn from_parts(grid: CandidateGrid, mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let m = grid.len();
        if mean.len() != m || covariance.shape() != (m, m) {
            return Err(Error::InvalidArgument(format!(
                "posterior dimensions do not match a grid of {m} points"
            )));
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("posterior has non-finite entries".into()));
        }
        let amax = covariance.amax();
        if (&covariance - covariance.transpose()).amax() > 1e-12 * amax.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidArgument("posterior covariance is not symmetric".into()));
        }
        let scale = covariance.diagonal().max().max(0.0);
        Ok(Self { grid, mean, covariance, scale })
    }

    pub fn grid(&self) -> &CandidateGrid {
        &self.grid
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn variance(&self, index: usize) -> f64 {
        self.covariance[(index, index)]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// True when the value at `index` is known exactly (up to round-off).
    pub fn is_known(&self, index: usize) -> bool {
        self.variance(index) <= KNOWN_VARIANCE_REL * self.scale
    }

    /// Kriging weights `Σ[:, i] / (Σᵢᵢ + τ²)` of one observation at `index`
    /// with noise variance `τ²`, or `None` when the point is already known.
    pub fn update_weights(&self, index: usize, noise_variance: f64) -> Option<Vec<f64>> {
        if self.is_known(index) {
            return None;
        }
        let denom = self.variance(index) + noise_variance;
        Some(self.covariance.column(index).iter().map(|c| c / denom).collect())
    }

    /// Relabels the grid: point `i` of the result is point `perm[i]` here.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.len())?;
        let m = self.len();
        Ok(Self {
            grid: self.grid.permuted(perm)?,
            mean: DVector::from_fn(m, |i, _| self.mean[perm[i]]),
            covariance: DMatrix::from_fn(m, m, |i, j| self.covariance[(perm[i], perm[j])]),
            scale: self.scale,
        })
    }
}

fn check_indices(obs: &ObservationSet, m: usize) -> Result<()> {
    if let Some(o) = obs.iter().find(|o| o.grid_index >= m) {
        return Err(Error::InvalidArgument(format!(
            "observation index {} out of range for a grid of {m} points",
            o.grid_index
        )));
    }
    if let Some(o) = obs.iter().find(|o| !o.value.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "observation at index {} is not finite",
            o.grid_index
        )));
    }
    Ok(())
}

/// Gram matrix of the observations plus their noise diagonal, and the
/// grid-by-observation cross covariance.
pub(crate) fn observation_system(
    kgg: &DMatrix<f64>,
    noise: &NoiseModel,
    obs: &[Observation],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = obs.len();
    let mut koo = DMatrix::from_fn(n, n, |a, b| kgg[(obs[a].grid_index, obs[b].grid_index)]);
    for (a, o) in obs.iter().enumerate() {
        koo[(a, a)] += o.noise_variance(noise);
    }
    let kgo = DMatrix::from_fn(kgg.nrows(), n, |i, b| kgg[(i, obs[b].grid_index)]);
    (koo, kgo)
}

/// Conditions the zero-mean prior on `obs`, each observation carrying noise
/// variance `σ²/k`.
pub fn compute_posterior(
    spec: &CovarianceSpec,
    noise: &NoiseModel,
    obs: &ObservationSet,
    grid: &CandidateGrid,
) -> Result<GPPosterior> {
    spec.validate()?;
    let m = grid.len();
    check_indices(obs, m)?;
    let kgg = cov_matrix(spec, grid.points(), grid.points())?;
    let scale = spec.variance;
    if obs.is_empty() {
        return Ok(GPPosterior { grid: grid.clone(), mean: DVector::zeros(m), covariance: kgg, scale });
    }

    let (koo, kgo) = observation_system(&kgg, noise, obs.as_slice());
    let factor = cholesky_with_jitter(&koo)?;
    let y = DVector::from_iterator(obs.len(), obs.iter().map(|o| o.value));
    let alpha = factor.chol.solve(&y);
    let mean = &kgo * alpha;

    let mut v = kgo.transpose();
    factor.chol.l_dirty().solve_lower_triangular_mut(&mut v);
    let mut covariance = kgg - v.transpose() * v;
    symmetrize(&mut covariance);

    Ok(GPPosterior { grid: grid.clone(), mean, covariance, scale })
}

fn symmetrize(c: &mut DMatrix<f64>) {
    let n = c.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = s;
            c[(j, i)] = s;
        }
    }
}

/// Rank-one update: conditions `post` on one more observation `value` at
/// `grid_index` with noise variance `noise_variance`.
///
/// A point whose variance is already (numerically) zero carries no
/// information and the posterior comes back unchanged.
pub fn fantasy_update(
    post: &GPPosterior,
    grid_index: usize,
    value: f64,
    noise_variance: f64,
) -> Result<GPPosterior> {
    if grid_index >= post.len() {
        return Err(Error::InvalidArgument(format!(
            "index {grid_index} out of range for a grid of {} points",
            post.len()
        )));
    }
    if !(noise_variance >= 0.0) || !value.is_finite() {
        return Err(Error::InvalidArgument(
            "fantasy needs a finite value and a nonnegative noise variance".into(),
        ));
    }
    let Some(gain) = post.update_weights(grid_index, noise_variance) else {
        return Ok(post.clone());
    };
    let m = post.len();
    let innovation = value - post.mean[grid_index];
    let col: Vec<f64> = post.covariance.column(grid_index).iter().copied().collect();

    let mut mean = post.mean.clone();
    for (mu, g) in mean.iter_mut().zip(&gain) {
        *mu += g * innovation;
    }
    let mut covariance = post.covariance.clone();
    for j in 0..m {
        for i in 0..m {
            covariance[(i, j)] -= gain[i] * col[j];
        }
    }
    symmetrize(&mut covariance);
    if noise_variance == 0.0 {
        mean[grid_index] = value;
        covariance.row_mut(grid_index).fill(0.0);
        covariance.column_mut(grid_index).fill(0.0);
    }
    Ok(GPPosterior { grid: post.grid.clone(), mean, covariance, scale: post.scale })
}
