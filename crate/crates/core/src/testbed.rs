//! Synthetic noisy objectives with exhaustively known optimum.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::entropy::{argmin, sample_paths};
use crate::gp::{compute_posterior, CandidateGrid, CovarianceSpec, NoiseModel, ObservationSet};
use crate::{Error, Result};

/// A function known on the grid, observed through additive Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyObjective {
    pub mean_values: Vec<f64>,
    pub noise_std: f64,
    pub label: String,
}

impl NoisyObjective {
    pub fn new(mean_values: Vec<f64>, noise_std: f64, label: impl Into<String>) -> Result<Self> {
        if mean_values.is_empty() || mean_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("objective means must be finite and nonempty".into()));
        }
        if !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(Error::InvalidArgument(format!("noise std must be finite and ≥ 0, got {noise_std}")));
        }
        Ok(Self { mean_values, noise_std, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.mean_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_values.is_empty()
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel { variance: self.noise_std * self.noise_std }
    }

    /// Range of the mean values, `max − min`.
    pub fn range(&self) -> f64 {
        let (lo, hi) = self
            .mean_values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    /// Two whitespace-separated columns, one `point value` line per grid
    /// point (1-D grids only).
    pub fn to_table(&self, grid: &CandidateGrid) -> Result<String> {
        if grid.dim() != 1 || grid.len() != self.len() {
            return Err(Error::InvalidArgument("table export needs a 1-D grid matching the objective".into()));
        }
        let mut out = format!("# {}\n", self.label);
        for (p, v) in grid.points().iter().zip(&self.mean_values) {
            out.push_str(&format!("{:?} {:?}\n", p[0], v));
        }
        Ok(out)
    }
}

/// Parses the two-column table written by [`NoisyObjective::to_table`].
/// Blank lines and `#` comments are skipped.
pub fn parse_table(text: &str) -> Result<(CandidateGrid, Vec<f64>)> {
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("line {}: not a finite number: {s:?}", lineno + 1)))
        };
        match fields.as_slice() {
            [x, y] => {
                points.push(vec![parse(x)?]);
                values.push(parse(y)?);
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "line {}: expected 2 columns, got {}",
                    lineno + 1,
                    fields.len()
                )))
            }
        }
    }
    Ok((CandidateGrid::new(points)?, values))
}

/// One exact draw of the prior process on the grid, used as the mean.
/// A zero process variance gives the constant-zero function.
pub fn make_gp_draw_objective(
    spec: &CovarianceSpec,
    grid: &CandidateGrid,
    noise_std: f64,
    seed: u64,
) -> Result<NoisyObjective> {
    let label = format!("gp-draw(seed={seed})");
    if spec.variance == 0.0 {
        return NoisyObjective::new(vec![0.0; grid.len()], noise_std, label);
    }
    let prior = compute_posterior(spec, &NoiseModel::noise_free(), &ObservationSet::new(), grid)?;
    let draw = sample_paths(&prior, 1, seed)?;
    NoisyObjective::new(draw.path(0).to_vec(), noise_std, label)
}

/// Grid size and domain of the surrogate.
pub const SURROGATE_POINTS: usize = 51;
pub const SURROGATE_DOMAIN: (f64, f64) = (-1.0, 0.0);
/// Default noise standard deviation: about 3 times the range of the mean.
pub const SURROGATE_NOISE_STD: f64 = 1.2;
/// Location of the surrogate's minimum (grid index 34).
pub const SURROGATE_CENTER: f64 = -0.32;
/// Polynomial coefficients in `t = x − SURROGATE_CENTER`, lowest degree first.
pub const SURROGATE_COEFFICIENTS: [f64; 5] = [0.62, 0.0, 0.5, -0.3, 0.3];

/// Synthetic stand-in for an expensive simulated cost on `[−1, 0]`.
///
/// The mean is a quartic with a wide, shallow basin around `x = −0.32`:
/// minimum 0.62 and a range of about 0.39 over the grid. It is evaluated by
/// Horner's rule only, so it is bit-reproducible.
pub fn make_res_surrogate(noise_std: f64) -> Result<NoisyObjective> {
    let grid = surrogate_grid();
    let means = grid.points().iter().map(|p| surrogate_mean(p[0])).collect();
    NoisyObjective::new(means, noise_std, "res-surrogate (synthetic analog)")
}

pub fn surrogate_grid() -> CandidateGrid {
    CandidateGrid::linspace(SURROGATE_DOMAIN.0, SURROGATE_DOMAIN.1, SURROGATE_POINTS).expect("valid constant grid")
}

fn surrogate_mean(x: f64) -> f64 {
    let t = x - SURROGATE_CENTER;
    SURROGATE_COEFFICIENTS.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// `k` independent noisy evaluations at `grid_index`.
pub fn evaluate_batch<R: Rng + ?Sized>(
    obj: &NoisyObjective,
    grid_index: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidArgument("batch size must be ≥ 1".into()));
    }
    let f = *obj
        .mean_values
        .get(grid_index)
        .ok_or_else(|| Error::InvalidArgument(format!("index {grid_index} out of range")))?;
    Ok((0..k)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            f + obj.noise_std * z
        })
        .collect())
}

/// Exhaustive argmin of the mean, ties to the smallest index.
pub fn true_optimum(obj: &NoisyObjective) -> (usize, f64) {
    let i = argmin(&obj.mean_values);
    (i, obj.mean_values[i])
}
