use nalgebra::DVector;

use super::linalg::cholesky_with_jitter;
use super::posterior::observation_system;
use super::{cov_matrix, CovarianceSpec, NoiseModel, ObservationSet};
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Log-density of the observed values under the zero-mean prior plus
/// per-observation noise `σ²/k`. Observation locations are the points of
/// `locations` indexed by `grid_index`.
pub fn log_marginal_likelihood(
    spec: &CovarianceSpec,
    noise: &NoiseModel,
    obs: &ObservationSet,
    locations: &[Vec<f64>],
) -> Result<f64> {
    spec.validate()?;
    if obs.iter().any(|o| o.grid_index >= locations.len()) {
        return Err(Error::InvalidArgument("observation index out of range".into()));
    }
    if obs.is_empty() {
        return Ok(0.0);
    }
    // Only the observed rows of the grid covariance are needed.
    let mut used: Vec<usize> = obs.iter().map(|o| o.grid_index).collect();
    used.sort_unstable();
    used.dedup();
    let pts: Vec<Vec<f64>> = used.iter().map(|&i| locations[i].clone()).collect();
    let kuu = cov_matrix(spec, &pts, &pts)?;
    let remapped: Vec<_> = obs
        .iter()
        .map(|o| {
            let mut r = *o;
            r.grid_index = used.binary_search(&o.grid_index).expect("index was collected");
            r
        })
        .collect();
    let (koo, _) = observation_system(&kuu, noise, &remapped);
    let factor = cholesky_with_jitter(&koo)?;
    let y = DVector::from_iterator(obs.len(), obs.iter().map(|o| o.value));
    let alpha = factor.chol.solve(&y);
    let n = obs.len() as f64;
    Ok(-0.5 * y.dot(&alpha) - 0.5 * factor.log_det() - 0.5 * n * LN_2PI)
}
