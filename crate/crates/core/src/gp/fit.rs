use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{log_marginal_likelihood, CandidateGrid, CovarianceFamily, CovarianceSpec, NoiseModel, ObservationSet};
use crate::{Error, Result};

/// Box constraints on the process variance and on every lengthscale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterBounds {
    pub variance: [f64; 2],
    pub lengthscale: [f64; 2],
}

impl HyperparameterBounds {
    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [("variance", self.variance), ("lengthscale", self.lengthscale)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} bounds must satisfy 0 < lo ≤ hi < ∞, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    fn log_box(&self, dim: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![self.variance[0].ln()];
        let mut hi = vec![self.variance[1].ln()];
        lo.extend(std::iter::repeat_n(self.lengthscale[0].ln(), dim));
        hi.extend(std::iter::repeat_n(self.lengthscale[1].ln(), dim));
        (lo, hi)
    }
}

impl Default for HyperparameterBounds {
    fn default() -> Self {
        Self { variance: [1e-4, 1e2], lengthscale: [1e-2, 1e1] }
    }
}

const MAX_ITERATIONS: usize = 120;
const F_TOLERANCE: f64 = 1e-7;
const X_TOLERANCE: f64 = 1e-6;

/// Maximum-likelihood fit of the covariance hyperparameters by multi-start
/// Nelder-Mead in log-parameter space, projected onto the bounds. The noise
/// variance is known and never refitted.
pub fn fit_hyperparameters<R: Rng + ?Sized>(
    family: CovarianceFamily,
    obs: &ObservationSet,
    grid: &CandidateGrid,
    noise: &NoiseModel,
    bounds: &HyperparameterBounds,
    restarts: usize,
    rng: &mut R,
) -> Result<CovarianceSpec> {
    fit(family, None, obs, grid, noise, bounds, restarts, rng)
}

/// Like [`fit_hyperparameters`] but warm-starts from `start` (clamped to the
/// bounds) before `extra_restarts` random starts.
pub fn fit_hyperparameters_from<R: Rng + ?Sized>(
    start: &CovarianceSpec,
    obs: &ObservationSet,
    grid: &CandidateGrid,
    noise: &NoiseModel,
    bounds: &HyperparameterBounds,
    extra_restarts: usize,
    rng: &mut R,
) -> Result<CovarianceSpec> {
    fit(start.family, Some(start), obs, grid, noise, bounds, extra_restarts, rng)
}

#[allow(clippy::too_many_arguments)]
fn fit<R: Rng + ?Sized>(
    family: CovarianceFamily,
    warm: Option<&CovarianceSpec>,
    obs: &ObservationSet,
    grid: &CandidateGrid,
    noise: &NoiseModel,
    bounds: &HyperparameterBounds,
    restarts: usize,
    rng: &mut R,
) -> Result<CovarianceSpec> {
    bounds.validate()?;
    if obs.len() < 2 || obs.distinct_locations() < 2 {
        return Err(Error::InsufficientData(format!(
            "need ≥ 2 observations at ≥ 2 distinct locations, got {} at {}",
            obs.len(),
            obs.distinct_locations()
        )));
    }
    let dim = grid.dim();
    let (lo, hi) = bounds.log_box(dim);
    let to_spec = |theta: &[f64]| CovarianceSpec {
        family,
        variance: theta[0].exp(),
        lengthscales: theta[1..].iter().map(|t| t.exp()).collect(),
    };
    let objective = |theta: &[f64]| match log_marginal_likelihood(&to_spec(theta), noise, obs, grid.points()) {
        Ok(v) if v.is_finite() => -v,
        _ => f64::INFINITY,
    };

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(restarts + 1);
    if let Some(w) = warm {
        if w.dim() != dim {
            return Err(Error::InvalidSpecification("warm start has wrong dimension".into()));
        }
        let theta: Vec<f64> = std::iter::once(w.variance)
            .chain(w.lengthscales.iter().copied())
            .map(f64::ln)
            .collect();
        starts.push(project(theta, &lo, &hi));
    }
    for _ in 0..restarts.max(usize::from(warm.is_none())) {
        starts.push(lo.iter().zip(&hi).map(|(&l, &h)| if h > l { rng.random_range(l..h) } else { l }).collect());
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for x0 in starts {
        let (x, fx) = nelder_mead(&objective, x0, &lo, &hi);
        if fx.is_finite() && best.as_ref().is_none_or(|(bf, _)| fx < *bf) {
            best = Some((fx, x));
        }
    }
    match best {
        Some((_, x)) => Ok(to_spec(&x)),
        None => Err(Error::NumericalConditioning { jitter: f64::NAN }),
    }
}

fn project(mut x: Vec<f64>, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(l, h);
    }
    x
}

/// Box-projected Nelder-Mead with standard coefficients.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: Vec<f64>, lo: &[f64], hi: &[f64]) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let fx0 = f(&x0);
    simplex.push((x0.clone(), fx0));
    for k in 0..n {
        let width = hi[k] - lo[k];
        let step = if width > 0.0 { 0.1 * width } else { 0.0 };
        let mut x = x0.clone();
        x[k] = if x[k] + step <= hi[k] { x[k] + step } else { x[k] - step };
        let fx = f(&x);
        simplex.push((x, fx));
    }

    let cmp = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.total_cmp(&b.1);
    for _ in 0..MAX_ITERATIONS {
        simplex.sort_by(cmp);
        let (f_best, f_worst) = (simplex[0].1, simplex[n].1);
        let spread = simplex
            .iter()
            .skip(1)
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (f_worst - f_best).abs() <= F_TOLERANCE * (1.0 + f_best.abs()) && spread <= X_TOLERANCE
            || spread == 0.0
        {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let x: Vec<f64> = (0..n).map(|k| centroid[k] + t * (simplex[n].0[k] - centroid[k])).collect();
            project(x, lo, hi)
        };

        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let x = along(-0.5);
            let fx = f(&x);
            (x, fx)
        } else {
            let x = along(0.5);
            let fx = f(&x);
            (x, fx)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = vertex.0.iter().zip(&best).map(|(v, b)| b + 0.5 * (v - b)).collect();
            let fx = f(&x);
            *vertex = (x, fx);
        }
    }
    simplex.sort_by(cmp);
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::Observation;
    use crate::rng::seeded;

    #[test]
    fn nelder_mead_finds_quadratic_minimum_inside_box() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.2).powi(2);
        let (x, fx) = nelder_mead(&f, vec![1.0, 1.0], &[-2.0, -2.0], &[2.0, 2.0]);
        assert!((x[0] - 0.3).abs() < 1e-3 && (x[1] + 0.2).abs() < 1e-3, "{x:?}");
        assert!(fx < 1e-6);
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        let f = |x: &[f64]| (x[0] - 5.0).powi(2);
        let (x, _) = nelder_mead(&f, vec![0.0], &[-1.0], &[1.0]);
        assert!(x[0] <= 1.0 && x[0] > 0.99);
    }

    #[test]
    fn too_few_observations_is_insufficient_data() {
        let grid = CandidateGrid::linspace(0.0, 1.0, 5).unwrap();
        let noise = NoiseModel::new(0.1).unwrap();
        let obs: ObservationSet = vec![Observation::single(1, 0.0), Observation::single(1, 0.3)].into();
        let r = fit_hyperparameters(
            CovarianceFamily::Matern52,
            &obs,
            &grid,
            &noise,
            &HyperparameterBounds::default(),
            2,
            &mut seeded(0),
        );
        assert!(matches!(r, Err(Error::InsufficientData(_))));
    }

    #[test]
    fn invalid_bounds_are_rejected() {
        let b = HyperparameterBounds { variance: [0.0, 1.0], lengthscale: [0.1, 1.0] };
        assert!(b.validate().is_err());
        let b = HyperparameterBounds { variance: [1.0, 0.5], lengthscale: [0.1, 1.0] };
        assert!(b.validate().is_err());
    }
}
