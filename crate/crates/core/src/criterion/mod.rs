//! Sampling criteria.
//!
//! The virtual-batch criterion is the expected minimizer entropy after `K`
//! hypothetical evaluations at a candidate. `K` same-point evaluations act
//! as a single averaged observation with noise `σ²/K`, so the expectation is
//! a one-dimensional Gaussian integral over the fantasy value (done by
//! Gauss-Hermite quadrature) and each integrand is the entropy of the path
//! set re-conditioned on that value. `K = 1` is the classic criterion.

mod quadrature;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use quadrature::{gauss_hermite, QuadratureRule, MAX_ORDER};

use crate::entropy::{entropy_from_counts, minimizer_counts, sample_paths, PathSet};
use crate::gp::{BatchSize, CandidateGrid, GPPosterior, NoiseModel};
use crate::rng::{derive_seed, seeded, stream};
use crate::{Error, Result};

/// Number of hypothetical same-point evaluations assumed by the criterion.
pub type VirtualBatchSize = BatchSize;

/// Law of the averaged fantasy observation at `grid_index`:
/// `(μₙ(x), varₙ(x) + σ²/K)`.
pub fn fantasy_observation_distribution(
    post: &GPPosterior,
    grid_index: usize,
    virtual_batch: VirtualBatchSize,
    noise: &NoiseModel,
) -> Result<(f64, f64)> {
    check_index(post, grid_index)?;
    Ok((
        post.mean()[grid_index],
        post.variance(grid_index).max(0.0) + virtual_batch.averaged_noise(noise.variance),
    ))
}

fn check_index(post: &GPPosterior, grid_index: usize) -> Result<()> {
    if grid_index >= post.len() {
        return Err(Error::InvalidArgument(format!(
            "candidate {grid_index} out of range for a grid of {} points",
            post.len()
        )));
    }
    Ok(())
}

/// Criterion estimates over the whole grid, in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionProfile {
    pub values: Vec<f64>,
    pub virtual_batch: VirtualBatchSize,
    pub paths: usize,
    pub seed: u64,
    /// Entropy of the base path set, i.e. the current entropy estimate.
    pub base_entropy: f64,
}

/// Everything shared by the criterion evaluations of one iteration: the
/// base path set and the per-(node, path) standard-normal draws used for
/// the fantasy observation noise.
pub struct CriterionContext<'a> {
    post: &'a GPPosterior,
    paths: PathSet,
    base_entropy: f64,
    rule: &'a QuadratureRule,
    /// Row-major `order × S`.
    fantasy_noise: Vec<f64>,
    seed: u64,
}

impl<'a> CriterionContext<'a> {
    /// Samples the base path set from `seed`; the fantasy-noise draws come
    /// from an independent stream derived from the same seed.
    pub fn new(post: &'a GPPosterior, rule: &'a QuadratureRule, paths: usize, seed: u64) -> Result<Self> {
        let paths = sample_paths(post, paths, seed)?;
        Ok(Self::with_paths(post, rule, paths, seed))
    }

    pub fn with_paths(post: &'a GPPosterior, rule: &'a QuadratureRule, paths: PathSet, seed: u64) -> Self {
        let counts: Vec<u32> = minimizer_counts(&paths).into_iter().map(|c| c as u32).collect();
        let base_entropy = entropy_from_counts(&counts, paths.len());
        let mut rng = seeded(derive_seed(seed, &[stream::FANTASY_NOISE]));
        let fantasy_noise = (0..rule.order() * paths.len())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Self { post, paths, base_entropy, rule, fantasy_noise, seed }
    }

    pub fn base_entropy(&self) -> f64 {
        self.base_entropy
    }

    pub fn paths(&self) -> &PathSet {
        &self.paths
    }

    /// Expected entropy after `K` virtual evaluations at `grid_index`.
    pub fn value(&self, grid_index: usize, virtual_batch: VirtualBatchSize, noise: &NoiseModel) -> Result<f64> {
        check_index(self.post, grid_index)?;
        let fantasy_noise_var = virtual_batch.averaged_noise(noise.variance);
        let Some(gain) = self.post.update_weights(grid_index, fantasy_noise_var) else {
            return Ok(self.base_entropy);
        };
        let (mean, variance) = fantasy_observation_distribution(self.post, grid_index, virtual_batch, noise)?;
        let spread = variance.sqrt();
        let noise_sd = fantasy_noise_var.sqrt();
        let s_count = self.paths.len();
        let m = self.paths.grid_len();
        let mut counts = vec![0u32; m];

        let mut total = 0.0;
        for (q, (&z, &w)) in self.rule.nodes.iter().zip(&self.rule.weights).enumerate() {
            let fantasy = mean + spread * z;
            let eps = &self.fantasy_noise[q * s_count..(q + 1) * s_count];
            counts.fill(0);
            for (path, &e) in self.paths.iter().zip(eps) {
                let shift = fantasy - (path[grid_index] + noise_sd * e);
                let mut best = 0;
                let mut best_v = path[0] + gain[0] * shift;
                for j in 1..m {
                    let v = path[j] + gain[j] * shift;
                    if v < best_v {
                        best_v = v;
                        best = j;
                    }
                }
                counts[best] += 1;
            }
            total += w * entropy_from_counts(&counts, s_count);
        }
        Ok(total)
    }

    /// Criterion at every grid point, candidates evaluated in parallel.
    pub fn profile(&self, virtual_batch: VirtualBatchSize, noise: &NoiseModel) -> Result<CriterionProfile> {
        let values = (0..self.post.len())
            .into_par_iter()
            .map(|i| self.value(i, virtual_batch, noise))
            .collect::<Result<Vec<f64>>>()?;
        Ok(CriterionProfile {
            values,
            virtual_batch,
            paths: self.paths.len(),
            seed: self.seed,
            base_entropy: self.base_entropy,
        })
    }
}

/// Criterion at one candidate with its own base path set drawn from `seed`.
pub fn criterion_value(
    post: &GPPosterior,
    grid_index: usize,
    virtual_batch: VirtualBatchSize,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    paths: usize,
    seed: u64,
) -> Result<f64> {
    CriterionContext::new(post, rule, paths, seed)?.value(grid_index, virtual_batch, noise)
}

/// Criterion over the whole grid with one shared base path set (common
/// random numbers across candidates and quadrature nodes).
pub fn criterion_profile(
    post: &GPPosterior,
    virtual_batch: VirtualBatchSize,
    noise: &NoiseModel,
    rule: &QuadratureRule,
    paths: usize,
    seed: u64,
) -> Result<CriterionProfile> {
    CriterionContext::new(post, rule, paths, seed)?.profile(virtual_batch, noise)
}

/// Index of the smallest criterion value, ties to the smallest index.
pub fn select_next(profile: &CriterionProfile) -> Result<usize> {
    if profile.values.is_empty() {
        return Err(Error::InvalidArgument("empty criterion profile".into()));
    }
    Ok(crate::entropy::argmin(&profile.values))
}

/// Uniform draw from `0..m`.
pub fn uniform_index<R: Rng + ?Sized>(m: usize, rng: &mut R) -> usize {
    rng.random_range(0..m)
}

/// Uniform draw among the grid points.
pub fn iid_select<R: Rng + ?Sized>(grid: &CandidateGrid, rng: &mut R) -> usize {
    uniform_index(grid.len(), rng)
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};

    use super::*;
    use crate::entropy::entropy_of_posterior;
    use crate::gp::{compute_posterior, CovarianceFamily, CovarianceSpec, Observation, ObservationSet};

    fn profile_of(values: Vec<f64>) -> CriterionProfile {
        CriterionProfile { values, virtual_batch: BatchSize::ONE, paths: 1, seed: 0, base_entropy: 0.0 }
    }

    fn noisy_posterior(noise: &NoiseModel) -> GPPosterior {
        let grid = CandidateGrid::linspace(-1.0, 0.0, 9).unwrap();
        let spec = CovarianceSpec::new(CovarianceFamily::Matern52, 1.0, vec![0.3]).unwrap();
        let obs: ObservationSet = vec![
            Observation::single(0, 0.3),
            Observation::single(4, -0.4),
            Observation::exact(6, 0.1),
            Observation::single(8, 0.5),
        ]
        .into();
        compute_posterior(&spec, noise, &obs, &grid).unwrap()
    }

    #[test]
    fn fantasy_distribution_arithmetic() {
        let grid = CandidateGrid::linspace(0.0, 1.0, 2).unwrap();
        let cov = DMatrix::from_row_slice(2, 2, &[0.04, 0.01, 0.01, 0.09]);
        let post = GPPosterior::from_parts(grid, DVector::from_vec(vec![0.7, 0.2]), cov).unwrap();
        let unit = NoiseModel::new(1.0).unwrap();
        let (mu, v) = fantasy_observation_distribution(&post, 0, BatchSize::finite(100).unwrap(), &unit).unwrap();
        assert_eq!(mu, 0.7);
        assert!((v - 0.05).abs() < 1e-15);
        assert_eq!(fantasy_observation_distribution(&post, 0, BatchSize::Infinite, &unit).unwrap(), (0.7, 0.04));
        let exact = NoiseModel::noise_free();
        for k in [BatchSize::ONE, BatchSize::finite(7).unwrap(), BatchSize::Infinite] {
            assert_eq!(fantasy_observation_distribution(&post, 1, k, &exact).unwrap(), (0.2, 0.09));
        }
        assert!(fantasy_observation_distribution(&post, 2, BatchSize::ONE, &unit).is_err());
    }

    #[test]
    fn known_candidate_has_base_entropy() {
        let noise = NoiseModel::new(0.2).unwrap();
        let post = noisy_posterior(&noise);
        let rule = gauss_hermite(15).unwrap();
        let value = criterion_value(&post, 6, BatchSize::ONE, &noise, &rule, 500, 11).unwrap();
        assert_eq!(value, entropy_of_posterior(&post, 500, 11).unwrap());
    }

    #[test]
    fn noise_free_profiles_do_not_depend_on_k() {
        let noise = NoiseModel::noise_free();
        let post = noisy_posterior(&noise);
        let rule = gauss_hermite(15).unwrap();
        let ctx = CriterionContext::new(&post, &rule, 400, 3).unwrap();
        let a = ctx.profile(BatchSize::ONE, &noise).unwrap();
        let b = ctx.profile(BatchSize::finite(100).unwrap(), &noise).unwrap();
        let c = ctx.profile(BatchSize::Infinite, &noise).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.values, c.values);
    }

    #[test]
    fn profile_is_deterministic() {
        let noise = NoiseModel::new(0.2).unwrap();
        let post = noisy_posterior(&noise);
        let rule = gauss_hermite(7).unwrap();
        let a = criterion_profile(&post, BatchSize::finite(10).unwrap(), &noise, &rule, 300, 5).unwrap();
        let b = criterion_profile(&post, BatchSize::finite(10).unwrap(), &noise, &rule, 300, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values.len(), 9);
        assert_eq!(a.values[6], a.base_entropy);
    }

    #[test]
    fn all_known_gives_constant_profile() {
        let grid = CandidateGrid::linspace(0.0, 1.0, 4).unwrap();
        let post = GPPosterior::from_parts(grid, DVector::from_vec(vec![1.0, 0.0, 2.0, 0.5]), DMatrix::zeros(4, 4)).unwrap();
        let noise = NoiseModel::new(1.0).unwrap();
        let p = criterion_profile(&post, BatchSize::ONE, &noise, &gauss_hermite(15).unwrap(), 100, 0).unwrap();
        assert!(p.values.iter().all(|&v| v == p.base_entropy));
        assert_eq!(p.base_entropy, 0.0);
    }

    #[test]
    fn select_next_rules() {
        assert_eq!(select_next(&profile_of(vec![3.0, 1.0, 2.0])).unwrap(), 1);
        assert_eq!(select_next(&profile_of(vec![1.0, 1.0, 2.0])).unwrap(), 0);
        assert_eq!(select_next(&profile_of(vec![4.0; 5])).unwrap(), 0);
        assert!(select_next(&profile_of(vec![])).is_err());
        let shifted = profile_of(vec![3.0 + 10.0, 1.0 + 10.0, 2.0 + 10.0]);
        assert_eq!(select_next(&shifted).unwrap(), 1);
    }

    #[test]
    fn iid_selection() {
        let mut rng = seeded(1);
        for _ in 0..20 {
            assert_eq!(uniform_index(1, &mut rng), 0);
        }
        let grid = CandidateGrid::linspace(0.0, 1.0, 51).unwrap();
        assert_eq!(iid_select(&grid, &mut seeded(99)), iid_select(&grid, &mut seeded(99)));
    }

    #[test]
    fn iid_frequencies_are_binomial() {
        let m = 51;
        let mut rng = seeded(2024);
        let mut counts = vec![0usize; m];
        for _ in 0..51_000 {
            counts[uniform_index(m, &mut rng)] += 1;
        }
        let sd = (51_000.0 * (1.0 / 51.0) * (50.0 / 51.0) as f64).sqrt();
        assert!(counts.iter().all(|&c| (c as f64 - 1000.0).abs() < 5.0 * sd), "{counts:?}");
    }
}
