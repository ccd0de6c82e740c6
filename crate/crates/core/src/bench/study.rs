//! Replicated criterion profiles on a fixed data set, to measure how the
//! Monte-Carlo error of the criterion compares with its variations across
//! the grid for each virtual batch size.

use serde::{Deserialize, Serialize};

use super::{BenchConfig, BenchError};
use crate::criterion::{gauss_hermite, CriterionContext, CriterionProfile, VirtualBatchSize};
use crate::gp::{compute_posterior, fit_hyperparameters, CandidateGrid, CovarianceSpec, GPPosterior, NoiseModel};
use crate::optimizer::{initial_design, Batch, Standardization};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::testbed::NoisyObjective;

/// The data set and fitted model the study conditions on: the state of a
/// run seeded with the master seed right after its initial design.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub grid: CandidateGrid,
    pub objective: NoisyObjective,
    pub batches: Vec<Batch>,
    pub standardization: Standardization,
    /// Noise in model units.
    pub noise: NoiseModel,
    pub spec: CovarianceSpec,
    pub posterior: GPPosterior,
}

pub fn prepare_fixture(config: &BenchConfig) -> Result<Fixture, BenchError> {
    let grid = config.grid()?;
    let objective = config.objective()?;
    let seed = config.seed;
    let l = &config.optimizer;
    let design = initial_design(
        &grid,
        l.init_batches,
        l.actual_batch,
        &objective,
        &mut stream_rng(seed, &[stream::OBJECTIVE]),
    )?;
    let raw: Vec<f64> = design.batches.iter().flat_map(|b| b.values.iter().copied()).collect();
    let standardization = Standardization::from_values(&raw);
    let noise = standardization.noise(&objective.noise_model());
    let obs = design.observations.map_values(|v| standardization.to_model(v));
    let spec = fit_hyperparameters(
        config.model.family,
        &obs,
        &grid,
        &noise,
        &config.bounds(),
        config.model.restarts,
        &mut stream_rng(seed, &[stream::INITIAL_FIT]),
    )?;
    let posterior = compute_posterior(&spec, &noise, &obs, &grid)?;
    Ok(Fixture { grid, objective, batches: design.batches, standardization, noise, spec, posterior })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyEntry {
    pub virtual_batch: VirtualBatchSize,
    /// Dispersion ratio: `mean_sd / range`.
    pub rho: f64,
    /// Grid average of the across-replicate standard deviation.
    pub mean_sd: f64,
    /// `max − min` over the grid of the across-replicate mean profile.
    pub range: f64,
    pub profiles: Vec<CriterionProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionNoiseReport {
    pub entries: Vec<StudyEntry>,
    pub replicate_seeds: Vec<u64>,
    pub hyperparameters: CovarianceSpec,
    pub standardization: Standardization,
    pub paths: usize,
    pub quad_order: usize,
    /// Always "nats".
    pub entropy_unit: String,
    /// The base path set is shared by all candidates and quadrature nodes
    /// of a replicate, and by all virtual batch sizes.
    pub common_random_numbers: bool,
}

impl CriterionNoiseReport {
    pub fn rho(&self, virtual_batch: VirtualBatchSize) -> Option<f64> {
        self.entries.iter().find(|e| e.virtual_batch == virtual_batch).map(|e| e.rho)
    }
}

/// `(ρ, mean_sd, range)` for a set of replicate profiles over the same grid.
pub fn dispersion_ratio(profiles: &[Vec<f64>]) -> (f64, f64, f64) {
    let r = profiles.len();
    let m = profiles.first().map_or(0, Vec::len);
    if r < 2 || m == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mut mean_profile = vec![0.0; m];
    let mut sd_sum = 0.0;
    for j in 0..m {
        let mean = profiles.iter().map(|p| p[j]).sum::<f64>() / r as f64;
        let var = profiles.iter().map(|p| (p[j] - mean) * (p[j] - mean)).sum::<f64>() / (r - 1) as f64;
        mean_profile[j] = mean;
        sd_sum += var.sqrt();
    }
    let mean_sd = sd_sum / m as f64;
    let (lo, hi) = mean_profile
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    (mean_sd / range, mean_sd, range)
}

/// For every configured virtual batch size, `replicates` criterion profiles
/// with independent seeds on the fixture posterior. Replicate `r` uses the
/// same seed for every batch size.
pub fn criterion_noise_study(config: &BenchConfig) -> Result<CriterionNoiseReport, BenchError> {
    let fixture = prepare_fixture(config)?;
    study_on_fixture(config, &fixture)
}

pub(crate) fn study_on_fixture(config: &BenchConfig, fixture: &Fixture) -> Result<CriterionNoiseReport, BenchError> {
    let cn = &config.criterion_noise;
    let l = &config.optimizer;
    let rule = gauss_hermite(l.quad_order)?;
    let replicate_seeds: Vec<u64> =
        (0..cn.replicates).map(|r| derive_seed(config.seed, &[stream::REPLICATE, r as u64])).collect();

    let mut by_k: Vec<Vec<CriterionProfile>> = vec![Vec::with_capacity(cn.replicates); cn.virtual_batches.len()];
    for &seed in &replicate_seeds {
        let ctx = CriterionContext::new(&fixture.posterior, &rule, l.paths, seed)?;
        for (slot, &k) in by_k.iter_mut().zip(&cn.virtual_batches) {
            slot.push(ctx.profile(k, &fixture.noise)?);
        }
    }
    let entries = cn
        .virtual_batches
        .iter()
        .zip(by_k)
        .map(|(&virtual_batch, profiles)| {
            let values: Vec<Vec<f64>> = profiles.iter().map(|p| p.values.clone()).collect();
            let (rho, mean_sd, range) = dispersion_ratio(&values);
            StudyEntry { virtual_batch, rho, mean_sd, range, profiles }
        })
        .collect();
    Ok(CriterionNoiseReport {
        entries,
        replicate_seeds,
        hyperparameters: fixture.spec.clone(),
        standardization: fixture.standardization,
        paths: l.paths,
        quad_order: l.quad_order,
        entropy_unit: "nats".into(),
        common_random_numbers: true,
    })
}
