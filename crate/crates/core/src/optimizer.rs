//! The sequential optimization loop.
//!
//! An initial design of `init_batches` spread grid points, each evaluated
//! `K₀` times, is followed by `budget / K₀` iterations. Each iteration picks
//! a point (criterion argmin or uniform draw), evaluates it `K₀` times, fuses
//! the batch into one observation and refits the covariance parameters.
//!
//! Observations are standardized with constants frozen on the initial design;
//! the model works in standardized units and reported minima are mapped back.

use serde::{Deserialize, Serialize};

use crate::criterion::{gauss_hermite, iid_select, select_next, CriterionContext, VirtualBatchSize, MAX_ORDER};
use crate::entropy::{argmin, entropy_of_posterior};
use crate::gp::{
    compute_posterior, fit_hyperparameters, fit_hyperparameters_from, fuse_batch, CandidateGrid, CovarianceFamily,
    CovarianceSpec, GPPosterior, HyperparameterBounds, NoiseModel, ObservationSet,
};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::testbed::{evaluate_batch, NoisyObjective};
use crate::{Error, Result};

/// How the next evaluation point is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Policy {
    /// Uniform draw over the grid.
    Iid,
    /// Argmin of the virtual-batch criterion.
    Iago { virtual_batch: VirtualBatchSize },
}

impl Policy {
    pub fn label(&self) -> String {
        match self {
            Policy::Iid => "IID".to_string(),
            Policy::Iago { virtual_batch } => format!("IAGO-{virtual_batch}"),
        }
    }
}

fn default_refit_restarts() -> usize {
    2
}

fn default_restarts() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Evaluations after the initial design.
    pub budget: usize,
    /// Actual batch size `K₀`.
    pub actual_batch: usize,
    pub policy: Policy,
    /// Sample paths per criterion or entropy estimate.
    pub paths: usize,
    pub quad_order: usize,
    pub init_batches: usize,
    /// Refit the covariance parameters every this many batches.
    pub refit_every: usize,
    pub seed: u64,
    #[serde(default)]
    pub family: CovarianceFamily,
    pub bounds: HyperparameterBounds,
    /// Random restarts of the initial fit.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Random restarts added to the warm start at each refit.
    #[serde(default = "default_refit_restarts")]
    pub refit_restarts: usize,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.actual_batch == 0 {
            return fail("actual batch size must be ≥ 1".into());
        }
        if self.budget % self.actual_batch != 0 {
            return fail(format!(
                "budget {} is not a multiple of the actual batch size {}",
                self.budget, self.actual_batch
            ));
        }
        if self.paths == 0 {
            return fail("need at least one sample path".into());
        }
        if !(1..=MAX_ORDER).contains(&self.quad_order) {
            return fail(format!("quadrature order must be in 1..={MAX_ORDER}"));
        }
        if self.init_batches < 2 {
            return fail("the initial design needs at least 2 batches to fit the covariance".into());
        }
        if self.refit_every == 0 {
            return fail("refit_every must be ≥ 1".into());
        }
        self.bounds.validate()
    }

    pub fn iterations(&self) -> usize {
        self.budget / self.actual_batch
    }
}

/// Affine map between original and model units, frozen on the initial design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub offset: f64,
    pub scale: f64,
}

impl Standardization {
    pub const IDENTITY: Self = Self { offset: 0.0, scale: 1.0 };

    /// Empirical mean and standard deviation of the raw values; a
    /// degenerate spread falls back to scale 1.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::IDENTITY;
        }
        let offset = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - offset) * (v - offset)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let scale = var.sqrt();
        Self { offset, scale: if scale > 0.0 && scale.is_finite() { scale } else { 1.0 } }
    }

    pub fn to_model(&self, y: f64) -> f64 {
        (y - self.offset) / self.scale
    }

    pub fn to_original(&self, v: f64) -> f64 {
        self.offset + self.scale * v
    }

    pub fn noise(&self, noise: &NoiseModel) -> NoiseModel {
        NoiseModel { variance: noise.variance / (self.scale * self.scale) }
    }
}

/// `K₀` raw evaluations at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub grid_index: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDesign {
    pub batches: Vec<Batch>,
    /// One fused observation per batch, in original units.
    pub observations: ObservationSet,
}

/// Spread subset of `count` grid indices. On 1-D grids this is the evenly
/// spaced subset of the sorted points anchored at both endpoints; otherwise
/// greedy farthest-point selection from the first point. A single point is
/// the one nearest the center.
pub fn maximin_indices(grid: &CandidateGrid, count: usize) -> Result<Vec<usize>> {
    let m = grid.len();
    if count == 0 || count > m {
        return Err(Error::InvalidArgument(format!(
            "initial design needs 1..={m} batches, got {count}"
        )));
    }
    if count == 1 {
        return Ok(vec![grid.center_index()]);
    }
    if grid.dim() == 1 {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| grid.point(a)[0].total_cmp(&grid.point(b)[0]));
        let picks = (0..count)
            .map(|j| {
                let pos = (j * (m - 1) + (count - 1) / 2) / (count - 1);
                order[pos]
            })
            .collect();
        return Ok(picks);
    }
    let dist = |a: usize, b: usize| -> f64 {
        grid.point(a).iter().zip(grid.point(b)).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    let mut picks = vec![0usize];
    let mut nearest: Vec<f64> = (0..m).map(|i| dist(i, 0)).collect();
    while picks.len() < count {
        let next = (0..m).fold(0, |b, i| if nearest[i] > nearest[b] { i } else { b });
        picks.push(next);
        for i in 0..m {
            nearest[i] = nearest[i].min(dist(i, next));
        }
    }
    Ok(picks)
}

/// Evaluates `batch_size` times at each of `init_batches` spread grid
/// points and fuses every batch.
pub fn initial_design<R: rand::Rng + ?Sized>(
    grid: &CandidateGrid,
    init_batches: usize,
    batch_size: usize,
    objective: &NoisyObjective,
    rng: &mut R,
) -> Result<InitialDesign> {
    if objective.len() != grid.len() {
        return Err(Error::InvalidArgument("objective and grid sizes differ".into()));
    }
    let mut batches = Vec::with_capacity(init_batches);
    let mut observations = ObservationSet::new();
    for index in maximin_indices(grid, init_batches)? {
        let values = evaluate_batch(objective, index, batch_size, rng)?;
        observations.push(fuse_batch(index, &values)?);
        batches.push(Batch { grid_index: index, values });
    }
    Ok(InitialDesign { batches, observations })
}

/// Argmin of the posterior mean (ties to the smallest index) and the mean
/// there, in the posterior's own units.
pub fn estimate_optimum(post: &GPPosterior) -> (usize, f64) {
    let mean = post.mean().as_slice();
    let i = argmin(mean);
    (i, mean[i])
}

/// Estimators after a given number of evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub xhat_index: usize,
    pub xhat: Vec<f64>,
    /// Estimated minimum in original units.
    pub mhat: f64,
    /// Minimizer entropy estimate, nats.
    pub entropy: f64,
    pub entropy_seed: u64,
    pub hyperparameters: CovarianceSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Evaluations spent after the initial design, this batch included.
    pub evaluations: usize,
    pub chosen_index: usize,
    pub values: Vec<f64>,
    #[serde(flatten)]
    pub snapshot: Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub config: OptimizerConfig,
    pub objective: String,
    pub noise_variance: f64,
    pub standardization: Standardization,
    pub initial_design: Vec<Batch>,
    pub initial: Snapshot,
    pub records: Vec<IterationRecord>,
    /// Number of criterion profiles built during the run.
    pub profile_builds: usize,
}

impl RunTrace {
    /// Observations (original units) available after `iterations` batches.
    pub fn observations(&self, iterations: usize) -> Result<ObservationSet> {
        let batches = self
            .initial_design
            .iter()
            .map(|b| (b.grid_index, &b.values))
            .chain(self.records.iter().take(iterations).map(|r| (r.chosen_index, &r.values)));
        batches.map(|(i, v)| fuse_batch(i, v)).collect()
    }

    /// Rebuilds the model-unit posterior after `iterations` batches from the
    /// logged data and hyperparameters.
    pub fn replay_posterior(&self, grid: &CandidateGrid, iterations: usize) -> Result<GPPosterior> {
        if iterations > self.records.len() {
            return Err(Error::InvalidArgument("trace is shorter than requested".into()));
        }
        let spec = if iterations == 0 {
            &self.initial.hyperparameters
        } else {
            &self.records[iterations - 1].snapshot.hyperparameters
        };
        let std = self.standardization;
        let obs = self.observations(iterations)?.map_values(|v| std.to_model(v));
        let noise = std.noise(&NoiseModel { variance: self.noise_variance });
        compute_posterior(spec, &noise, &obs, grid)
    }

    pub fn last(&self) -> &Snapshot {
        self.records.last().map_or(&self.initial, |r| &r.snapshot)
    }
}

/// Error of a run that stopped early, with everything logged so far.
#[derive(Debug, thiserror::Error)]
#[error("run aborted after {} iterations: {source}", .trace.as_ref().map_or(0, |t| t.records.len()))]
pub struct RunError {
    pub trace: Option<Box<RunTrace>>,
    #[source]
    pub source: Error,
}

impl From<Error> for RunError {
    fn from(source: Error) -> Self {
        Self { trace: None, source }
    }
}

fn snapshot(
    post: &GPPosterior,
    std: &Standardization,
    spec: &CovarianceSpec,
    paths: usize,
    entropy_seed: u64,
) -> Result<Snapshot> {
    let (xhat_index, m) = estimate_optimum(post);
    Ok(Snapshot {
        xhat_index,
        xhat: post.grid().point(xhat_index).to_vec(),
        mhat: std.to_original(m),
        entropy: entropy_of_posterior(post, paths, entropy_seed)?,
        entropy_seed,
        hyperparameters: spec.clone(),
    })
}

/// Runs one optimization of `objective` over `grid`. Deterministic for a
/// given configuration seed.
pub fn run(config: &OptimizerConfig, grid: &CandidateGrid, objective: &NoisyObjective) -> std::result::Result<RunTrace, RunError> {
    config.validate()?;
    let seed = config.seed;
    let rule = gauss_hermite(config.quad_order)?;
    let mut objective_rng = stream_rng(seed, &[stream::OBJECTIVE]);
    let mut iid_rng = stream_rng(seed, &[stream::IID]);

    let design = initial_design(grid, config.init_batches, config.actual_batch, objective, &mut objective_rng)?;
    let raw: Vec<f64> = design.batches.iter().flat_map(|b| b.values.iter().copied()).collect();
    let std = Standardization::from_values(&raw);
    let noise = std.noise(&objective.noise_model());
    let mut obs = design.observations.map_values(|v| std.to_model(v));

    let mut spec = fit_hyperparameters(
        config.family,
        &obs,
        grid,
        &noise,
        &config.bounds,
        config.restarts,
        &mut stream_rng(seed, &[stream::INITIAL_FIT]),
    )?;
    let mut post = compute_posterior(&spec, &noise, &obs, grid)?;
    let initial = snapshot(&post, &std, &spec, config.paths, derive_seed(seed, &[stream::ENTROPY, 0]))?;

    let mut trace = RunTrace {
        config: config.clone(),
        objective: objective.label.clone(),
        noise_variance: objective.noise_model().variance,
        standardization: std,
        initial_design: design.batches,
        initial,
        records: Vec::with_capacity(config.iterations()),
        profile_builds: 0,
    };

    for iter in 0..config.iterations() {
        let step = (|| -> Result<IterationRecord> {
            let chosen = match config.policy {
                Policy::Iid => iid_select(grid, &mut iid_rng),
                Policy::Iago { virtual_batch } => {
                    let profile_seed = derive_seed(seed, &[stream::PROFILE, iter as u64]);
                    let ctx = CriterionContext::new(&post, &rule, config.paths, profile_seed)?;
                    trace.profile_builds += 1;
                    select_next(&ctx.profile(virtual_batch, &noise)?)?
                }
            };
            let values = evaluate_batch(objective, chosen, config.actual_batch, &mut objective_rng)?;
            let fused = fuse_batch(chosen, &values)?;
            obs.push(crate::gp::Observation { value: std.to_model(fused.value), ..fused });
            if (iter + 1) % config.refit_every == 0 {
                spec = fit_hyperparameters_from(
                    &spec,
                    &obs,
                    grid,
                    &noise,
                    &config.bounds,
                    config.refit_restarts,
                    &mut stream_rng(seed, &[stream::REFIT, iter as u64]),
                )?;
            }
            post = compute_posterior(&spec, &noise, &obs, grid)?;
            let snap = snapshot(&post, &std, &spec, config.paths, derive_seed(seed, &[stream::ENTROPY, iter as u64 + 1]))?;
            Ok(IterationRecord {
                iter,
                evaluations: (iter + 1) * config.actual_batch,
                chosen_index: chosen,
                values,
                snapshot: snap,
            })
        })();
        match step {
            Ok(record) => trace.records.push(record),
            Err(source) => return Err(RunError { trace: Some(Box::new(trace)), source }),
        }
    }
    Ok(trace)
}
