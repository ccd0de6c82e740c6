//! Experiment configuration.
//!
//! One TOML document drives every subcommand. Sections not used by a
//! subcommand are still validated. Unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//! runs = 50
//!
//! [grid]                 # optional; defaults to 51 points on [-1, 0]
//! lower = -1.0
//! upper = 0.0
//! points = 51
//!
//! [objective]
//! kind = "res-surrogate" # or "gp-draw"
//! noise_std = 1.2
//!
//! [model]
//! family = "matern-52"
//! variance_bounds = [1e-4, 100.0]
//! lengthscale_bounds = [0.02, 5.0]
//!
//! [optimizer]
//! budget = 600
//! actual_batch = 10
//!
//! [[policies]]
//! kind = "iago"
//! virtual_batch = "inf"
//!
//! [criterion_noise]
//! virtual_batches = [1, 10, 100, "inf"]
//! ```

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::criterion::{VirtualBatchSize, MAX_ORDER};
use crate::gp::{CandidateGrid, CovarianceFamily, CovarianceSpec, HyperparameterBounds};
use crate::optimizer::{OptimizerConfig, Policy};
use crate::testbed::{
    make_gp_draw_objective, make_res_surrogate, surrogate_grid, NoisyObjective, SURROGATE_DOMAIN, SURROGATE_NOISE_STD,
    SURROGATE_POINTS,
};

/// Covariance matrices are dense, so grids stay small.
pub const MAX_GRID_POINTS: usize = 10_000;
pub const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Master seed.
    pub seed: u64,
    #[serde(default = "defaults::runs")]
    pub runs: usize,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub optimizer: LoopConfig,
    #[serde(default = "defaults::policies")]
    pub policies: Vec<Policy>,
    #[serde(default)]
    pub criterion_noise: CriterionNoiseConfig,
    /// Evaluation counts (after the initial design) reported in the
    /// summary; every iteration when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { lower: SURROGATE_DOMAIN.0, upper: SURROGATE_DOMAIN.1, points: SURROGATE_POINTS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    ResSurrogate {
        #[serde(default = "defaults::noise_std")]
        noise_std: f64,
    },
    GpDraw {
        noise_std: f64,
        #[serde(default)]
        family: CovarianceFamily,
        variance: f64,
        lengthscale: f64,
        seed: u64,
    },
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig::ResSurrogate { noise_std: SURROGATE_NOISE_STD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub family: CovarianceFamily,
    #[serde(default = "defaults::restarts")]
    pub restarts: usize,
    #[serde(default = "defaults::refit_restarts")]
    pub refit_restarts: usize,
    #[serde(default = "defaults::variance_bounds")]
    pub variance_bounds: [f64; 2],
    #[serde(default = "defaults::lengthscale_bounds")]
    pub lengthscale_bounds: [f64; 2],
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            family: CovarianceFamily::default(),
            restarts: defaults::restarts(),
            refit_restarts: defaults::refit_restarts(),
            variance_bounds: defaults::variance_bounds(),
            lengthscale_bounds: defaults::lengthscale_bounds(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopConfig {
    #[serde(default = "defaults::budget")]
    pub budget: usize,
    #[serde(default = "defaults::actual_batch")]
    pub actual_batch: usize,
    #[serde(default = "defaults::init_batches")]
    pub init_batches: usize,
    #[serde(default = "defaults::paths")]
    pub paths: usize,
    #[serde(default = "defaults::quad_order")]
    pub quad_order: usize,
    #[serde(default = "defaults::refit_every")]
    pub refit_every: usize,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            budget: defaults::budget(),
            actual_batch: defaults::actual_batch(),
            init_batches: defaults::init_batches(),
            paths: defaults::paths(),
            quad_order: defaults::quad_order(),
            refit_every: defaults::refit_every(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionNoiseConfig {
    #[serde(default = "defaults::virtual_batches")]
    pub virtual_batches: Vec<VirtualBatchSize>,
    #[serde(default = "defaults::replicates")]
    pub replicates: usize,
}

impl Default for CriterionNoiseConfig {
    fn default() -> Self {
        Self { virtual_batches: defaults::virtual_batches(), replicates: defaults::replicates() }
    }
}

mod defaults {
    use super::*;

    pub fn runs() -> usize {
        1
    }
    pub fn noise_std() -> f64 {
        SURROGATE_NOISE_STD
    }
    pub fn restarts() -> usize {
        5
    }
    pub fn refit_restarts() -> usize {
        2
    }
    pub fn variance_bounds() -> [f64; 2] {
        [1e-4, 1e2]
    }
    pub fn lengthscale_bounds() -> [f64; 2] {
        [0.02, 5.0]
    }
    pub fn budget() -> usize {
        2000
    }
    pub fn actual_batch() -> usize {
        10
    }
    pub fn init_batches() -> usize {
        11
    }
    pub fn paths() -> usize {
        1000
    }
    pub fn quad_order() -> usize {
        15
    }
    pub fn refit_every() -> usize {
        1
    }
    pub fn replicates() -> usize {
        15
    }
    pub fn virtual_batches() -> Vec<VirtualBatchSize> {
        ["1", "10", "100", "inf"].iter().map(|s| s.parse().expect("valid literal")).collect()
    }
    pub fn policies() -> Vec<Policy> {
        vec![
            Policy::Iid,
            Policy::Iago { virtual_batch: "10".parse().expect("valid literal") },
            Policy::Iago { virtual_batch: VirtualBatchSize::Infinite },
        ]
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, BenchError> {
    Err(BenchError::Config(msg.into()))
}

impl BenchConfig {
    /// Parses and validates a configuration document.
    pub fn from_toml_str(text: &str) -> Result<Self, BenchError> {
        let config: BenchConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The fully resolved document, defaults included.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.runs == 0 {
            return invalid("runs must be ≥ 1");
        }
        if self.grid.points > MAX_GRID_POINTS {
            return invalid(format!("grid.points is limited to {MAX_GRID_POINTS}"));
        }
        let grid = self.grid()?;
        if let ObjectiveConfig::ResSurrogate { .. } = self.objective {
            if grid != surrogate_grid() {
                return invalid("the res-surrogate objective is defined on 51 points over [-1, 0] only");
            }
        }
        match &self.objective {
            ObjectiveConfig::ResSurrogate { noise_std } | ObjectiveConfig::GpDraw { noise_std, .. } => {
                if !(*noise_std >= 0.0) || !noise_std.is_finite() {
                    return invalid("noise_std must be finite and ≥ 0");
                }
            }
        }
        if let ObjectiveConfig::GpDraw { family, variance, lengthscale, .. } = &self.objective {
            CovarianceSpec::new(*family, *variance, vec![*lengthscale])
                .map_err(|e| BenchError::Config(format!("objective: {e}")))?;
        }
        self.bounds().validate().map_err(|e| BenchError::Config(format!("model: {e}")))?;
        let l = &self.optimizer;
        if l.init_batches > grid.len() {
            return invalid(format!("init_batches {} exceeds the grid size {}", l.init_batches, grid.len()));
        }
        if l.actual_batch > 0 && l.budget / l.actual_batch > MAX_ITERATIONS {
            return invalid(format!("budget / actual_batch is limited to {MAX_ITERATIONS} iterations"));
        }
        if l.quad_order == 0 || l.quad_order > MAX_ORDER {
            return invalid(format!("quad_order must be in 1..={MAX_ORDER}"));
        }
        if self.policies.is_empty() {
            return invalid("at least one policy is required");
        }
        for policy in &self.policies {
            self.optimizer_config(*policy, self.seed)
                .validate()
                .map_err(|e| BenchError::Config(format!("optimizer: {e}")))?;
        }
        let mut labels: Vec<String> = self.policies.iter().map(Policy::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return invalid("policies must be distinct");
        }
        if let Some(cps) = &self.checkpoints {
            if let Some(bad) = cps.iter().find(|&&n| n > l.budget || n % l.actual_batch != 0) {
                return invalid(format!(
                    "checkpoint {bad} must be a multiple of actual_batch within the budget"
                ));
            }
        }
        let cn = &self.criterion_noise;
        if cn.replicates < 2 {
            return invalid("criterion_noise.replicates must be ≥ 2");
        }
        if cn.virtual_batches.is_empty() {
            return invalid("criterion_noise.virtual_batches is empty");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<CandidateGrid, BenchError> {
        CandidateGrid::linspace(self.grid.lower, self.grid.upper, self.grid.points)
            .map_err(|e| BenchError::Config(format!("grid: {e}")))
    }

    pub fn objective(&self) -> Result<NoisyObjective, BenchError> {
        let obj = match &self.objective {
            ObjectiveConfig::ResSurrogate { noise_std } => make_res_surrogate(*noise_std),
            ObjectiveConfig::GpDraw { noise_std, family, variance, lengthscale, seed } => {
                let spec = CovarianceSpec { family: *family, variance: *variance, lengthscales: vec![*lengthscale] };
                make_gp_draw_objective(&spec, &self.grid()?, *noise_std, *seed)
            }
        };
        obj.map_err(|e| BenchError::Config(format!("objective: {e}")))
    }

    pub fn bounds(&self) -> HyperparameterBounds {
        HyperparameterBounds { variance: self.model.variance_bounds, lengthscale: self.model.lengthscale_bounds }
    }

    /// Loop configuration for one run of `policy` seeded with `seed`.
    pub fn optimizer_config(&self, policy: Policy, seed: u64) -> OptimizerConfig {
        let l = &self.optimizer;
        OptimizerConfig {
            budget: l.budget,
            actual_batch: l.actual_batch,
            policy,
            paths: l.paths,
            quad_order: l.quad_order,
            init_batches: l.init_batches,
            refit_every: l.refit_every,
            seed,
            family: self.model.family,
            bounds: self.bounds(),
            restarts: self.model.restarts,
            refit_restarts: self.model.refit_restarts,
        }
    }

    /// Reported checkpoints, always including 0.
    pub fn checkpoints(&self) -> Vec<usize> {
        let l = &self.optimizer;
        let mut cps = match &self.checkpoints {
            Some(c) => c.clone(),
            None => (0..=l.budget).step_by(l.actual_batch.max(1)).collect(),
        };
        cps.push(0);
        cps.sort_unstable();
        cps.dedup();
        cps
    }

    /// `{0, B/4, B/2, 3B/4, B}` rounded down to whole batches.
    pub fn quartile_checkpoints(&self) -> Vec<usize> {
        let l = &self.optimizer;
        let mut cps: Vec<usize> = (0..=4)
            .map(|q| (l.budget * q / 4) / l.actual_batch * l.actual_batch)
            .collect();
        cps.dedup();
        cps
    }
}
