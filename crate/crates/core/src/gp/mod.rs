//! Gaussian-process machinery on a finite candidate grid.

mod fit;
mod grid;
mod kernel;
mod likelihood;
pub(crate) mod linalg;
mod observation;
mod posterior;

pub use fit::{fit_hyperparameters, fit_hyperparameters_from, HyperparameterBounds};
pub use grid::CandidateGrid;
pub use kernel::{cov_matrix, CovarianceFamily, CovarianceSpec};
pub use likelihood::log_marginal_likelihood;
pub use observation::{fuse_batch, BatchSize, NoiseModel, Observation, ObservationSet};
pub use posterior::{compute_posterior, fantasy_update, GPPosterior, KNOWN_VARIANCE_REL};
