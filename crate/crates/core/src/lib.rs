//! Informational approach to global optimization for very noisy evaluations.
//!
//! The unknown objective is modeled as a Gaussian process restricted to a
//! finite candidate grid. Evaluation points are chosen to minimize the
//! expected posterior entropy of the minimizer's location, where the
//! expectation is taken as if `K` noisy evaluations were going to be made at
//! the candidate (the *virtual batch size*). Large `K`, up to `K = ∞`, keeps
//! the Monte-Carlo error of the criterion small with respect to its
//! variations across the grid.
//!
//! Module map:
//!
//! - [`gp`]: kriging on the grid, same-point batch fusion, rank-one fantasy
//!   updates and hyperparameter fitting.
//! - [`entropy`]: conditional path simulation and the minimizer entropy.
//! - [`criterion`]: Gauss-Hermite rules and the virtual-batch criterion.
//! - [`optimizer`]: the sequential loop with actual batches of evaluations.
//! - [`testbed`]: synthetic noisy objectives with known optimum.
//! - [`bench`]: configuration, criterion-noise study, multi-run benchmark.

pub mod bench;
pub mod criterion;
pub mod entropy;
mod error;
pub mod gp;
pub mod optimizer;
pub mod rng;
pub mod testbed;

pub use error::{Error, Result};
