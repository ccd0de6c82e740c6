use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Stationary covariance families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceFamily {
    #[default]
    #[serde(rename = "matern-52", alias = "matern52")]
    Matern52,
    #[serde(rename = "matern-32", alias = "matern32")]
    Matern32,
    #[serde(alias = "se")]
    SquaredExponential,
}

impl CovarianceFamily {
    /// Correlation as a function of the lengthscale-scaled distance `r`.
    pub fn correlation(self, r: f64) -> f64 {
        match self {
            CovarianceFamily::Matern52 => {
                let s = 5f64.sqrt() * r;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
            CovarianceFamily::Matern32 => {
                let s = 3f64.sqrt() * r;
                (1.0 + s) * (-s).exp()
            }
            CovarianceFamily::SquaredExponential => (-0.5 * r * r).exp(),
        }
    }
}

/// Prior covariance of the process: family, variance and one lengthscale
/// per input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub family: CovarianceFamily,
    pub variance: f64,
    pub lengthscales: Vec<f64>,
}

impl CovarianceSpec {
    pub fn new(family: CovarianceFamily, variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        let spec = Self { family, variance, lengthscales };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0) || !self.variance.is_finite() {
            return Err(Error::InvalidSpecification(format!(
                "process variance must be positive and finite, got {}",
                self.variance
            )));
        }
        if self.lengthscales.is_empty() {
            return Err(Error::InvalidSpecification("no lengthscales".into()));
        }
        if let Some(l) = self.lengthscales.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidSpecification(format!(
                "lengthscales must be positive and finite, got {l}"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a
            .iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| {
                let d = (x - y) / l;
                d * d
            })
            .sum();
        self.variance * self.family.correlation(r2.sqrt())
    }
}

/// Covariance matrix `k(a_i, b_j)`.
pub fn cov_matrix(spec: &CovarianceSpec, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if let Some(p) = a.iter().chain(b).find(|p| p.len() != spec.dim()) {
        return Err(Error::InvalidArgument(format!(
            "location of dimension {} does not match {} lengthscales",
            p.len(),
            spec.dim()
        )));
    }
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| spec.eval(&a[i], &b[j])))
}
