//! Factorizations with the jitter escalation policy.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::{Error, Result};

/// Relative jitter levels tried in order, as multiples of the mean diagonal.
/// The unjittered attempt must also clear `MIN_PIVOT_REL`.
const JITTER_SCHEDULE: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];
const MIN_PIVOT_REL: f64 = 1e-12;

pub(crate) struct Factor {
    pub chol: Cholesky<f64, Dyn>,
    /// Absolute jitter that was added to the diagonal.
    #[allow(dead_code)]
    pub jitter: f64,
}

impl Factor {
    /// `log det` of the (jittered) matrix.
    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

fn mean_diagonal(a: &DMatrix<f64>) -> f64 {
    a.diagonal().mean()
}

/// Cholesky factorization of a symmetric matrix, escalating a diagonal
/// jitter through `JITTER_SCHEDULE` until it succeeds.
pub(crate) fn cholesky_with_jitter(a: &DMatrix<f64>) -> Result<Factor> {
    let scale = mean_diagonal(a);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::NumericalConditioning { jitter: 0.0 });
    }
    let mut last = 0.0;
    for rel in JITTER_SCHEDULE {
        let jitter = rel * scale;
        last = jitter;
        let mut m = a.clone();
        if jitter > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += jitter;
            }
        }
        if let Some(chol) = Cholesky::new(m) {
            let min_pivot = chol
                .l_dirty()
                .diagonal()
                .iter()
                .fold(f64::INFINITY, |acc, d| acc.min(d * d));
            if rel > 0.0 || min_pivot > MIN_PIVOT_REL * scale {
                return Ok(Factor { chol, jitter });
            }
        }
    }
    Err(Error::NumericalConditioning { jitter: last })
}

/// A factor `A` with `A Aᵀ = cov` for a positive semi-definite `cov`.
///
/// Uses the symmetric eigendecomposition, so singular covariances (known
/// grid points, the zero matrix) are handled exactly; eigenvalues below the
/// largest jitter tolerance are an error, small negative ones are clamped.
pub(crate) fn psd_sqrt(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    let scale = mean_diagonal(cov).max(0.0);
    if scale == 0.0 && cov.iter().all(|&v| v == 0.0) {
        return Ok(DMatrix::zeros(n, n));
    }
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let tol = JITTER_SCHEDULE[JITTER_SCHEDULE.len() - 1] * scale;
    let mut factor = eig.eigenvectors;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if !lambda.is_finite() || lambda < -tol {
            return Err(Error::NumericalConditioning { jitter: tol });
        }
        let s = lambda.max(0.0).sqrt();
        factor.column_mut(j).scale_mut(s);
    }
    Ok(factor)
}
