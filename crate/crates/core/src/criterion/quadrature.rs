use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_ORDER: usize = 64;

/// Gauss-Hermite rule for expectations under the standard normal law:
/// `Σ w_q g(z_q) ≈ E[g(Z)]`, `Z ~ N(0, 1)`, weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Mirrored nodes are summed in pairs, innermost first, so odd integrands
    /// cancel exactly instead of leaving rounding residue from large tail terms.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        let n = self.nodes.len();
        let mut total = if n % 2 == 1 { self.weights[n / 2] * g(self.nodes[n / 2]) } else { 0.0 };
        for i in (0..n / 2).rev() {
            let j = n - 1 - i;
            total += self.weights[i] * g(self.nodes[i]) + self.weights[j] * g(self.nodes[j]);
        }
        total
    }
}

/// Orthonormal probabilists' Hermite polynomials `p_0..=p_n` at `x`.
fn orthonormal_hermite(n: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(x);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (x * p[k] - kf.sqrt() * p[k - 1]) / (kf + 1.0).sqrt();
        p.push(next);
    }
    p
}

/// Rule with `order` nodes, exact for polynomials up to degree `2·order − 1`.
///
/// Nodes come from the eigenvalues of the Jacobi matrix and are polished by
/// Newton steps on the orthonormal recurrence; weights are the Christoffel
/// numbers `1 / Σ_{k<n} p_k(z)²`.
pub fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "quadrature order must be in 1..={MAX_ORDER}, got {order}"
        )));
    }
    let n = order;
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    let nf = n as f64;
    for z in nodes.iter_mut() {
        for _ in 0..3 {
            let p = orthonormal_hermite(n, *z);
            let derivative = nf.sqrt() * p[n - 1];
            if derivative == 0.0 {
                break;
            }
            *z -= p[n] / derivative;
        }
    }
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&z| 1.0 / orthonormal_hermite(n - 1, z).iter().map(|v| v * v).sum::<f64>())
        .collect();

    // enforce exact symmetry about 0
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let z = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -z;
        nodes[j] = z;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(QuadratureRule { nodes, weights })
}
