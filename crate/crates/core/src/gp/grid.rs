use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The finite search set: `m ≥ 2` pairwise distinct points of equal dimension.
///
/// Indexing is stable for the lifetime of the grid; everything downstream
/// refers to points by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CandidateGrid {
    points: Vec<Vec<f64>>,
}

impl CandidateGrid {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a candidate grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("grid points must have dimension ≥ 1".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "grid point {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("grid point {i} is not finite")));
            }
        }
        let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("grid points must be pairwise distinct".into()));
        }
        Ok(Self { points })
    }

    /// `m` equally spaced points on `[lower, upper]`, endpoints included.
    pub fn linspace(lower: f64, upper: f64, m: usize) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "linspace needs finite lower < upper, got [{lower}, {upper}]"
            )));
        }
        if m < 2 {
            return Err(Error::InvalidArgument(format!("linspace needs m ≥ 2, got {m}")));
        }
        let step = (upper - lower) / (m - 1) as f64;
        let points = (0..m)
            .map(|i| {
                if i == m - 1 {
                    vec![upper]
                } else {
                    vec![lower + step * i as f64]
                }
            })
            .collect();
        Self::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Grid whose point `i` is `self.point(perm[i])`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.len())?;
        Self::new(perm.iter().map(|&j| self.points[j].clone()).collect())
    }

    /// Index of the point closest to the center of the bounding box
    /// (ties to the smallest index).
    pub fn center_index(&self) -> usize {
        let dim = self.dim();
        let center: Vec<f64> = (0..dim)
            .map(|k| {
                let (lo, hi) = self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[k]), hi.max(p[k]))
                });
                0.5 * (lo + hi)
            })
            .collect();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = sq_dist(p, &center);
            // round-off must not break ties between symmetric points
            if d < best_d - 1e-12 * best_d.min(1.0) {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

impl TryFrom<Vec<Vec<f64>>> for CandidateGrid {
    type Error = Error;

    fn try_from(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<CandidateGrid> for Vec<Vec<f64>> {
    fn from(grid: CandidateGrid) -> Self {
        grid.points
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_permutation(perm: &[usize], m: usize) -> Result<()> {
    let mut seen = vec![false; m];
    if perm.len() != m {
        return Err(Error::InvalidArgument(format!(
            "permutation has length {}, expected {m}",
            perm.len()
        )));
    }
    for &j in perm {
        if j >= m || seen[j] {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        seen[j] = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_hits_endpoints() {
        let g = CandidateGrid::linspace(-1.0, 0.0, 51).unwrap();
        assert_eq!(g.len(), 51);
        assert_eq!(g.point(0), &[-1.0]);
        assert_eq!(g.point(50), &[0.0]);
        assert!((g.point(25)[0] + 0.5).abs() < 1e-15);
        assert_eq!(g.center_index(), 25);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(CandidateGrid::new(vec![vec![0.0]]).is_err());
        assert!(CandidateGrid::new(vec![vec![0.0], vec![0.0]]).is_err());
        assert!(CandidateGrid::new(vec![vec![0.0], vec![1.0, 2.0]]).is_err());
        assert!(CandidateGrid::new(vec![vec![0.0], vec![f64::NAN]]).is_err());
        assert!(CandidateGrid::linspace(0.0, 0.0, 3).is_err());
    }

    #[test]
    fn center_tie_goes_to_smallest_index() {
        let g = CandidateGrid::linspace(0.0, 1.0, 4).unwrap();
        assert_eq!(g.center_index(), 1);
    }
}
