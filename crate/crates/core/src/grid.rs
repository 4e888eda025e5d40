use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor grid over `[0, T]^dim`: the same axis points are used on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axis: Vec<f64>,
    dim: usize,
}

impl Grid {
    /// `n_points` uniform points on `[0, horizon]`, endpoints included.
    pub fn uniform(horizon: f64, n_points: usize) -> Result<Self> {
        Self::uniform_nd(horizon, n_points, 1)
    }

    pub fn uniform_nd(horizon: f64, n_points: usize, dim: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("grid horizon must be positive, got {horizon}")));
        }
        if n_points < 2 {
            return Err(Error::invalid("uniform grid needs at least 2 points"));
        }
        if dim == 0 {
            return Err(Error::invalid("grid dimension must be at least 1"));
        }
        let last = (n_points - 1) as f64;
        let mut axis: Vec<f64> = (0..n_points).map(|i| horizon * (i as f64) / last).collect();
        axis[n_points - 1] = horizon;
        Ok(Grid { axis, dim })
    }

    /// Arbitrary strictly increasing, nonnegative axis points.
    pub fn from_points(points: Vec<f64>, dim: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("grid needs at least one point"));
        }
        if dim == 0 {
            return Err(Error::invalid("grid dimension must be at least 1"));
        }
        if points.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("grid points must be finite and nonnegative"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("grid points must be strictly increasing"));
        }
        Ok(Grid { axis: points, dim })
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        *self.axis.last().expect("grid is never empty")
    }

    pub fn points_per_axis(&self) -> usize {
        self.axis.len()
    }

    /// Total number of points, `n^dim`.
    pub fn len(&self) -> usize {
        self.axis.len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Writes the coordinates of flat point `index` into `out` (last axis fastest).
    pub fn point_into(&self, index: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        let n = self.axis.len();
        let mut rest = index;
        for slot in out.iter_mut().rev() {
            *slot = self.axis[rest % n];
            rest /= n;
        }
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        self.point_into(index, &mut p);
        p
    }
}

/// Serializable description of a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub horizon: f64,
    pub n_points: usize,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::uniform_nd(self.horizon, self.n_points, self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_hits_both_endpoints() {
        let g = Grid::uniform(0.7, 11).unwrap();
        assert_eq!(g.axis()[0], 0.0);
        assert_eq!(g.horizon(), 0.7);
        assert!(g.axis().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn flat_index_is_row_major() {
        let g = Grid::from_points(vec![0.5, 1.0], 2).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.point(0), vec![0.5, 0.5]);
        assert_eq!(g.point(1), vec![0.5, 1.0]);
        assert_eq!(g.point(2), vec![1.0, 0.5]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::uniform(1.0, 1).is_err());
        assert!(Grid::uniform(-1.0, 5).is_err());
        assert!(Grid::from_points(vec![0.0, 0.0], 1).is_err());
        assert!(Grid::from_points(vec![], 1).is_err());
    }
}
