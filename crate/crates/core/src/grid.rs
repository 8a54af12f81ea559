//! Uniform 2D Cartesian grid.
//!
//! Nodes are stored with depth as the fastest index: node `(i, j)` with
//! lateral index `i` and depth index `j` lives at flat offset `i * nz + j`.
//! Depth `z` increases downward from the grid origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid2D {
    pub nx: usize,
    pub nz: usize,
    /// Grid spacing in meters, identical in both directions.
    pub h: f64,
    /// Physical position `(x0, z0)` of node `(0, 0)`.
    #[serde(default)]
    pub origin: [f64; 2],
}

impl Grid2D {
    pub fn new(nx: usize, nz: usize, h: f64) -> Result<Self> {
        Self::with_origin(nx, nz, h, [0.0, 0.0])
    }

    pub fn with_origin(nx: usize, nz: usize, h: f64, origin: [f64; 2]) -> Result<Self> {
        let grid = Self { nx, nz, h, origin };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.nz < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3x3 nodes, got {}x{}",
                self.nx, self.nz
            )));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {}", self.h)));
        }
        if !(self.origin[0].is_finite() && self.origin[1].is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nz + j
    }

    /// Inverse of [`Grid2D::index`].
    #[inline]
    pub fn coords_of(&self, k: usize) -> (usize, usize) {
        (k / self.nz, k % self.nz)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.origin[0] + i as f64 * self.h
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        self.origin[1] + j as f64 * self.h
    }

    /// Physical position of flat node `k`.
    #[inline]
    pub fn position(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.coords_of(k);
        [self.x(i), self.z(j)]
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn z_max(&self) -> f64 {
        self.z(self.nz - 1)
    }

    pub fn width(&self) -> f64 {
        (self.nx - 1) as f64 * self.h
    }

    pub fn depth(&self) -> f64 {
        (self.nz - 1) as f64 * self.h
    }

    pub fn center(&self) -> [f64; 2] {
        [
            self.origin[0] + 0.5 * self.width(),
            self.origin[1] + 0.5 * self.depth(),
        ]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let tol = 1e-9 * self.h;
        p[0] >= self.origin[0] - tol
            && p[0] <= self.x_max() + tol
            && p[1] >= self.origin[1] - tol
            && p[1] <= self.z_max() + tol
    }

    /// Flat index of the node located at `p`, if `p` is a grid node.
    pub fn node_at(&self, p: [f64; 2]) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let fi = (p[0] - self.origin[0]) / self.h;
        let fj = (p[1] - self.origin[1]) / self.h;
        let (i, j) = (fi.round(), fj.round());
        if (fi - i).abs() > 1e-6 || (fj - j).abs() > 1e-6 {
            return None;
        }
        Some(self.index(i as usize, j as usize))
    }

    /// Grid with `width` extra nodes on every side, same spacing.
    pub fn padded(&self, width: usize) -> Grid2D {
        let w = width as f64 * self.h;
        Grid2D {
            nx: self.nx + 2 * width,
            nz: self.nz + 2 * width,
            h: self.h,
            origin: [self.origin[0] - w, self.origin[1] - w],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_bad_grids() {
        assert!(Grid2D::new(2, 5, 1.0).is_err());
        assert!(Grid2D::new(5, 2, 1.0).is_err());
        assert!(Grid2D::new(5, 5, 0.0).is_err());
        assert!(Grid2D::new(5, 5, -1.0).is_err());
        assert!(Grid2D::new(3, 3, 1.0).is_ok());
    }

    #[test]
    fn coordinates_are_exact_multiples() {
        let g = Grid2D::with_origin(201, 61, 50.0, [100.0, -50.0]).unwrap();
        assert_eq!(g.x(0), 100.0);
        assert_eq!(g.x(200), 100.0 + 200.0 * 50.0);
        assert_eq!(g.z(60), -50.0 + 60.0 * 50.0);
        assert_eq!(g.width(), 10000.0);
        assert_eq!(g.depth(), 3000.0);
        let k = g.index(7, 13);
        assert_eq!(g.coords_of(k), (7, 13));
        assert_eq!(g.node_at(g.position(k)), Some(k));
        assert_eq!(g.node_at([125.0, 0.0]), None);
    }

    #[test]
    fn padding_shifts_origin() {
        let g = Grid2D::new(10, 5, 2.0).unwrap();
        let p = g.padded(3);
        assert_eq!((p.nx, p.nz), (16, 11));
        assert_eq!(p.origin, [-6.0, -6.0]);
        assert_eq!(p.x(3), 0.0);
    }
}
