//! Discrete 2D Helmholtz operator `ω² m u + ∇² u = q` with a complex
//! coordinate-stretching absorbing layer, factorized once per frequency.
//!
//! The physical grid is padded by `pml.width` nodes on every side; the model
//! is extended into the padding by edge replication. Inside the layer the
//! derivative in direction `x` is stretched by `s_x = 1 + i·a·(d/L)²`, where
//! `d` is the distance into the layer and `L` its thickness. Each row is
//! multiplied by `s_x s_z`, which makes the matrix complex symmetric and
//! leaves rows of the physical region untouched.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::{BandLu, BandMatrix, Op};
use crate::error::{Error, Result};
use crate::grid::Grid2D;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmlConfig {
    /// Layer thickness in nodes.
    pub width: usize,
    /// Peak imaginary stretch `a` at the outer edge of the layer.
    pub strength: f64,
}

impl Default for PmlConfig {
    fn default() -> Self {
        Self { width: 20, strength: 4.0 }
    }
}

impl PmlConfig {
    pub const MIN_WIDTH: usize = 10;

    pub fn validate(&self) -> Result<()> {
        if self.width < Self::MIN_WIDTH {
            return Err(Error::InvalidConfig(format!(
                "absorbing layer needs at least {} nodes, got {}",
                Self::MIN_WIDTH,
                self.width
            )));
        }
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "absorbing strength must be nonnegative, got {}",
                self.strength
            )));
        }
        Ok(())
    }

    /// Stretch factor at padded index position `p` (may be half-integer)
    /// along an axis with `n` physical nodes.
    fn stretch(&self, p: f64, n: usize) -> Complex64 {
        let w = self.width as f64;
        let d = (w - p).max(p - (w + n as f64 - 1.0)).max(0.0) / w;
        Complex64::new(1.0, self.strength * d * d)
    }
}

/// Complex pressure on the padded grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefield {
    pub grid: Grid2D,
    pub values: Vec<Complex64>,
}

impl Wavefield {
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Number of grid points per wavelength for the slowest velocity in `m`.
pub fn points_per_wavelength(m: &[f64], omega: f64, h: f64) -> f64 {
    let m_max = m.iter().copied().fold(0.0, f64::max);
    let v_min = 1.0 / m_max.sqrt();
    2.0 * std::f64::consts::PI * v_min / (omega * h)
}

#[derive(Debug)]
struct Factors {
    lu: BandLu,
    solves: AtomicUsize,
}

/// Assembled five-point operator for one frequency, with optional factors.
#[derive(Debug, Clone)]
pub struct HelmholtzSystem {
    grid: Grid2D,
    padded: Grid2D,
    omega: f64,
    pml: PmlConfig,
    /// `s_x s_z` per padded node.
    stretch: Vec<Complex64>,
    diag: Vec<Complex64>,
    /// Coupling to `(i + 1, j)`.
    east: Vec<Complex64>,
    /// Coupling to `(i, j + 1)`.
    south: Vec<Complex64>,
    factors: Option<Arc<Factors>>,
}

/// Edge-replicating extension of a physical field onto the padded grid.
pub fn extend_field(grid: &Grid2D, width: usize, field: &[f64]) -> Vec<f64> {
    let padded = grid.padded(width);
    let mut out = Vec::with_capacity(padded.len());
    for ip in 0..padded.nx {
        let i = ip.saturating_sub(width).min(grid.nx - 1);
        for jp in 0..padded.nz {
            let j = jp.saturating_sub(width).min(grid.nz - 1);
            out.push(field[grid.index(i, j)]);
        }
    }
    out
}

/// Adjoint of [`extend_field`]: sums padded values onto the physical node they replicate.
pub fn restrict_adjoint(grid: &Grid2D, width: usize, padded_field: &[f64]) -> Vec<f64> {
    let padded = grid.padded(width);
    let mut out = vec![0.0; grid.len()];
    for ip in 0..padded.nx {
        let i = ip.saturating_sub(width).min(grid.nx - 1);
        for jp in 0..padded.nz {
            let j = jp.saturating_sub(width).min(grid.nz - 1);
            out[grid.index(i, j)] += padded_field[padded.index(ip, jp)];
        }
    }
    out
}

pub fn assemble_system(grid: &Grid2D, m: &[f64], omega: f64, pml: &PmlConfig) -> Result<HelmholtzSystem> {
    grid.validate()?;
    pml.validate()?;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidConfig(format!("angular frequency must be positive, got {omega}")));
    }
    if m.len() != grid.len() {
        return Err(Error::DimensionMismatch { context: "model field", expected: grid.len(), got: m.len() });
    }
    if let Some(k) = m.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidModel(format!("squared slowness not positive at node {k}: {}", m[k])));
    }
    let ppw = points_per_wavelength(m, omega, grid.h);
    if ppw < 4.0 {
        log::warn!(
            "only {ppw:.2} points per wavelength at omega = {omega:.4} rad/s; expect strong dispersion"
        );
    }

    let w = pml.width;
    let padded = grid.padded(w);
    let (nxp, nzp) = (padded.nx, padded.nz);
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let m_ext = extend_field(grid, w, m);

    let sx_node: Vec<Complex64> = (0..nxp).map(|i| pml.stretch(i as f64, grid.nx)).collect();
    let sz_node: Vec<Complex64> = (0..nzp).map(|j| pml.stretch(j as f64, grid.nz)).collect();
    // half points: index i holds i + 1/2; the one at -1/2 is needed for the first node
    let sx_half: Vec<Complex64> = (0..=nxp).map(|i| pml.stretch(i as f64 - 0.5, grid.nx)).collect();
    let sz_half: Vec<Complex64> = (0..=nzp).map(|j| pml.stretch(j as f64 - 0.5, grid.nz)).collect();

    let n = padded.len();
    let mut stretch = vec![ZERO; n];
    let mut diag = vec![ZERO; n];
    let mut east = vec![ZERO; n];
    let mut south = vec![ZERO; n];
    let w2 = omega * omega;
    for i in 0..nxp {
        for j in 0..nzp {
            let k = padded.index(i, j);
            let s = sx_node[i] * sz_node[j];
            let c_west = sz_node[j] / sx_half[i] * inv_h2;
            let c_east = sz_node[j] / sx_half[i + 1] * inv_h2;
            let c_north = sx_node[i] / sz_half[j] * inv_h2;
            let c_south = sx_node[i] / sz_half[j + 1] * inv_h2;
            stretch[k] = s;
            diag[k] = s * (w2 * m_ext[k]) - (c_west + c_east + c_north + c_south);
            if i + 1 < nxp {
                east[k] = c_east;
            }
            if j + 1 < nzp {
                south[k] = c_south;
            }
        }
    }

    Ok(HelmholtzSystem { grid: *grid, padded, omega, pml: *pml, stretch, diag, east, south, factors: None })
}

impl HelmholtzSystem {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn padded_grid(&self) -> &Grid2D {
        &self.padded
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn pml(&self) -> &PmlConfig {
        &self.pml
    }

    pub fn dim(&self) -> usize {
        self.padded.len()
    }

    /// `s_x s_z` per padded node; `∂A/∂m_ext = ω² diag(stretch)`.
    pub fn stretch(&self) -> &[Complex64] {
        &self.stretch
    }

    /// Entry `(row, col)` of the operator.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let nzp = self.padded.nz;
        let (lo, hi) = (row.min(col), row.max(col));
        match hi - lo {
            0 => self.diag[row],
            1 if lo % nzp != nzp - 1 => self.south[lo],
            d if d == nzp => self.east[lo],
            _ => ZERO,
        }
    }

    /// `A u` (or `A^H u`) computed directly from the stencil.
    pub fn apply(&self, u: &[Complex64], adjoint: bool) -> Vec<Complex64> {
        let (nxp, nzp) = (self.padded.nx, self.padded.nz);
        let c = |z: Complex64| if adjoint { z.conj() } else { z };
        let mut out = vec![ZERO; u.len()];
        for i in 0..nxp {
            for j in 0..nzp {
                let k = i * nzp + j;
                let mut acc = c(self.diag[k]) * u[k];
                if i > 0 {
                    acc += c(self.east[k - nzp]) * u[k - nzp];
                }
                if i + 1 < nxp {
                    acc += c(self.east[k]) * u[k + nzp];
                }
                if j > 0 {
                    acc += c(self.south[k - 1]) * u[k - 1];
                }
                if j + 1 < nzp {
                    acc += c(self.south[k]) * u[k + 1];
                }
                out[k] = acc;
            }
        }
        out
    }

    pub fn is_factorized(&self) -> bool {
        self.factors.is_some()
    }

    /// Factors are immutable and may be shared by concurrent solves.
    pub fn supports_concurrent_solves(&self) -> bool {
        true
    }

    /// Number of solves performed with the current factors.
    pub fn solve_count(&self) -> usize {
        self.factors.as_ref().map_or(0, |f| f.solves.load(Ordering::Relaxed))
    }

    pub fn factorize(mut self) -> Result<Self> {
        let nzp = self.padded.nz;
        let n = self.dim();
        let mut band = BandMatrix::zeros(n, nzp, nzp);
        for k in 0..n {
            band.add(k, k, self.diag[k]);
            if (k % nzp) + 1 < nzp {
                band.add(k, k + 1, self.south[k]);
                band.add(k + 1, k, self.south[k]);
            }
            if k + nzp < n {
                band.add(k, k + nzp, self.east[k]);
                band.add(k + nzp, k, self.east[k]);
            }
        }
        let lu = band.factorize(self.omega)?;
        self.factors = Some(Arc::new(Factors { lu, solves: AtomicUsize::new(0) }));
        Ok(self)
    }

    /// Solve `A u = q`, or `A^H u = q` when `adjoint` is set.
    pub fn solve(&self, q: &[Complex64], adjoint: bool) -> Result<Wavefield> {
        let factors = self.factors.as_ref().ok_or_else(|| Error::Solve {
            frequency: 0,
            source_index: 0,
            message: "system is not factorized".into(),
        })?;
        if q.len() != self.dim() {
            return Err(Error::DimensionMismatch { context: "source vector", expected: self.dim(), got: q.len() });
        }
        let mut u = q.to_vec();
        let op = if adjoint { Op::ConjTranspose } else { Op::Normal };
        factors.lu.solve_in_place(&mut u, op);
        factors.solves.fetch_add(1, Ordering::Relaxed);
        Ok(Wavefield { grid: self.padded, values: u })
    }

    pub fn solve_multi_rhs(&self, sources: &[Vec<Complex64>], adjoint: bool) -> Result<Vec<Wavefield>> {
        if self.supports_concurrent_solves() {
            sources.par_iter().map(|q| self.solve(q, adjoint)).collect()
        } else {
            sources.iter().map(|q| self.solve(q, adjoint)).collect()
        }
    }

    /// Padded flat index of a physical grid node.
    pub fn padded_index(&self, physical: usize) -> usize {
        let (i, j) = self.grid.coords_of(physical);
        self.padded.index(i + self.pml.width, j + self.pml.width)
    }

    /// Discrete unit point source (`1/h²` at the node) on the padded grid.
    pub fn point_source(&self, physical: usize) -> Vec<Complex64> {
        let mut q = vec![ZERO; self.dim()];
        q[self.padded_index(physical)] = Complex64::new(1.0 / (self.grid.h * self.grid.h), 0.0);
        q
    }
}
