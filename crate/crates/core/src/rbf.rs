//! Radial basis functions, the RBF node lattice and the kernel matrix
//! `k_ij = Ψ(β‖x_i − ξ_j‖)` mapping RBF weights to grid values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RbfFamily {
    Gaussian,
    Multiquadric,
    InverseMultiquadric,
    InverseQuadratic,
    ThinPlateSpline,
    #[serde(rename = "wendland-1")]
    Wendland1,
    #[serde(rename = "wendland-2")]
    Wendland2,
    #[serde(rename = "wendland-3")]
    Wendland3,
    #[serde(rename = "wendland-4")]
    Wendland4,
}

impl RbfFamily {
    pub const ALL: [RbfFamily; 9] = [
        RbfFamily::Gaussian,
        RbfFamily::Multiquadric,
        RbfFamily::InverseMultiquadric,
        RbfFamily::InverseQuadratic,
        RbfFamily::ThinPlateSpline,
        RbfFamily::Wendland1,
        RbfFamily::Wendland2,
        RbfFamily::Wendland3,
        RbfFamily::Wendland4,
    ];

    pub fn is_compact(self) -> bool {
        matches!(self, Self::Wendland1 | Self::Wendland2 | Self::Wendland3 | Self::Wendland4)
    }

    /// Number of continuous derivatives of a compact family, `None` for global ones.
    pub fn smoothness(self) -> Option<usize> {
        match self {
            Self::Wendland1 => Some(0),
            Self::Wendland2 => Some(2),
            Self::Wendland3 => Some(4),
            Self::Wendland4 => Some(6),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Multiquadric => "multiquadric",
            Self::InverseMultiquadric => "inverse-multiquadric",
            Self::InverseQuadratic => "inverse-quadratic",
            Self::ThinPlateSpline => "thin-plate-spline",
            Self::Wendland1 => "wendland-1",
            Self::Wendland2 => "wendland-2",
            Self::Wendland3 => "wendland-3",
            Self::Wendland4 => "wendland-4",
        }
    }
}

impl std::str::FromStr for RbfFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown RBF family '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfSpec {
    pub family: RbfFamily,
    /// Scale parameter in 1/m.
    pub beta: f64,
    /// Support-width multiplier.
    pub gamma: f64,
}

impl RbfSpec {
    /// `β = 1/(γ h_r)`, used for every family.
    pub fn for_nodes(family: RbfFamily, gamma: f64, nodes: &RbfNodeGrid) -> Result<Self> {
        let spec = Self { family, beta: 1.0 / (gamma * nodes.spacing), gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("RBF beta must be positive, got {}", self.beta)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("RBF gamma must be positive, got {}", self.gamma)));
        }
        Ok(())
    }

    /// Distance beyond which a compact kernel vanishes.
    pub fn support_radius(&self) -> Option<f64> {
        self.family.is_compact().then(|| 1.0 / self.beta)
    }
}

/// `Ψ(r)` for a scaled radius `r ≥ 0`.
pub fn eval_rbf(family: RbfFamily, r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    let t = 1.0 - r;
    match family {
        RbfFamily::Gaussian => (-r * r).exp(),
        RbfFamily::Multiquadric => (1.0 + r * r).sqrt(),
        RbfFamily::InverseMultiquadric => 1.0 / (1.0 + r * r).sqrt(),
        RbfFamily::InverseQuadratic => 1.0 / (1.0 + r * r),
        RbfFamily::ThinPlateSpline => {
            if r == 0.0 {
                0.0
            } else {
                r * r * r.ln()
            }
        }
        _ if r >= 1.0 => 0.0,
        RbfFamily::Wendland1 => t * t,
        RbfFamily::Wendland2 => t.powi(4) * (4.0 * r + 1.0),
        RbfFamily::Wendland3 => t.powi(6) * (35.0 * r * r + 18.0 * r + 3.0),
        RbfFamily::Wendland4 => t.powi(8) * (((32.0 * r) + 25.0) * r * r + 8.0 * r + 1.0),
    }
}

/// Regular lattice of RBF centres, `padding` rings beyond the physical grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfNodeGrid {
    pub spacing: f64,
    pub padding: usize,
    pub nx: usize,
    pub nz: usize,
    /// Position of lattice node `(0, 0)`.
    pub origin: [f64; 2],
}

impl RbfNodeGrid {
    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node ordering follows the model grid: `k = i·nz + j`.
    pub fn position(&self, k: usize) -> [f64; 2] {
        let (i, j) = (k / self.nz, k % self.nz);
        [self.origin[0] + i as f64 * self.spacing, self.origin[1] + j as f64 * self.spacing]
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|k| self.position(k)).collect()
    }
}

/// Lattice with `h_r = spacing_ratio·h` covering the grid plus `padding` rings.
pub fn build_node_grid(grid: &Grid2D, spacing_ratio: usize, padding: usize) -> Result<RbfNodeGrid> {
    if spacing_ratio == 0 {
        return Err(Error::InvalidConfig("RBF spacing ratio must be at least 1".into()));
    }
    let hr = spacing_ratio as f64 * grid.h;
    let count = |extent: f64| (extent / hr - 1e-9).ceil().max(0.0) as usize + 1 + 2 * padding;
    Ok(RbfNodeGrid {
        spacing: hr,
        padding,
        nx: count(grid.width()),
        nz: count(grid.depth()),
        origin: [grid.origin[0] - padding as f64 * hr, grid.origin[1] - padding as f64 * hr],
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    /// Compressed rows: `row_ptr`, column indices, values.
    Sparse { row_ptr: Vec<usize>, cols: Vec<usize>, vals: Vec<f64> },
}

/// `N × L` kernel, dense for global families and row-compressed for compact ones.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    rows: usize,
    cols: usize,
    spec: RbfSpec,
    storage: Storage,
}

impl KernelMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spec(&self) -> &RbfSpec {
        &self.spec
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse { .. })
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.len(),
            Storage::Sparse { vals, .. } => vals.len(),
        }
    }

    /// Nonzero `(column, value)` pairs of one row.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        match &self.storage {
            Storage::Dense(v) => (0..self.cols).map(|j| (j, v[i * self.cols + j])).collect(),
            Storage::Sparse { row_ptr, cols, vals } => {
                (row_ptr[i]..row_ptr[i + 1]).map(|p| (cols[p], vals[p])).collect()
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(v) => v[i * self.cols + j],
            Storage::Sparse { row_ptr, cols, vals } => {
                let range = row_ptr[i]..row_ptr[i + 1];
                match cols[range.clone()].binary_search(&j) {
                    Ok(p) => vals[range.start + p],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// `φ = K α`.
    pub fn apply(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        if alpha.len() != self.cols {
            return Err(Error::DimensionMismatch { context: "RBF weights", expected: self.cols, got: alpha.len() });
        }
        Ok(match &self.storage {
            Storage::Dense(v) => v
                .par_chunks(self.cols)
                .map(|row| row.iter().zip(alpha).map(|(k, a)| k * a).sum())
                .collect(),
            Storage::Sparse { row_ptr, cols, vals } => (0..self.rows)
                .into_par_iter()
                .map(|i| (row_ptr[i]..row_ptr[i + 1]).map(|p| vals[p] * alpha[cols[p]]).sum())
                .collect(),
        })
    }

    /// `Kᵀ v`, accumulated row by row in a fixed order.
    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch { context: "grid field", expected: self.rows, got: v.len() });
        }
        let mut out = vec![0.0; self.cols];
        match &self.storage {
            Storage::Dense(k) => {
                for (row, &vi) in k.chunks(self.cols).zip(v) {
                    if vi != 0.0 {
                        for (o, kij) in out.iter_mut().zip(row) {
                            *o += kij * vi;
                        }
                    }
                }
            }
            Storage::Sparse { row_ptr, cols, vals } => {
                for (i, &vi) in v.iter().enumerate() {
                    if vi != 0.0 {
                        for p in row_ptr[i]..row_ptr[i + 1] {
                            out[cols[p]] += vals[p] * vi;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Assembles `K` for the grid nodes against the RBF lattice.
pub fn assemble_kernel(grid: &Grid2D, nodes: &RbfNodeGrid, spec: &RbfSpec) -> Result<KernelMatrix> {
    spec.validate()?;
    let centres = nodes.positions();
    let (rows, cols) = (grid.len(), centres.len());
    let entry = |x: [f64; 2], c: [f64; 2]| {
        let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
        eval_rbf(spec.family, spec.beta * r)
    };
    let storage = if spec.family.is_compact() {
        let reach = spec.support_radius().expect("compact");
        let per_row: Vec<Vec<(usize, f64)>> = (0..rows)
            .into_par_iter()
            .map(|i| {
                let x = grid.position(i);
                // lattice index window containing the support disk
                let lo = |d: usize| ((x[d] - reach - nodes.origin[d]) / nodes.spacing).floor().max(0.0) as usize;
                let hi = |d: usize, n: usize| {
                    let v = ((x[d] + reach - nodes.origin[d]) / nodes.spacing).ceil();
                    if v < 0.0 {
                        None
                    } else {
                        Some((v as usize).min(n - 1))
                    }
                };
                let mut out = Vec::new();
                let (Some(ih), Some(jh)) = (hi(0, nodes.nx), hi(1, nodes.nz)) else {
                    return out;
                };
                for a in lo(0)..=ih {
                    for b in lo(1)..=jh {
                        let k = a * nodes.nz + b;
                        let v = entry(x, centres[k]);
                        if v != 0.0 {
                            out.push((k, v));
                        }
                    }
                }
                out
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(rows + 1);
        row_ptr.push(0);
        let mut cols_idx = Vec::new();
        let mut vals = Vec::new();
        for r in per_row {
            for (c, v) in r {
                cols_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(cols_idx.len());
        }
        Storage::Sparse { row_ptr, cols: cols_idx, vals }
    } else {
        let dense: Vec<f64> = (0..rows)
            .into_par_iter()
            .flat_map_iter(|i| {
                let x = grid.position(i);
                centres.iter().map(move |&c| entry(x, c)).collect::<Vec<_>>()
            })
            .collect();
        Storage::Dense(dense)
    };
    let k = KernelMatrix { rows, cols, spec: *spec, storage };
    if let Storage::Dense(v) = &k.storage {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("kernel matrix has non-finite entries".into()));
        }
    }
    Ok(k)
}
