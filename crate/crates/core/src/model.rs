//! Split model representation: smooth background plus constant-valued salt.
//!
//! Everything is squared slowness (s²/m²); velocities only appear at the
//! boundaries of this module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Velocity clip range in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityBounds {
    pub lo: f64,
    pub hi: f64,
}

impl Default for VelocityBounds {
    fn default() -> Self {
        Self { lo: 1500.0, hi: 4500.0 }
    }
}

impl VelocityBounds {
    /// Bounds expressed in squared slowness, `(m_lo, m_hi)`.
    pub fn slowness_sq(&self) -> (f64, f64) {
        (velocity_to_slowness_sq(self.hi), velocity_to_slowness_sq(self.lo))
    }
}

#[inline]
pub fn velocity_to_slowness_sq(v: f64) -> f64 {
    1.0 / (v * v)
}

#[inline]
pub fn slowness_sq_to_velocity(m: f64) -> f64 {
    1.0 / m.sqrt()
}

/// Background velocity `v_top + b * z`, depth measured from the grid top.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundParam {
    pub v_top: f64,
    pub b: f64,
}

impl Default for BackgroundParam {
    fn default() -> Self {
        Self { v_top: 1500.0, b: 0.8333 }
    }
}

pub fn linear_background(grid: &Grid2D, param: &BackgroundParam) -> Result<Vec<f64>> {
    if !(param.v_top > 0.0) || !param.b.is_finite() {
        return Err(Error::InvalidBackground(format!(
            "v_top = {}, b = {}",
            param.v_top, param.b
        )));
    }
    let column: Vec<f64> = (0..grid.nz)
        .map(|j| {
            let depth = j as f64 * grid.h;
            let v = param.v_top + param.b * depth;
            if v > 0.0 {
                Ok(velocity_to_slowness_sq(v))
            } else {
                Err(Error::InvalidBackground(format!(
                    "velocity {v} at depth {depth} m is not positive"
                )))
            }
        })
        .collect::<Result<_>>()?;
    let mut field = Vec::with_capacity(grid.len());
    for _ in 0..grid.nx {
        field.extend_from_slice(&column);
    }
    Ok(field)
}

/// Parametric or rasterized salt geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Shape {
    /// Rotated ellipse; `angle` in radians, measured from the x axis toward +z.
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        #[serde(default)]
        angle: f64,
    },
    Union { parts: Vec<Shape> },
    /// Closed polygon, vertices in meters; even-odd rule.
    Polygon { vertices: Vec<[f64; 2]> },
    /// Per-node 0/1 raster on the model grid.
    Mask { values: Vec<u8> },
}

impl Shape {
    pub fn ellipse(center: [f64; 2], semi_axes: [f64; 2]) -> Self {
        Shape::Ellipse { center, semi_axes, angle: 0.0 }
    }

    /// Membership of a physical point. Masks are evaluated through [`Shape::rasterize`].
    fn contains_point(&self, p: [f64; 2]) -> bool {
        match self {
            Shape::Ellipse { center, semi_axes, angle } => {
                let (dx, dz) = (p[0] - center[0], p[1] - center[1]);
                let (s, c) = angle.sin_cos();
                let u = c * dx + s * dz;
                let w = -s * dx + c * dz;
                (u / semi_axes[0]).powi(2) + (w / semi_axes[1]).powi(2) <= 1.0
            }
            Shape::Union { parts } => parts.iter().any(|s| s.contains_point(p)),
            Shape::Polygon { vertices } => point_in_polygon(vertices, p),
            Shape::Mask { .. } => false,
        }
    }

    /// 0/1 indicator over the grid nodes.
    pub fn rasterize(&self, grid: &Grid2D) -> Result<Vec<f64>> {
        match self {
            Shape::Mask { values } => {
                if values.len() != grid.len() {
                    return Err(Error::DimensionMismatch {
                        context: "raster mask",
                        expected: grid.len(),
                        got: values.len(),
                    });
                }
                Ok(values.iter().map(|&v| if v != 0 { 1.0 } else { 0.0 }).collect())
            }
            Shape::Union { parts } if parts.iter().any(|p| matches!(p, Shape::Mask { .. })) => {
                let mut out = vec![0.0; grid.len()];
                for part in parts {
                    for (o, v) in out.iter_mut().zip(part.rasterize(grid)?) {
                        if v > 0.5 {
                            *o = 1.0;
                        }
                    }
                }
                Ok(out)
            }
            _ => Ok((0..grid.len())
                .map(|k| if self.contains_point(grid.position(k)) { 1.0 } else { 0.0 })
                .collect()),
        }
    }
}

fn point_in_polygon(vertices: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x_cross = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Background `m0`, salt value `m1`, and the composed field `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub grid: Grid2D,
    pub m0: Vec<f64>,
    pub m1: f64,
    pub m: Vec<f64>,
    /// Salt indicator, 1.0 inside and 0.0 outside.
    pub indicator: Vec<f64>,
}

impl Model {
    pub fn salt_node_count(&self) -> usize {
        self.indicator.iter().filter(|&&v| v > 0.5).count()
    }
}

pub fn make_salt_model(grid: &Grid2D, background: &[f64], shape: &Shape, v_salt: f64) -> Result<Model> {
    if background.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            context: "background field",
            expected: grid.len(),
            got: background.len(),
        });
    }
    if !(v_salt > 0.0) {
        return Err(Error::InvalidModel(format!("salt velocity {v_salt} must be positive")));
    }
    if let Some(k) = background.iter().position(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(Error::InvalidModel(format!("background not positive at node {k}")));
    }
    let indicator = shape.rasterize(grid)?;
    let m1 = velocity_to_slowness_sq(v_salt);
    let m = background
        .iter()
        .zip(&indicator)
        .map(|(&b, &c)| if c > 0.5 { m1 } else { b })
        .collect();
    let model = Model { grid: *grid, m0: background.to_vec(), m1, m, indicator };
    if model.salt_node_count() == 0 {
        log::warn!("salt shape covers no grid node; model equals the background");
    }
    Ok(model)
}

/// Clip each node's velocity into `[lo, hi]`.
pub fn model_bounds_project(m: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    debug_assert!(lo < hi);
    let (m_lo, m_hi) = (velocity_to_slowness_sq(hi), velocity_to_slowness_sq(lo));
    m.iter().map(|&v| v.clamp(m_lo, m_hi)).collect()
}

/// Stand-in geometries for the four benchmark salt models, scaled to any
/// grid extent. They approximate the published figures, not their exact shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    A,
    B,
    C,
    D,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::A, Preset::B, Preset::C, Preset::D];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::A => "A",
            Preset::B => "B",
            Preset::C => "C",
            Preset::D => "D",
        }
    }

    pub fn shape(&self, grid: &Grid2D) -> Shape {
        let [x0, z0] = grid.origin;
        let (w, d) = (grid.width(), grid.depth());
        let at = |fx: f64, fz: f64| [x0 + fx * w, z0 + fz * d];
        match self {
            // single dome
            Preset::A => Shape::ellipse(at(0.5, 0.5), [0.2 * w, 0.22 * d]),
            // two merged lobes
            Preset::B => Shape::Union {
                parts: vec![
                    Shape::ellipse(at(0.42, 0.45), [0.14 * w, 0.18 * d]),
                    Shape::Ellipse {
                        center: at(0.58, 0.58),
                        semi_axes: [0.15 * w, 0.14 * d],
                        angle: 0.15,
                    },
                ],
            },
            // flat-topped diapir widening with depth
            Preset::C => Shape::Polygon {
                vertices: vec![
                    at(0.42, 0.28),
                    at(0.58, 0.28),
                    at(0.68, 0.55),
                    at(0.72, 0.78),
                    at(0.28, 0.78),
                    at(0.32, 0.55),
                ],
            },
            // mushroom with overhang
            Preset::D => Shape::Union {
                parts: vec![
                    Shape::ellipse(at(0.5, 0.35), [0.22 * w, 0.12 * d]),
                    Shape::Polygon {
                        vertices: vec![at(0.45, 0.35), at(0.55, 0.35), at(0.6, 0.8), at(0.4, 0.8)],
                    },
                ],
            },
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Preset::A),
            "B" => Ok(Preset::B),
            "C" => Ok(Preset::C),
            "D" => Ok(Preset::D),
            other => Err(Error::InvalidConfig(format!("unknown preset model `{other}`"))),
        }
    }
}
