//! Level-set salt representation: smooth Heaviside functions, the adaptive
//! width rule, model composition `m = m0 (1 − h) + m1 h` with `h = h_ε(Kα)`,
//! its chain-rule gradient, initialization and the shape-fitting problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::optim::{lbfgs_minimize, Objective, OptimResult, OptimizeConfig};
use crate::rbf::{KernelMatrix, RbfNodeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeavisideKind {
    Sigmoid,
    #[default]
    CompactSine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavisideConfig {
    pub kind: HeavisideKind,
    /// Transition half-width in level-set units; 0 selects the sharp step.
    pub epsilon: f64,
    /// Fraction of the level-set range used by [`adaptive_epsilon`].
    pub kappa: f64,
}

impl Default for HeavisideConfig {
    fn default() -> Self {
        Self { kind: HeavisideKind::CompactSine, epsilon: 0.1, kappa: 0.1 }
    }
}

impl HeavisideConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::InvalidConfig(format!("kappa must lie in (0, 1], got {}", self.kappa)));
        }
        Ok(())
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }
}

/// Value for `s ≥ 0`; negative arguments use `h(s) = 1 − h(−s)`, which
/// keeps the symmetry exact in floating point.
fn upper_half(kind: HeavisideKind, s: f64, eps: f64) -> f64 {
    match kind {
        HeavisideKind::CompactSine => {
            if s >= eps {
                1.0
            } else {
                let x = s / eps;
                0.5 * (1.0 + x + (std::f64::consts::PI * x).sin() / std::f64::consts::PI)
            }
        }
        HeavisideKind::Sigmoid => 1.0 / (1.0 + (-s / eps).exp()),
    }
}

pub fn heaviside(cfg: &HeavisideConfig, s: f64) -> f64 {
    if cfg.epsilon == 0.0 {
        return if s > 0.0 {
            1.0
        } else if s < 0.0 {
            0.0
        } else {
            0.5
        };
    }
    if s >= 0.0 {
        upper_half(cfg.kind, s, cfg.epsilon)
    } else {
        1.0 - upper_half(cfg.kind, -s, cfg.epsilon)
    }
}

pub fn heaviside_derivative(cfg: &HeavisideConfig, s: f64) -> Result<f64> {
    let eps = cfg.epsilon;
    if eps == 0.0 {
        return Err(Error::ZeroEpsilon);
    }
    Ok(match cfg.kind {
        HeavisideKind::CompactSine => {
            if s.abs() > eps {
                0.0
            } else {
                (1.0 + (std::f64::consts::PI * s / eps).cos()) / (2.0 * eps)
            }
        }
        HeavisideKind::Sigmoid => {
            let h = heaviside(cfg, s);
            h * (1.0 - h) / eps
        }
    })
}

/// `ε = ½ κ (max φ − min φ)`.
pub fn adaptive_epsilon(phi: &[f64], kappa: f64) -> Result<f64> {
    if phi.is_empty() {
        return Err(Error::InvalidConfig("level-set field is empty".into()));
    }
    let (lo, hi) = phi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return Err(Error::DegenerateLevelSet { value: lo });
    }
    Ok(0.5 * kappa * (hi - lo))
}

/// RBF weights together with the kernel and Heaviside setup that interpret them.
#[derive(Debug, Clone)]
pub struct LevelSet<'k> {
    pub alpha: Vec<f64>,
    pub kernel: &'k KernelMatrix,
    pub heaviside: HeavisideConfig,
}

impl<'k> LevelSet<'k> {
    pub fn new(alpha: Vec<f64>, kernel: &'k KernelMatrix, heaviside: HeavisideConfig) -> Result<Self> {
        heaviside.validate()?;
        if alpha.len() != kernel.cols() {
            return Err(Error::DimensionMismatch { context: "RBF weights", expected: kernel.cols(), got: alpha.len() });
        }
        Ok(Self { alpha, kernel, heaviside })
    }

    /// `φ = K α` on the model grid.
    pub fn phi(&self) -> Result<Vec<f64>> {
        self.kernel.apply(&self.alpha)
    }

    /// Sets `ε` from the current `φ` and returns it.
    pub fn refresh_epsilon(&mut self) -> Result<f64> {
        let eps = adaptive_epsilon(&self.phi()?, self.heaviside.kappa)?;
        self.heaviside.epsilon = eps;
        Ok(eps)
    }

    /// Sharp indicator `h_0(φ)` thresholded at ½ (the `φ = 0` tie counts as salt).
    pub fn mask(&self) -> Result<Vec<f64>> {
        Ok(self.phi()?.iter().map(|&p| if p >= 0.0 { 1.0 } else { 0.0 }).collect())
    }
}

/// `(m, h)` with `m = m0 ⊙ (1 − h) + m1 h` and `h = h_ε(Kα)`.
pub fn compose_model(m0: &[f64], m1: f64, ls: &LevelSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let phi = ls.phi()?;
    compose_from_phi(m0, m1, &phi, &ls.heaviside)
}

pub fn compose_from_phi(m0: &[f64], m1: f64, phi: &[f64], cfg: &HeavisideConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    if m0.len() != phi.len() {
        return Err(Error::DimensionMismatch { context: "background", expected: phi.len(), got: m0.len() });
    }
    let h: Vec<f64> = phi.iter().map(|&s| heaviside(cfg, s)).collect();
    let m = m0
        .iter()
        .zip(&h)
        .map(|(&b, &hv)| {
            // exact endpoints keep the sharp model two-valued
            if hv == 0.0 {
                b
            } else if hv == 1.0 {
                m1
            } else {
                b * (1.0 - hv) + m1 * hv
            }
        })
        .collect();
    Ok((m, h))
}

/// `Kᵀ [(m1 − m0) ⊙ h_ε'(Kα) ⊙ ∇_m f]`.
pub fn levelset_gradient(ls: &LevelSet, m0: &[f64], m1: f64, grad_m: &[f64]) -> Result<Vec<f64>> {
    let phi = ls.phi()?;
    levelset_gradient_from_phi(ls.kernel, &phi, &ls.heaviside, m0, m1, grad_m)
}

pub fn levelset_gradient_from_phi(
    kernel: &KernelMatrix,
    phi: &[f64],
    cfg: &HeavisideConfig,
    m0: &[f64],
    m1: f64,
    grad_m: &[f64],
) -> Result<Vec<f64>> {
    if cfg.epsilon == 0.0 {
        return Err(Error::ZeroEpsilon);
    }
    for (context, len) in [("background", m0.len()), ("model gradient", grad_m.len())] {
        if len != phi.len() {
            return Err(Error::DimensionMismatch { context, expected: phi.len(), got: len });
        }
    }
    let mut v = Vec::with_capacity(phi.len());
    for ((&s, &b), &g) in phi.iter().zip(m0).zip(grad_m) {
        v.push((m1 - b) * heaviside_derivative(cfg, s)? * g);
    }
    kernel.apply_transpose(&v)
}

/// `inside` for nodes within `radius` of `center`, `outside` elsewhere.
pub fn init_levelset(nodes: &RbfNodeGrid, center: [f64; 2], radius: f64, inside: f64, outside: f64) -> Result<Vec<f64>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidConfig(format!("initial radius must be positive, got {radius}")));
    }
    let within: Vec<bool> = nodes
        .positions()
        .iter()
        .map(|p| ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt() <= radius)
        .collect();
    if !within.contains(&true) {
        return Err(Error::EmptyInitialization { cx: center[0], cz: center[1], radius });
    }
    Ok(within.into_iter().map(|w| if w { inside } else { outside }).collect())
}

/// Intersection over union of two {0,1} masks; two empty masks give 1.
/// Pointwise `|∇φ|` on the model grid: central differences inside,
/// one-sided differences on the edges.
pub fn gradient_magnitude(grid: &Grid2D, phi: &[f64]) -> Result<Vec<f64>> {
    if phi.len() != grid.len() {
        return Err(Error::DimensionMismatch { context: "level-set field", expected: grid.len(), got: phi.len() });
    }
    let d = |n: usize, k: usize, at: &dyn Fn(usize) -> f64| -> f64 {
        if n < 2 {
            0.0
        } else if k == 0 {
            (at(1) - at(0)) / grid.h
        } else if k == n - 1 {
            (at(n - 1) - at(n - 2)) / grid.h
        } else {
            (at(k + 1) - at(k - 1)) / (2.0 * grid.h)
        }
    };
    let mut out = vec![0.0; grid.len()];
    for i in 0..grid.nx {
        for j in 0..grid.nz {
            let dx = d(grid.nx, i, &|ii| phi[grid.index(ii, j)]);
            let dz = d(grid.nz, j, &|jj| phi[grid.index(i, jj)]);
            out[grid.index(i, j)] = dx.hypot(dz);
        }
    }
    Ok(out)
}

pub fn iou(a: &[f64], b: &[f64]) -> f64 {
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x >= 0.5, y >= 0.5);
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// `½‖h_ε(Kα) − mask‖²`, optionally recomputing `ε` at every accepted iterate.
struct ShapeObjective<'a> {
    kernel: &'a KernelMatrix,
    mask: &'a [f64],
    cfg: HeavisideConfig,
    adaptive: bool,
}

impl Objective for ShapeObjective<'_> {
    fn evaluate(&mut self, alpha: &[f64]) -> Result<(f64, Vec<f64>)> {
        let phi = self.kernel.apply(alpha)?;
        let mut value = 0.0;
        let mut v = Vec::with_capacity(phi.len());
        for (&s, &t) in phi.iter().zip(self.mask) {
            let r = heaviside(&self.cfg, s) - t;
            value += 0.5 * r * r;
            v.push(r * heaviside_derivative(&self.cfg, s)?);
        }
        Ok((value, self.kernel.apply_transpose(&v)?))
    }

    fn refresh(&mut self, alpha: &[f64]) -> Result<bool> {
        if !self.adaptive {
            return Ok(false);
        }
        self.cfg.epsilon = adaptive_epsilon(&self.kernel.apply(alpha)?, self.cfg.kappa)?;
        Ok(true)
    }

    fn epsilon(&self) -> Option<f64> {
        Some(self.cfg.epsilon)
    }
}

#[derive(Debug, Clone)]
pub struct ShapeFit {
    pub alpha: Vec<f64>,
    /// `h_0(Kα)` thresholded at ½.
    pub mask: Vec<f64>,
    pub iou: f64,
    /// Heaviside width in force at the end of the fit.
    pub epsilon: f64,
    pub optim: OptimResult,
}

/// Least-squares fit of `h_ε(Kα)` to a binary mask with L-BFGS.
pub fn fit_shape(
    mask: &[f64],
    kernel: &KernelMatrix,
    cfg: &HeavisideConfig,
    adaptive: bool,
    alpha0: &[f64],
    opt: &OptimizeConfig,
) -> Result<ShapeFit> {
    cfg.validate()?;
    if mask.len() != kernel.rows() {
        return Err(Error::DimensionMismatch { context: "mask", expected: kernel.rows(), got: mask.len() });
    }
    if let Some(v) = mask.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::InvalidModel(format!("mask values must be 0 or 1, found {v}")));
    }
    if alpha0.len() != kernel.cols() {
        return Err(Error::DimensionMismatch { context: "RBF weights", expected: kernel.cols(), got: alpha0.len() });
    }
    if !adaptive && cfg.epsilon == 0.0 {
        return Err(Error::ZeroEpsilon);
    }
    let mut obj = ShapeObjective { kernel, mask, cfg: *cfg, adaptive };
    let optim = lbfgs_minimize(&mut obj, alpha0, opt)?;
    if let crate::optim::Termination::Aborted(reason) = &optim.termination {
        return Err(Error::OptimizerAborted { iterations: optim.iterations, reason: reason.clone() });
    }
    let phi = kernel.apply(&optim.x)?;
    let fitted: Vec<f64> = phi.iter().map(|&p| if p >= 0.0 { 1.0 } else { 0.0 }).collect();
    Ok(ShapeFit { iou: iou(&fitted, mask), alpha: optim.x.clone(), mask: fitted, epsilon: obj.cfg.epsilon, optim })
}
