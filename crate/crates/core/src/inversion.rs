//! Inversion drivers: multiscale classic FWI over node-wise squared slowness,
//! the parametric level-set inversion (single band and multiscale), the
//! joint background-slope plus salt-geometry inversion, and the ERF/RRE
//! metrics.

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::levelset::{
    adaptive_epsilon, compose_from_phi, levelset_gradient_from_phi, HeavisideConfig, HeavisideKind,
};
use crate::misfit::{misfit, misfit_and_gradient};
use crate::model::{linear_background, BackgroundParam, VelocityBounds};
use crate::optim::{
    bisection_scalar, lbfgs_minimize, projected_qn_minimize, BisectionResult, Bounds, History, Objective,
    OptimizeConfig, Termination,
};
use crate::rbf::KernelMatrix;
use crate::survey::{forward_model_on, DataCube, Survey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Fwi,
    Pls,
    PlsJoint,
}

/// Settings shared by the drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionConfig {
    /// Optimizer setup per band (its `max_iters` is the per-band budget).
    pub optimizer: OptimizeConfig,
    /// First-step size for classic FWI, in units of `1/v_min²`.
    pub fwi_initial_step: f64,
    pub bounds: VelocityBounds,
    pub heaviside: HeavisideKind,
    /// κ for the first band.
    pub kappa0: f64,
    /// Factor applied to κ after each band.
    pub kappa_decay: f64,
    /// Search interval and tolerance for the background slope.
    pub b_interval: (f64, f64),
    pub b_tol: f64,
    pub v_top: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizeConfig { max_iters: 150, grad_tol: 0.0, ..Default::default() },
            fwi_initial_step: 0.05,
            bounds: VelocityBounds::default(),
            heaviside: HeavisideKind::CompactSine,
            kappa0: 0.1,
            kappa_decay: 0.8,
            b_interval: (0.5, 1.2),
            b_tol: 1e-4,
            v_top: 1500.0,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if !(self.kappa0 > 0.0 && self.kappa0 <= 1.0) || !(self.kappa_decay > 0.0 && self.kappa_decay <= 1.0) {
            return Err(Error::InvalidConfig("kappa0 and kappa_decay must lie in (0, 1]".into()));
        }
        if !(self.bounds.lo > 0.0 && self.bounds.lo < self.bounds.hi) {
            return Err(Error::InvalidConfig("velocity bounds must satisfy 0 < lo < hi".into()));
        }
        if !(self.b_interval.0 <= self.b_interval.1) || !(self.b_tol > 0.0) {
            return Err(Error::InvalidConfig("b interval must be ordered and b_tol positive".into()));
        }
        Ok(())
    }

    /// κ used for each of `n` bands.
    pub fn kappa_schedule(&self, n: usize) -> Vec<f64> {
        let mut k = self.kappa0;
        (0..n)
            .map(|_| {
                let cur = k;
                k *= self.kappa_decay;
                cur
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRecord {
    pub band: usize,
    pub frequencies: Vec<usize>,
    pub kappa: Option<f64>,
    pub b: Option<BisectionResult>,
    pub termination: Termination,
    pub iterations: usize,
    pub initial_misfit: f64,
    pub final_misfit: f64,
    pub history: History,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionRun {
    pub algorithm: Algorithm,
    pub bands: Vec<BandRecord>,
    /// Final squared slowness.
    pub model: Vec<f64>,
    /// Background used for the final model.
    pub background: Vec<f64>,
    pub alpha: Option<Vec<f64>>,
    /// Starting model of the run, for ERF/RRE.
    pub start: Vec<f64>,
}

fn check_bands(survey: &Survey, bands: &[Vec<usize>]) -> Result<()> {
    if bands.is_empty() {
        return Err(Error::InvalidConfig("at least one band is required".into()));
    }
    let acq = &survey.acquisition;
    let mut prev = f64::NEG_INFINITY;
    for (b, band) in bands.iter().enumerate() {
        if band.is_empty() || band.iter().any(|&k| k >= acq.n_frequencies()) {
            return Err(Error::InvalidConfig(format!("band {b} is empty or references a missing frequency")));
        }
        let lo = band.iter().map(|&k| acq.frequencies[k]).fold(f64::INFINITY, f64::min);
        if lo <= prev {
            return Err(Error::InvalidConfig("bands must be ordered low to high".into()));
        }
        prev = band.iter().map(|&k| acq.frequencies[k]).fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(())
}

/// Band misfit over the scaled variables `x = m / m_ref`.
struct ScaledFwi<'a> {
    survey: &'a Survey,
    d_obs: &'a DataCube,
    frequencies: &'a [usize],
    m_ref: f64,
}

impl Objective for ScaledFwi<'_> {
    fn evaluate(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let m: Vec<f64> = x.iter().map(|v| v * self.m_ref).collect();
        let r = misfit_and_gradient(self.survey, &m, self.d_obs, self.frequencies)?;
        Ok((r.value, r.gradient.into_iter().map(|g| g * self.m_ref).collect()))
    }
}

/// Multiscale FWI over the node-wise model with velocity bounds.
pub fn classic_fwi(
    m_init: &[f64],
    survey: &Survey,
    d_obs: &DataCube,
    bands: &[Vec<usize>],
    cfg: &InversionConfig,
) -> Result<InversionRun> {
    cfg.validate()?;
    check_bands(survey, bands)?;
    let (lo, hi) = cfg.bounds.slowness_sq();
    let m_ref = hi;
    let bounds = Bounds::uniform(m_init.len(), lo / m_ref, 1.0);
    let mut x: Vec<f64> = crate::model::model_bounds_project(m_init, cfg.bounds.lo, cfg.bounds.hi)
        .iter()
        .map(|m| (m / m_ref).clamp(lo / m_ref, 1.0))
        .collect();
    let opt = OptimizeConfig { initial_step: cfg.fwi_initial_step, ..cfg.optimizer.clone() };
    let mut records = Vec::new();
    for (b, band) in bands.iter().enumerate() {
        let mut obj = ScaledFwi { survey, d_obs, frequencies: band, m_ref };
        let res = projected_qn_minimize(&mut obj, &x, &bounds, &opt)?;
        info!("fwi band {b}: {:?} after {} iterations, misfit {:e}", res.termination, res.iterations, res.value);
        if let Termination::Aborted(reason) = &res.termination {
            warn!("fwi band {b} aborted: {reason}");
        }
        records.push(BandRecord {
            band: b,
            frequencies: band.clone(),
            kappa: None,
            b: None,
            termination: res.termination.clone(),
            iterations: res.iterations,
            initial_misfit: res.history.records.first().map_or(f64::NAN, |r| r.objective),
            final_misfit: res.value,
            history: res.history,
        });
        x = res.x;
    }
    let model: Vec<f64> = x.iter().map(|v| v * m_ref).collect();
    Ok(InversionRun {
        algorithm: Algorithm::Fwi,
        bands: records,
        background: model.clone(),
        model,
        alpha: None,
        start: m_init.to_vec(),
    })
}

/// Band misfit as a function of the RBF weights, with `ε` tied to the
/// current level set.
pub struct PlsObjective<'a> {
    pub survey: &'a Survey,
    pub d_obs: &'a DataCube,
    pub frequencies: &'a [usize],
    pub kernel: &'a KernelMatrix,
    pub m0: &'a [f64],
    pub m1: f64,
    pub heaviside: HeavisideConfig,
}

impl Objective for PlsObjective<'_> {
    fn evaluate(&mut self, alpha: &[f64]) -> Result<(f64, Vec<f64>)> {
        let phi = self.kernel.apply(alpha)?;
        let (m, _) = compose_from_phi(self.m0, self.m1, &phi, &self.heaviside)?;
        let r = misfit_and_gradient(self.survey, &m, self.d_obs, self.frequencies)?;
        let g = levelset_gradient_from_phi(self.kernel, &phi, &self.heaviside, self.m0, self.m1, &r.gradient)?;
        Ok((r.value, g))
    }

    fn refresh(&mut self, alpha: &[f64]) -> Result<bool> {
        self.heaviside.epsilon = adaptive_epsilon(&self.kernel.apply(alpha)?, self.heaviside.kappa)?;
        Ok(true)
    }

    fn epsilon(&self) -> Option<f64> {
        Some(self.heaviside.epsilon)
    }
}

/// Level-set inversion on one band; `ε` is recomputed from `Kα` at every
/// iteration.
#[allow(clippy::too_many_arguments)]
pub fn pls_fwi_basic(
    alpha0: &[f64],
    m0: &[f64],
    m1: f64,
    kernel: &KernelMatrix,
    kappa: f64,
    survey: &Survey,
    d_obs: &DataCube,
    band: &[usize],
    cfg: &InversionConfig,
) -> Result<(Vec<f64>, BandRecord)> {
    cfg.validate()?;
    let heaviside = HeavisideConfig { kind: cfg.heaviside, epsilon: 0.0, kappa };
    heaviside.validate()?;
    let mut obj = PlsObjective { survey, d_obs, frequencies: band, kernel, m0, m1, heaviside };
    let res = lbfgs_minimize(&mut obj, alpha0, &cfg.optimizer)?;
    match &res.termination {
        Termination::Aborted(reason) => {
            return Err(Error::OptimizerAborted { iterations: res.iterations, reason: reason.clone() });
        }
        t => debug!("pls band: {t:?} after {} iterations, misfit {:e}", res.iterations, res.value),
    }
    let record = BandRecord {
        band: 0,
        frequencies: band.to_vec(),
        kappa: Some(kappa),
        b: None,
        termination: res.termination.clone(),
        iterations: res.iterations,
        initial_misfit: res.history.records.first().map_or(f64::NAN, |r| r.objective),
        final_misfit: res.value,
        history: res.history,
    };
    Ok((res.x, record))
}

/// Sharp (`ε = 0`) model for the given weights.
pub fn sharp_model(kernel: &KernelMatrix, alpha: &[f64], m0: &[f64], m1: f64) -> Result<Vec<f64>> {
    let phi = kernel.apply(alpha)?;
    let sharp = HeavisideConfig { kind: HeavisideKind::CompactSine, epsilon: 0.0, kappa: 1.0 };
    Ok(compose_from_phi(m0, m1, &phi, &sharp)?.0)
}

/// Level-set inversion over ordered bands with κ decaying after each band,
/// finished with a sharp composition.
#[allow(clippy::too_many_arguments)]
pub fn pls_fwi_multiscale(
    alpha0: &[f64],
    m0: &[f64],
    m1: f64,
    kernel: &KernelMatrix,
    survey: &Survey,
    d_obs: &DataCube,
    bands: &[Vec<usize>],
    cfg: &InversionConfig,
) -> Result<InversionRun> {
    check_bands(survey, bands)?;
    let start = sharp_model(kernel, alpha0, m0, m1)?;
    let mut alpha = alpha0.to_vec();
    let mut records = Vec::new();
    for (b, (band, kappa)) in bands.iter().zip(cfg.kappa_schedule(bands.len())).enumerate() {
        let (next, mut rec) = pls_fwi_basic(&alpha, m0, m1, kernel, kappa, survey, d_obs, band, cfg)?;
        rec.band = b;
        info!("pls band {b}: {:?} after {} iterations, misfit {:e}", rec.termination, rec.iterations, rec.final_misfit);
        records.push(rec);
        alpha = next;
    }
    let model = sharp_model(kernel, &alpha, m0, m1)?;
    Ok(InversionRun {
        algorithm: Algorithm::Pls,
        bands: records,
        model,
        background: m0.to_vec(),
        alpha: Some(alpha),
        start,
    })
}

/// Alternates, per band, a bisection for the background slope `b` (with the
/// sharp salt model frozen) and a level-set inversion on the band.
#[allow(clippy::too_many_arguments)]
pub fn joint_invert(
    alpha0: &[f64],
    grid: &Grid2D,
    m1: f64,
    kernel: &KernelMatrix,
    survey: &Survey,
    d_obs: &DataCube,
    bands: &[Vec<usize>],
    cfg: &InversionConfig,
) -> Result<InversionRun> {
    cfg.validate()?;
    check_bands(survey, bands)?;
    let background = |b: f64| linear_background(grid, &BackgroundParam { v_top: cfg.v_top, b });
    let b_start = 0.5 * (cfg.b_interval.0 + cfg.b_interval.1);
    let start = sharp_model(kernel, alpha0, &background(b_start)?, m1)?;
    let mut alpha = alpha0.to_vec();
    let mut m0 = background(b_start)?;
    let mut records = Vec::new();
    for (bi, (band, kappa)) in bands.iter().zip(cfg.kappa_schedule(bands.len())).enumerate() {
        let phi = kernel.apply(&alpha)?;
        let sharp = HeavisideConfig { kind: cfg.heaviside, epsilon: 0.0, kappa: 1.0 };
        let search = bisection_scalar(
            |b| {
                let (m, _) = compose_from_phi(&background(b)?, m1, &phi, &sharp)?;
                Ok(misfit(survey, &m, d_obs, band)?.value)
            },
            cfg.b_interval,
            cfg.b_tol,
        )?;
        if search.no_interior_minimum {
            warn!("band {bi}: no interior minimum for b, using endpoint {}", search.b);
        }
        info!("band {bi}: b = {}", search.b);
        m0 = background(search.b)?;
        let (next, mut rec) = pls_fwi_basic(&alpha, &m0, m1, kernel, kappa, survey, d_obs, band, cfg)?;
        rec.band = bi;
        info!("pls band {bi}: {:?} after {} iterations, misfit {:e}", rec.termination, rec.iterations, rec.final_misfit);
        rec.b = Some(search);
        records.push(rec);
        alpha = next;
    }
    let model = sharp_model(kernel, &alpha, &m0, m1)?;
    Ok(InversionRun { algorithm: Algorithm::PlsJoint, bands: records, model, background: m0, alpha: Some(alpha), start })
}

/// `‖F(m_recon) − d‖ / ‖F(m_start) − d‖` over the given frequencies.
pub fn erf(survey: &Survey, m_recon: &[f64], m_start: &[f64], d_obs: &DataCube, frequencies: &[usize]) -> Result<f64> {
    let den = forward_model_on(survey, m_start, frequencies)?.distance_over(d_obs, frequencies)?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator("error reduction factor"));
    }
    let num = forward_model_on(survey, m_recon, frequencies)?.distance_over(d_obs, frequencies)?;
    Ok(num / den)
}

/// ERF of the true model: the best any reconstruction can reach.
pub fn achievable_erf(
    survey: &Survey,
    m_true: &[f64],
    m_start: &[f64],
    d_obs: &DataCube,
    frequencies: &[usize],
) -> Result<f64> {
    erf(survey, m_true, m_start, d_obs, frequencies)
}

/// `‖m_recon − m_true‖ / ‖m_start − m_true‖` in squared slowness.
pub fn rre(m_recon: &[f64], m_true: &[f64], m_start: &[f64]) -> Result<f64> {
    if m_recon.len() != m_true.len() || m_start.len() != m_true.len() {
        return Err(Error::DimensionMismatch { context: "model", expected: m_true.len(), got: m_recon.len() });
    }
    let dist = |a: &[f64]| a.iter().zip(m_true).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = dist(m_start);
    if den == 0.0 {
        return Err(Error::ZeroDenominator("relative reconstruction error"));
    }
    Ok(dist(m_recon) / den)
}
