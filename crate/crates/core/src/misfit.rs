//! Least-squares data misfit `½‖F(m) − d‖²` and its adjoint-state gradient.
//!
//! Per frequency and source: a forward solve `A u = q`, an adjoint solve
//! `A^H v = w Pᵀ r` with the weighted residual injected at the receivers,
//! and the accumulation `−ω² Re(s u conj(v))`, where `s` is the row
//! stretching of the absorbing layer. The padded gradient is folded back
//! onto the physical grid with the adjoint of the edge extension.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::helmholtz::{restrict_adjoint, HelmholtzSystem};
use crate::survey::{DataCube, Survey};

#[derive(Debug, Clone, PartialEq)]
pub struct MisfitResult {
    pub value: f64,
    /// Gradient with respect to squared slowness, grid layout.
    pub gradient: Vec<f64>,
    /// `(frequency index, ‖residual‖₂)` in evaluation order.
    pub residual_norms: Vec<(usize, f64)>,
}

struct FrequencyTerm {
    value: f64,
    gradient_padded: Vec<f64>,
}

fn check_data(survey: &Survey, d_obs: &DataCube) -> Result<()> {
    let acq = &survey.acquisition;
    let expected = [acq.n_frequencies(), acq.n_sources(), acq.n_receivers()];
    if d_obs.shape() != expected || d_obs.values.len() != expected.iter().product::<usize>() {
        return Err(Error::DimensionMismatch {
            context: "observed data",
            expected: expected.iter().product(),
            got: d_obs.values.len(),
        });
    }
    Ok(())
}

/// Accumulates `−ω² Re(s u conj(v))` into `acc`.
fn accumulate(sys: &HelmholtzSystem, u: &[Complex64], v: &[Complex64], acc: &mut [f64]) {
    let w2 = sys.omega() * sys.omega();
    for (((a, s), u), v) in acc.iter_mut().zip(sys.stretch()).zip(u).zip(v) {
        *a -= w2 * (s * u * v.conj()).re;
    }
}

fn frequency_term(survey: &Survey, m: &[f64], d_obs: &DataCube, k: usize, with_gradient: bool) -> Result<FrequencyTerm> {
    let sys = survey.factorized_system(m, k).map_err(|e| tag(e, k, 0))?;
    let weight = survey.acquisition.weight(k);
    let n_src = survey.acquisition.n_sources();
    let per_source: Vec<(f64, Option<Vec<f64>>)> = (0..n_src)
        .into_par_iter()
        .map(|s| {
            let q = sys.point_source(survey.source_nodes()[s]);
            let u = sys.solve(&q, false).map_err(|e| tag(e, k, s))?;
            let pred = survey.sample(&sys, &u.values, weight);
            let mut value = 0.0;
            let mut rhs = vec![Complex64::new(0.0, 0.0); sys.dim()];
            for (r, (p, &node)) in pred.iter().zip(survey.receiver_nodes()).enumerate() {
                let res = p - d_obs.get(k, s, r);
                value += res.norm_sqr();
                rhs[sys.padded_index(node)] += res * weight;
            }
            if !with_gradient {
                return Ok((0.5 * value, None));
            }
            let v = sys.solve(&rhs, true).map_err(|e| tag(e, k, s))?;
            let mut g = vec![0.0; sys.dim()];
            accumulate(&sys, &u.values, &v.values, &mut g);
            Ok((0.5 * value, Some(g)))
        })
        .collect::<Result<_>>()?;

    let mut value = 0.0;
    let mut gradient_padded = if with_gradient { vec![0.0; sys.dim()] } else { Vec::new() };
    for (v, g) in per_source {
        value += v;
        if let Some(g) = g {
            for (a, b) in gradient_padded.iter_mut().zip(g) {
                *a += b;
            }
        }
    }
    Ok(FrequencyTerm { value, gradient_padded })
}

fn tag(err: Error, frequency: usize, source_index: usize) -> Error {
    match err {
        Error::Factorization { omega, column } => Error::Solve {
            frequency,
            source_index,
            message: format!("factorization failed at omega = {omega} (column {column})"),
        },
        Error::Solve { message, .. } => Error::Solve { frequency, source_index, message },
        other => other,
    }
}

fn evaluate(survey: &Survey, m: &[f64], d_obs: &DataCube, frequencies: &[usize], with_gradient: bool) -> Result<MisfitResult> {
    survey.check_model(m)?;
    check_data(survey, d_obs)?;
    if let Some(&k) = frequencies.iter().find(|&&k| k >= survey.acquisition.n_frequencies()) {
        return Err(Error::InvalidConfig(format!("frequency index {k} out of range")));
    }
    let terms: Vec<FrequencyTerm> = frequencies
        .par_iter()
        .map(|&k| frequency_term(survey, m, d_obs, k, with_gradient))
        .collect::<Result<_>>()?;
    // fixed summation order: as listed
    let mut value = 0.0;
    let mut residual_norms = Vec::with_capacity(terms.len());
    let padded_len = survey.grid.padded(survey.pml.width).len();
    let mut padded = if with_gradient { vec![0.0; padded_len] } else { Vec::new() };
    for (&k, t) in frequencies.iter().zip(&terms) {
        value += t.value;
        residual_norms.push((k, (2.0 * t.value).sqrt()));
        for (a, b) in padded.iter_mut().zip(&t.gradient_padded) {
            *a += b;
        }
    }
    let gradient = if with_gradient {
        restrict_adjoint(&survey.grid, survey.pml.width, &padded)
    } else {
        Vec::new()
    };
    Ok(MisfitResult { value, gradient, residual_norms })
}

/// Misfit and gradient over the listed frequency indices.
pub fn misfit_and_gradient(survey: &Survey, m: &[f64], d_obs: &DataCube, frequencies: &[usize]) -> Result<MisfitResult> {
    evaluate(survey, m, d_obs, frequencies, true)
}

/// Misfit value only (no adjoint solves); `gradient` is left empty.
pub fn misfit(survey: &Survey, m: &[f64], d_obs: &DataCube, frequencies: &[usize]) -> Result<MisfitResult> {
    evaluate(survey, m, d_obs, frequencies, false)
}

/// Linearized data perturbation `J δm` (Born approximation) on the listed frequencies.
pub fn jacobian_apply(survey: &Survey, m: &[f64], dm: &[f64], frequencies: &[usize]) -> Result<DataCube> {
    survey.check_model(m)?;
    survey.check_model(dm)?;
    let dm_ext = crate::helmholtz::extend_field(&survey.grid, survey.pml.width, dm);
    let slices: Vec<(usize, Vec<Complex64>)> = frequencies
        .par_iter()
        .map(|&k| {
            let sys = survey.factorized_system(m, k).map_err(|e| tag(e, k, 0))?;
            let w2 = sys.omega() * sys.omega();
            let weight = survey.acquisition.weight(k);
            let mut slice = Vec::new();
            for (s, &node) in survey.source_nodes().iter().enumerate() {
                let u = sys.solve(&sys.point_source(node), false).map_err(|e| tag(e, k, s))?;
                let rhs: Vec<Complex64> = u
                    .values
                    .iter()
                    .zip(sys.stretch())
                    .zip(&dm_ext)
                    .map(|((u, st), d)| -(u * st * (w2 * d)))
                    .collect();
                let du = sys.solve(&rhs, false).map_err(|e| tag(e, k, s))?;
                slice.extend(survey.sample(&sys, &du.values, weight));
            }
            Ok((k, slice))
        })
        .collect::<Result<_>>()?;
    let mut cube = DataCube::zeros(&survey.acquisition);
    let per = survey.acquisition.n_sources() * survey.acquisition.n_receivers();
    for (k, slice) in slices {
        cube.values[k * per..(k + 1) * per].copy_from_slice(&slice);
    }
    Ok(cube)
}

/// Adjoint Jacobian `J* δd` on the listed frequencies.
pub fn jacobian_adjoint_apply(survey: &Survey, m: &[f64], dd: &DataCube, frequencies: &[usize]) -> Result<Vec<f64>> {
    survey.check_model(m)?;
    check_data(survey, dd)?;
    let padded_terms: Vec<Vec<f64>> = frequencies
        .par_iter()
        .map(|&k| {
            let sys = survey.factorized_system(m, k).map_err(|e| tag(e, k, 0))?;
            let weight = survey.acquisition.weight(k);
            let mut acc = vec![0.0; sys.dim()];
            for (s, &node) in survey.source_nodes().iter().enumerate() {
                let u = sys.solve(&sys.point_source(node), false).map_err(|e| tag(e, k, s))?;
                let mut rhs = vec![Complex64::new(0.0, 0.0); sys.dim()];
                for (r, &rn) in survey.receiver_nodes().iter().enumerate() {
                    rhs[sys.padded_index(rn)] += dd.get(k, s, r) * weight;
                }
                let v = sys.solve(&rhs, true).map_err(|e| tag(e, k, s))?;
                accumulate(&sys, &u.values, &v.values, &mut acc);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut padded = vec![0.0; survey.grid.padded(survey.pml.width).len()];
    for t in padded_terms {
        for (a, b) in padded.iter_mut().zip(t) {
            *a += b;
        }
    }
    Ok(restrict_adjoint(&survey.grid, survey.pml.width, &padded))
}

/// One row of a finite-difference gradient check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdComparison {
    pub direction: usize,
    pub step: f64,
    pub finite_difference: f64,
    pub adjoint: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub rows: Vec<FdComparison>,
    /// Least-squares slope of `log(error)` against `log(step)` per direction,
    /// using steps whose error is above the rounding floor.
    pub slopes: Vec<Option<f64>>,
}

impl FdReport {
    /// Smallest relative error attained for each direction.
    pub fn best_errors(&self) -> Vec<f64> {
        let n = self.slopes.len();
        (0..n)
            .map(|d| {
                self.rows
                    .iter()
                    .filter(|r| r.direction == d)
                    .map(|r| r.relative_error)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

/// Compares central differences of any scalar objective against
/// `⟨gradient, direction⟩` for each direction and step.
pub fn fd_check<F>(mut objective: F, x: &[f64], gradient: &[f64], directions: &[Vec<f64>], steps: &[f64]) -> Result<FdReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for (d, dir) in directions.iter().enumerate() {
        if dir.len() != x.len() {
            return Err(Error::DimensionMismatch { context: "direction", expected: x.len(), got: dir.len() });
        }
        let adjoint: f64 = gradient.iter().zip(dir).map(|(g, v)| g * v).sum();
        let mut pts = Vec::new();
        for &t in steps {
            let plus: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a + t * b).collect();
            let minus: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a - t * b).collect();
            let fd = (objective(&plus)? - objective(&minus)?) / (2.0 * t);
            let abs_err = (fd - adjoint).abs();
            let relative_error = if adjoint != 0.0 { abs_err / adjoint.abs() } else { abs_err };
            rows.push(FdComparison { direction: d, step: t, finite_difference: fd, adjoint, relative_error });
            pts.push((t, abs_err));
        }
        slopes.push(convergence_slope(&pts));
    }
    Ok(FdReport { rows, slopes })
}

/// Log-log slope through the leading run of points (largest steps first)
/// over which the error keeps decreasing with the step.
fn convergence_slope(points: &[(f64, f64)]) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|&(t, e)| t > 0.0 && e > 0.0).collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut run = Vec::new();
    for p in pts {
        if let Some(&(_, prev)) = run.last() {
            if p.1 >= prev {
                break;
            }
        }
        run.push(p);
    }
    if run.len() < 2 {
        return None;
    }
    let n = run.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = run.iter().map(|(t, e)| (t.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Finite-difference check of [`misfit_and_gradient`] along each direction and step.
pub fn fd_gradient_oracle(
    survey: &Survey,
    m: &[f64],
    d_obs: &DataCube,
    frequencies: &[usize],
    directions: &[Vec<f64>],
    steps: &[f64],
) -> Result<FdReport> {
    if directions.is_empty() {
        return Err(Error::InvalidConfig("at least one direction is required".into()));
    }
    let base = misfit_and_gradient(survey, m, d_obs, frequencies)?;
    fd_check(|x| Ok(misfit(survey, x, d_obs, frequencies)?.value), m, &base.gradient, directions, steps)
}
