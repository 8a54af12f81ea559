//! Smooth optimizers: L-BFGS with a strong-Wolfe line search, a projected
//! quasi-Newton method for box constraints, and a derivative-sign bisection
//! for scalar problems.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    pub max_iters: usize,
    /// Number of stored curvature pairs; 0 gives steepest descent.
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Stop when the (projected) gradient max-norm drops below this.
    pub grad_tol: f64,
    /// Largest max-norm change of `x` allowed on the very first trial step.
    pub initial_step: f64,
    pub max_line_search: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self { max_iters: 100, memory: 10, c1: 1e-4, c2: 0.9, grad_tol: 1e-10, initial_step: 1.0, max_line_search: 30 }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "line-search constants need 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if !(self.initial_step > 0.0) || self.max_line_search == 0 {
            return Err(Error::InvalidConfig("initial step and line-search budget must be positive".into()));
        }
        Ok(())
    }
}

/// Objective with gradient. `refresh` is called at every accepted iterate and
/// may change the objective itself (for instance a Heaviside width); it
/// returns `true` when it did, so the optimizer re-evaluates.
pub trait Objective {
    fn evaluate(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)>;

    fn refresh(&mut self, _x: &[f64]) -> Result<bool> {
        Ok(false)
    }

    /// Value recorded in the history's `epsilon` column.
    fn epsilon(&self) -> Option<f64> {
        None
    }
}

/// Adapts a closure returning `(value, gradient)`.
pub struct FnObjective<F>(pub F);

impl<F> Objective for FnObjective<F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn evaluate(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        (self.0)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub epsilon: Option<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<IterationRecord>,
}

impl History {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "objective", "grad_norm", "step", "epsilon", "evaluations"])
            .map_err(csv_err)?;
        for r in &self.records {
            w.write_record([
                r.iteration.to_string(),
                format!("{:e}", r.objective),
                format!("{:e}", r.grad_norm),
                format!("{:e}", r.step),
                r.epsilon.map(|e| format!("{e:e}")).unwrap_or_default(),
                r.evaluations.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "kebab-case")]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    LineSearchFailure,
    /// Objective or gradient became non-finite; the last good iterate is kept.
    NonFinite,
    /// The objective callback failed; the last good iterate is kept.
    Aborted(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub history: History,
    pub termination: Termination,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn all_finite(f: f64, g: &[f64]) -> bool {
    f.is_finite() && g.iter().all(|v| v.is_finite())
}

/// Curvature pairs and the two-loop recursion.
struct Memory {
    cap: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl Memory {
    fn new(cap: usize) -> Self {
        Self { cap, pairs: VecDeque::with_capacity(cap) }
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        if self.cap == 0 {
            return;
        }
        let sy = dot(&s, &y);
        if !(sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt()) {
            return;
        }
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `−H g`, restricted to coordinates where `free` is true.
    fn direction(&self, g: &[f64], free: Option<&[bool]>) -> Vec<f64> {
        let mask = |v: &mut Vec<f64>| {
            if let Some(f) = free {
                for (x, &keep) in v.iter_mut().zip(f) {
                    if !keep {
                        *x = 0.0;
                    }
                }
            }
        };
        let mut q = g.to_vec();
        mask(&mut q);
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            mask(&mut q);
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            for v in &mut q {
                *v *= gamma;
            }
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
            mask(&mut q);
        }
        q.iter().map(|v| -v).collect()
    }
}

struct Trial {
    t: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

enum SearchOutcome {
    Accepted(Trial),
    Failed,
    NonFinite,
    Aborted(String),
}

struct Counter<'a, O: Objective + ?Sized> {
    obj: &'a mut O,
    evaluations: usize,
}

impl<O: Objective + ?Sized> Counter<'_, O> {
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluations += 1;
        let (f, g) = self.obj.evaluate(x)?;
        if g.len() != x.len() {
            return Err(Error::DimensionMismatch { context: "objective gradient", expected: x.len(), got: g.len() });
        }
        Ok((f, g))
    }
}

/// Strong-Wolfe line search (bracketing followed by zoom with safeguarded
/// cubic interpolation).
fn wolfe_search<O: Objective + ?Sized>(
    obj: &mut Counter<'_, O>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    t_init: f64,
    cfg: &OptimizeConfig,
) -> SearchOutcome {
    let dg0 = dot(g0, d);
    let point = |t: f64| -> Vec<f64> { x.iter().zip(d).map(|(a, b)| a + t * b).collect() };
    let mut budget = cfg.max_line_search;
    let mut eval = |t: f64, budget: &mut usize| -> std::result::Result<Option<Trial>, String> {
        if *budget == 0 {
            return Ok(None);
        }
        *budget -= 1;
        let xt = point(t);
        match obj.eval(&xt) {
            Ok((f, g)) => Ok(Some(Trial { t, x: xt, f, g })),
            Err(e) => Err(e.to_string()),
        }
    };

    let mut prev = Trial { t: 0.0, x: x.to_vec(), f: f0, g: g0.to_vec() };
    let mut t = t_init;
    let mut shrinks = 0;
    loop {
        let cur = match eval(t, &mut budget) {
            Ok(Some(c)) => c,
            Ok(None) => return SearchOutcome::Failed,
            Err(e) => return SearchOutcome::Aborted(e),
        };
        if !all_finite(cur.f, &cur.g) {
            // treat as an overly long step
            shrinks += 1;
            if shrinks > 20 {
                return SearchOutcome::NonFinite;
            }
            t = 0.5 * (prev.t + t);
            continue;
        }
        let dg = dot(&cur.g, d);
        if cur.f > f0 + cfg.c1 * t * dg0 || (prev.t > 0.0 && cur.f >= prev.f) {
            return zoom(&mut eval, &mut budget, prev, cur, f0, dg0, d, cfg);
        }
        if dg.abs() <= -cfg.c2 * dg0 {
            return SearchOutcome::Accepted(cur);
        }
        if dg >= 0.0 {
            return zoom(&mut eval, &mut budget, cur, prev, f0, dg0, d, cfg);
        }
        let next = 2.0 * t;
        prev = cur;
        t = next;
    }
}

#[allow(clippy::too_many_arguments)]
fn zoom<E>(
    eval: &mut E,
    budget: &mut usize,
    mut lo: Trial,
    mut hi: Trial,
    f0: f64,
    dg0: f64,
    d: &[f64],
    cfg: &OptimizeConfig,
) -> SearchOutcome
where
    E: FnMut(f64, &mut usize) -> std::result::Result<Option<Trial>, String>,
{
    loop {
        let (a, b) = (lo.t.min(hi.t), lo.t.max(hi.t));
        if (b - a) <= 1e-14 * b.max(1e-300) {
            break;
        }
        let dlo = dot(&lo.g, d);
        let dhi = dot(&hi.g, d);
        let mut t = cubic_min(lo.t, lo.f, dlo, hi.t, hi.f, dhi).unwrap_or(0.5 * (lo.t + hi.t));
        let margin = 0.1 * (b - a);
        if !(t > a + margin && t < b - margin) {
            t = 0.5 * (lo.t + hi.t);
        }
        let cur = match eval(t, budget) {
            Ok(Some(c)) => c,
            Ok(None) => break,
            Err(e) => return SearchOutcome::Aborted(e),
        };
        if !all_finite(cur.f, &cur.g) {
            hi = Trial { f: f64::INFINITY, ..cur };
            continue;
        }
        let dg = dot(&cur.g, d);
        if cur.f > f0 + cfg.c1 * t * dg0 || cur.f >= lo.f {
            hi = cur;
        } else {
            if dg.abs() <= -cfg.c2 * dg0 {
                return SearchOutcome::Accepted(cur);
            }
            if dg * (hi.t - lo.t) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // budget exhausted: settle for sufficient decrease if the best point has it
    if lo.t > 0.0 && lo.f <= f0 + cfg.c1 * lo.t * dg0 {
        SearchOutcome::Accepted(lo)
    } else {
        SearchOutcome::Failed
    }
}

/// Minimizer of the cubic interpolating values and slopes at `a` and `b`.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    if !(fa.is_finite() && fb.is_finite()) {
        return None;
    }
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

/// Unconstrained L-BFGS.
pub fn lbfgs_minimize<O: Objective + ?Sized>(obj: &mut O, x0: &[f64], cfg: &OptimizeConfig) -> Result<OptimResult> {
    cfg.validate()?;
    let mut counter = Counter { obj, evaluations: 0 };
    counter.obj.refresh(x0)?;
    let (mut f, mut g) = counter.eval(x0)?;
    if !all_finite(f, &g) {
        return Err(Error::InvalidConfig("objective is not finite at the starting point".into()));
    }
    let mut x = x0.to_vec();
    let mut mem = Memory::new(cfg.memory);
    let mut history = History::default();
    history.records.push(IterationRecord {
        iteration: 0,
        objective: f,
        grad_norm: max_norm(&g),
        step: 0.0,
        epsilon: counter.obj.epsilon(),
        evaluations: counter.evaluations,
    });
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    for it in 1..=cfg.max_iters {
        if max_norm(&g) <= cfg.grad_tol {
            termination = Termination::GradientTolerance;
            break;
        }
        let mut d = mem.direction(&g, None);
        if dot(&d, &g) >= 0.0 {
            mem.clear();
            d = g.iter().map(|v| -v).collect();
        }
        let t0 = if mem.is_empty() { cfg.initial_step / max_norm(&d) } else { 1.0 };
        let trial = match wolfe_search(&mut counter, &x, f, &g, &d, t0, cfg) {
            SearchOutcome::Accepted(t) => t,
            SearchOutcome::Failed => {
                if !mem.is_empty() {
                    // retry once along steepest descent
                    mem.clear();
                    let d: Vec<f64> = g.iter().map(|v| -v).collect();
                    match wolfe_search(&mut counter, &x, f, &g, &d, cfg.initial_step / max_norm(&d), cfg) {
                        SearchOutcome::Accepted(t) => t,
                        _ => {
                            termination = Termination::LineSearchFailure;
                            break;
                        }
                    }
                } else {
                    termination = Termination::LineSearchFailure;
                    break;
                }
            }
            SearchOutcome::NonFinite => {
                termination = Termination::NonFinite;
                break;
            }
            SearchOutcome::Aborted(e) => {
                termination = Termination::Aborted(e);
                break;
            }
        };
        let s: Vec<f64> = trial.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        mem.push(s, y);
        x = trial.x;
        f = trial.f;
        g = trial.g;
        iterations = it;
        match counter.obj.refresh(&x) {
            Ok(true) => match counter.eval(&x) {
                Ok((fr, gr)) if all_finite(fr, &gr) => {
                    f = fr;
                    g = gr;
                }
                Ok(_) => {
                    termination = Termination::NonFinite;
                    break;
                }
                Err(e) => {
                    termination = Termination::Aborted(e.to_string());
                    break;
                }
            },
            Ok(false) => {}
            Err(e) => return Err(e),
        }
        history.records.push(IterationRecord {
            iteration: it,
            objective: f,
            grad_norm: max_norm(&g),
            step: trial.t,
            epsilon: counter.obj.epsilon(),
            evaluations: counter.evaluations,
        });
    }
    if termination == Termination::MaxIterations && max_norm(&g) <= cfg.grad_tol {
        termination = Termination::GradientTolerance;
    }
    Ok(OptimResult { x, value: f, gradient: g, history, termination, iterations })
}

/// Elementwise box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo; n], hi: vec![hi; n] }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.lo).zip(&self.hi).map(|((v, l), h)| v.max(*l).min(*h)).collect()
    }

    /// `‖x − P(x − g)‖∞`, zero exactly at KKT points.
    pub fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        let step: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
        let p = self.project(&step);
        x.iter().zip(&p).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    fn validate(&self, x0: &[f64]) -> Result<()> {
        if self.lo.len() != x0.len() || self.hi.len() != x0.len() {
            return Err(Error::DimensionMismatch { context: "bounds", expected: x0.len(), got: self.lo.len() });
        }
        for (i, ((l, h), x)) in self.lo.iter().zip(&self.hi).zip(x0).enumerate() {
            if !(l <= h) || *x < *l || *x > *h {
                return Err(Error::InvalidConfig(format!("start point infeasible at index {i}")));
            }
        }
        Ok(())
    }
}

/// Box-constrained quasi-Newton: an L-BFGS direction on the free variables
/// (those not held at a bound by the gradient) followed by a projected
/// Armijo backtracking search. Every iterate is feasible.
pub fn projected_qn_minimize<O: Objective + ?Sized>(
    obj: &mut O,
    x0: &[f64],
    bounds: &Bounds,
    cfg: &OptimizeConfig,
) -> Result<OptimResult> {
    cfg.validate()?;
    bounds.validate(x0)?;
    let mut counter = Counter { obj, evaluations: 0 };
    let mut x = x0.to_vec();
    counter.obj.refresh(&x)?;
    let (mut f, mut g) = counter.eval(&x)?;
    if !all_finite(f, &g) {
        return Err(Error::InvalidConfig("objective is not finite at the starting point".into()));
    }
    let mut history = History::default();
    history.records.push(IterationRecord {
        iteration: 0,
        objective: f,
        grad_norm: bounds.projected_gradient_norm(&x, &g),
        step: 0.0,
        epsilon: counter.obj.epsilon(),
        evaluations: counter.evaluations,
    });
    let mut mem = Memory::new(cfg.memory);
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    for it in 1..=cfg.max_iters {
        let pg = bounds.projected_gradient_norm(&x, &g);
        if pg <= cfg.grad_tol {
            termination = Termination::GradientTolerance;
            break;
        }
        let width = |i: usize| bounds.hi[i] - bounds.lo[i];
        let tol = |i: usize| 1e-12 * width(i).max(x[i].abs()).max(1e-300);
        let free: Vec<bool> = (0..x.len())
            .map(|i| {
                let at_lo = x[i] - bounds.lo[i] <= tol(i) && g[i] > 0.0;
                let at_hi = bounds.hi[i] - x[i] <= tol(i) && g[i] < 0.0;
                width(i) > 0.0 && !(at_lo || at_hi)
            })
            .collect();
        let mut d = mem.direction(&g, Some(&free));
        if !(dot(&d, &g) < 0.0) {
            mem.clear();
            d = g.iter().zip(&free).map(|(v, &k)| if k { -v } else { 0.0 }).collect();
        }
        if max_norm(&d) == 0.0 {
            termination = Termination::GradientTolerance;
            break;
        }
        let mut t = if mem.is_empty() { cfg.initial_step / max_norm(&d) } else { 1.0 };
        let mut accepted = None;
        let mut abort = None;
        for _ in 0..cfg.max_line_search {
            let trial: Vec<f64> = bounds.project(&x.iter().zip(&d).map(|(a, b)| a + t * b).collect::<Vec<_>>());
            let decrease: f64 = g.iter().zip(trial.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
            match counter.eval(&trial) {
                Ok((ft, gt)) => {
                    if all_finite(ft, &gt) && ft <= f + cfg.c1 * decrease && decrease < 0.0 {
                        accepted = Some((t, trial, ft, gt));
                        break;
                    }
                }
                Err(e) => {
                    abort = Some(e.to_string());
                    break;
                }
            }
            t *= 0.5;
        }
        if let Some(e) = abort {
            termination = Termination::Aborted(e);
            break;
        }
        let Some((t, xn, fn_, gn)) = accepted else {
            if !mem.is_empty() {
                mem.clear();
                continue;
            }
            termination = Termination::LineSearchFailure;
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        mem.push(s, y);
        x = xn;
        f = fn_;
        g = gn;
        iterations = it;
        if counter.obj.refresh(&x)? {
            match counter.eval(&x) {
                Ok((fr, gr)) if all_finite(fr, &gr) => {
                    f = fr;
                    g = gr;
                }
                Ok(_) => {
                    termination = Termination::NonFinite;
                    break;
                }
                Err(e) => {
                    termination = Termination::Aborted(e.to_string());
                    break;
                }
            }
        }
        history.records.push(IterationRecord {
            iteration: it,
            objective: f,
            grad_norm: bounds.projected_gradient_norm(&x, &g),
            step: t,
            epsilon: counter.obj.epsilon(),
            evaluations: counter.evaluations,
        });
    }
    if termination == Termination::MaxIterations && bounds.projected_gradient_norm(&x, &g) <= cfg.grad_tol {
        termination = Termination::GradientTolerance;
    }
    Ok(OptimResult { x, value: f, gradient: g, history, termination, iterations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionResult {
    pub b: f64,
    pub value: f64,
    /// Final bracket.
    pub bracket: (f64, f64),
    /// Set when the numerical derivative never changes sign inside the interval.
    pub no_interior_minimum: bool,
    pub evaluations: usize,
}

/// Bisection on the sign of a symmetric finite-difference derivative with
/// step `1e-3·(hi − lo)`, assuming a unimodal objective.
pub fn bisection_scalar<F>(mut objective: F, interval: (f64, f64), tol: f64) -> Result<BisectionResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = interval;
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidConfig(format!("invalid bisection interval [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("bisection tolerance must be positive, got {tol}")));
    }
    let mut evaluations = 0;
    let mut eval = |b: f64| -> Result<f64> {
        evaluations += 1;
        let v = objective(b)?;
        if !v.is_finite() {
            return Err(Error::InvalidConfig(format!("objective not finite at b = {b}")));
        }
        Ok(v)
    };
    if lo == hi {
        let value = eval(lo)?;
        return Ok(BisectionResult { b: lo, value, bracket: (lo, hi), no_interior_minimum: false, evaluations: 1 });
    }
    let delta = 1e-3 * (hi - lo);
    let f_lo = eval(lo)?;
    let f_hi = eval(hi)?;
    let rising_at_lo = eval(lo + delta)? >= f_lo;
    let falling_at_hi = eval(hi - delta)? >= f_hi;
    if rising_at_lo || falling_at_hi {
        let (b, value) = if f_lo <= f_hi { (lo, f_lo) } else { (hi, f_hi) };
        return Ok(BisectionResult { b, value, bracket: (lo, hi), no_interior_minimum: true, evaluations });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let h = delta.min(0.25 * (hi - lo));
        let slope = eval(mid + h)? - eval(mid - h)?;
        if slope > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let b = 0.5 * (lo + hi);
    let value = eval(b)?;
    Ok(BisectionResult { b, value, bracket: (lo, hi), no_interior_minimum: false, evaluations })
}
