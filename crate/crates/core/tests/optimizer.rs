use lsfwi::optim::{
    bisection_scalar, lbfgs_minimize, projected_qn_minimize, Bounds, FnObjective, OptimizeConfig, Termination,
};
use lsfwi::Result;
use proptest::prelude::*;

/// ½ xᵀAx − bᵀx with a fixed SPD matrix.
fn quadratic() -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = [
        [2.0, 0.3, 0.0, 0.1, 0.0],
        [0.0, 1.5, 0.4, 0.0, 0.2],
        [0.1, 0.0, 3.0, 0.5, 0.0],
        [0.0, 0.2, 0.0, 1.0, 0.3],
        [0.3, 0.0, 0.1, 0.0, 2.5],
    ];
    // A = MᵀM + I
    let mut a = vec![vec![0.0; 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            a[i][j] = (0..5).map(|k| m[k][i] * m[k][j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
        }
    }
    (a, vec![1.0, -2.0, 0.5, 3.0, -1.0])
}

fn quad_eval(a: &[Vec<f64>], b: &[f64], x: &[f64]) -> (f64, Vec<f64>) {
    let ax: Vec<f64> = a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect();
    let f = 0.5 * ax.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() - b.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
    let g = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    (f, g)
}

/// Gaussian elimination with partial pivoting.
fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, v)| r.iter().copied().chain([*v]).collect()).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        m.swap(k, p);
        for i in k + 1..n {
            let l = m[i][k] / m[k][k];
            for j in k..=n {
                m[i][j] -= l * m[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        x[k] = (m[k][n] - (k + 1..n).map(|j| m[k][j] * x[j]).sum::<f64>()) / m[k][k];
    }
    x
}

fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (a, b) = (x[0], x[1]);
    let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
    let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
    Ok((f, g))
}

fn nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

#[test]
fn lbfgs_solves_spd_quadratic() {
    let (a, b) = quadratic();
    let exact = dense_solve(&a, &b);
    let cfg = OptimizeConfig { max_iters: 200, grad_tol: 1e-12, ..Default::default() };
    let mut obj = FnObjective(|x: &[f64]| Ok(quad_eval(&a, &b, x)));
    let r = lbfgs_minimize(&mut obj, &[0.0; 5], &cfg).unwrap();
    let err = r.x.iter().zip(&exact).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    assert!(err < 1e-8, "{err}");
    let values: Vec<f64> = r.history.records.iter().map(|r| r.objective).collect();
    assert!(nonincreasing(&values));
}

#[test]
fn lbfgs_rosenbrock() {
    let cfg = OptimizeConfig { max_iters: 500, grad_tol: 1e-12, ..Default::default() };
    let r = lbfgs_minimize(&mut FnObjective(rosenbrock), &[-1.2, 1.0], &cfg).unwrap();
    assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?} {:?}", r.x, r.termination);
    let values: Vec<f64> = r.history.records.iter().map(|r| r.objective).collect();
    assert!(nonincreasing(&values));
}

#[test]
fn lbfgs_at_stationary_point_returns_start() {
    let (a, b) = quadratic();
    let exact = dense_solve(&a, &b);
    let mut obj = FnObjective(|x: &[f64]| {
        let (f, mut g) = quad_eval(&a, &b, x);
        // exact stationarity regardless of rounding
        if x == exact.as_slice() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        Ok((f, g))
    });
    let r = lbfgs_minimize(&mut obj, &exact, &OptimizeConfig::default()).unwrap();
    assert!(r.iterations <= 1);
    assert_eq!(r.x, exact);
    assert_eq!(r.termination, Termination::GradientTolerance);
}

#[test]
fn memory_zero_is_gradient_descent() {
    let (a, b) = quadratic();
    let exact = dense_solve(&a, &b);
    let cfg = OptimizeConfig { max_iters: 2000, memory: 0, grad_tol: 1e-10, ..Default::default() };
    let mut obj = FnObjective(|x: &[f64]| Ok(quad_eval(&a, &b, x)));
    let r = lbfgs_minimize(&mut obj, &[0.0; 5], &cfg).unwrap();
    let err = r.x.iter().zip(&exact).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    // plain descent stalls at the rounding floor of f sooner than L-BFGS
    assert!(err < 1e-6, "{err} {:?} after {}", r.termination, r.iterations);
    let values: Vec<f64> = r.history.records.iter().map(|r| r.objective).collect();
    assert!(nonincreasing(&values));
}

#[test]
fn nonfinite_objective_keeps_last_good_iterate() {
    let mut calls = 0;
    let mut obj = FnObjective(|x: &[f64]| {
        calls += 1;
        if calls > 3 {
            return Ok((f64::NAN, vec![f64::NAN; 1]));
        }
        Ok(((x[0] - 3.0).powi(2), vec![2.0 * (x[0] - 3.0)]))
    });
    let r = lbfgs_minimize(&mut obj, &[0.0], &OptimizeConfig::default()).unwrap();
    assert!(r.value.is_finite());
    assert!(r.x[0].is_finite());
    assert!(matches!(r.termination, Termination::NonFinite | Termination::LineSearchFailure | Termination::GradientTolerance));
}

#[test]
fn callback_error_aborts_with_last_iterate() {
    let mut calls = 0;
    let mut obj = FnObjective(|x: &[f64]| {
        calls += 1;
        if calls > 2 {
            return Err(lsfwi::Error::ZeroData);
        }
        Ok(((x[0] - 3.0).powi(2), vec![2.0 * (x[0] - 3.0)]))
    });
    let r = lbfgs_minimize(&mut obj, &[0.0], &OptimizeConfig::default()).unwrap();
    assert!(matches!(r.termination, Termination::Aborted(_)));
    assert!(r.value.is_finite());
}

#[test]
fn projected_qn_matches_lbfgs_inside_box() {
    let (a, b) = quadratic();
    let cfg = OptimizeConfig { max_iters: 300, grad_tol: 1e-12, ..Default::default() };
    let mut obj = FnObjective(|x: &[f64]| Ok(quad_eval(&a, &b, x)));
    let free = lbfgs_minimize(&mut obj, &[0.0; 5], &cfg).unwrap();
    let bounds = Bounds::uniform(5, -10.0, 10.0);
    let boxed = projected_qn_minimize(&mut obj, &[0.0; 5], &bounds, &cfg).unwrap();
    for (p, q) in free.x.iter().zip(&boxed.x) {
        assert!((p - q).abs() < 1e-6);
    }
}

#[test]
fn projected_qn_active_bounds_satisfy_kkt() {
    let (a, b) = quadratic();
    let exact = dense_solve(&a, &b);
    // clip the box so that the unconstrained optimum lies outside
    let hi: Vec<f64> = exact.iter().map(|v| if *v > 0.0 { 0.5 * v } else { 10.0 }).collect();
    let bounds = Bounds { lo: vec![-10.0; 5], hi: hi.clone() };
    let cfg = OptimizeConfig { max_iters: 500, grad_tol: 1e-10, ..Default::default() };
    let mut feasible = true;
    let mut obj = FnObjective(|x: &[f64]| {
        feasible &= x.iter().zip(&hi).all(|(v, h)| *v <= *h && *v >= -10.0);
        Ok(quad_eval(&a, &b, x))
    });
    let r = projected_qn_minimize(&mut obj, &[0.0; 5], &bounds, &cfg).unwrap();
    assert!(feasible);
    let kkt = bounds.projected_gradient_norm(&r.x, &r.gradient);
    assert!(kkt < 1e-6, "{kkt}");
    assert!(r.x.iter().zip(&hi).any(|(v, h)| v == h));
    let values: Vec<f64> = r.history.records.iter().map(|r| r.objective).collect();
    assert!(nonincreasing(&values));
}

#[test]
fn singleton_box_returns_start() {
    let (a, b) = quadratic();
    let x0 = vec![0.25; 5];
    let bounds = Bounds { lo: x0.clone(), hi: x0.clone() };
    let mut obj = FnObjective(|x: &[f64]| Ok(quad_eval(&a, &b, x)));
    let r = projected_qn_minimize(&mut obj, &x0, &bounds, &OptimizeConfig::default()).unwrap();
    assert_eq!(r.x, x0);
    assert_eq!(r.iterations, 0);
}

#[test]
fn infeasible_start_rejected() {
    let bounds = Bounds::uniform(1, 0.0, 1.0);
    let mut obj = FnObjective(|x: &[f64]| Ok((x[0], vec![1.0])));
    assert!(projected_qn_minimize(&mut obj, &[2.0], &bounds, &OptimizeConfig::default()).is_err());
}

#[test]
fn bisection_on_quadratic() {
    let r = bisection_scalar(|b| Ok((b - 0.8333).powi(2)), (0.5, 1.2), 1e-4).unwrap();
    assert!(!r.no_interior_minimum);
    assert!((r.b - 0.8333).abs() <= 1e-4, "{}", r.b);
    assert!(r.bracket.1 - r.bracket.0 <= 1e-4);
}

#[test]
fn bisection_monotone_flags_endpoint() {
    let r = bisection_scalar(|b| Ok(b * 2.0 + 1.0), (0.5, 1.2), 1e-4).unwrap();
    assert!(r.no_interior_minimum);
    assert_eq!(r.b, 0.5);
    let r = bisection_scalar(|b| Ok(-b), (0.5, 1.2), 1e-4).unwrap();
    assert!(r.no_interior_minimum);
    assert_eq!(r.b, 1.2);
}

#[test]
fn bisection_singleton_interval() {
    let r = bisection_scalar(|b| Ok(b * b), (0.8333, 0.8333), 1e-4).unwrap();
    assert_eq!(r.b, 0.8333);
    assert_eq!(r.evaluations, 1);
}

#[test]
fn history_csv_has_expected_columns() {
    let cfg = OptimizeConfig { max_iters: 3, ..Default::default() };
    let r = lbfgs_minimize(&mut FnObjective(rosenbrock), &[-1.2, 1.0], &cfg).unwrap();
    let mut buf = Vec::new();
    r.history.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "iteration,objective,grad_norm,step,epsilon,evaluations");
    assert_eq!(lines.count(), r.history.len());
}

proptest! {
    #[test]
    fn bisection_finds_minimum_of_shifted_parabola(c in 0.55f64..1.15, w in 0.1f64..10.0) {
        let r = bisection_scalar(|b| Ok(w * (b - c).powi(2)), (0.5, 1.2), 1e-5).unwrap();
        prop_assert!(!r.no_interior_minimum);
        prop_assert!((r.b - c).abs() <= 1e-5);
    }

    #[test]
    fn projected_iterates_stay_feasible(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0) {
        let bounds = Bounds::uniform(2, -1.0, 1.0);
        let mut ok = true;
        let mut obj = FnObjective(|x: &[f64]| {
            ok &= x.iter().all(|v| (-1.0..=1.0).contains(v));
            Ok(((x[0] - c0).powi(2) + 2.0 * (x[1] - c1).powi(2) + x[0] * x[1], vec![2.0 * (x[0] - c0) + x[1], 4.0 * (x[1] - c1) + x[0]]))
        });
        let r = projected_qn_minimize(&mut obj, &[0.0, 0.0], &bounds, &OptimizeConfig::default()).unwrap();
        prop_assert!(ok);
        prop_assert!(bounds.projected_gradient_norm(&r.x, &r.gradient) < 1e-6);
    }
}
