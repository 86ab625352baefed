//! Scalar root finders for the characteristic function.
//!
//! Both solvers work on `v > v_floor`. Newton-Raphson stops at the first
//! iterate with `|f(v)| <= tol` and takes one more full step if that step
//! stays inside the tolerance. The least-squares solver, once inside the
//! tolerance, keeps taking undamped steps only while they strictly reduce
//! `|f|`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower clamp for iterates; the characteristic function is singular at 0.
pub const V_FLOOR: f64 = 1e-12;

const MAX_POLISH_STEPS: usize = 4;
const MIN_DERIVATIVE: f64 = 1e-300;

/// A scalar function with analytic derivative.
pub trait ScalarResidual {
    /// Returns `(f(v), f'(v))`.
    fn eval(&self, v: f64) -> (f64, f64);
}

impl<F: Fn(f64) -> (f64, f64)> ScalarResidual for F {
    fn eval(&self, v: f64) -> (f64, f64) {
        self(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    NewtonRaphson,
    HybridLeastSquares,
}

impl SolverKind {
    pub const ALL: [SolverKind; 2] = [SolverKind::NewtonRaphson, SolverKind::HybridLeastSquares];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::NewtonRaphson => "newton",
            SolverKind::HybridLeastSquares => "hybrid",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "newton" => Ok(SolverKind::NewtonRaphson),
            "hybrid" => Ok(SolverKind::HybridLeastSquares),
            other => Err(format!("unknown solver `{other}` (expected newton or hybrid)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub v_floor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 100,
            v_floor: V_FLOOR,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution {
    pub root: f64,
    pub iterations: usize,
    /// `f(root)`, signed.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SolveError {
    #[error("no convergence after {iterations} iterations (best v = {best_v}, residual = {best_residual})")]
    NoConvergence {
        best_v: f64,
        best_residual: f64,
        iterations: usize,
    },
}

impl SolveError {
    pub fn iterations(&self) -> usize {
        match *self {
            SolveError::NoConvergence { iterations, .. } => iterations,
        }
    }
}

pub fn solve<R: ScalarResidual>(
    kind: SolverKind,
    f: &R,
    v_init: f64,
    opts: &SolveOptions,
) -> Result<Solution, SolveError> {
    match kind {
        SolverKind::NewtonRaphson => solve_newton(f, v_init, opts),
        SolverKind::HybridLeastSquares => solve_hybrid(f, v_init, opts),
    }
}

struct Best {
    v: f64,
    r: f64,
}

impl Best {
    fn update(&mut self, v: f64, r: f64) {
        if r.abs() < self.r.abs() {
            self.v = v;
            self.r = r;
        }
    }

    fn fail(&self, iterations: usize) -> SolveError {
        SolveError::NoConvergence {
            best_v: self.v,
            best_residual: self.r,
            iterations,
        }
    }
}

/// Takes extra Newton steps from an accepted point while they strictly
/// reduce `|f|`.
fn polish<R: ScalarResidual>(f: &R, mut v: f64, mut r: f64, mut d: f64, floor: f64) -> (f64, f64, usize) {
    let mut steps = 0;
    while steps < MAX_POLISH_STEPS && r != 0.0 && d.abs() >= MIN_DERIVATIVE {
        let v_new = v - r / d;
        if !(v_new > floor) || v_new == v {
            break;
        }
        let (r_new, d_new) = f.eval(v_new);
        steps += 1;
        if !(r_new.abs() < r.abs()) {
            break;
        }
        v = v_new;
        r = r_new;
        d = d_new;
    }
    (v, r, steps)
}

/// Plain Newton-Raphson with iterates clamped to `v >= v_floor`.
pub fn solve_newton<R: ScalarResidual>(f: &R, v_init: f64, opts: &SolveOptions) -> Result<Solution, SolveError> {
    let mut v = v_init.max(opts.v_floor);
    let (mut r, mut d) = f.eval(v);
    let mut best = Best { v, r };
    let mut iterations = 0;
    loop {
        if !r.is_finite() || !d.is_finite() {
            return Err(best.fail(iterations));
        }
        if r.abs() <= opts.tol {
            if r != 0.0 && d.abs() >= MIN_DERIVATIVE {
                let v_next = (v - r / d).max(opts.v_floor);
                let (r_next, _) = f.eval(v_next);
                if r_next.abs() <= opts.tol {
                    return Ok(Solution {
                        root: v_next,
                        iterations: iterations + 1,
                        residual: r_next,
                    });
                }
            }
            return Ok(Solution {
                root: v,
                iterations,
                residual: r,
            });
        }
        if iterations >= opts.max_iter || d.abs() < MIN_DERIVATIVE {
            return Err(best.fail(iterations));
        }
        v = (v - r / d).max(opts.v_floor);
        (r, d) = f.eval(v);
        iterations += 1;
        best.update(v, r);
    }
}

/// Damped least-squares on `phi(v) = f(v)^2 / 2`.
///
/// The step `-f / (f' (1 + lambda))` is the Newton step for `lambda -> 0` and
/// a scaled steepest-descent step on `phi` for large `lambda`. `lambda` is
/// adapted from the ratio of actual to predicted reduction of `phi`; steps
/// that would leave `v > v_floor` are rejected and damped further.
pub fn solve_hybrid<R: ScalarResidual>(f: &R, v_init: f64, opts: &SolveOptions) -> Result<Solution, SolveError> {
    let mut v = v_init.max(opts.v_floor);
    let (mut r, mut d) = f.eval(v);
    let mut best = Best { v, r };
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut iterations = 0;
    loop {
        if !r.is_finite() || !d.is_finite() {
            return Err(best.fail(iterations));
        }
        if r.abs() <= opts.tol {
            let (root, residual, extra) = polish(f, v, r, d, opts.v_floor);
            return Ok(Solution {
                root,
                iterations: iterations + extra,
                residual,
            });
        }
        if iterations >= opts.max_iter || d.abs() < MIN_DERIVATIVE {
            return Err(best.fail(iterations));
        }
        iterations += 1;
        let step = -r / (d * (1.0 + lambda));
        let v_try = v + step;
        if !(v_try > opts.v_floor) {
            lambda *= nu;
            nu *= 2.0;
            continue;
        }
        let (r_try, d_try) = f.eval(v_try);
        let linear = r + d * step;
        let predicted = 0.5 * (r * r - linear * linear);
        let actual = 0.5 * (r * r - r_try * r_try);
        let rho = if predicted > 0.0 { actual / predicted } else { -1.0 };
        if rho > 0.0 && r_try.is_finite() {
            v = v_try;
            r = r_try;
            d = d_try;
            best.update(v, r);
            lambda *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
            nu = 2.0;
        } else {
            lambda *= nu;
            nu *= 2.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KAPPA: f64 = 0.31622776601683794;

    /// p=1, instant coefficients, L=-20, R=2, v_prev=0, |y|=0.2: root at 0.4.
    fn closed_form(v: f64) -> (f64, f64) {
        (KAPPA * v.sqrt() - 0.2, 0.5 * KAPPA / v.sqrt())
    }

    #[test]
    fn newton_closed_form() {
        let s = solve_newton(&closed_form, 0.05, &SolveOptions::default()).unwrap();
        assert!((s.root - 0.4).abs() < 1e-10);
        assert!(s.residual.abs() <= 1e-12);
    }

    #[test]
    fn hybrid_closed_form() {
        let s = solve_hybrid(&closed_form, 0.05, &SolveOptions::default()).unwrap();
        assert!((s.root - 0.4).abs() < 1e-10);
        assert!(s.residual.abs() <= 1e-12);
    }

    #[test]
    fn hybrid_from_pathological_start() {
        let s = solve_hybrid(&closed_form, 1e-6, &SolveOptions::default()).unwrap();
        assert!((s.root - 0.4).abs() < 1e-10);
        // and from far above the root, where a full Newton step lands below zero
        let s = solve_hybrid(&closed_form, 50.0, &SolveOptions::default()).unwrap();
        assert!((s.root - 0.4).abs() < 1e-10);
    }

    #[test]
    fn immediate_acceptance() {
        for kind in SolverKind::ALL {
            let s = solve(kind, &closed_form, 0.4, &SolveOptions::with_tol(1e-9)).unwrap();
            assert_eq!(s.iterations, 0);
            assert_eq!(s.root, 0.4);
        }
    }

    #[test]
    fn no_root_reports_no_convergence() {
        let positive = |v: f64| (v + 1.0, 1.0);
        for kind in SolverKind::ALL {
            match solve(kind, &positive, 0.5, &SolveOptions::default()) {
                Err(SolveError::NoConvergence {
                    best_v, best_residual, ..
                }) => {
                    assert!(best_residual > 0.0);
                    assert!(best_v >= V_FLOOR);
                }
                Ok(s) => panic!("{kind:?} converged to {s:?}"),
            }
        }
    }

    #[test]
    fn flat_derivative_stops() {
        let flat = |_: f64| (1.0, 0.0);
        assert!(solve_newton(&flat, 1.0, &SolveOptions::default()).is_err());
        assert!(solve_hybrid(&flat, 1.0, &SolveOptions::default()).is_err());
    }

    #[test]
    fn solver_names_parse() {
        assert_eq!("newton".parse::<SolverKind>().unwrap(), SolverKind::NewtonRaphson);
        assert_eq!("hybrid".parse::<SolverKind>().unwrap(), SolverKind::HybridLeastSquares);
        assert!("bisect".parse::<SolverKind>().is_err());
    }
}
