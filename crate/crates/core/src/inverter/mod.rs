//! Model-based inversion of the compressor.
//!
//! Given the compressed sample `y[n]`, the exact parameters, and the state
//! `(v[n-1], g[n-1])`, each sample is resolved by hypothesis and check:
//!
//! 1. Below threshold (`f = 1`): the gain recursion is known in closed form,
//!    so `|x| = |y| / g` and the envelope can be recomputed directly.
//! 2. Above threshold: for each attack/release pair of the two smoothers, the
//!    envelope is the root of the characteristic function
//!
//!    `xi(v) = (gamma*kappa*v^-S + (1-gamma)*g_prev)^p * (v^p - (1-beta)*v_prev^p) - beta*|y|^p`
//!
//!    and a hypothesis is kept only if the branches it assumed are the ones
//!    the forward recursion would have taken.

pub mod solver;

use serde::{Deserialize, Serialize};

use crate::clip::AudioClip;
use crate::compressor::{pow_p, root_p, Branch, Coefficients, CompressorState};
use crate::params::DrcParams;

pub use solver::{
    solve, solve_hybrid, solve_newton, ScalarResidual, Solution, SolveError, SolveOptions, SolverKind, V_FLOOR,
};

/// Relative slack on branch and regime comparisons. At a branch boundary
/// both hypotheses produce the same state, so accepting either is exact.
const BRANCH_SLACK: f64 = 1e-12;

/// Offset applied to the threshold when seeding the root search.
const INIT_OFFSET: f64 = 1e-9;

/// Branch hypotheses in tie-break order.
const HYPOTHESES: [(Branch, Branch); 4] = [
    (Branch::Attack, Branch::Attack),
    (Branch::Attack, Branch::Release),
    (Branch::Release, Branch::Attack),
    (Branch::Release, Branch::Release),
];

/// The characteristic function for one sample and one branch hypothesis.
#[derive(Debug, Clone, Copy)]
pub struct CharacteristicFn {
    gamma: f64,
    kappa: f64,
    exponent: f64,
    p: u8,
    g_prev: f64,
    /// `(1 - beta) * v_prev^p`
    carry: f64,
    /// `beta * |y|^p`
    target: f64,
}

impl CharacteristicFn {
    pub fn new(v_prev: f64, g_prev: f64, y_abs: f64, params: &DrcParams, beta: f64, gamma: f64) -> Self {
        let d = params.derived();
        let p = params.detector().exponent();
        Self::from_parts(v_prev, g_prev, y_abs, d.kappa, d.exponent, p, beta, gamma)
    }

    #[allow(clippy::too_many_arguments)]
    fn from_parts(
        v_prev: f64,
        g_prev: f64,
        y_abs: f64,
        kappa: f64,
        exponent: f64,
        p: u8,
        beta: f64,
        gamma: f64,
    ) -> Self {
        Self {
            gamma,
            kappa,
            exponent,
            p,
            g_prev,
            carry: (1.0 - beta) * pow_p(v_prev, p),
            target: beta * pow_p(y_abs, p),
        }
    }

    pub fn value(&self, v: f64) -> f64 {
        self.eval(v).0
    }
}

impl ScalarResidual for CharacteristicFn {
    #[inline]
    fn eval(&self, v: f64) -> (f64, f64) {
        let v_s = v.powf(-self.exponent);
        let gain = self.gamma * self.kappa * v_s + (1.0 - self.gamma) * self.g_prev;
        let d_gain = -self.exponent * self.gamma * self.kappa * v_s / v;
        let energy = pow_p(v, self.p) - self.carry;
        let d_energy = if self.p == 2 { 2.0 * v } else { 1.0 };
        let gain_p = pow_p(gain, self.p);
        let d_gain_p = if self.p == 2 { 2.0 * gain * d_gain } else { d_gain };
        (gain_p * energy - self.target, d_gain_p * energy + gain_p * d_energy)
    }
}

/// Evaluates the characteristic function at candidate envelope `v`.
#[allow(clippy::too_many_arguments)]
pub fn characteristic_fn(
    v: f64,
    v_prev: f64,
    g_prev: f64,
    y_abs: f64,
    params: &DrcParams,
    beta: f64,
    gamma: f64,
) -> f64 {
    CharacteristicFn::new(v_prev, g_prev, y_abs, params, beta, gamma).value(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    BelowThreshold,
    AboveThreshold,
    Degenerate,
}

/// Outcome of inverting one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleDiagnostic {
    pub regime: Regime,
    /// `|xi|` at the accepted root; 0 below threshold.
    pub residual: f64,
    pub iterations: usize,
    /// Number of consistent above-threshold hypotheses.
    pub consistent: u8,
    /// Number of root searches that did not converge.
    pub nonconverged: u8,
    pub beta_branch: Branch,
    pub gamma_branch: Branch,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InversionDiagnostics {
    pub degenerate_count: u64,
    pub max_residual: f64,
    pub branch_ambiguity_count: u64,
    pub solver_iterations_total: u64,
    pub samples: u64,
    #[serde(skip)]
    pub above_threshold_count: u64,
    #[serde(skip)]
    pub residual_sum: f64,
    #[serde(skip)]
    pub nonconverged_count: u64,
}

impl InversionDiagnostics {
    pub fn record(&mut self, d: &SampleDiagnostic) {
        self.samples += 1;
        self.solver_iterations_total += d.iterations as u64;
        self.nonconverged_count += d.nonconverged as u64;
        match d.regime {
            Regime::Degenerate => self.degenerate_count += 1,
            Regime::AboveThreshold => {
                self.above_threshold_count += 1;
                self.residual_sum += d.residual;
                self.max_residual = self.max_residual.max(d.residual);
                if d.consistent > 1 {
                    self.branch_ambiguity_count += 1;
                }
            }
            Regime::BelowThreshold => {}
        }
    }

    pub fn degenerate_rate(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.degenerate_count as f64 / self.samples as f64
        }
    }

    /// Mean `|xi|` over above-threshold samples.
    pub fn mean_residual(&self) -> f64 {
        if self.above_threshold_count == 0 {
            0.0
        } else {
            self.residual_sum / self.above_threshold_count as f64
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("diagnostics serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvertOptions {
    pub solver: SolverKind,
    pub solve: SolveOptions,
}

impl Default for InvertOptions {
    fn default() -> Self {
        Self {
            solver: SolverKind::HybridLeastSquares,
            solve: SolveOptions::default(),
        }
    }
}

impl InvertOptions {
    pub fn new(solver: SolverKind, tol: f64) -> Self {
        Self {
            solver,
            solve: SolveOptions::with_tol(tol),
        }
    }
}

struct Candidate {
    v: f64,
    f: f64,
    residual: f64,
    beta_branch: Branch,
    gamma_branch: Branch,
}

/// Sample-by-sample inverter carrying the recovered state.
#[derive(Debug, Clone)]
pub struct Inverter {
    coefs: Coefficients,
    linear_threshold: f64,
    exponent: f64,
    kappa: f64,
    p: u8,
    opts: InvertOptions,
    state: CompressorState,
}

fn agrees(is_attack: bool, a: f64, b: f64) -> bool {
    let slack = BRANCH_SLACK * a.abs().max(b.abs());
    if (a - b).abs() <= slack {
        return true;
    }
    is_attack == (a > b)
}

impl Inverter {
    pub fn new(params: &DrcParams, sample_rate_hz: u32, opts: InvertOptions) -> Self {
        let d = params.derived();
        Self {
            coefs: Coefficients::new(params, sample_rate_hz as f64).expect("validated params and positive sample rate"),
            linear_threshold: d.linear_threshold,
            exponent: d.exponent,
            kappa: d.kappa,
            p: params.detector().exponent(),
            opts,
            state: CompressorState::default(),
        }
    }

    pub fn with_state(mut self, state: CompressorState) -> Self {
        self.state = state;
        self
    }

    pub fn state(&self) -> CompressorState {
        self.state
    }

    fn below_threshold(&self, y_abs: f64) -> Option<(f64, f64, Branch, Branch)> {
        let CompressorState { v_prev, g_prev } = self.state;
        let gamma_branch = if 1.0 > g_prev { Branch::Attack } else { Branch::Release };
        let gamma = self.coefs.gamma(gamma_branch);
        let g = gamma + (1.0 - gamma) * g_prev;
        let x_abs = y_abs / g;
        let beta_branch = if x_abs > v_prev {
            Branch::Attack
        } else {
            Branch::Release
        };
        let beta = self.coefs.beta(beta_branch);
        let v = root_p(
            beta * pow_p(x_abs, self.p) + (1.0 - beta) * pow_p(v_prev, self.p),
            self.p,
        );
        (v <= self.linear_threshold * (1.0 + BRANCH_SLACK)).then_some((v, g, beta_branch, gamma_branch))
    }

    fn hypothesis(&self, y_abs: f64, beta_branch: Branch, gamma_branch: Branch) -> (Option<Candidate>, usize, bool) {
        let CompressorState { v_prev, g_prev } = self.state;
        let beta = self.coefs.beta(beta_branch);
        let gamma = self.coefs.gamma(gamma_branch);
        let xi = CharacteristicFn::from_parts(v_prev, g_prev, y_abs, self.kappa, self.exponent, self.p, beta, gamma);
        let v_init = v_prev.max(self.linear_threshold * (1.0 + INIT_OFFSET));
        let sol = match solve(self.opts.solver, &xi, v_init, &self.opts.solve) {
            Ok(sol) => sol,
            Err(e) => return (None, e.iterations(), true),
        };
        let v = sol.root;
        let consistent = v > self.linear_threshold * (1.0 - BRANCH_SLACK)
            // |x|^p >= 0, i.e. v^p >= (1 - beta) v_prev^p
            && pow_p(v, self.p) >= xi.carry * (1.0 - BRANCH_SLACK)
            // |x| > v_prev  <=>  v > v_prev
            && agrees(beta_branch == Branch::Attack, v, v_prev);
        if !consistent {
            return (None, sol.iterations, false);
        }
        let f = self.kappa * v.powf(-self.exponent);
        if !agrees(gamma_branch == Branch::Attack, f, g_prev) {
            return (None, sol.iterations, false);
        }
        (
            Some(Candidate {
                v,
                f: f.min(1.0),
                residual: sol.residual.abs(),
                beta_branch,
                gamma_branch,
            }),
            sol.iterations,
            false,
        )
    }

    /// Recovers `x[n]` from `y[n]` and advances the state.
    pub fn invert_sample(&mut self, y: f64) -> (f64, SampleDiagnostic) {
        let y_abs = y.abs();
        if let Some((v, g, beta_branch, gamma_branch)) = self.below_threshold(y_abs) {
            self.state = CompressorState { v_prev: v, g_prev: g };
            return (
                y / g,
                SampleDiagnostic {
                    regime: Regime::BelowThreshold,
                    residual: 0.0,
                    iterations: 0,
                    consistent: 0,
                    nonconverged: 0,
                    beta_branch,
                    gamma_branch,
                },
            );
        }

        let mut best: Option<Candidate> = None;
        let mut iterations = 0;
        let mut consistent = 0u8;
        let mut nonconverged = 0u8;
        for (beta_branch, gamma_branch) in HYPOTHESES {
            let (cand, iters, failed) = self.hypothesis(y_abs, beta_branch, gamma_branch);
            iterations += iters;
            nonconverged += failed as u8;
            if let Some(c) = cand {
                consistent += 1;
                if best.as_ref().is_none_or(|b| c.residual < b.residual) {
                    best = Some(c);
                }
            }
        }

        let g_prev = self.state.g_prev;
        match best {
            Some(c) => {
                let gamma = self.coefs.gamma(c.gamma_branch);
                let g = gamma * c.f + (1.0 - gamma) * g_prev;
                self.state = CompressorState { v_prev: c.v, g_prev: g };
                (
                    y / g,
                    SampleDiagnostic {
                        regime: Regime::AboveThreshold,
                        residual: c.residual,
                        iterations,
                        consistent,
                        nonconverged,
                        beta_branch: c.beta_branch,
                        gamma_branch: c.gamma_branch,
                    },
                )
            }
            None => {
                let x = y / g_prev;
                let (beta_branch, gamma_branch) = self.advance_forward(x.abs());
                (
                    x,
                    SampleDiagnostic {
                        regime: Regime::Degenerate,
                        residual: 0.0,
                        iterations,
                        consistent,
                        nonconverged,
                        beta_branch,
                        gamma_branch,
                    },
                )
            }
        }
    }

    /// Runs the forward recursion on a fallback estimate so the state stays
    /// consistent with the samples actually emitted.
    fn advance_forward(&mut self, x_abs: f64) -> (Branch, Branch) {
        let CompressorState { v_prev, g_prev } = self.state;
        let beta_branch = if x_abs > v_prev {
            Branch::Attack
        } else {
            Branch::Release
        };
        let beta = self.coefs.beta(beta_branch);
        let v = root_p(
            beta * pow_p(x_abs, self.p) + (1.0 - beta) * pow_p(v_prev, self.p),
            self.p,
        );
        let f = if v > self.linear_threshold {
            (self.linear_threshold / v).powf(self.exponent)
        } else {
            1.0
        };
        let gamma_branch = if f > g_prev { Branch::Attack } else { Branch::Release };
        let gamma = self.coefs.gamma(gamma_branch);
        self.state = CompressorState {
            v_prev: v,
            g_prev: gamma * f + (1.0 - gamma) * g_prev,
        };
        (beta_branch, gamma_branch)
    }
}

/// Free-function form of [`Inverter::invert_sample`].
pub fn invert_sample(
    y: f64,
    state: CompressorState,
    params: &DrcParams,
    sample_rate_hz: u32,
    opts: InvertOptions,
) -> (f64, CompressorState, SampleDiagnostic) {
    let mut inv = Inverter::new(params, sample_rate_hz, opts).with_state(state);
    let (x, diag) = inv.invert_sample(y);
    (x, inv.state(), diag)
}

/// Inverts a whole clip from the default initial state.
pub fn invert(y: &AudioClip, params: &DrcParams, opts: InvertOptions) -> (AudioClip, InversionDiagnostics) {
    let (x, diag, _) = run(y, params, opts, false);
    (x, diag)
}

/// Like [`invert`], also returning the recovered state after every sample.
pub fn invert_traced(
    y: &AudioClip,
    params: &DrcParams,
    opts: InvertOptions,
) -> (
    AudioClip,
    InversionDiagnostics,
    Vec<(CompressorState, SampleDiagnostic)>,
) {
    run(y, params, opts, true)
}

fn run(
    y: &AudioClip,
    params: &DrcParams,
    opts: InvertOptions,
    keep: bool,
) -> (
    AudioClip,
    InversionDiagnostics,
    Vec<(CompressorState, SampleDiagnostic)>,
) {
    let mut inv = Inverter::new(params, y.sample_rate_hz(), opts);
    let mut diag = InversionDiagnostics::default();
    let mut out = Vec::with_capacity(y.len());
    let mut states = Vec::with_capacity(if keep { y.len() } else { 0 });
    for &s in y.samples() {
        let (x, d) = inv.invert_sample(s);
        diag.record(&d);
        out.push(x);
        if keep {
            states.push((inv.state(), d));
        }
    }
    (AudioClip::from_trusted(out, y.sample_rate_hz()), diag, states)
}
