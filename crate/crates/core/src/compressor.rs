//! Sample-accurate feed-forward compressor.
//!
//! Per sample: an attack/release envelope follower on `|x|^p`, a static gain
//! law `f = (l / v)^(1 - 1/R)` above threshold, an attack/release smoother on
//! the gain, and finally `y = x * g`.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clip::AudioClip;
use crate::params::DrcParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompressorError {
    #[error("time constant and sample rate must be positive (tau = {tau_s}, fs = {fs})")]
    NonPositiveInput { tau_s: f64, fs: f64 },
}

/// Which time constant a smoother used on a given sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Attack,
    Release,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Attack => "attack",
            Branch::Release => "release",
        }
    }
}

/// Recursion state carried between samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressorState {
    pub v_prev: f64,
    pub g_prev: f64,
}

impl Default for CompressorState {
    /// Silence before the first sample, unity gain.
    fn default() -> Self {
        Self {
            v_prev: 0.0,
            g_prev: 1.0,
        }
    }
}

/// One-pole coefficient `1 - exp(-2.2 / (fs * tau))`.
pub fn smoothing_coefficient(tau_s: f64, fs: f64) -> Result<f64, CompressorError> {
    if !(tau_s > 0.0) || !(fs > 0.0) {
        return Err(CompressorError::NonPositiveInput { tau_s, fs });
    }
    Ok(-(-2.2 / (fs * tau_s)).exp_m1())
}

/// Smoothing coefficients for a parameter set at a fixed sample rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub beta_att: f64,
    pub beta_rel: f64,
    pub gamma_att: f64,
    pub gamma_rel: f64,
}

impl Coefficients {
    pub fn new(params: &DrcParams, fs: f64) -> Result<Self, CompressorError> {
        Ok(Self {
            beta_att: smoothing_coefficient(params.tau_v_att_s(), fs)?,
            beta_rel: smoothing_coefficient(params.tau_v_rel_s(), fs)?,
            gamma_att: smoothing_coefficient(params.tau_g_att_s(), fs)?,
            gamma_rel: smoothing_coefficient(params.tau_g_rel_s(), fs)?,
        })
    }

    pub fn beta(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Attack => self.beta_att,
            Branch::Release => self.beta_rel,
        }
    }

    pub fn gamma(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Attack => self.gamma_att,
            Branch::Release => self.gamma_rel,
        }
    }
}

/// `a^p` for the two detector exponents.
#[inline]
pub(crate) fn pow_p(a: f64, p: u8) -> f64 {
    if p == 2 {
        a * a
    } else {
        a
    }
}

/// `a^(1/p)` for the two detector exponents.
#[inline]
pub(crate) fn root_p(a: f64, p: u8) -> f64 {
    if p == 2 {
        a.sqrt()
    } else {
        a
    }
}

/// Envelope recursion with an explicit coefficient.
#[inline]
pub(crate) fn envelope_with(x_abs: f64, v_prev: f64, beta: f64, p: u8) -> f64 {
    root_p(beta * pow_p(x_abs, p) + (1.0 - beta) * pow_p(v_prev, p), p)
}

/// Static gain law `(l/v)^S` above the linear threshold `l`, unity otherwise.
#[inline]
pub(crate) fn factor_with(v: f64, linear_threshold: f64, exponent: f64) -> f64 {
    if v > linear_threshold {
        (linear_threshold / v).powf(exponent)
    } else {
        1.0
    }
}

pub fn envelope_step(x_abs: f64, v_prev: f64, params: &DrcParams, fs: f64) -> (f64, Branch) {
    let branch = if x_abs > v_prev {
        Branch::Attack
    } else {
        Branch::Release
    };
    let tau = match branch {
        Branch::Attack => params.tau_v_att_s(),
        Branch::Release => params.tau_v_rel_s(),
    };
    let beta = smoothing_coefficient(tau, fs).expect("validated params and positive fs");
    (envelope_with(x_abs, v_prev, beta, params.detector().exponent()), branch)
}

pub fn compression_factor(v: f64, params: &DrcParams) -> f64 {
    factor_with(v, params.linear_threshold(), params.exponent())
}

pub fn gain_step(f: f64, g_prev: f64, params: &DrcParams, fs: f64) -> (f64, Branch) {
    let branch = if f > g_prev { Branch::Attack } else { Branch::Release };
    let tau = match branch {
        Branch::Attack => params.tau_g_att_s(),
        Branch::Release => params.tau_g_rel_s(),
    };
    let gamma = smoothing_coefficient(tau, fs).expect("validated params and positive fs");
    (gamma * f + (1.0 - gamma) * g_prev, branch)
}

/// Internal state of one processed sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub v: f64,
    pub f: f64,
    pub g: f64,
    pub beta_branch: Branch,
    pub gamma_branch: Branch,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CompressorTrace {
    pub records: Vec<TraceRecord>,
}

impl CompressorTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// State entering sample `n`, i.e. after sample `n - 1`.
    pub fn state_before(&self, n: usize) -> CompressorState {
        match n {
            0 => CompressorState::default(),
            _ => {
                let r = &self.records[n - 1];
                CompressorState {
                    v_prev: r.v,
                    g_prev: r.g,
                }
            }
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,v,f,g,beta_branch,gamma_branch")?;
        for (n, r) in self.records.iter().enumerate() {
            writeln!(
                out,
                "{n},{:.16e},{:.16e},{:.16e},{},{}",
                r.v,
                r.f,
                r.g,
                r.beta_branch.as_str(),
                r.gamma_branch.as_str()
            )?;
        }
        Ok(())
    }
}

/// Stateful compressor with precomputed coefficients.
#[derive(Debug, Clone)]
pub struct Compressor {
    coefs: Coefficients,
    linear_threshold: f64,
    exponent: f64,
    p: u8,
    state: CompressorState,
}

impl Compressor {
    pub fn new(params: &DrcParams, sample_rate_hz: u32) -> Self {
        let d = params.derived();
        Self {
            coefs: Coefficients::new(params, sample_rate_hz as f64).expect("validated params and positive sample rate"),
            linear_threshold: d.linear_threshold,
            exponent: d.exponent,
            p: params.detector().exponent(),
            state: CompressorState::default(),
        }
    }

    pub fn state(&self) -> CompressorState {
        self.state
    }

    /// Processes one sample, returning the output and the internal record.
    #[inline]
    pub fn process(&mut self, x: f64) -> (f64, TraceRecord) {
        let CompressorState { v_prev, g_prev } = self.state;
        let x_abs = x.abs();
        let beta_branch = if x_abs > v_prev {
            Branch::Attack
        } else {
            Branch::Release
        };
        let v = envelope_with(x_abs, v_prev, self.coefs.beta(beta_branch), self.p);
        let f = factor_with(v, self.linear_threshold, self.exponent);
        let gamma_branch = if f > g_prev { Branch::Attack } else { Branch::Release };
        let gamma = self.coefs.gamma(gamma_branch);
        let g = gamma * f + (1.0 - gamma) * g_prev;
        self.state = CompressorState { v_prev: v, g_prev: g };
        (
            x * g,
            TraceRecord {
                v,
                f,
                g,
                beta_branch,
                gamma_branch,
            },
        )
    }
}

/// Compresses `x` starting from the default state. The trace is returned
/// only when requested.
pub fn compress(x: &AudioClip, params: &DrcParams, with_trace: bool) -> (AudioClip, Option<CompressorTrace>) {
    let mut comp = Compressor::new(params, x.sample_rate_hz());
    let mut out = Vec::with_capacity(x.len());
    let mut trace = with_trace.then(|| CompressorTrace {
        records: Vec::with_capacity(x.len()),
    });
    for &s in x.samples() {
        let (y, rec) = comp.process(s);
        out.push(y);
        if let Some(t) = trace.as_mut() {
            t.records.push(rec);
        }
    }
    (AudioClip::from_trusted(out, x.sample_rate_hz()), trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_catalog;
    use crate::params::RawParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const FS: f64 = 44100.0;

    /// Time constant giving coefficient `c` at `FS`.
    fn tau_for(c: f64) -> f64 {
        -2.2 / (FS * (1.0 - c).ln())
    }

    fn params(threshold_db: f64, ratio: f64, tv: (f64, f64), tg: (f64, f64), p: u8) -> DrcParams {
        RawParams {
            threshold_db,
            ratio,
            tau_v_att_s: tv.0,
            tau_v_rel_s: tv.1,
            tau_g_att_s: tg.0,
            tau_g_rel_s: tg.1,
            detector: p,
        }
        .validate()
        .unwrap()
    }

    fn profile_a() -> DrcParams {
        *builtin_catalog("small").unwrap().params("A").unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let c = smoothing_coefficient(0.005, FS).unwrap();
        assert_relative_eq!(c, 1.0 - (-2.2f64 / 220.5).exp(), max_relative = 1e-14);
        assert!((c - 0.0099277).abs() < 1e-7);
        let c = smoothing_coefficient(0.435, FS).unwrap();
        assert!((c - 1.1468e-4).abs() < 1e-8);
        assert!(smoothing_coefficient(1e-9, FS).unwrap() > 1.0 - 1e-12);
        assert!(smoothing_coefficient(0.0, FS).is_err());
        assert!(smoothing_coefficient(0.01, 0.0).is_err());
    }

    #[test]
    fn envelope_examples() {
        let p = profile_a();
        assert_eq!(envelope_step(0.0, 0.0, &p, FS), (0.0, Branch::Release));

        let half = tau_for(0.5);
        let p1 = params(-20.0, 2.0, (half, half), (0.01, 0.1), 1);
        let (v, b) = envelope_step(1.0, 0.0, &p1, FS);
        assert_relative_eq!(v, 0.5, max_relative = 1e-12);
        assert_eq!(b, Branch::Attack);

        let fast = params(-20.0, 2.0, (1e-9, 1e-9), (0.01, 0.1), 2);
        let (v, b) = envelope_step(0.3, 0.9, &fast, FS);
        assert!((v - 0.3).abs() < 1e-9);
        assert_eq!(b, Branch::Release);
    }

    #[test]
    fn envelope_tie_takes_release() {
        let (_, b) = envelope_step(0.2, 0.2, &profile_a(), FS);
        assert_eq!(b, Branch::Release);
    }

    #[test]
    fn factor_examples() {
        let p = params(-20.0, 2.0, (0.005, 0.005), (0.01, 0.1), 2);
        let l = p.linear_threshold();
        assert_eq!(compression_factor(l, &p), 1.0);
        assert_relative_eq!(compression_factor(2.0 * l, &p), 0.5f64.sqrt(), max_relative = 1e-14);
        assert_eq!(compression_factor(0.0, &p), 1.0);
    }

    #[test]
    fn gain_examples() {
        let p = profile_a();
        assert_eq!(gain_step(0.7, 0.7, &p, FS).0, 0.7);

        let fast = params(-20.0, 2.0, (0.005, 0.005), (1e-9, 1e-9), 2);
        let (g, b) = gain_step(0.6, 1.0, &fast, FS);
        assert!((g - 0.6).abs() < 1e-9);
        assert_eq!(b, Branch::Release);

        let half = tau_for(0.5);
        let p = params(-20.0, 2.0, (0.005, 0.005), (half, half), 2);
        let (g, b) = gain_step(0.5, 1.0, &p, FS);
        assert_relative_eq!(g, 0.75, max_relative = 1e-12);
        assert_eq!(b, Branch::Release);
    }

    #[test]
    fn silence_is_a_fixed_point() {
        let x = AudioClip::silence(1000, 44100);
        let (y, trace) = compress(&x, &profile_a(), true);
        assert!(y.samples().iter().all(|&s| s == 0.0));
        assert!(trace.unwrap().records.iter().all(|r| r.g == 1.0));
    }

    #[test]
    fn below_threshold_passes_through() {
        let x = AudioClip::new(vec![0.01; 4410], 44100).unwrap();
        let (y, trace) = compress(&x, &profile_a(), true);
        assert_eq!(y.samples(), x.samples());
        assert!(trace.unwrap().records.iter().all(|r| r.f == 1.0 && r.g == 1.0));
    }

    #[test]
    fn trace_is_optional() {
        let x = AudioClip::new(vec![0.5; 10], 44100).unwrap();
        assert!(compress(&x, &profile_a(), false).1.is_none());
        assert_eq!(compress(&x, &profile_a(), true).1.unwrap().len(), 10);
    }

    #[test]
    fn trace_csv_format() {
        let x = AudioClip::new(vec![0.5, -0.25], 44100).unwrap();
        let (_, trace) = compress(&x, &profile_a(), true);
        let mut buf = Vec::new();
        trace.unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "n,v,f,g,beta_branch,gamma_branch");
        assert_eq!(lines.len(), 3);
        let fields: Vec<_> = lines[1].split(',').collect();
        assert_eq!(fields[0], "0");
        assert_eq!(fields[4], "attack");
        let mantissa = fields[1].split('e').next().unwrap().replace(['.', '-'], "");
        assert!(mantissa.len() >= 12);
    }

    fn signal() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 1..400)
    }

    proptest! {
        #[test]
        fn gain_is_bounded_and_output_never_louder(xs in signal(), idx in 0usize..5) {
            let cat = builtin_catalog("small").unwrap();
            let (_, p) = cat.profiles().nth(idx).unwrap();
            let x = AudioClip::new(xs, 44100).unwrap();
            let (y, trace) = compress(&x, p, true);
            let trace = trace.unwrap();
            prop_assert_eq!(trace.len(), x.len());
            for (n, r) in trace.records.iter().enumerate() {
                prop_assert!(r.v >= 0.0 && r.v <= 1.0);
                prop_assert!(r.f > 0.0 && r.f <= 1.0);
                prop_assert!(r.g > 0.0 && r.g <= 1.0);
                prop_assert!(y.samples()[n].abs() <= x.samples()[n].abs());
                let prev = trace.state_before(n);
                prop_assert_eq!(r.beta_branch == Branch::Attack, x.samples()[n].abs() > prev.v_prev);
                prop_assert_eq!(r.gamma_branch == Branch::Attack, r.f > prev.g_prev);
            }
        }

        #[test]
        fn compression_is_deterministic(xs in signal()) {
            let x = AudioClip::new(xs, 44100).unwrap();
            let a = compress(&x, &profile_a(), false).0;
            let b = compress(&x, &profile_a(), false).0;
            prop_assert!(a.samples().iter().zip(b.samples()).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}
