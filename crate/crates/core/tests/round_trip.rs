use drc_core::compressor::Coefficients;
use drc_core::corpus::desk_clip;
use drc_core::inverter::{characteristic_fn, invert_traced, Regime};
use drc_core::{builtin_catalog, compress, AudioClip, Detector, DrcParams, InvertOptions, SolverKind};
use proptest::prelude::*;

/// Direct transcription of the forward recursion, kept independent of the
/// library's precomputed coefficients.
fn reference_compress(x: &[f64], fs: f64, p: &DrcParams) -> Vec<f64> {
    let coef = |tau: f64| 1.0 - (-2.2 / (fs * tau)).exp();
    let q = p.detector().exponent() as i32;
    let l = 10f64.powf(p.threshold_db() / 20.0);
    let s = 1.0 - 1.0 / p.ratio();
    let (mut v, mut g) = (0.0f64, 1.0f64);
    x.iter()
        .map(|&xn| {
            let beta = if xn.abs() > v {
                coef(p.tau_v_att_s())
            } else {
                coef(p.tau_v_rel_s())
            };
            v = (beta * xn.abs().powi(q) + (1.0 - beta) * v.powi(q)).powf(1.0 / q as f64);
            let f = if v > l { (l / v).powf(s) } else { 1.0 };
            let gamma = if f > g {
                coef(p.tau_g_att_s())
            } else {
                coef(p.tau_g_rel_s())
            };
            g = gamma * f + (1.0 - gamma) * g;
            xn * g
        })
        .collect()
}

fn params_strategy() -> impl Strategy<Value = DrcParams> {
    (
        -50.0f64..0.0,
        1.0f64..20.0,
        0.2f64..200.0,
        0.2f64..500.0,
        0.5f64..500.0,
        5.0f64..2000.0,
        prop::bool::ANY,
    )
        .prop_map(|(l, r, va, vr, ga, gr, rms)| {
            let det = if rms { Detector::Rms } else { Detector::Peak };
            DrcParams::from_ms(l, r, (va, vr), (ga, gr), det).unwrap()
        })
}

#[test]
fn forward_matches_reference_recursion() {
    let cat = builtin_catalog("large").unwrap();
    let x = desk_clip(21, 0.25, 44100);
    for (label, p) in cat.profiles() {
        let (y, _) = compress(&x, p, false);
        let r = reference_compress(x.samples(), 44100.0, p);
        for (a, b) in y.samples().iter().zip(&r) {
            assert!((a - b).abs() <= 1e-12, "profile {label}: {a} vs {b}");
        }
    }
}

#[test]
fn large_catalog_round_trip() {
    let cat = builtin_catalog("large").unwrap();
    let x = desk_clip(22, 0.25, 44100);
    for (label, p) in cat.profiles() {
        let (y, _) = compress(&x, p, false);
        let (xh, diag, _) = invert_traced(&y, p, InvertOptions::default());
        assert_eq!(diag.degenerate_count, 0, "profile {label}");
        let err = xh
            .samples()
            .iter()
            .zip(x.samples())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-9, "profile {label}: max error {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_recovers_input(p in params_strategy(), seed in 0u64..1000, solver in prop::sample::select(SolverKind::ALL.to_vec())) {
        let x = desk_clip(seed, 0.05, 16000);
        let (y, _) = compress(&x, &p, false);
        let (xh, diag, _) = invert_traced(&y, &p, InvertOptions::new(solver, 1e-12));
        prop_assert_eq!(diag.degenerate_count, 0);
        for (a, b) in xh.samples().iter().zip(x.samples()) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn characteristic_function_vanishes_on_traces(p in params_strategy(), seed in 0u64..1000) {
        let fs = 16000;
        let x = desk_clip(seed, 0.05, fs);
        let (y, trace) = compress(&x, &p, true);
        let trace = trace.unwrap();
        let coefs = Coefficients::new(&p, fs as f64).unwrap();
        let l = p.linear_threshold();
        for (n, rec) in trace.records.iter().enumerate() {
            if rec.v > l {
                let st = trace.state_before(n);
                let xi = characteristic_fn(
                    rec.v,
                    st.v_prev,
                    st.g_prev,
                    y.samples()[n].abs(),
                    &p,
                    coefs.beta(rec.beta_branch),
                    coefs.gamma(rec.gamma_branch),
                );
                prop_assert!(xi.abs() < 1e-9, "n={} xi={}", n, xi);
            }
        }
    }

    #[test]
    fn recovered_state_tracks_forward_state(p in params_strategy(), seed in 0u64..1000) {
        let x = desk_clip(seed, 0.03, 8000);
        let (y, trace) = compress(&x, &p, true);
        let trace = trace.unwrap();
        let (_, _, states) = invert_traced(&y, &p, InvertOptions::default());
        for (rec, (st, d)) in trace.records.iter().zip(&states) {
            prop_assert!(d.regime != Regime::Degenerate);
            prop_assert!((rec.v - st.v_prev).abs() <= 1e-8 * rec.v.max(1e-3));
            prop_assert!((rec.g - st.g_prev).abs() <= 1e-8);
        }
    }
}

#[test]
fn below_threshold_clip_passes_through_both_ways() {
    let p = DrcParams::from_ms(0.0, 4.0, (5.0, 5.0), (10.0, 100.0), Detector::Peak).unwrap();
    let x = AudioClip::new((0..400).map(|n| 0.9 * (n as f64 * 0.05).sin()).collect(), 8000).unwrap();
    let (y, _) = compress(&x, &p, false);
    assert_eq!(y, x);
    let (xh, diag, _) = invert_traced(&y, &p, InvertOptions::default());
    assert_eq!(xh, x);
    assert_eq!(diag.solver_iterations_total, 0);
}
