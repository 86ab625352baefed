use std::path::Path;
use std::process::{Command, Output};

use drc_core::corpus::{desk_clip, write_audio, SampleFormatKind};

fn drc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drc"))
        .args(args)
        .output()
        .expect("run drc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_input(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("x.wav");
    write_audio(&desk_clip(77, 1.0, 22050), &path, SampleFormatKind::Float32).unwrap();
    path
}

#[test]
fn compress_invert_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_input(dir.path());
    let (y, xh, trace) = (
        dir.path().join("y.wav"),
        dir.path().join("xh.wav"),
        dir.path().join("t.csv"),
    );
    let o = drc(&[
        "compress",
        "--profile",
        "A",
        "--input",
        p(&x),
        "--output",
        p(&y),
        "--trace",
        p(&trace),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(&trace)
        .unwrap()
        .starts_with("n,v,f,g,beta_branch,gamma_branch\n"));

    let o = drc(&["invert", "--profile", "A", "--input", p(&y), "--output", p(&xh)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let diag: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(diag["degenerate_count"], 0);

    let report = dir.path().join("r.json");
    let o = drc(&["eval", "--ref", p(&x), "--est", p(&xh), "--report", p(&report)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r["mse"].as_f64().unwrap() <= 1e-5);
    assert!(r.get("mel_l2").is_some() && r.get("si_sdr_db").is_some());
}

#[test]
fn newton_solver_flag() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_input(dir.path());
    let y = dir.path().join("y.wav");
    assert!(
        drc(&["compress", "--profile", "3", "--input", p(&x), "--output", p(&y)])
            .status
            .success()
    );
    let o = drc(&[
        "--solver",
        "newton",
        "invert",
        "--profile",
        "3",
        "--input",
        p(&y),
        "--output",
        p(&dir.path().join("n.wav")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = drc(&[
        "invert",
        "--solver",
        "bisect",
        "--profile",
        "3",
        "--input",
        p(&y),
        "--output",
        "z.wav",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn params_file() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_input(dir.path());
    let params = dir.path().join("p.json");
    std::fs::write(
        &params,
        r#"{"threshold_db": -30, "ratio": 4, "tau_v_att_ms": 5, "tau_v_rel_ms": 5, "tau_g_att_ms": 10, "tau_g_rel_ms": 200, "detector": 2}"#,
    )
    .unwrap();
    let y = dir.path().join("y.wav");
    let o = drc(&["compress", "--params", p(&params), "--input", p(&x), "--output", p(&y)]);
    assert!(o.status.success(), "{}", stderr(&o));

    std::fs::write(&params, r#"{"threshold_db": -30, "ratio": 0.5, "tau_v_att_ms": 5, "tau_v_rel_ms": 5, "tau_g_att_ms": 10, "tau_g_rel_ms": 200, "detector": 2}"#).unwrap();
    let o = drc(&["compress", "--params", p(&params), "--input", p(&x), "--output", p(&y)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ratio"));
}

#[test]
fn schedule_prints_snr() {
    for (epoch, expected) in [("0", "65"), ("20", "60"), ("40", "55"), ("10000", "20")] {
        let o = drc(&["augment", "schedule", "--epoch", epoch]);
        assert!(o.status.success());
        assert_eq!(stdout(&o).trim(), expected);
    }
}

#[test]
fn augment_is_seed_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_input(dir.path());
    let outs: Vec<Vec<u8>> = ["1", "1", "2"]
        .iter()
        .enumerate()
        .map(|(i, seed)| {
            let out = dir.path().join(format!("n{i}.wav"));
            let o = drc(&[
                "--seed",
                seed,
                "augment",
                "--input",
                p(&x),
                "--snr-db",
                "20",
                "--output",
                p(&out),
            ]);
            assert!(o.status.success(), "{}", stderr(&o));
            std::fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_ne!(outs[0], outs[2]);
}

#[test]
fn usage_errors_exit_1() {
    let o = drc(&["invert", "--profile", "Z", "--input", "y.wav", "--output", "x.wav"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`Z`"), "{}", stderr(&o));

    assert_eq!(drc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        drc(&["compress", "--input", "a.wav", "--output", "b.wav"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(drc(&["augment", "--input", "a.wav"]).status.code(), Some(1));
    let o = drc(&["identify", "--input", "a.wav", "--catalog", "medium"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--catalog"));
    let o = drc(&["--tol", "-1", "augment", "schedule", "--epoch", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn processing_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.wav");
    let o = drc(&[
        "invert",
        "--profile",
        "A",
        "--input",
        p(&missing),
        "--output",
        p(&dir.path().join("o.wav")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.wav");
    std::fs::write(&bad, b"not audio").unwrap();
    let o = drc(&["eval", "--ref", p(&bad), "--est", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_documents_flags_and_defaults() {
    let o = drc(&["--help"]);
    assert!(o.status.success());
    for cmd in [
        "compress", "invert", "eval", "dataset", "augment", "sweep", "bench", "identify",
    ] {
        assert!(stdout(&o).contains(cmd), "{cmd}");
    }
    let o = drc(&["dataset", "build", "--help"]);
    let text = stdout(&o);
    for flag in [
        "--input-dir",
        "--catalog",
        "--chunk-secs",
        "--gate-db",
        "--out-dir",
        "--manifest",
        "[default: -30]",
        "[default: 5]",
    ] {
        assert!(text.contains(flag), "{flag}");
    }
    let o = drc(&["sweep", "--help"]);
    for flag in [
        "--corpus",
        "--steps",
        "--range",
        "--out",
        "--summary",
        "--seed",
        "--solver",
        "--tol",
    ] {
        assert!(stdout(&o).contains(flag), "{flag}");
    }
}

#[test]
fn dataset_sweep_bench_identify() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    write_audio(&desk_clip(5, 1.2, 8000), &corpus.join("a.wav"), SampleFormatKind::Pcm16).unwrap();
    write_audio(&desk_clip(6, 0.7, 8000), &corpus.join("b.wav"), SampleFormatKind::Pcm16).unwrap();

    let out_dir = dir.path().join("ds");
    let o = drc(&[
        "dataset",
        "build",
        "--input-dir",
        p(&corpus),
        "--catalog",
        "small",
        "--chunk-secs",
        "0.5",
        "--gate-db",
        "-60",
        "--out-dir",
        p(&out_dir),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = stdout(&o);
    assert!(manifest.starts_with("source,chunk_index,offset_samples,label,output_path,rms_dbfs\n"));
    assert_eq!(manifest.lines().count(), 1 + 3 * 6);

    let sweep = dir.path().join("sweep.csv");
    let summary = dir.path().join("summary.csv");
    let o = drc(&[
        "sweep",
        "--corpus",
        p(&corpus),
        "--steps",
        "2",
        "--clip-secs",
        "0.5",
        "--gate-db",
        "-60",
        "--max-clips",
        "2",
        "--out",
        p(&sweep),
        "--summary",
        p(&summary),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(&sweep).unwrap().lines().count(),
        1 + 2 * 5 * 6 * 2
    );
    assert!(std::fs::read_to_string(&summary).unwrap().starts_with("param,metric,"));

    let o = drc(&[
        "bench",
        "solvers",
        "--corpus",
        p(&corpus),
        "--clip-secs",
        "0.5",
        "--gate-db",
        "-60",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let reports: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 2);

    let first = out_dir.join("a_0000_C.wav");
    let o = drc(&["identify", "--input", p(&first), "--catalog", "small"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let c = report["ranking"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["label"] == "C")
        .unwrap();
    assert_eq!(c["degenerate_rate"], 0.0);
}

#[test]
fn thread_cap_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_drc"))
        .args(["augment", "schedule", "--epoch", "3"])
        .env("DRC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_drc"))
        .args(["augment", "schedule", "--epoch", "3"])
        .env("DRC_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
}
