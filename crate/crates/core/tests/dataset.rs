use std::path::Path;

use drc_core::corpus::{
    build_dataset, read_audio, read_manifest, write_audio, write_manifest, DatasetOptions, SampleFormatKind,
};
use drc_core::{builtin_catalog, AudioClip, NEUTRAL_LABEL};

fn tone_at_dbfs(db: f64, secs: f64, fs: u32) -> AudioClip {
    // sqrt(2) * A * sin has RMS A over whole periods
    let a = 10f64.powf(db / 20.0) * 2f64.sqrt();
    let n = (secs * fs as f64) as usize;
    AudioClip::new(
        (0..n)
            .map(|i| a * (2.0 * std::f64::consts::PI * 100.0 * i as f64 / fs as f64).sin())
            .collect(),
        fs,
    )
    .unwrap()
}

fn write(dir: &Path, name: &str, clip: &AudioClip) {
    write_audio(clip, &dir.join(name), SampleFormatKind::Float32).unwrap();
}

#[test]
fn one_chunk_expands_to_every_catalog_entry() {
    let input = tempfile::tempdir().unwrap();
    write(input.path(), "song.wav", &tone_at_dbfs(-12.0, 5.5, 8000));
    for (name, expected) in [("small", 6), ("large", 31)] {
        let out = tempfile::tempdir().unwrap();
        let cat = builtin_catalog(name).unwrap();
        let report = build_dataset(input.path(), &cat, out.path(), &DatasetOptions::default()).unwrap();
        assert_eq!(report.manifest.len(), expected);
        assert_eq!(std::fs::read_dir(out.path()).unwrap().count(), expected);
        let labels: Vec<&str> = report.manifest.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, cat.labels().collect::<Vec<_>>());
        assert_eq!(labels[0], NEUTRAL_LABEL);

        let neutral = read_audio(&out.path().join(&report.manifest[0].output_path)).unwrap();
        let original = read_audio(&input.path().join("song.wav")).unwrap();
        assert_eq!(neutral.samples(), &original.samples()[..40_000]);
        for row in &report.manifest[1..] {
            let y = read_audio(&out.path().join(&row.output_path)).unwrap();
            assert_eq!(y.len(), 40_000);
            assert!(y.rms() < neutral.rms(), "{} is not quieter", row.label);
        }
    }
}

#[test]
fn gate_keeps_minus_29_and_drops_minus_31() {
    let input = tempfile::tempdir().unwrap();
    write(input.path(), "loud.wav", &tone_at_dbfs(-29.0, 5.0, 8000));
    write(input.path(), "quiet.wav", &tone_at_dbfs(-31.0, 5.0, 8000));
    let out = tempfile::tempdir().unwrap();
    let cat = builtin_catalog("small").unwrap();
    let report = build_dataset(input.path(), &cat, out.path(), &DatasetOptions::default()).unwrap();
    assert_eq!(report.manifest.len(), 6);
    assert!(report.manifest.iter().all(|r| r.source_path == "loud.wav"));
    assert!((report.manifest[0].rms_dbfs + 29.0).abs() < 0.01);
}

#[test]
fn rebuild_is_byte_identical() {
    let input = tempfile::tempdir().unwrap();
    std::fs::create_dir(input.path().join("sub")).unwrap();
    write(input.path(), "b.wav", &drc_core::corpus::desk_clip(1, 2.2, 8000));
    write(
        &input.path().join("sub"),
        "a.wav",
        &drc_core::corpus::desk_clip(2, 3.1, 8000),
    );
    let cat = builtin_catalog("small").unwrap();
    let opts = DatasetOptions {
        chunk_secs: 1.0,
        gate_dbfs: -40.0,
        format: SampleFormatKind::Float32,
    };
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = tempfile::tempdir().unwrap();
        let report = build_dataset(input.path(), &cat, out.path(), &opts).unwrap();
        let mut csv = Vec::new();
        write_manifest(&report.manifest, &mut csv).unwrap();
        let files: Vec<Vec<u8>> = report
            .manifest
            .iter()
            .map(|r| std::fs::read(out.path().join(&r.output_path)).unwrap())
            .collect();
        outputs.push((csv, files, report.manifest));
    }
    assert_eq!(outputs[0].0, outputs[1].0);
    assert_eq!(outputs[0].1, outputs[1].1);
    let rows = &outputs[0].2;
    assert_eq!(read_manifest(&outputs[0].0[..]).unwrap(), *rows);
    // sorted by source path, then chunk, then catalog order
    assert_eq!(rows[0].source_path, "b.wav");
    assert!(rows
        .iter()
        .any(|r| r.source_path == "sub/a.wav" && r.output_path.starts_with("sub__a_")));
    assert_eq!(rows.len() % 6, 0);
    for w in rows.windows(2) {
        assert!((w[0].source_path.as_str(), w[0].chunk_index) <= (w[1].source_path.as_str(), w[1].chunk_index));
    }
}

#[test]
fn unreadable_file_is_reported_and_skipped() {
    let input = tempfile::tempdir().unwrap();
    write(input.path(), "good.wav", &tone_at_dbfs(-10.0, 5.0, 8000));
    std::fs::write(input.path().join("bad.wav"), b"RIFF garbage").unwrap();
    let out = tempfile::tempdir().unwrap();
    let cat = builtin_catalog("small").unwrap();
    let report = build_dataset(input.path(), &cat, out.path(), &DatasetOptions::default()).unwrap();
    assert_eq!(report.manifest.len(), 6);
    assert_eq!(report.errors.len(), 1);
    assert_eq!(report.errors[0].0, "bad.wav");
}
