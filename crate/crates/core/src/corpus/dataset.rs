//! Chunking, level gating and labeled dataset construction.

use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::wav::{read_audio, write_audio, AudioIoError, SampleFormatKind};
use crate::catalog::ProfileCatalog;
use crate::clip::AudioClip;
use crate::compressor::compress;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("input directory {0} does not exist")]
    MissingInputDir(String),
    #[error("chunk length must be positive, got {0} s")]
    InvalidChunkLength(f64),
    #[error("creating output directory {path}: {source}")]
    OutputDir {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Manifest(#[from] csv::Error),
}

/// One written file of a dataset build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkManifestEntry {
    /// Source file, relative to the input directory.
    #[serde(rename = "source")]
    pub source_path: String,
    pub chunk_index: usize,
    pub offset_samples: usize,
    pub label: String,
    /// Output file, relative to the output directory.
    pub output_path: String,
    /// RMS level of the written clip in dBFS.
    pub rms_dbfs: f64,
}

#[derive(Debug, Default)]
pub struct DatasetReport {
    pub manifest: Vec<ChunkManifestEntry>,
    /// Per-file failures; the build continues past them.
    pub errors: Vec<(String, String)>,
}

/// Splits `clip` into consecutive `floor(chunk_secs * fs)`-sample chunks,
/// drops the trailing remainder, and keeps only chunks whose RMS is at or
/// above `gate_dbfs`. Returns `(offset, chunk)` pairs.
pub fn chunk_and_gate(clip: &AudioClip, chunk_secs: f64, gate_dbfs: f64) -> Vec<(usize, AudioClip)> {
    let len = (chunk_secs * clip.sample_rate_hz() as f64).floor();
    if !(len >= 1.0) {
        return Vec::new();
    }
    let len = len as usize;
    (0..clip.len() / len)
        .map(|i| (i * len, clip.slice(i * len, len)))
        .filter(|(_, chunk)| !(chunk.rms_dbfs() < gate_dbfs) && chunk.rms() > 0.0)
        .collect()
}

pub fn list_wav_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        })
        .collect();
    files.sort();
    files
}

fn relative(path: &Path, base: &Path) -> String {
    path.strip_prefix(base)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

/// File-name stem for outputs derived from `rel` (a relative source path).
fn output_stem(rel: &str) -> String {
    let without_ext = rel.rsplit_once('.').map_or(rel, |(stem, _)| stem);
    without_ext.replace('/', "__")
}

#[derive(Debug, Clone, Copy)]
pub struct DatasetOptions {
    pub chunk_secs: f64,
    pub gate_dbfs: f64,
    pub format: SampleFormatKind,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            chunk_secs: 5.0,
            gate_dbfs: -30.0,
            format: SampleFormatKind::Float32,
        }
    }
}

fn process_source(
    path: &Path,
    input_dir: &Path,
    out_dir: &Path,
    catalog: &ProfileCatalog,
    opts: &DatasetOptions,
) -> Result<Vec<ChunkManifestEntry>, AudioIoError> {
    let source = relative(path, input_dir);
    let stem = output_stem(&source);
    let clip = read_audio(path)?;
    let mut rows = Vec::new();
    for (chunk_index, (offset, chunk)) in chunk_and_gate(&clip, opts.chunk_secs, opts.gate_dbfs)
        .into_iter()
        .enumerate()
    {
        for entry in catalog.entries() {
            let out = match &entry.params {
                None => chunk.clone(),
                Some(p) => compress(&chunk, p, false).0,
            };
            let name = format!("{stem}_{chunk_index:04}_{}.wav", entry.label);
            write_audio(&out, &out_dir.join(&name), opts.format)?;
            rows.push(ChunkManifestEntry {
                source_path: source.clone(),
                chunk_index,
                offset_samples: offset,
                label: entry.label.clone(),
                output_path: name,
                rms_dbfs: out.rms_dbfs(),
            });
        }
    }
    Ok(rows)
}

/// Compresses every retained chunk of every WAV file under `input_dir`
/// with every catalog entry and writes the results to `out_dir`.
///
/// Rows are ordered by source path, chunk index, then catalog order,
/// independent of how the work was scheduled.
pub fn build_dataset(
    input_dir: &Path,
    catalog: &ProfileCatalog,
    out_dir: &Path,
    opts: &DatasetOptions,
) -> Result<DatasetReport, DatasetError> {
    if !(opts.chunk_secs > 0.0) {
        return Err(DatasetError::InvalidChunkLength(opts.chunk_secs));
    }
    if !input_dir.is_dir() {
        return Err(DatasetError::MissingInputDir(input_dir.display().to_string()));
    }
    std::fs::create_dir_all(out_dir).map_err(|source| DatasetError::OutputDir {
        path: out_dir.display().to_string(),
        source,
    })?;

    let files = list_wav_files(input_dir);
    let results: Vec<_> = files
        .par_iter()
        .map(|path| (path, process_source(path, input_dir, out_dir, catalog, opts)))
        .collect();

    let mut report = DatasetReport::default();
    for (path, result) in results {
        match result {
            Ok(rows) => report.manifest.extend(rows),
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                report.errors.push((relative(path, input_dir), e.to_string()));
            }
        }
    }
    let order: Vec<&str> = catalog.labels().collect();
    let rank = |label: &str| order.iter().position(|l| *l == label).unwrap_or(usize::MAX);
    report.manifest.sort_by(|a, b| {
        (a.source_path.as_str(), a.chunk_index, rank(&a.label)).cmp(&(
            b.source_path.as_str(),
            b.chunk_index,
            rank(&b.label),
        ))
    });
    Ok(report)
}

/// Writes the manifest as CSV with a header row and LF line endings.
pub fn write_manifest<W: io::Write>(rows: &[ChunkManifestEntry], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "source",
            "chunk_index",
            "offset_samples",
            "label",
            "output_path",
            "rms_dbfs",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest<R: io::Read>(input: R) -> Result<Vec<ChunkManifestEntry>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}
