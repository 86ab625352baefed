//! WAV reading and writing (PCM 8/16/24/32-bit and IEEE float32).

use std::io;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clip::AudioClip;

#[derive(Debug, Error)]
pub enum AudioIoError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("unsupported audio format in {path}: {reason}")]
    UnsupportedFormat { path: String, reason: String },
    #[error("corrupt audio file {path}: {reason}")]
    CorruptFile { path: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormatKind {
    Pcm16,
    #[default]
    Float32,
}

impl std::str::FromStr for SampleFormatKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pcm16" => Ok(Self::Pcm16),
            "float32" => Ok(Self::Float32),
            other => Err(format!("unknown sample format `{other}` (expected pcm16 or float32)")),
        }
    }
}

/// Result of a successful write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WriteSummary {
    /// Samples outside [-1, 1] that were clamped (PCM only).
    pub clipped: usize,
}

fn classify(path: &Path, err: hound::Error) -> AudioIoError {
    let path = path.display().to_string();
    match err {
        hound::Error::IoError(e) if e.kind() == io::ErrorKind::NotFound => AudioIoError::FileNotFound(path),
        hound::Error::IoError(source) if source.kind() == io::ErrorKind::PermissionDenied => {
            AudioIoError::Io { path, source }
        }
        // short reads surface as generic i/o errors
        hound::Error::IoError(e) => AudioIoError::CorruptFile {
            path,
            reason: e.to_string(),
        },
        hound::Error::FormatError(reason) => AudioIoError::CorruptFile {
            path,
            reason: reason.to_string(),
        },
        hound::Error::UnfinishedSample => AudioIoError::CorruptFile {
            path,
            reason: "truncated sample data".into(),
        },
        other => AudioIoError::UnsupportedFormat {
            path,
            reason: other.to_string(),
        },
    }
}

/// Reads a WAV file as mono double precision in [-1, 1]. Multichannel
/// files are downmixed by the channel mean.
pub fn read_audio(path: &Path) -> Result<AudioClip, AudioIoError> {
    let reader = WavReader::open(path).map_err(|e| classify(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 || spec.sample_rate == 0 {
        return Err(AudioIoError::CorruptFile {
            path: path.display().to_string(),
            reason: "zero channels or sample rate".into(),
        });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>(),
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<Result<_, _>>()
        }
        (fmt, bits) => {
            return Err(AudioIoError::UnsupportedFormat {
                path: path.display().to_string(),
                reason: format!("{fmt:?} with {bits} bits per sample"),
            })
        }
    }
    .map_err(|e| classify(path, e))?;

    if !interleaved.len().is_multiple_of(channels) {
        return Err(AudioIoError::CorruptFile {
            path: path.display().to_string(),
            reason: "sample count is not a multiple of the channel count".into(),
        });
    }
    let mono: Vec<f64> = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    AudioClip::new(mono, spec.sample_rate).map_err(|e| AudioIoError::CorruptFile {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Writes a mono WAV file. PCM output clamps to full scale and reports how
/// many samples were clamped.
pub fn write_audio(clip: &AudioClip, path: &Path, format: SampleFormatKind) -> Result<WriteSummary, AudioIoError> {
    let io_err = |e: hound::Error| match e {
        hound::Error::IoError(source) => AudioIoError::Io {
            path: path.display().to_string(),
            source,
        },
        other => AudioIoError::UnsupportedFormat {
            path: path.display().to_string(),
            reason: other.to_string(),
        },
    };
    let spec = match format {
        SampleFormatKind::Pcm16 => WavSpec {
            channels: 1,
            sample_rate: clip.sample_rate_hz(),
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        },
        SampleFormatKind::Float32 => WavSpec {
            channels: 1,
            sample_rate: clip.sample_rate_hz(),
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        },
    };
    let mut writer = WavWriter::create(path, spec).map_err(io_err)?;
    let mut summary = WriteSummary::default();
    match format {
        SampleFormatKind::Pcm16 => {
            for &s in clip.samples() {
                if s.abs() > 1.0 {
                    summary.clipped += 1;
                }
                let q = (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
                writer.write_sample(q).map_err(io_err)?;
            }
        }
        SampleFormatKind::Float32 => {
            for &s in clip.samples() {
                writer.write_sample(s as f32).map_err(io_err)?;
            }
        }
    }
    writer.finalize().map_err(io_err)?;
    if summary.clipped > 0 {
        log::warn!("{}: clamped {} samples to full scale", path.display(), summary.clipped);
    }
    Ok(summary)
}
