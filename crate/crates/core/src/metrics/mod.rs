//! Reconstruction metrics: MSE, log-mel L2 distance and SI-SDR.

pub mod spectral;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::clip::AudioClip;

pub use spectral::{mel_filterbank, stft_magnitude, MelAnalyzer, SpectralConfig, Stft};

/// SI-SDR reported for (numerically) perfect reconstructions.
pub const SI_SDR_CAP_DB: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("sample rate mismatch: {0} vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("clip is silent (RMS below 1e-12)")]
    SilentClip,
    #[error("reference signal is all zero")]
    ZeroReference,
    #[error("clip too short for analysis: {len} samples, need {needed}")]
    ClipTooShort { len: usize, needed: usize },
    #[error("invalid spectral configuration: {0}")]
    InvalidConfig(&'static str),
}

fn check_pair(a: &AudioClip, b: &AudioClip) -> Result<(), MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    if a.sample_rate_hz() != b.sample_rate_hz() {
        return Err(MetricError::RateMismatch(a.sample_rate_hz(), b.sample_rate_hz()));
    }
    Ok(())
}

pub fn rms_normalize(clip: &AudioClip) -> Result<AudioClip, MetricError> {
    let rms = clip.rms();
    if !(rms >= 1e-12) {
        return Err(MetricError::SilentClip);
    }
    Ok(AudioClip::from_trusted(
        clip.samples().iter().map(|s| s / rms).collect(),
        clip.sample_rate_hz(),
    ))
}

pub fn mse(x_hat: &AudioClip, x: &AudioClip) -> Result<f64, MetricError> {
    check_pair(x_hat, x)?;
    if x.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = x_hat
        .samples()
        .iter()
        .zip(x.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / x.len() as f64)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Scale-invariant SDR in dB, capped at [`SI_SDR_CAP_DB`]. An estimate
/// orthogonal to the reference yields `-inf`.
pub fn si_sdr(x_hat: &AudioClip, x: &AudioClip) -> Result<f64, MetricError> {
    check_pair(x_hat, x)?;
    let (e, r) = (x_hat.samples(), x.samples());
    let ref_energy = dot(r, r);
    if ref_energy == 0.0 {
        return Err(MetricError::ZeroReference);
    }
    let alpha = dot(e, r) / ref_energy;
    if alpha == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let target_energy = alpha * alpha * ref_energy;
    let noise_energy: f64 = e
        .iter()
        .zip(r)
        .map(|(a, b)| {
            let d = a - alpha * b;
            d * d
        })
        .sum();
    if noise_energy < 1e-40 * target_energy {
        return Ok(SI_SDR_CAP_DB);
    }
    Ok((10.0 * (target_energy / noise_energy).log10()).min(SI_SDR_CAP_DB))
}

/// L2 distance between natural-log mel magnitude spectrograms.
pub fn mel_l2(x_hat: &AudioClip, x: &AudioClip, cfg: &SpectralConfig) -> Result<f64, MetricError> {
    check_pair(x_hat, x)?;
    let analyzer = MelAnalyzer::new(*cfg, x.sample_rate_hz())?;
    mel_l2_with(&analyzer, x_hat, x)
}

pub fn mel_l2_with(analyzer: &MelAnalyzer, x_hat: &AudioClip, x: &AudioClip) -> Result<f64, MetricError> {
    check_pair(x_hat, x)?;
    if x.sample_rate_hz() != analyzer.sample_rate_hz() {
        return Err(MetricError::RateMismatch(x.sample_rate_hz(), analyzer.sample_rate_hz()));
    }
    let a = analyzer.log_mel(x_hat.samples())?;
    let b = analyzer.log_mel(x.samples())?;
    Ok((&a - &b).iter().map(|d| d * d).sum::<f64>().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mse: f64,
    pub mel_l2: f64,
    pub si_sdr_db: f64,
}

impl Serialize for MetricReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("MetricReport", 3)?;
        st.serialize_field("mse", &self.mse)?;
        st.serialize_field("mel_l2", &self.mel_l2)?;
        if self.si_sdr_db == f64::NEG_INFINITY {
            st.serialize_field("si_sdr_db", "-inf")?;
        } else {
            st.serialize_field("si_sdr_db", &self.si_sdr_db)?;
        }
        st.end()
    }
}

/// RMS-normalizes both clips, then computes all three metrics.
pub fn evaluate(x_hat: &AudioClip, x: &AudioClip, cfg: &SpectralConfig) -> Result<MetricReport, MetricError> {
    check_pair(x_hat, x)?;
    let analyzer = MelAnalyzer::new(*cfg, x.sample_rate_hz())?;
    evaluate_with(&analyzer, x_hat, x)
}

pub fn evaluate_with(analyzer: &MelAnalyzer, x_hat: &AudioClip, x: &AudioClip) -> Result<MetricReport, MetricError> {
    check_pair(x_hat, x)?;
    let (a, b) = (rms_normalize(x_hat)?, rms_normalize(x)?);
    Ok(MetricReport {
        mse: mse(&a, &b)?,
        mel_l2: mel_l2_with(analyzer, &a, &b)?,
        si_sdr_db: si_sdr(&a, &b)?,
    })
}
