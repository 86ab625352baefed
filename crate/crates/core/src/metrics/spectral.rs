//! Magnitude STFT and Slaney-style mel filterbank.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::MetricError;
use crate::clip::AudioClip;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub fft_size: usize,
    pub hop_size: usize,
    pub n_mels: usize,
    pub fmin: f64,
    /// `None` means half the sample rate.
    pub fmax: Option<f64>,
    pub log_floor: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            fft_size: 2048,
            hop_size: 512,
            n_mels: 128,
            fmin: 0.0,
            fmax: None,
            log_floor: 1e-10,
        }
    }
}

impl SpectralConfig {
    pub fn freq_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn fmax_for(&self, sample_rate: f64) -> f64 {
        self.fmax.unwrap_or(sample_rate / 2.0)
    }

    /// Frame count for a centered analysis of `len` samples.
    pub fn frames(&self, len: usize) -> usize {
        1 + len / self.hop_size
    }

    pub fn validate(&self, sample_rate: f64) -> Result<(), MetricError> {
        let fmax = self.fmax_for(sample_rate);
        let problem = if !self.fft_size.is_power_of_two() || self.fft_size < 2 {
            "fft_size must be a power of two"
        } else if self.hop_size == 0 || self.hop_size > self.fft_size {
            "hop_size must be in 1..=fft_size"
        } else if self.n_mels == 0 {
            "n_mels must be at least 1"
        } else if !(self.fmin >= 0.0 && self.fmin < fmax) {
            "need 0 <= fmin < fmax"
        } else if !(self.log_floor > 0.0) {
            "log_floor must be positive"
        } else {
            return Ok(());
        };
        Err(MetricError::InvalidConfig(problem))
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    let logstep = 6.4f64.ln() / 27.0;
    if hz >= MIN_LOG_HZ {
        MIN_LOG_HZ / F_SP + (hz / MIN_LOG_HZ).ln() / logstep
    } else {
        hz / F_SP
    }
}

fn mel_to_hz(mel: f64) -> f64 {
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    let min_log_mel = MIN_LOG_HZ / F_SP;
    let logstep = 6.4f64.ln() / 27.0;
    if mel >= min_log_mel {
        MIN_LOG_HZ * (logstep * (mel - min_log_mel)).exp()
    } else {
        F_SP * mel
    }
}

/// Triangular, area-normalized filters (`n_mels x freq_bins`).
pub fn mel_filterbank(cfg: &SpectralConfig, sample_rate: f64) -> Result<Array2<f64>, MetricError> {
    cfg.validate(sample_rate)?;
    let bins = cfg.freq_bins();
    let fmax = cfg.fmax_for(sample_rate);
    let (mel_lo, mel_hi) = (hz_to_mel(cfg.fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate / cfg.fft_size as f64;

    let mut fb = Array2::zeros((cfg.n_mels, bins));
    for m in 0..cfg.n_mels {
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let norm = 2.0 / (hi - lo);
        for k in 0..bins {
            let f = k as f64 * bin_hz;
            let rising = (f - lo) / (mid - lo);
            let falling = (hi - f) / (hi - mid);
            let w = rising.min(falling);
            if w > 0.0 {
                fb[[m, k]] = w * norm;
            }
        }
    }
    Ok(fb)
}

/// Reusable STFT machinery for one configuration.
pub struct Stft {
    cfg: SpectralConfig,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl Stft {
    pub fn new(cfg: SpectralConfig) -> Self {
        let n = cfg.fft_size;
        // periodic Hann
        let window = (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(n);
        Self { cfg, window, fft }
    }

    /// Magnitude spectrogram (`freq_bins x frames`) of centered,
    /// reflection-padded frames.
    pub fn magnitude(&self, samples: &[f64]) -> Result<Array2<f64>, MetricError> {
        let n = self.cfg.fft_size;
        if samples.len() < n {
            return Err(MetricError::ClipTooShort {
                len: samples.len(),
                needed: n,
            });
        }
        let pad = n / 2;
        let len = samples.len();
        let padded: Vec<f64> = (0..len + 2 * pad)
            .map(|i| {
                let j = i as isize - pad as isize;
                let idx = if j < 0 {
                    (-j) as usize
                } else if j as usize >= len {
                    2 * (len - 1) - j as usize
                } else {
                    j as usize
                };
                samples[idx]
            })
            .collect();

        let frames = self.cfg.frames(len);
        let bins = self.cfg.freq_bins();
        let mut out = Array2::zeros((bins, frames));
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for t in 0..frames {
            let start = t * self.cfg.hop_size;
            for (i, c) in buf.iter_mut().enumerate() {
                *c = Complex::new(padded[start + i] * self.window[i], 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..bins {
                out[[k, t]] = buf[k].norm();
            }
        }
        Ok(out)
    }
}

pub fn stft_magnitude(clip: &AudioClip, cfg: &SpectralConfig) -> Result<Array2<f64>, MetricError> {
    cfg.validate(clip.sample_rate_hz() as f64)?;
    Stft::new(*cfg).magnitude(clip.samples())
}

/// STFT plus filterbank, cached for repeated log-mel evaluation at one
/// sample rate.
pub struct MelAnalyzer {
    cfg: SpectralConfig,
    sample_rate_hz: u32,
    stft: Stft,
    filterbank: Array2<f64>,
}

impl MelAnalyzer {
    pub fn new(cfg: SpectralConfig, sample_rate_hz: u32) -> Result<Self, MetricError> {
        let filterbank = mel_filterbank(&cfg, sample_rate_hz as f64)?;
        Ok(Self {
            cfg,
            sample_rate_hz,
            stft: Stft::new(cfg),
            filterbank,
        })
    }

    pub fn config(&self) -> &SpectralConfig {
        &self.cfg
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    /// `ln(|mel| + floor)`, `n_mels x frames`.
    pub fn log_mel(&self, samples: &[f64]) -> Result<Array2<f64>, MetricError> {
        let mag = self.stft.magnitude(samples)?;
        let floor = self.cfg.log_floor;
        Ok(self.filterbank.dot(&mag).mapv(|m| (m.abs() + floor).ln()))
    }
}
