use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClipError {
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
}

/// Mono audio in double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, ClipError> {
        if sample_rate_hz == 0 {
            return Err(ClipError::ZeroSampleRate);
        }
        if let Some(idx) = samples.iter().position(|s| !s.is_finite()) {
            return Err(ClipError::NonFinite(idx));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Builds a clip from samples already known to be finite, such as the
    /// output of a gain stage applied to a valid clip.
    pub(crate) fn from_trusted(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        debug_assert!(sample_rate_hz > 0);
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        Self::from_trusted(vec![0.0; len], sample_rate_hz.max(1))
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// RMS level relative to full scale 1.0; `-inf` for silence.
    pub fn rms_dbfs(&self) -> f64 {
        20.0 * self.rms().log10()
    }

    /// Multiplies every sample by `gain`. Non-finite gains yield an error.
    pub fn scaled(&self, gain: f64) -> Result<Self, ClipError> {
        Self::new(self.samples.iter().map(|s| s * gain).collect(), self.sample_rate_hz)
    }

    pub fn slice(&self, start: usize, len: usize) -> Self {
        Self::from_trusted(self.samples[start..start + len].to_vec(), self.sample_rate_hz)
    }
}
