//! Gaussian noise injection at a target SNR and the SNR curriculum.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clip::AudioClip;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AugmentError {
    #[error("clip has zero power")]
    SilentClip,
    #[error("invalid SNR schedule: {0}")]
    InvalidSchedule(&'static str),
    #[error("SNR must be finite, got {0}")]
    InvalidSnr(f64),
}

/// Noise variance for a clip of mean power `signal_power` at `snr_db`.
pub fn noise_variance(signal_power: f64, snr_db: f64) -> f64 {
    signal_power / 10f64.powf(snr_db / 10.0)
}

/// Adds zero-mean white Gaussian noise so that the signal-to-noise ratio
/// is `snr_db`, with the noise drawn from a generator seeded by `seed`.
pub fn inject_noise_at_snr(clip: &AudioClip, snr_db: f64, seed: u64) -> Result<AudioClip, AugmentError> {
    if !snr_db.is_finite() {
        return Err(AugmentError::InvalidSnr(snr_db));
    }
    let power = clip.rms().powi(2);
    if !(power > 0.0) {
        return Err(AugmentError::SilentClip);
    }
    let sigma = noise_variance(power, snr_db).sqrt();
    let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = clip.samples().iter().map(|&s| s + normal.sample(&mut rng)).collect();
    Ok(AudioClip::from_trusted(noisy, clip.sample_rate_hz()))
}

/// Step-down SNR curriculum: starts at `start_db` and drops by `step_db`
/// every `epochs_per_step` epochs until it reaches `floor_db`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSchedule {
    pub start_db: f64,
    pub step_db: f64,
    pub epochs_per_step: u32,
    pub floor_db: f64,
}

impl Default for SnrSchedule {
    fn default() -> Self {
        Self {
            start_db: 65.0,
            step_db: 5.0,
            epochs_per_step: 20,
            floor_db: 20.0,
        }
    }
}

impl SnrSchedule {
    pub fn new(start_db: f64, step_db: f64, epochs_per_step: u32, floor_db: f64) -> Result<Self, AugmentError> {
        if !(start_db >= floor_db) {
            return Err(AugmentError::InvalidSchedule("start_db must be >= floor_db"));
        }
        if !(step_db > 0.0) {
            return Err(AugmentError::InvalidSchedule("step_db must be positive"));
        }
        if epochs_per_step == 0 {
            return Err(AugmentError::InvalidSchedule("epochs_per_step must be >= 1"));
        }
        Ok(Self {
            start_db,
            step_db,
            epochs_per_step,
            floor_db,
        })
    }

    pub fn snr_at_epoch(&self, epoch: u64) -> f64 {
        let steps = (epoch / self.epochs_per_step as u64) as f64;
        (self.start_db - self.step_db * steps).max(self.floor_db)
    }
}

pub fn snr_at_epoch(schedule: &SnrSchedule, epoch: u64) -> f64 {
    schedule.snr_at_epoch(epoch)
}
