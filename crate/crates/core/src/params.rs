//! Compressor parameter set and its validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Level detector used by the envelope follower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Detector {
    Peak,
    Rms,
}

impl Detector {
    /// Exponent of the detector recursion (1 for peak, 2 for RMS).
    pub fn exponent(self) -> u8 {
        match self {
            Detector::Peak => 1,
            Detector::Rms => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Detector::Peak),
            2 => Some(Detector::Rms),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("time constant `{field}` must be positive and finite, got {value}")]
    NonPositiveTimeConstant { field: &'static str, value: f64 },
    #[error("ratio must be >= 1, got {0}")]
    RatioBelowOne(f64),
    #[error("detector must be 1 (peak) or 2 (rms), got {0}")]
    InvalidDetector(u8),
    #[error("threshold must be <= 0 dBFS, got {0}")]
    PositiveThreshold(f64),
}

/// Unvalidated parameter candidate. Time constants are in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams {
    pub threshold_db: f64,
    pub ratio: f64,
    pub tau_v_att_s: f64,
    pub tau_v_rel_s: f64,
    pub tau_g_att_s: f64,
    pub tau_g_rel_s: f64,
    pub detector: u8,
}

impl RawParams {
    pub fn validate(self) -> Result<DrcParams, ParamError> {
        validate_params(self)
    }
}

/// A validated compressor parameter set.
///
/// Fields are private so that every value in circulation satisfies
/// `ratio >= 1`, `threshold_db <= 0` and strictly positive time constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrcParams {
    threshold_db: f64,
    ratio: f64,
    tau_v_att_s: f64,
    tau_v_rel_s: f64,
    tau_g_att_s: f64,
    tau_g_rel_s: f64,
    detector: Detector,
}

/// Constants derived from threshold and ratio that the gain law and its
/// inverse are written in terms of.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Linear threshold `10^(L/20)`.
    pub linear_threshold: f64,
    /// Static-curve exponent `1 - 1/R`.
    pub exponent: f64,
    /// `linear_threshold^exponent`.
    pub kappa: f64,
}

pub fn validate_params(raw: RawParams) -> Result<DrcParams, ParamError> {
    if !(raw.threshold_db <= 0.0) {
        return Err(ParamError::PositiveThreshold(raw.threshold_db));
    }
    if !(raw.ratio >= 1.0) || !raw.ratio.is_finite() {
        return Err(ParamError::RatioBelowOne(raw.ratio));
    }
    for (field, value) in [
        ("tau_v_att", raw.tau_v_att_s),
        ("tau_v_rel", raw.tau_v_rel_s),
        ("tau_g_att", raw.tau_g_att_s),
        ("tau_g_rel", raw.tau_g_rel_s),
    ] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(ParamError::NonPositiveTimeConstant { field, value });
        }
    }
    let detector = Detector::from_code(raw.detector).ok_or(ParamError::InvalidDetector(raw.detector))?;
    Ok(DrcParams {
        threshold_db: raw.threshold_db,
        ratio: raw.ratio,
        tau_v_att_s: raw.tau_v_att_s,
        tau_v_rel_s: raw.tau_v_rel_s,
        tau_g_att_s: raw.tau_g_att_s,
        tau_g_rel_s: raw.tau_g_rel_s,
        detector,
    })
}

impl DrcParams {
    /// Builds a parameter set from millisecond time constants, the unit
    /// used by profile tables and files.
    pub fn from_ms(
        threshold_db: f64,
        ratio: f64,
        tau_v_ms: (f64, f64),
        tau_g_ms: (f64, f64),
        detector: Detector,
    ) -> Result<Self, ParamError> {
        validate_params(RawParams {
            threshold_db,
            ratio,
            tau_v_att_s: tau_v_ms.0 * 1e-3,
            tau_v_rel_s: tau_v_ms.1 * 1e-3,
            tau_g_att_s: tau_g_ms.0 * 1e-3,
            tau_g_rel_s: tau_g_ms.1 * 1e-3,
            detector: detector.exponent(),
        })
    }

    pub fn threshold_db(&self) -> f64 {
        self.threshold_db
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn tau_v_att_s(&self) -> f64 {
        self.tau_v_att_s
    }

    pub fn tau_v_rel_s(&self) -> f64 {
        self.tau_v_rel_s
    }

    pub fn tau_g_att_s(&self) -> f64 {
        self.tau_g_att_s
    }

    pub fn tau_g_rel_s(&self) -> f64 {
        self.tau_g_rel_s
    }

    pub fn detector(&self) -> Detector {
        self.detector
    }

    pub fn linear_threshold(&self) -> f64 {
        10f64.powf(self.threshold_db / 20.0)
    }

    pub fn exponent(&self) -> f64 {
        1.0 - 1.0 / self.ratio
    }

    pub fn kappa(&self) -> f64 {
        self.linear_threshold().powf(self.exponent())
    }

    pub fn derived(&self) -> DerivedConstants {
        derived_constants(self)
    }

    /// Unvalidated copy, used to build perturbed variants.
    pub fn to_raw(&self) -> RawParams {
        RawParams {
            threshold_db: self.threshold_db,
            ratio: self.ratio,
            tau_v_att_s: self.tau_v_att_s,
            tau_v_rel_s: self.tau_v_rel_s,
            tau_g_att_s: self.tau_g_att_s,
            tau_g_rel_s: self.tau_g_rel_s,
            detector: self.detector.exponent(),
        }
    }
}

pub fn derived_constants(params: &DrcParams) -> DerivedConstants {
    let linear_threshold = params.linear_threshold();
    let exponent = params.exponent();
    DerivedConstants {
        linear_threshold,
        exponent,
        kappa: linear_threshold.powf(exponent),
    }
}
