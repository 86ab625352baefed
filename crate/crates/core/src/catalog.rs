//! Labeled profile collections: the two built-in tables and user JSON files.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{Detector, DrcParams, ParamError, RawParams};

/// Label reserved for the uncompressed class.
pub const NEUTRAL_LABEL: &str = "0";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown catalog `{0}` (expected `small` or `large`)")]
    UnknownCatalog(String),
    #[error("duplicate profile label `{0}`")]
    DuplicateLabel(String),
    #[error("label `0` is reserved for the neutral class")]
    ReservedLabel,
    #[error("profile `{label}`: {source}")]
    InvalidProfile {
        label: String,
        #[source]
        source: ParamError,
    },
    #[error("reading profile file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing profile file: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub label: String,
    /// `None` for the neutral class.
    pub params: Option<DrcParams>,
}

impl CatalogEntry {
    pub fn is_neutral(&self) -> bool {
        self.params.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCatalog {
    entries: Vec<CatalogEntry>,
}

/// One profile as written in a profile file (milliseconds, detector code).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRecord {
    pub label: String,
    pub threshold_db: f64,
    pub ratio: f64,
    pub tau_v_att_ms: f64,
    pub tau_v_rel_ms: f64,
    pub tau_g_att_ms: f64,
    pub tau_g_rel_ms: f64,
    pub detector: u8,
}

impl ProfileRecord {
    pub fn to_params(&self) -> Result<DrcParams, ParamError> {
        RawParams {
            threshold_db: self.threshold_db,
            ratio: self.ratio,
            tau_v_att_s: self.tau_v_att_ms * 1e-3,
            tau_v_rel_s: self.tau_v_rel_ms * 1e-3,
            tau_g_att_s: self.tau_g_att_ms * 1e-3,
            tau_g_rel_s: self.tau_g_rel_ms * 1e-3,
            detector: self.detector,
        }
        .validate()
    }

    pub fn from_params(label: &str, params: &DrcParams) -> Self {
        Self {
            label: label.to_string(),
            threshold_db: params.threshold_db(),
            ratio: params.ratio(),
            tau_v_att_ms: params.tau_v_att_s() * 1e3,
            tau_v_rel_ms: params.tau_v_rel_s() * 1e3,
            tau_g_att_ms: params.tau_g_att_s() * 1e3,
            tau_g_rel_ms: params.tau_g_rel_s() * 1e3,
            detector: params.detector().exponent(),
        }
    }
}

// (label, L dBFS, R, tau_g_att ms, tau_g_rel ms); tau_v = 5 ms both ways.
const SMALL: [(&str, f64, f64, f64, f64); 5] = [
    ("A", -32.0, 3.0, 13.0, 435.0),
    ("B", -19.9, 1.8, 11.0, 49.0),
    ("C", -24.4, 3.2, 5.8, 112.0),
    ("D", -26.3, 7.3, 9.0, 705.0),
    ("E", -38.0, 4.9, 13.1, 257.0),
];

// (L dBFS, R, tau_v_att, tau_v_rel, tau_g_att, tau_g_rel) in ms, labels 1..=30.
const LARGE: [(f64, f64, f64, f64, f64, f64); 30] = [
    (-30.6, 2.3, 73.9, 20.3, 451.5, 1153.6),
    (-55.9, 12.1, 25.4, 50.9, 54.1, 1274.5),
    (-55.1, 13.4, 43.3, 76.4, 354.6, 468.4),
    (-39.6, 13.1, 66.2, 10.1, 325.5, 1435.7),
    (-31.4, 12.3, 99.4, 91.7, 160.7, 790.8),
    (-60.0, 15.0, 130.0, 89.2, 393.4, 1758.2),
    (-47.8, 5.4, 50.9, 84.1, 403.1, 1677.6),
    (-46.9, 4.9, 48.4, 66.2, 257.7, 1516.3),
    (-45.3, 2.5, 89.2, 114.7, 344.9, 1234.2),
    (-26.5, 10.8, 114.7, 68.8, 209.2, 145.9),
    (-43.7, 8.4, 35.6, 107.0, 432.1, 750.5),
    (-20.8, 6.5, 84.1, 101.9, 500.0, 347.4),
    (-22.4, 11.3, 124.9, 63.7, 364.3, 831.1),
    (-40.4, 10.0, 112.1, 99.4, 374.0, 1355.1),
    (-52.7, 4.4, 104.5, 35.6, 199.5, 1919.4),
    (-51.8, 2.0, 117.2, 117.2, 277.0, 549.0),
    (-38.0, 5.2, 5.0, 40.7, 296.4, 1717.9),
    (-51.0, 3.3, 28.0, 127.4, 170.4, 669.9),
    (-29.8, 9.2, 33.1, 56.0, 131.6, 1959.7),
    (-29.0, 11.8, 45.8, 81.5, 412.8, 992.3),
    (-28.2, 5.7, 10.1, 17.8, 34.7, 428.1),
    (-50.2, 12.6, 22.9, 122.3, 83.2, 1395.4),
    (-23.3, 12.9, 12.7, 7.6, 112.2, 25.0),
    (-44.5, 7.8, 15.2, 86.6, 306.1, 1838.8),
    (-46.1, 11.0, 122.3, 12.7, 189.8, 1113.3),
    (-56.7, 2.8, 94.3, 28.0, 102.6, 186.2),
    (-24.9, 10.5, 38.2, 43.3, 335.2, 226.5),
    (-48.6, 8.9, 107.0, 104.5, 25.0, 1798.5),
    (-49.4, 10.2, 127.4, 71.3, 92.9, 508.7),
    (-24.1, 14.2, 81.5, 58.6, 180.1, 871.4),
];

pub fn builtin_catalog(name: &str) -> Result<ProfileCatalog, CatalogError> {
    let profiles: Vec<(String, DrcParams)> = match name {
        "small" => SMALL
            .iter()
            .map(|&(label, l, r, ga, gr)| {
                let p =
                    DrcParams::from_ms(l, r, (5.0, 5.0), (ga, gr), Detector::Rms).expect("built-in profile is valid");
                (label.to_string(), p)
            })
            .collect(),
        "large" => LARGE
            .iter()
            .enumerate()
            .map(|(i, &(l, r, va, vr, ga, gr))| {
                let p = DrcParams::from_ms(l, r, (va, vr), (ga, gr), Detector::Rms).expect("built-in profile is valid");
                ((i + 1).to_string(), p)
            })
            .collect(),
        other => return Err(CatalogError::UnknownCatalog(other.to_string())),
    };
    ProfileCatalog::with_neutral(profiles)
}

impl ProfileCatalog {
    /// Builds a catalog with the neutral entry first, followed by `profiles`
    /// in the given order.
    pub fn with_neutral(profiles: Vec<(String, DrcParams)>) -> Result<Self, CatalogError> {
        let mut seen = HashSet::new();
        seen.insert(NEUTRAL_LABEL.to_string());
        let mut entries = vec![CatalogEntry {
            label: NEUTRAL_LABEL.to_string(),
            params: None,
        }];
        for (label, params) in profiles {
            if label == NEUTRAL_LABEL {
                return Err(CatalogError::ReservedLabel);
            }
            if !seen.insert(label.clone()) {
                return Err(CatalogError::DuplicateLabel(label));
            }
            entries.push(CatalogEntry {
                label,
                params: Some(params),
            });
        }
        Ok(Self { entries })
    }

    pub fn from_records(records: &[ProfileRecord]) -> Result<Self, CatalogError> {
        let profiles = records
            .iter()
            .map(|r| {
                r.to_params()
                    .map(|p| (r.label.clone(), p))
                    .map_err(|source| CatalogError::InvalidProfile {
                        label: r.label.clone(),
                        source,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::with_neutral(profiles)
    }

    pub fn from_json_str(text: &str) -> Result<Self, CatalogError> {
        let records: Vec<ProfileRecord> = serde_json::from_str(text)?;
        Self::from_records(&records)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, CatalogError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// `small`, `large`, or a path to a profile file.
    pub fn resolve(spec: &str) -> Result<Self, CatalogError> {
        match spec {
            "small" | "large" => builtin_catalog(spec),
            path => Self::from_json_file(Path::new(path)),
        }
    }

    /// Writes the non-neutral entries in profile-file form.
    pub fn to_records(&self) -> Vec<ProfileRecord> {
        self.profiles()
            .map(|(label, p)| ProfileRecord::from_params(label, p))
            .collect()
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    /// Non-neutral entries in catalog order.
    pub fn profiles(&self) -> impl Iterator<Item = (&str, &DrcParams)> {
        self.entries
            .iter()
            .filter_map(|e| e.params.as_ref().map(|p| (e.label.as_str(), p)))
    }

    pub fn get(&self, label: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    /// Parameters for `label`; `None` if absent or neutral.
    pub fn params(&self, label: &str) -> Option<&DrcParams> {
        self.get(label).and_then(|e| e.params.as_ref())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn profile_count(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.label.as_str())
    }

    /// Keeps the neutral entry plus the named profiles, in catalog order.
    pub fn subset(&self, labels: &[&str]) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|e| e.is_neutral() || labels.contains(&e.label.as_str()))
                .cloned()
                .collect(),
        }
    }
}
