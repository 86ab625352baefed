//! Single-parameter perturbation sweep.

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::catalog::ProfileCatalog;
use crate::clip::AudioClip;
use crate::compressor::compress;
use crate::inverter::{invert, InvertOptions};
use crate::metrics::{evaluate_with, MelAnalyzer, SpectralConfig};
use crate::params::DrcParams;

/// The six perturbed parameters, in output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "L")]
    Threshold,
    #[serde(rename = "R")]
    Ratio,
    #[serde(rename = "tau_v_att")]
    TauVAtt,
    #[serde(rename = "tau_v_rel")]
    TauVRel,
    #[serde(rename = "tau_g_att")]
    TauGAtt,
    #[serde(rename = "tau_g_rel")]
    TauGRel,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::Threshold,
        SweepParam::Ratio,
        SweepParam::TauVAtt,
        SweepParam::TauVRel,
        SweepParam::TauGAtt,
        SweepParam::TauGRel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Threshold => "L",
            SweepParam::Ratio => "R",
            SweepParam::TauVAtt => "tau_v_att",
            SweepParam::TauVRel => "tau_v_rel",
            SweepParam::TauGAtt => "tau_g_att",
            SweepParam::TauGRel => "tau_g_rel",
        }
    }

    pub fn is_timing(self) -> bool {
        !matches!(self, SweepParam::Threshold | SweepParam::Ratio)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `steps` equally spaced values over `[-range, range]`, endpoints
/// included. With an odd count the middle value is exactly 0.
pub fn delta_grid(steps: usize, range_frac: f64) -> Result<Vec<f64>, AnalysisError> {
    if steps < 2 {
        return Err(AnalysisError::TooFewSteps(steps));
    }
    if !(range_frac > 0.0 && range_frac <= 0.5) {
        return Err(AnalysisError::InvalidRange(range_frac));
    }
    let span = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            // symmetric construction so that d[i] == -d[steps - 1 - i]
            let t = (2 * i) as f64 - span;
            range_frac * t / span
        })
        .collect())
}

/// Scales one parameter by `1 + delta`. Returns the new set and whether it
/// had to be clamped back into the valid domain.
pub fn perturb(params: &DrcParams, param: SweepParam, delta: f64) -> (DrcParams, bool) {
    let mut raw = params.to_raw();
    let scale = 1.0 + delta;
    let mut clamped = false;
    match param {
        SweepParam::Threshold => {
            raw.threshold_db *= scale;
            if raw.threshold_db > 0.0 {
                raw.threshold_db = 0.0;
                clamped = true;
            }
        }
        SweepParam::Ratio => {
            raw.ratio *= scale;
            if raw.ratio < 1.0 {
                raw.ratio = 1.0;
                clamped = true;
            }
        }
        SweepParam::TauVAtt => raw.tau_v_att_s *= scale,
        SweepParam::TauVRel => raw.tau_v_rel_s *= scale,
        SweepParam::TauGAtt => raw.tau_g_att_s *= scale,
        SweepParam::TauGRel => raw.tau_g_rel_s *= scale,
    }
    let p = raw
        .validate()
        .expect("scaling by a positive factor keeps time constants valid");
    (p, clamped)
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub steps: usize,
    pub range_frac: f64,
    pub spectral: SpectralConfig,
    pub invert: InvertOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            steps: 10,
            range_frac: 0.5,
            spectral: SpectralConfig::default(),
            invert: InvertOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub profile: String,
    pub param: SweepParam,
    pub delta: f64,
    pub clip: usize,
    pub mse: f64,
    pub mel_l2: f64,
    /// The perturbed value was clamped into the valid domain.
    #[serde(skip)]
    pub clamped: bool,
    /// Metrics could not be computed; `mse` and `mel_l2` are NaN.
    #[serde(skip)]
    pub failed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Finite values of `metric` ("mse" or "mel_l2") for one parameter.
    pub fn values(&self, param: SweepParam, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.param == param && !r.failed)
            .map(|r| if metric == "mse" { r.mse } else { r.mel_l2 })
            .filter(|v| v.is_finite())
            .collect()
    }

    pub fn failed_count(&self) -> usize {
        self.rows.iter().filter(|r| r.failed).count()
    }
}

fn sweep_cell(
    clip_id: usize,
    x: &AudioClip,
    label: &str,
    params: &DrcParams,
    deltas: &[f64],
    analyzer: Option<&MelAnalyzer>,
    opts: &SweepOptions,
) -> Vec<SweepRow> {
    let (y, _) = compress(x, params, false);
    let (reference, _) = invert(&y, params, opts.invert);
    let mut rows = Vec::with_capacity(SweepParam::ALL.len() * deltas.len());
    for param in SweepParam::ALL {
        for &delta in deltas {
            let (perturbed, clamped) = perturb(params, param, delta);
            let (x_hat, _) = invert(&y, &perturbed, opts.invert);
            let report = analyzer
                .ok_or(())
                .and_then(|a| evaluate_with(a, &x_hat, &reference).map_err(|_| ()));
            let (mse, mel_l2, failed) = match report {
                Ok(r) => (r.mse, r.mel_l2, false),
                Err(()) => (f64::NAN, f64::NAN, true),
            };
            rows.push(SweepRow {
                profile: label.to_string(),
                param,
                delta,
                clip: clip_id,
                mse,
                mel_l2,
                clamped,
                failed,
            });
        }
    }
    rows
}

/// For every clip and profile, compresses with the true parameters and
/// compares reconstructions under singly perturbed parameters against the
/// reconstruction with the true ones.
///
/// Rows are ordered by clip, profile (catalog order), parameter, delta.
pub fn perturbation_sweep(
    clips: &[AudioClip],
    catalog: &ProfileCatalog,
    opts: &SweepOptions,
) -> Result<SweepResult, AnalysisError> {
    let deltas = delta_grid(opts.steps, opts.range_frac)?;
    let mut analyzers = BTreeMap::new();
    for clip in clips {
        let fs = clip.sample_rate_hz();
        if let std::collections::btree_map::Entry::Vacant(e) = analyzers.entry(fs) {
            e.insert(MelAnalyzer::new(opts.spectral, fs)?);
        }
    }
    let profiles: Vec<(&str, &DrcParams)> = catalog.profiles().collect();
    let cells: Vec<(usize, usize)> = (0..clips.len())
        .flat_map(|c| (0..profiles.len()).map(move |p| (c, p)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(c, p)| {
            let clip = &clips[c];
            let (label, params) = profiles[p];
            sweep_cell(
                c,
                clip,
                label,
                params,
                &deltas,
                analyzers.get(&clip.sample_rate_hz()),
                opts,
            )
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(SweepResult { rows })
}

/// CSV with header `profile,param,delta,clip,mse,mel_l2`.
pub fn write_sweep_csv<W: io::Write>(result: &SweepResult, out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["profile", "param", "delta", "clip", "mse", "mel_l2"])?;
    for r in &result.rows {
        w.write_record([
            r.profile.clone(),
            r.param.name().to_string(),
            format!("{}", r.delta),
            r.clip.to_string(),
            format!("{:e}", r.mse),
            format!("{:e}", r.mel_l2),
        ])?;
    }
    w.flush()?;
    Ok(())
}
