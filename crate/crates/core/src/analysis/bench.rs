//! Wall time and reconstruction error of the two root finders.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::AnalysisError;
use crate::catalog::ProfileCatalog;
use crate::clip::AudioClip;
use crate::compressor::compress;
use crate::inverter::{invert, InversionDiagnostics, InvertOptions, SolverKind};
use crate::metrics::{mse, rms_normalize};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub solver: &'static str,
    pub total_wall_time_s: f64,
    /// Mean RMS-normalized round-trip MSE over clip x profile pairs.
    pub mean_mse: f64,
    /// Mean `|xi|` over all above-threshold samples.
    pub mean_residual: f64,
    pub max_residual: f64,
    pub degenerate_rate: f64,
    pub clips: usize,
    pub profiles: usize,
}

/// Compresses every clip with every profile, then inverts all of them with
/// each solver in turn. Inversions for one solver run one after another on
/// the calling thread so the wall times are comparable.
pub fn solver_benchmark(
    clips: &[AudioClip],
    catalog: &ProfileCatalog,
    tol: f64,
) -> Result<Vec<SolverReport>, AnalysisError> {
    if clips.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let profiles: Vec<_> = catalog.profiles().map(|(_, p)| *p).collect();
    if profiles.is_empty() {
        return Err(AnalysisError::EmptyCatalog);
    }
    let pairs: Vec<(usize, usize)> = (0..clips.len())
        .flat_map(|c| (0..profiles.len()).map(move |p| (c, p)))
        .collect();
    let compressed: Vec<AudioClip> = pairs
        .par_iter()
        .map(|&(c, p)| compress(&clips[c], &profiles[p], false).0)
        .collect();
    let originals: Vec<Option<AudioClip>> = clips.iter().map(|c| rms_normalize(c).ok()).collect();

    let mut reports = Vec::with_capacity(SolverKind::ALL.len());
    for solver in SolverKind::ALL {
        let opts = InvertOptions::new(solver, tol);
        let start = Instant::now();
        let results: Vec<(AudioClip, InversionDiagnostics)> = pairs
            .iter()
            .zip(&compressed)
            .map(|(&(_, p), y)| invert(y, &profiles[p], opts))
            .collect();
        let elapsed = start.elapsed().as_secs_f64();

        let mut mse_sum = 0.0;
        let mut mse_count = 0usize;
        let mut pooled = InversionDiagnostics::default();
        for (&(c, _), (x_hat, diag)) in pairs.iter().zip(&results) {
            if let (Some(x), Ok(xh)) = (&originals[c], rms_normalize(x_hat)) {
                mse_sum += mse(&xh, x)?;
                mse_count += 1;
            }
            pooled.degenerate_count += diag.degenerate_count;
            pooled.samples += diag.samples;
            pooled.above_threshold_count += diag.above_threshold_count;
            pooled.residual_sum += diag.residual_sum;
            pooled.max_residual = pooled.max_residual.max(diag.max_residual);
        }
        reports.push(SolverReport {
            solver: solver.name(),
            total_wall_time_s: elapsed,
            mean_mse: if mse_count == 0 {
                0.0
            } else {
                mse_sum / mse_count as f64
            },
            mean_residual: pooled.mean_residual(),
            max_residual: pooled.max_residual,
            degenerate_rate: pooled.degenerate_rate(),
            clips: clips.len(),
            profiles: profiles.len(),
        });
    }
    Ok(reports)
}
