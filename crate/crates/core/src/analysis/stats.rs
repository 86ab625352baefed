//! Box-plot summaries of error distributions.

use std::io;

use serde::Serialize;

use super::sweep::{SweepParam, SweepResult};
use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outlier_count: usize,
}

/// Quantile of already sorted data by linear interpolation between order
/// statistics at position `q * (n - 1)`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Median, quartiles, 1.5 IQR whiskers and outlier count. Non-finite
/// values are ignored.
pub fn box_stats(values: &[f64]) -> Result<BoxStats, AnalysisError> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    v.sort_by(f64::total_cmp);
    let q1 = quantile(&v, 0.25);
    let median = quantile(&v, 0.5);
    let q3 = quantile(&v, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = v.iter().filter(|&&x| x >= lo_fence && x <= hi_fence);
    let whisker_low = inside.clone().copied().fold(f64::INFINITY, f64::min);
    let whisker_high = inside.copied().fold(f64::NEG_INFINITY, f64::max);
    let outlier_count = v.iter().filter(|&&x| x < lo_fence || x > hi_fence).count();
    Ok(BoxStats {
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        outlier_count,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxSummaryRow {
    pub param: SweepParam,
    pub metric: &'static str,
    pub stats: BoxStats,
}

/// One row per parameter and metric (`mse`, `mel_l2`), pooled over
/// profiles, clips and deltas. Parameters with no finite values are
/// skipped.
pub fn summarize_sweep(result: &SweepResult) -> Vec<BoxSummaryRow> {
    let mut rows = Vec::new();
    for param in SweepParam::ALL {
        for metric in ["mse", "mel_l2"] {
            if let Ok(stats) = box_stats(&result.values(param, metric)) {
                rows.push(BoxSummaryRow { param, metric, stats });
            }
        }
    }
    rows
}

/// CSV with header `param,metric,median,q1,q3,wlow,whigh,outliers`.
pub fn write_summary_csv<W: io::Write>(rows: &[BoxSummaryRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["param", "metric", "median", "q1", "q3", "wlow", "whigh", "outliers"])?;
    for r in rows {
        let s = &r.stats;
        w.write_record([
            r.param.name().to_string(),
            r.metric.to_string(),
            format!("{:e}", s.median),
            format!("{:e}", s.q1),
            format!("{:e}", s.q3),
            format!("{:e}", s.whisker_low),
            format!("{:e}", s.whisker_high),
            s.outlier_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
