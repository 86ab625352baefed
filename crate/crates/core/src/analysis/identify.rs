//! Ranks catalog entries by how consistently they invert a clip.

use serde::Serialize;

use super::AnalysisError;
use crate::catalog::ProfileCatalog;
use crate::clip::AudioClip;
use crate::inverter::{invert, InvertOptions};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationEntry {
    pub label: String,
    pub degenerate_rate: f64,
    pub max_residual: f64,
    pub mean_residual: f64,
}

impl IdentificationEntry {
    fn key(&self) -> (f64, f64) {
        (self.degenerate_rate, self.mean_residual)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationReport {
    /// Best first.
    pub ranking: Vec<IdentificationEntry>,
    /// The two best entries have identical scores.
    pub indeterminate: bool,
}

impl IdentificationReport {
    pub fn best(&self) -> &str {
        &self.ranking[0].label
    }

    pub fn get(&self, label: &str) -> Option<&IdentificationEntry> {
        self.ranking.iter().find(|e| e.label == label)
    }
}

/// Inverts `y` under every profile and ranks them by degenerate-sample
/// rate, then by mean residual. Ties keep catalog order.
///
/// The neutral entry, if present, is scored by the fraction of samples
/// that cannot be explained as below threshold under the profile with the
/// highest threshold, with zero residual.
pub fn identify_profile(
    y: &AudioClip,
    catalog: &ProfileCatalog,
    opts: InvertOptions,
) -> Result<IdentificationReport, AnalysisError> {
    if catalog.profile_count() == 0 {
        return Err(AnalysisError::EmptyCatalog);
    }
    let scored: Vec<_> = catalog
        .profiles()
        .map(|(label, params)| (label, params.threshold_db(), invert(y, params, opts).1))
        .collect();
    let (_, _, permissive) = scored
        .iter()
        .fold(None, |best: Option<&(&str, f64, _)>, s| match best {
            Some(b) if b.1 >= s.1 => Some(b),
            _ => Some(s),
        })
        .expect("at least one profile");
    let neutral_score = if permissive.samples == 0 {
        0.0
    } else {
        (permissive.above_threshold_count + permissive.degenerate_count) as f64 / permissive.samples as f64
    };

    let mut ranking: Vec<IdentificationEntry> = catalog
        .entries()
        .iter()
        .map(|entry| match scored.iter().find(|s| s.0 == entry.label) {
            Some((label, _, diag)) => IdentificationEntry {
                label: label.to_string(),
                degenerate_rate: diag.degenerate_rate(),
                max_residual: diag.max_residual,
                mean_residual: diag.mean_residual(),
            },
            None => IdentificationEntry {
                label: entry.label.clone(),
                degenerate_rate: neutral_score,
                max_residual: 0.0,
                mean_residual: 0.0,
            },
        })
        .collect();
    ranking.sort_by(|a, b| {
        let (ka, kb) = (a.key(), b.key());
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    let indeterminate = ranking.len() > 1 && ranking[0].key() == ranking[1].key();
    Ok(IdentificationReport { ranking, indeterminate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin_catalog, NEUTRAL_LABEL};
    use crate::compressor::compress;
    use crate::corpus::desk_clip;

    #[test]
    fn true_profile_is_consistent() {
        let cat = builtin_catalog("small").unwrap();
        let x = desk_clip(5, 0.3, 22050);
        for (label, params) in cat.profiles() {
            let (y, _) = compress(&x, params, false);
            let report = identify_profile(&y, &cat, InvertOptions::default()).unwrap();
            let own = report.get(label).unwrap();
            assert_eq!(own.degenerate_rate, 0.0);
            assert!(own.max_residual < 1e-9);
            assert_eq!(report.ranking.len(), 6);
            for w in report.ranking.windows(2) {
                assert!(w[0].key() <= w[1].key());
            }
        }
    }

    #[test]
    fn quiet_input_is_indeterminate() {
        let cat = builtin_catalog("small").unwrap();
        let y = AudioClip::new(vec![1e-3; 500], 8000).unwrap();
        let report = identify_profile(&y, &cat, InvertOptions::default()).unwrap();
        assert!(report.indeterminate);
        assert!(report
            .ranking
            .iter()
            .all(|e| e.degenerate_rate == 0.0 && e.mean_residual == 0.0));
        assert_eq!(report.best(), NEUTRAL_LABEL);
    }

    #[test]
    fn empty_catalog() {
        let cat = ProfileCatalog::with_neutral(Vec::new()).unwrap();
        let y = AudioClip::new(vec![0.1; 10], 8000).unwrap();
        assert_eq!(
            identify_profile(&y, &cat, InvertOptions::default()),
            Err(AnalysisError::EmptyCatalog)
        );
    }
}
