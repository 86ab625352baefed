//! Experiment harnesses: parameter-sensitivity sweep, solver benchmark,
//! box-plot statistics and a diagnostic profile ranker.

mod bench;
mod identify;
mod stats;
mod sweep;

use thiserror::Error;

use crate::metrics::MetricError;

pub use bench::{solver_benchmark, SolverReport};
pub use identify::{identify_profile, IdentificationEntry, IdentificationReport};
pub use stats::{box_stats, quantile, summarize_sweep, write_summary_csv, BoxStats, BoxSummaryRow};
pub use sweep::{
    delta_grid, perturb, perturbation_sweep, write_sweep_csv, SweepOptions, SweepParam, SweepResult, SweepRow,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("box statistics need at least one finite value")]
    EmptyInput,
    #[error("catalog has no entries")]
    EmptyCatalog,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("sweep needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("sweep range must be in (0, 0.5], got {0}")]
    InvalidRange(f64),
    #[error(transparent)]
    Metric(#[from] MetricError),
}
