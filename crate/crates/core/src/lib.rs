//! Reversible dynamic range compression.
//!
//! A parametric feed-forward compressor, its sample-exact model-based
//! inverse, the evaluation metrics used to score reconstructions, and the
//! dataset and experiment tooling built around them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod catalog;
pub mod clip;
pub mod compressor;
pub mod corpus;
pub mod inverter;
pub mod metrics;
pub mod params;

pub use catalog::{builtin_catalog, CatalogEntry, CatalogError, ProfileCatalog, NEUTRAL_LABEL};
pub use clip::{AudioClip, ClipError};
pub use compressor::{compress, Branch, CompressorState, CompressorTrace};
pub use inverter::{invert, InversionDiagnostics, InvertOptions, SolverKind};
pub use params::{derived_constants, validate_params, Detector, DrcParams, ParamError, RawParams};
