//! Configuration, seeded Monte Carlo execution and experiment drivers.

pub mod config;
pub mod engine;
pub mod experiments;
pub mod output;
pub mod roc;

pub use config::{ExperimentConfig, StoppingSpec, ThresholdGrid};
pub use experiments::{
    linspace, run_deflection_sweep, run_roc_fusion, run_roc_single, run_stopping_comparison,
    validate_moments, ComparisonSpec, DeflectionOutcome, DeflectionRow, FusionRoc,
    StoppingComparison, ValidationRow,
};
pub use roc::{roc_from_scores, RocCurve, RocPoint};
