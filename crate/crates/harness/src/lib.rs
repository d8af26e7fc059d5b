//! Experiment harness: configuration, seeded replicate execution, oracle
//! comparison and CSV/JSON export on top of `po2nc-core`.

// `!(x > 0.0)` guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod error;
pub mod experiment;

pub use compare::{compare_oracles, ComparisonReport};
pub use config::{ExperimentConfig, ObjectiveKind};
pub use error::{HarnessError, HarnessResult};
pub use experiment::{run_experiment, ExperimentReport, ResultRow};
