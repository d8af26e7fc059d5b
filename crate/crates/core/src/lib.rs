//! Differentially private zeroth-order optimization of nonsmooth nonconvex
//! stochastic objectives.
//!
//! The crate is organised bottom-up:
//!
//! - [`smoothing`]: two-point estimators of the uniformly smoothed gradient and
//!   of smoothed-gradient differences, plus Monte-Carlo reference oracles.
//! - [`tree`]: the tree mechanism for releasing noisy prefix sums of
//!   adaptively generated vectors.
//! - [`privacy`]: noise calibration, sensitivity bounds, RDP to DP conversion
//!   and an empirical sensitivity probe.
//! - [`oco`]: projected online subgradient descent on a Euclidean ball.
//! - [`o2nc`]: the online-to-nonconvex conversion driver, its gradient
//!   oracles and the run planner.
//! - [`objectives`]: synthetic objectives with known Lipschitz constants.
//! - [`stationarity`]: Goldstein stationarity certificates.
//!
//! Vectors are plain `Vec<f64>` ([`ParamVector`]); every random quantity is
//! drawn from an explicitly passed, seeded stream so runs are reproducible.

// `!(x > 0.0)` guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod o2nc;
pub mod objectives;
pub mod oco;
pub mod privacy;
pub mod rng;
pub mod smoothing;
pub mod stationarity;
pub mod tree;
pub mod vector;

pub use error::{Error, Result};
pub use vector::ParamVector;

/// Library version string embedded in result files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
