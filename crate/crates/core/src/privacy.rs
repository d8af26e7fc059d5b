//! Noise calibration and privacy bookkeeping.
//!
//! A budget `ρ` means the run is `(α, αρ²/2)`-RDP simultaneously for every
//! order `α > 1`. `ρ = ∞` is the non-private mode in which every noise scale
//! is zero.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::StochasticObjective;
use crate::smoothing::{
    diff_estimate_with_directions, grad_estimate_with_directions, sample_directions,
    SmoothingParams,
};
use crate::vector::dist;

/// Privacy level of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PrivacyBudget {
    /// `(α, αρ²/2)`-RDP for all `α > 1`.
    Rdp { rho: f64 },
    NonPrivate,
}

impl PrivacyBudget {
    /// `None` and `+∞` both map to [`PrivacyBudget::NonPrivate`].
    pub fn from_rho(rho: Option<f64>) -> Result<Self> {
        match rho {
            None => Ok(Self::NonPrivate),
            Some(r) if r == f64::INFINITY => Ok(Self::NonPrivate),
            Some(r) if r > 0.0 && r.is_finite() => Ok(Self::Rdp { rho: r }),
            Some(r) => Err(Error::invalid(format!("privacy budget rho must be positive, got {r}"))),
        }
    }

    /// `ρ`, with `+∞` for the non-private mode.
    pub fn rho(&self) -> f64 {
        match self {
            Self::Rdp { rho } => *rho,
            Self::NonPrivate => f64::INFINITY,
        }
    }

    pub fn as_option(&self) -> Option<f64> {
        match self {
            Self::Rdp { rho } => Some(*rho),
            Self::NonPrivate => None,
        }
    }

    pub fn is_private(&self) -> bool {
        matches!(self, Self::Rdp { .. })
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

/// Constant tree-mechanism noise scale
/// `σ = √(2 ln T) · 4dL / (B2 · T · ρ)`.
///
/// With `B1 ≥ T·B2/2` and OCO radius `D = δ/T` this makes a run
/// `(α, αρ²/2)`-RDP. Returns `0` for `ρ = ∞`.
pub fn sigma_schedule(dim: usize, lipschitz: f64, b2: usize, horizon: usize, rho: f64) -> Result<f64> {
    if horizon < 2 {
        return Err(Error::invalid(format!(
            "tree noise calibration needs T >= 2, got {horizon}"
        )));
    }
    if dim == 0 || b2 == 0 {
        return Err(Error::invalid("dimension and batch size must be >= 1"));
    }
    positive("Lipschitz constant", lipschitz)?;
    positive("rho", rho)?;
    if rho == f64::INFINITY {
        return Ok(0.0);
    }
    let t = horizon as f64;
    Ok((2.0 * t.ln()).sqrt() * 4.0 * dim as f64 * lipschitz / (b2 as f64 * t * rho))
}

/// Noise scale of the one-shot baseline oracle, `σ = dL / (Bρ)`.
pub fn naive_sigma(dim: usize, lipschitz: f64, batch: usize, rho: f64) -> Result<f64> {
    if dim == 0 || batch == 0 {
        return Err(Error::invalid("dimension and batch size must be >= 1"));
    }
    positive("Lipschitz constant", lipschitz)?;
    positive("rho", rho)?;
    if rho == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(dim as f64 * lipschitz / (batch as f64 * rho))
}

/// Which estimator a sensitivity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorKind {
    Grad,
    Diff,
}

/// Per-step L2 sensitivity bound and the estimator it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRecord {
    pub s: f64,
    pub source: EstimatorKind,
}

/// Analytic sensitivities of the two mechanisms composed by the
/// variance-reduced oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityBounds {
    /// `2dL/B1` for the first-step gradient estimate.
    pub grad: SensitivityRecord,
    /// `2dL·(2D)/(B2·δ)` for a difference step whose points are at most
    /// `2D` apart.
    pub diff: SensitivityRecord,
}

impl SensitivityBounds {
    pub fn max(&self) -> f64 {
        self.grad.s.max(self.diff.s)
    }
}

pub fn sensitivity_bounds(
    dim: usize,
    lipschitz: f64,
    b1: usize,
    b2: usize,
    delta: f64,
    radius: f64,
) -> SensitivityBounds {
    let d = dim as f64;
    SensitivityBounds {
        grad: SensitivityRecord { s: 2.0 * d * lipschitz / b1 as f64, source: EstimatorKind::Grad },
        diff: SensitivityRecord {
            s: 2.0 * d * lipschitz * (2.0 * radius) / (b2 as f64 * delta),
            source: EstimatorKind::Diff,
        },
    }
}

/// `ε = 2ρ √(ln(1/δ))`: an `(α, αρ²/2)`-RDP mechanism is `(ε, δ)`-DP for
/// every `δ ≥ exp(−ρ²)`.
pub fn rdp_to_dp(rho: f64, dp_delta: f64) -> Result<f64> {
    positive("rho", rho)?;
    if !(dp_delta > 0.0 && dp_delta <= 1.0) {
        return Err(Error::invalid(format!("dp delta must lie in (0, 1], got {dp_delta}")));
    }
    let floor = (-rho * rho).exp();
    if dp_delta < floor {
        return Err(Error::OutOfRange(format!(
            "dp delta {dp_delta} below exp(-rho^2) = {floor}"
        )));
    }
    Ok(2.0 * rho * (1.0 / dp_delta).ln().sqrt())
}

/// Estimator step audited by [`empirical_sensitivity_probe`].
#[derive(Debug, Clone, Copy)]
pub enum ProbeStep<'a> {
    Grad { x: &'a [f64] },
    Diff { x: &'a [f64], y: &'a [f64] },
}

impl ProbeStep<'_> {
    /// Analytic bound `2dL/b`, or `2dL‖x − y‖/(bδ)` for a difference step.
    pub fn analytic_bound(&self, sp: &SmoothingParams, batch_len: usize) -> f64 {
        let base = 2.0 * sp.dim() as f64 * sp.lipschitz() / batch_len as f64;
        match self {
            ProbeStep::Grad { .. } => base,
            ProbeStep::Diff { x, y } => base * dist(x, y) / sp.delta(),
        }
    }
}

/// Largest L2 change of an estimator output over `n_swaps` neighbouring
/// batches, each differing from `batch` in one uniformly chosen position
/// whose datum is replaced by `replace`. The `b·d` directions are drawn once
/// and frozen across all replays.
pub fn empirical_sensitivity_probe<O, F>(
    f: &O,
    sp: &SmoothingParams,
    step: ProbeStep<'_>,
    batch: &[O::Datum],
    n_swaps: usize,
    mut replace: F,
    rng: &mut dyn RngCore,
) -> Result<f64>
where
    O: StochasticObjective,
    F: FnMut(&O::Datum, &mut dyn RngCore) -> O::Datum,
{
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let dirs = sample_directions(batch.len() * sp.dim(), sp.dim(), rng)?;
    let eval = |b: &[O::Datum]| match step {
        ProbeStep::Grad { x } => grad_estimate_with_directions(f, sp, x, b, &dirs),
        ProbeStep::Diff { x, y } => diff_estimate_with_directions(f, sp, x, y, b, &dirs),
    };
    let base = eval(batch)?;
    let mut neighbour = batch.to_vec();
    let mut worst: f64 = 0.0;
    for _ in 0..n_swaps {
        let idx = rng.random_range(0..batch.len());
        neighbour[idx] = replace(&batch[idx], rng);
        let out = eval(&neighbour)?;
        worst = worst.max(dist(&base, &out));
        neighbour[idx] = batch[idx].clone();
    }
    Ok(worst)
}
