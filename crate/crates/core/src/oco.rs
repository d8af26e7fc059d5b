//! Projected online subgradient descent on the ball `‖Δ‖ ≤ D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{axpy, dot, norm, norm_sq, ParamVector};

/// Euclidean projection onto the centred ball of radius `radius`.
pub fn project_ball(x: &[f64], radius: f64) -> ParamVector {
    let n = norm(x);
    if n <= radius {
        x.to_vec()
    } else {
        x.iter().map(|v| radius * v / n).collect()
    }
}

/// Online subgradient descent with the adaptive stepsize
/// `η_t = D / √(Σ_{i≤t} ‖g_i‖²)`. A zero accumulated norm gives a zero step.
#[derive(Debug, Clone)]
pub struct OsdState {
    delta: ParamVector,
    radius: f64,
    grad_sq_sum: f64,
    step_count: usize,
}

impl OsdState {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("OSD dimension must be >= 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("OSD radius must be positive, got {radius}")));
        }
        Ok(Self { delta: vec![0.0; dim], radius, grad_sq_sum: 0.0, step_count: 0 })
    }

    /// The current play `Δ_t`.
    pub fn current(&self) -> &[f64] {
        &self.delta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn grad_sq_sum(&self) -> f64 {
        self.grad_sq_sum
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    /// Feeds the linear loss `⟨g, ·⟩` for the current play and returns the
    /// next play `Π_D(Δ_t − η_t g)`.
    pub fn step(&mut self, g: &[f64]) -> Result<&[f64]> {
        if g.len() != self.delta.len() {
            return Err(Error::invalid(format!(
                "OSD gradient has dimension {}, expected {}",
                g.len(),
                self.delta.len()
            )));
        }
        self.grad_sq_sum += norm_sq(g);
        self.step_count += 1;
        if self.grad_sq_sum > 0.0 {
            let eta = self.radius / self.grad_sq_sum.sqrt();
            let mut next = self.delta.clone();
            axpy(-eta, g, &mut next);
            self.delta = project_ball(&next, self.radius);
        }
        Ok(&self.delta)
    }

    /// Restart: back to `Δ = 0` with an empty stepsize accumulator.
    pub fn reset(&mut self) {
        self.delta.iter_mut().for_each(|v| *v = 0.0);
        self.grad_sq_sum = 0.0;
        self.step_count = 0;
    }
}

/// Regret of a play sequence against the worst linear comparator in the ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretAudit {
    /// `Σ⟨g_t, Δ_t − u*⟩` with `u* = −D·Σg/‖Σg‖` (or `0` when `Σg = 0`).
    pub regret: f64,
    /// `2D √(Σ‖g_t‖²)`.
    pub bound: f64,
}

impl RegretAudit {
    pub fn holds(&self) -> bool {
        self.regret <= self.bound * (1.0 + 1e-12) + 1e-15
    }
}

pub fn regret_audit<P: AsRef<[f64]>, G: AsRef<[f64]>>(
    deltas: &[P],
    grads: &[G],
    radius: f64,
) -> Result<RegretAudit> {
    if deltas.len() != grads.len() {
        return Err(Error::invalid(format!(
            "{} plays but {} gradients",
            deltas.len(),
            grads.len()
        )));
    }
    let Some(first) = grads.first() else {
        return Ok(RegretAudit { regret: 0.0, bound: 0.0 });
    };
    let mut sum = vec![0.0; first.as_ref().len()];
    let mut played = 0.0;
    let mut sq = 0.0;
    for (delta, g) in deltas.iter().zip(grads) {
        let g = g.as_ref();
        axpy(1.0, g, &mut sum);
        played += dot(g, delta.as_ref());
        sq += norm_sq(g);
    }
    Ok(RegretAudit { regret: played + radius * norm(&sum), bound: 2.0 * radius * sq.sqrt() })
}
