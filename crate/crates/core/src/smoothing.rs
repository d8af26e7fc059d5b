//! Zeroth-order estimators of the uniformly smoothed gradient.
//!
//! For `F̂_δ(x) = E_{v∼U(ball)}[F(x + δv)]` the two-point identity
//! `∇F̂_δ(x) = E_{u∼U(sphere)}[(d/2δ)(F(x+δu) − F(x−δu))u]` gives an unbiased
//! estimator that only needs function values. [`grad_estimate`] averages it
//! over `d` directions per data point; [`diff_estimate`] estimates
//! `∇F̂_δ(x) − ∇F̂_δ(y)` using the same direction at both points.
//!
//! Directions are drawn in row-major `(data point, direction)` order and each
//! direction consumes exactly one `u64` from the caller's stream (it seeds a
//! private generator for the Gaussian draws). A call with batch size `b` in
//! dimension `d` therefore advances the stream by exactly `b·d` words, and
//! the `*_with_directions` variants can replay a call with frozen directions.

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::objectives::StochasticObjective;
use crate::rng::StreamRng;
use crate::vector::{axpy, norm, ParamVector};

/// Norm below which a Gaussian draw is rejected before normalising.
const DEGENERATE_NORM: f64 = 1e-8;

/// A unit vector in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(ParamVector);

impl Direction {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> ParamVector {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Smoothing radius `δ`, dimension `d` and Lipschitz constant `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    delta: f64,
    dim: usize,
    lipschitz: f64,
}

impl SmoothingParams {
    pub fn new(delta: f64, dim: usize, lipschitz: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!("smoothing radius must be positive, got {delta}")));
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be >= 1"));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::invalid(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        Ok(Self { delta, dim, lipschitz })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Uniform draw from the unit sphere `S^{d−1}`: a normalised standard normal
/// vector, redrawn if its norm falls below `1e-8`. Consumes one `u64` from
/// `rng`.
pub fn sample_unit_sphere(dim: usize, rng: &mut dyn RngCore) -> Result<Direction> {
    if dim == 0 {
        return Err(Error::invalid("sphere dimension must be >= 1"));
    }
    let mut inner = StreamRng::seed_from_u64(rng.next_u64());
    let mut v = vec![0.0; dim];
    loop {
        for x in v.iter_mut() {
            *x = inner.sample(StandardNormal);
        }
        let n = norm(&v);
        if n >= DEGENERATE_NORM {
            v.iter_mut().for_each(|x| *x /= n);
            return Ok(Direction(v));
        }
    }
}

/// Uniform draw from the unit ball: a sphere direction scaled by `U^{1/d}`.
/// Consumes two `u64` from `rng`.
pub fn sample_unit_ball(dim: usize, rng: &mut dyn RngCore) -> Result<ParamVector> {
    let dir = sample_unit_sphere(dim, rng)?;
    let u: f64 = rng.random();
    let r = u.powf(1.0 / dim as f64);
    Ok(dir.0.into_iter().map(|x| r * x).collect())
}

/// `count` directions in draw order.
pub fn sample_directions(count: usize, dim: usize, rng: &mut dyn RngCore) -> Result<Vec<Direction>> {
    (0..count).map(|_| sample_unit_sphere(dim, rng)).collect()
}

fn check_point<O: StochasticObjective>(f: &O, sp: &SmoothingParams, x: &[f64]) -> Result<()> {
    if x.len() != sp.dim || f.dim() != sp.dim {
        return Err(Error::invalid(format!(
            "dimension mismatch: point {}, objective {}, smoothing {}",
            x.len(),
            f.dim(),
            sp.dim
        )));
    }
    Ok(())
}

fn check_directions(dirs: &[Direction], batch_len: usize, dim: usize) -> Result<()> {
    if batch_len == 0 {
        return Err(Error::invalid("empty batch"));
    }
    if dirs.len() != batch_len * dim {
        return Err(Error::invalid(format!(
            "expected {} directions for batch {} in dimension {}, got {}",
            batch_len * dim,
            batch_len,
            dim,
            dirs.len()
        )));
    }
    if dirs.iter().any(|u| u.dim() != dim) {
        return Err(Error::invalid("direction dimension mismatch"));
    }
    Ok(())
}

/// `x + scale·u` written into `out`.
#[inline]
fn shifted(x: &[f64], scale: f64, u: &[f64], out: &mut [f64]) {
    for ((o, xi), ui) in out.iter_mut().zip(x).zip(u) {
        *o = xi + scale * ui;
    }
}

/// Averages `coef(i, u_ij)·u_ij` as `(1/b) Σ_i (1/d) Σ_j`.
fn average_terms(
    dim: usize,
    batch_len: usize,
    dirs: &[Direction],
    mut coef: impl FnMut(usize, &[f64]) -> f64,
) -> ParamVector {
    let mut total = vec![0.0; dim];
    let mut inner = vec![0.0; dim];
    for (i, row) in dirs.chunks(dim).enumerate() {
        inner.iter_mut().for_each(|v| *v = 0.0);
        for u in row {
            let c = coef(i, u.as_slice());
            axpy(c, u.as_slice(), &mut inner);
        }
        axpy(1.0 / dim as f64, &inner, &mut total);
    }
    total.iter_mut().for_each(|v| *v /= batch_len as f64);
    total
}

/// Two-point estimate of `∇F̂_δ(x)` from `b` data points and `b·d` fresh
/// directions; `2·b·d` objective evaluations.
pub fn grad_estimate<O: StochasticObjective>(
    f: &O,
    sp: &SmoothingParams,
    x: &[f64],
    batch: &[O::Datum],
    rng: &mut dyn RngCore,
) -> Result<ParamVector> {
    check_point(f, sp, x)?;
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let dirs = sample_directions(batch.len() * sp.dim, sp.dim, rng)?;
    grad_estimate_with_directions(f, sp, x, batch, &dirs)
}

/// [`grad_estimate`] with caller-supplied directions, row-major in
/// `(data point, direction)`.
pub fn grad_estimate_with_directions<O: StochasticObjective>(
    f: &O,
    sp: &SmoothingParams,
    x: &[f64],
    batch: &[O::Datum],
    dirs: &[Direction],
) -> Result<ParamVector> {
    check_point(f, sp, x)?;
    check_directions(dirs, batch.len(), sp.dim)?;
    let d = sp.dim;
    let delta = sp.delta;
    let scale = d as f64 / (2.0 * delta);
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    Ok(average_terms(d, batch.len(), dirs, |i, u| {
        shifted(x, delta, u, &mut plus);
        shifted(x, -delta, u, &mut minus);
        scale * (f.value(&plus, &batch[i]) - f.value(&minus, &batch[i]))
    }))
}

/// Estimate of `∇F̂_δ(x) − ∇F̂_δ(y)`; each direction is shared between the
/// evaluations at `x` and `y`. `2·b·d` objective evaluations.
pub fn diff_estimate<O: StochasticObjective>(
    f: &O,
    sp: &SmoothingParams,
    x: &[f64],
    y: &[f64],
    batch: &[O::Datum],
    rng: &mut dyn RngCore,
) -> Result<ParamVector> {
    check_point(f, sp, x)?;
    check_point(f, sp, y)?;
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let dirs = sample_directions(batch.len() * sp.dim, sp.dim, rng)?;
    diff_estimate_with_directions(f, sp, x, y, batch, &dirs)
}

/// [`diff_estimate`] with caller-supplied directions.
pub fn diff_estimate_with_directions<O: StochasticObjective>(
    f: &O,
    sp: &SmoothingParams,
    x: &[f64],
    y: &[f64],
    batch: &[O::Datum],
    dirs: &[Direction],
) -> Result<ParamVector> {
    check_point(f, sp, x)?;
    check_point(f, sp, y)?;
    check_directions(dirs, batch.len(), sp.dim)?;
    let d = sp.dim;
    let delta = sp.delta;
    let scale = d as f64 / delta;
    let mut at_x = vec![0.0; d];
    let mut at_y = vec![0.0; d];
    Ok(average_terms(d, batch.len(), dirs, |i, u| {
        shifted(x, delta, u, &mut at_x);
        shifted(y, delta, u, &mut at_y);
        scale * (f.value(&at_x, &batch[i]) - f.value(&at_y, &batch[i]))
    }))
}

/// A Monte-Carlo mean with per-component standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: ParamVector,
    pub stderr: ParamVector,
    pub n_samples: usize,
}

/// Running per-component mean and variance (Welford).
#[derive(Debug, Clone)]
pub struct VectorMoments {
    count: usize,
    mean: ParamVector,
    m2: ParamVector,
}

impl VectorMoments {
    pub fn new(dim: usize) -> Self {
        Self { count: 0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    pub fn push(&mut self, v: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(v) {
            let delta = x - *m;
            *m += delta / n;
            *s += delta * (x - *m);
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(self) -> MonteCarloEstimate {
        let n = self.count as f64;
        let stderr = if self.count > 1 {
            self.m2.iter().map(|s| (s / (n - 1.0) / n).sqrt()).collect()
        } else {
            vec![f64::INFINITY; self.mean.len()]
        };
        MonteCarloEstimate { mean: self.mean, stderr, n_samples: self.count }
    }
}

/// High-accuracy Monte-Carlo estimate of `∇F̂_δ(x)` for `F = E_z f(·, z)`:
/// each sample pairs a fresh datum with a fresh direction in the two-point
/// form. Test oracle only.
pub fn smoothed_grad_reference<O: StochasticObjective>(
    f: &O,
    sp: &SmoothingParams,
    x: &[f64],
    n_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<MonteCarloEstimate> {
    check_point(f, sp, x)?;
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be >= 1"));
    }
    let d = sp.dim;
    let scale = d as f64 / (2.0 * sp.delta);
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    let mut term = vec![0.0; d];
    let mut moments = VectorMoments::new(d);
    for _ in 0..n_samples {
        let z = f.sample_datum(rng);
        let u = sample_unit_sphere(d, rng)?;
        shifted(x, sp.delta, u.as_slice(), &mut plus);
        shifted(x, -sp.delta, u.as_slice(), &mut minus);
        let c = scale * (f.value(&plus, &z) - f.value(&minus, &z));
        for (t, ui) in term.iter_mut().zip(u.as_slice()) {
            *t = c * ui;
        }
        moments.push(&term);
    }
    Ok(moments.finish())
}

/// Monte-Carlo estimate of the smoothed value `F̂_δ(x)` and its standard
/// error, sampling `v` uniformly in the unit ball and a fresh datum per draw.
pub fn smoothed_value_reference<O: StochasticObjective>(
    f: &O,
    delta: f64,
    x: &[f64],
    n_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<(f64, f64)> {
    if n_samples < 2 {
        return Err(Error::invalid("n_samples must be >= 2"));
    }
    let d = x.len();
    let mut point = vec![0.0; d];
    let mut moments = VectorMoments::new(1);
    for _ in 0..n_samples {
        let z = f.sample_datum(rng);
        let v = sample_unit_ball(d, rng)?;
        shifted(x, delta, &v, &mut point);
        moments.push(&[f.value(&point, &z)]);
    }
    let est = moments.finish();
    Ok((est.mean[0], est.stderr[0]))
}
