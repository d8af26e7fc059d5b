//! Synthetic stochastic objectives `F(x) = E_z[f(x, z)]` with known Lipschitz
//! constants.
//!
//! Each objective exposes its a.e. gradient, and where one exists a closed form
//! of the smoothed gradient, so the estimators and certificates can be checked
//! against exact answers.

use std::io::{Read, Write};

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smoothing::sample_unit_sphere;
use crate::vector::{dot, norm, scale, ParamVector};

/// A stochastic objective `f(x, z)`, Lipschitz in `x` for every datum `z`.
pub trait StochasticObjective: Sync {
    type Datum: Clone + Send + Sync;

    fn dim(&self) -> usize;

    fn value(&self, x: &[f64], z: &Self::Datum) -> f64;

    /// Gradient in `x`, defined off a measure-zero set. On a kink the value
    /// is the limit taken from the side where the kinked quantity increases.
    fn grad_ae(&self, x: &[f64], z: &Self::Datum) -> ParamVector;

    fn lipschitz(&self) -> f64;

    /// `∇F̂_δ(x)` when it is known in closed form.
    fn smoothed_grad_closed_form(&self, _x: &[f64], _delta: f64) -> Option<ParamVector> {
        None
    }

    /// Population gradient `∇F(x)` when it is known in closed form.
    fn population_grad(&self, _x: &[f64]) -> Option<ParamVector> {
        None
    }

    /// One fresh draw from the data distribution.
    fn sample_datum(&self, rng: &mut dyn RngCore) -> Self::Datum;
}

/// An ordered collection of data points.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<Z> {
    points: Vec<Z>,
}

impl<Z> Dataset<Z> {
    pub fn new(points: Vec<Z>) -> Self {
        Self { points }
    }

    /// `n` i.i.d. draws from the objective's data distribution.
    pub fn sample<O>(objective: &O, n: usize, rng: &mut dyn RngCore) -> Self
    where
        O: StochasticObjective<Datum = Z>,
    {
        Self::new((0..n).map(|_| objective.sample_datum(rng)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Z] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Z> {
        self.points
    }
}

/// `f(x, z) = ⟨a, x⟩` for every `z`.
#[derive(Debug, Clone)]
pub struct Linear {
    a: ParamVector,
}

pub fn make_linear(a: ParamVector) -> Result<Linear> {
    if a.is_empty() || a.iter().all(|v| *v == 0.0) {
        return Err(Error::invalid("linear objective needs a nonzero coefficient vector"));
    }
    Ok(Linear { a })
}

impl Linear {
    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }
}

impl StochasticObjective for Linear {
    type Datum = ();

    fn dim(&self) -> usize {
        self.a.len()
    }

    fn value(&self, x: &[f64], _z: &()) -> f64 {
        dot(&self.a, x)
    }

    fn grad_ae(&self, _x: &[f64], _z: &()) -> ParamVector {
        self.a.clone()
    }

    fn lipschitz(&self) -> f64 {
        norm(&self.a)
    }

    fn smoothed_grad_closed_form(&self, _x: &[f64], _delta: f64) -> Option<ParamVector> {
        Some(self.a.clone())
    }

    fn population_grad(&self, _x: &[f64]) -> Option<ParamVector> {
        Some(self.a.clone())
    }

    fn sample_datum(&self, _rng: &mut dyn RngCore) {}
}

/// `f(x, z) = ½‖x‖²`, ignoring `z`.
///
/// Only Lipschitz on the ball `‖x‖ ≤ R`, where the constant is `R`; test use
/// only, with start points chosen well inside the ball.
#[derive(Debug, Clone)]
pub struct Quadratic {
    dim: usize,
    radius: f64,
}

pub fn make_quadratic(dim: usize, radius: f64) -> Result<Quadratic> {
    if dim == 0 {
        return Err(Error::invalid("quadratic objective needs dim >= 1"));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid("quadratic objective needs a positive radius"));
    }
    Ok(Quadratic { dim, radius })
}

impl Quadratic {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `F̂_δ(x) − F(x)`: smoothing adds `δ²·E‖v‖²/2` with `E‖v‖² = d/(d+2)`
    /// for `v` uniform in the unit ball.
    pub fn smoothing_offset(&self, delta: f64) -> f64 {
        let d = self.dim as f64;
        delta * delta * d / (2.0 * (d + 2.0))
    }
}

impl StochasticObjective for Quadratic {
    type Datum = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], _z: &()) -> f64 {
        0.5 * dot(x, x)
    }

    fn grad_ae(&self, x: &[f64], _z: &()) -> ParamVector {
        x.to_vec()
    }

    fn lipschitz(&self) -> f64 {
        self.radius
    }

    fn smoothed_grad_closed_form(&self, x: &[f64], _delta: f64) -> Option<ParamVector> {
        Some(x.to_vec())
    }

    fn population_grad(&self, x: &[f64]) -> Option<ParamVector> {
        Some(x.to_vec())
    }

    fn sample_datum(&self, _rng: &mut dyn RngCore) {}
}

/// `f(x, z) = L·⟨z, x⟩` with `z` uniform on the unit sphere.
///
/// Each datum is `L`-Lipschitz and flipping `z` to `−z` is the worst-case
/// neighbour for the estimator sensitivity bounds.
#[derive(Debug, Clone)]
pub struct RandomLinear {
    dim: usize,
    lipschitz: f64,
}

pub fn make_random_linear(dim: usize, lipschitz: f64) -> Result<RandomLinear> {
    if dim == 0 || !(lipschitz > 0.0) {
        return Err(Error::invalid("random linear objective needs dim >= 1 and L > 0"));
    }
    Ok(RandomLinear { dim, lipschitz })
}

impl StochasticObjective for RandomLinear {
    type Datum = ParamVector;

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], z: &ParamVector) -> f64 {
        self.lipschitz * dot(z, x)
    }

    fn grad_ae(&self, _x: &[f64], z: &ParamVector) -> ParamVector {
        scale(self.lipschitz, z)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn smoothed_grad_closed_form(&self, _x: &[f64], _delta: f64) -> Option<ParamVector> {
        Some(vec![0.0; self.dim])
    }

    fn population_grad(&self, _x: &[f64]) -> Option<ParamVector> {
        Some(vec![0.0; self.dim])
    }

    fn sample_datum(&self, rng: &mut dyn RngCore) -> ParamVector {
        sample_unit_sphere(self.dim, rng)
            .expect("dim validated at construction")
            .into_inner()
    }
}

/// `f(x, z) = Σ_i |x_i|`, ignoring `z`: a symmetric kink at the origin.
#[derive(Debug, Clone)]
pub struct AbsSum {
    dim: usize,
}

pub fn make_abs_sum(dim: usize) -> Result<AbsSum> {
    if dim == 0 {
        return Err(Error::invalid("abs-sum objective needs dim >= 1"));
    }
    Ok(AbsSum { dim })
}

fn right_sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl StochasticObjective for AbsSum {
    type Datum = ();

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], _z: &()) -> f64 {
        x.iter().map(|v| v.abs()).sum()
    }

    fn grad_ae(&self, x: &[f64], _z: &()) -> ParamVector {
        x.iter().map(|v| right_sign(*v)).collect()
    }

    fn lipschitz(&self) -> f64 {
        (self.dim as f64).sqrt()
    }

    /// In one dimension `F̂_δ(x) = E|x + δv|` with `v ~ U[−1, 1]`, whose
    /// derivative is `clamp(x/δ, −1, 1)`.
    fn smoothed_grad_closed_form(&self, x: &[f64], delta: f64) -> Option<ParamVector> {
        (self.dim == 1).then(|| vec![(x[0] / delta).clamp(-1.0, 1.0)])
    }

    fn population_grad(&self, x: &[f64]) -> Option<ParamVector> {
        Some(self.grad_ae(x, &()))
    }

    fn sample_datum(&self, _rng: &mut dyn RngCore) {}
}

/// One regression observation: unit feature vector `a` and target `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSample {
    pub a: ParamVector,
    pub b: f64,
}

/// Per-sample loss of [`Regression`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegressionLoss {
    /// `|⟨a, x⟩ − b|`: nonsmooth, convex per sample.
    Absolute,
    /// `min(|⟨a, x⟩ − b|, c)`: nonsmooth and nonconvex.
    Capped(f64),
}

/// Shape of the synthetic regression problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub dim: usize,
    pub loss: RegressionLoss,
    /// Standard deviation of the Gaussian target noise.
    pub noise_std: f64,
    /// Norm of the planted parameter the targets are generated from.
    pub planted_norm: f64,
}

impl RegressionSpec {
    pub fn capped(dim: usize, cap: f64) -> Self {
        Self { dim, loss: RegressionLoss::Capped(cap), noise_std: 0.1, planted_norm: 1.0 }
    }

    pub fn absolute(dim: usize) -> Self {
        Self { dim, loss: RegressionLoss::Absolute, ..Self::capped(dim, 1.0) }
    }
}

/// Piecewise-linear regression with data `z = (a, b)`, `‖a‖ = 1`,
/// `b = ⟨a, x*⟩ + noise`. Both loss variants are 1-Lipschitz.
#[derive(Debug, Clone)]
pub struct Regression {
    spec: RegressionSpec,
    planted: ParamVector,
}

impl Regression {
    pub fn new(spec: RegressionSpec, planted: ParamVector) -> Result<Self> {
        if spec.dim == 0 || planted.len() != spec.dim {
            return Err(Error::invalid("regression planted vector must have length dim >= 1"));
        }
        if let RegressionLoss::Capped(c) = spec.loss {
            if !(c > 0.0) {
                return Err(Error::invalid("cap must be positive"));
            }
        }
        if !(spec.noise_std >= 0.0) {
            return Err(Error::invalid("noise_std must be nonnegative"));
        }
        Ok(Self { spec, planted })
    }

    pub fn spec(&self) -> &RegressionSpec {
        &self.spec
    }

    pub fn planted(&self) -> &[f64] {
        &self.planted
    }

    fn residual(&self, x: &[f64], z: &RegressionSample) -> f64 {
        dot(&z.a, x) - z.b
    }
}

/// Builds a regression objective with a planted parameter of norm
/// `spec.planted_norm` in a uniformly random direction, and `n_data` samples.
pub fn make_piecewise_linear_regression(
    spec: RegressionSpec,
    n_data: usize,
    rng: &mut dyn RngCore,
) -> Result<(Regression, Dataset<RegressionSample>)> {
    if n_data == 0 {
        return Err(Error::invalid("n_data must be >= 1"));
    }
    let direction = sample_unit_sphere(spec.dim, rng)?;
    let planted = scale(spec.planted_norm, direction.as_slice());
    let objective = Regression::new(spec, planted)?;
    let data = Dataset::sample(&objective, n_data, rng);
    Ok((objective, data))
}

impl StochasticObjective for Regression {
    type Datum = RegressionSample;

    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn value(&self, x: &[f64], z: &RegressionSample) -> f64 {
        let r = self.residual(x, z).abs();
        match self.spec.loss {
            RegressionLoss::Absolute => r,
            RegressionLoss::Capped(c) => r.min(c),
        }
    }

    fn grad_ae(&self, x: &[f64], z: &RegressionSample) -> ParamVector {
        let r = self.residual(x, z);
        let flat = match self.spec.loss {
            RegressionLoss::Absolute => false,
            // right limit: the flat region is r >= c or r < -c
            RegressionLoss::Capped(c) => r >= c || r < -c,
        };
        if flat {
            vec![0.0; self.spec.dim]
        } else {
            scale(right_sign(r), &z.a)
        }
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn sample_datum(&self, rng: &mut dyn RngCore) -> RegressionSample {
        let a = sample_unit_sphere(self.spec.dim, rng)
            .expect("dim validated at construction")
            .into_inner();
        let noise: f64 = rng.sample(StandardNormal);
        let b = dot(&a, &self.planted) + self.spec.noise_std * noise;
        RegressionSample { a, b }
    }
}

/// Writes regression data as CSV rows `a_1, …, a_d, b` under a header row.
pub fn write_regression_csv<W: Write>(data: &Dataset<RegressionSample>, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let dim = data.points().first().map_or(0, |z| z.a.len());
    let mut header: Vec<String> = (1..=dim).map(|i| format!("a{i}")).collect();
    header.push("b".into());
    writer.write_record(&header)?;
    for z in data.points() {
        let mut row: Vec<String> = z.a.iter().map(|v| format!("{v:?}")).collect();
        row.push(format!("{:?}", z.b));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_regression_csv<R: Read>(input: R) -> Result<Dataset<RegressionSample>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record?;
        let values = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Io(format!("bad number in dataset csv: {e}")))?;
        let (b, a) = values
            .split_last()
            .ok_or_else(|| Error::Io("empty dataset row".into()))?;
        points.push(RegressionSample { a: a.to_vec(), b: *b });
    }
    Ok(Dataset::new(points))
}
