//! Online-to-nonconvex conversion.
//!
//! Each epoch `k` restarts an OSD learner on the ball of radius `D`. At step
//! `t` the learner's play `Δ_t` moves the iterate `x_{t+1} = x_t + Δ_t`, the
//! gradient oracle is queried at the random interpolation point
//! `w_t = x_t + s_t·Δ_t` with `s_t ∼ U[0, 1]`, and the returned vector is fed
//! back to the learner as a linear loss. The epoch's candidate is the mean
//! `w̄^k` of its query points; the run outputs one candidate chosen uniformly.
//!
//! Three oracles are available:
//!
//! - [`OracleKind::Tree`]: a first-step gradient estimate plus a running sum
//!   of gradient-difference estimates, released with tree-mechanism noise.
//! - [`OracleKind::Naive`]: one fresh two-point estimate per step with one
//!   direction per data point and independent Gaussian noise.
//! - [`OracleKind::ExactDebug`]: the objective's analytic gradient, no noise.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{Dataset, StochasticObjective};
use crate::oco::{regret_audit, OsdState, RegretAudit};
use crate::privacy::{naive_sigma, sigma_schedule, PrivacyBudget};
use crate::rng::{stream, Stream, StreamRng};
use crate::smoothing::{diff_estimate, grad_estimate, sample_unit_sphere, SmoothingParams};
use crate::tree::TreeState;
use crate::vector::{add, axpy, dist, mean, norm, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Tree,
    Naive,
    ExactDebug,
}

impl OracleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OracleKind::Tree => "tree",
            OracleKind::Naive => "naive",
            OracleKind::ExactDebug => "exact-debug",
        }
    }
}

impl std::str::FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(OracleKind::Tree),
            "naive" => Ok(OracleKind::Naive),
            "exact-debug" => Ok(OracleKind::ExactDebug),
            other => Err(Error::invalid(format!("unknown oracle kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for OracleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every hyperparameter of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    #[serde(rename = "d")]
    pub dim: usize,
    pub delta: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    #[serde(rename = "F_star")]
    pub f_star: f64,
    /// Data points consumed, `K·(B1 + B2·(T − 1))`.
    #[serde(rename = "M")]
    pub data_size: usize,
    /// Data points the planner was given; the surplus is unused.
    #[serde(rename = "M_available")]
    pub data_available: usize,
    /// `None` is the non-private mode.
    pub rho: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "K")]
    pub epochs: usize,
    #[serde(rename = "B1")]
    pub b1: usize,
    #[serde(rename = "B2")]
    pub b2: usize,
    /// OSD radius `D = δ/T`.
    #[serde(rename = "D")]
    pub radius: f64,
    pub seed: u64,
    pub oracle_kind: OracleKind,
}

/// Real-valued horizon before rounding: the smaller of the optimisation-
/// and privacy-limited values; the latter is `+∞` without privacy.
pub fn theoretical_horizon(
    dim: usize,
    delta: f64,
    lipschitz: f64,
    f_star: f64,
    data: f64,
    rho: Option<f64>,
) -> f64 {
    let d = dim as f64;
    let scale = lipschitz * delta * data / (f_star + lipschitz * delta);
    let optimisation = (d.sqrt() * scale).powf(2.0 / 3.0);
    let privacy = match rho {
        Some(r) if r.is_finite() => (d.powf(1.5) * scale / r).sqrt(),
        _ => f64::INFINITY,
    };
    optimisation.min(privacy)
}

fn plan_shape(
    dim: usize,
    delta: f64,
    lipschitz: f64,
    f_star: f64,
    data: usize,
    rho: Option<f64>,
) -> (usize, usize) {
    let t = theoretical_horizon(dim, delta, lipschitz, f_star, data as f64, rho).floor();
    let t = if t >= usize::MAX as f64 { usize::MAX } else { t as usize };
    let k = if t == 0 { 0 } else { data / t.saturating_mul(2) };
    (t, k)
}

fn feasible(t: usize, k: usize) -> bool {
    t >= 2 && k >= 1
}

/// Smallest dataset size for which the planner yields `T ≥ 2` and `K ≥ 1`.
fn minimal_feasible_data(
    dim: usize,
    delta: f64,
    lipschitz: f64,
    f_star: f64,
    rho: Option<f64>,
) -> u64 {
    let ok = |m: usize| {
        let (t, k) = plan_shape(dim, delta, lipschitz, f_star, m, rho);
        feasible(t, k)
    };
    let mut hi = 1usize;
    while !ok(hi) {
        if hi > usize::MAX / 4 {
            return u64::MAX;
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    // invariant: !ok(lo) (or lo == 0), ok(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi as u64
}

/// Parameter settings `B1 = T + 1`, `B2 = 1`, `D = δ/T`, `K = ⌊M/2T⌋` with
/// `T` the floored theoretical horizon. The plan uses the tree oracle and
/// seed 0; adjust with [`RunPlan::with_seed`] and [`RunPlan::with_oracle`].
pub fn plan_run(
    dim: usize,
    delta: f64,
    lipschitz: f64,
    f_star: f64,
    data: usize,
    rho: Option<f64>,
) -> Result<RunPlan> {
    if dim == 0 {
        return Err(Error::invalid("d must be >= 1"));
    }
    for (name, v) in [("delta", delta), ("L", lipschitz), ("F_star", f_star)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if data == 0 {
        return Err(Error::invalid("M must be >= 1"));
    }
    let budget = PrivacyBudget::from_rho(rho)?;
    let rho = budget.as_option();
    let (t, k) = plan_shape(dim, delta, lipschitz, f_star, data, rho);
    if !feasible(t, k) {
        return Err(Error::Infeasible {
            reason: format!("M = {data} gives T = {t}, K = {k}; need T >= 2 and K >= 1"),
            min_data_size: minimal_feasible_data(dim, delta, lipschitz, f_star, rho),
        });
    }
    let plan = RunPlan {
        dim,
        delta,
        lipschitz,
        f_star,
        data_size: k * 2 * t,
        data_available: data,
        rho,
        horizon: t,
        epochs: k,
        b1: t + 1,
        b2: 1,
        radius: delta / t as f64,
        seed: 0,
        oracle_kind: OracleKind::Tree,
    };
    plan.validate()?;
    Ok(plan)
}

impl RunPlan {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_oracle(mut self, kind: OracleKind) -> Self {
        self.oracle_kind = kind;
        self
    }

    pub fn budget(&self) -> PrivacyBudget {
        match self.rho {
            Some(r) => PrivacyBudget::Rdp { rho: r },
            None => PrivacyBudget::NonPrivate,
        }
    }

    /// `K·(B1 + B2·(T − 1))`.
    pub fn required_data(&self) -> usize {
        self.epochs * (self.b1 + self.b2 * (self.horizon - 1))
    }

    /// Points actually read by this plan's oracle: the naive oracle uses
    /// `K·T` batches of `B2` points.
    pub fn consumed_by_oracle(&self) -> usize {
        match self.oracle_kind {
            OracleKind::Naive => self.epochs * self.horizon * self.b2,
            _ => self.required_data(),
        }
    }

    pub fn smoothing(&self) -> Result<SmoothingParams> {
        SmoothingParams::new(self.delta, self.dim, self.lipschitz)
    }

    /// Per-index noise scale of the plan's oracle.
    pub fn noise_sigma(&self) -> Result<f64> {
        let rho = self.budget().rho();
        match self.oracle_kind {
            OracleKind::Tree => sigma_schedule(self.dim, self.lipschitz, self.b2, self.horizon, rho),
            OracleKind::Naive => naive_sigma(self.dim, self.lipschitz, self.b2, rho),
            OracleKind::ExactDebug => Ok(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::invalid("T must be >= 2"));
        }
        if self.epochs == 0 || self.b1 == 0 || self.b2 == 0 || self.dim == 0 {
            return Err(Error::invalid("K, B1, B2 and d must be >= 1"));
        }
        for (name, v) in [("delta", self.delta), ("L", self.lipschitz), ("F_star", self.f_star)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive and finite")));
            }
        }
        PrivacyBudget::from_rho(self.rho)?;
        let expected_radius = self.delta / self.horizon as f64;
        if ((self.radius - expected_radius) / expected_radius).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "D = {} but delta/T = {expected_radius}",
                self.radius
            )));
        }
        if self.data_size != self.required_data() {
            return Err(Error::invalid(format!(
                "M = {} but K(B1 + B2(T-1)) = {}",
                self.data_size,
                self.required_data()
            )));
        }
        if self.oracle_kind == OracleKind::Tree && 2 * self.b1 < self.horizon * self.b2 {
            return Err(Error::invalid(format!(
                "tree oracle needs B1 >= T*B2/2 (B1 = {}, T = {}, B2 = {})",
                self.b1, self.horizon, self.b2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    /// `Z_1^k` has `b1` points, `Z_t^k` for `t ≥ 2` has `b2`.
    VarianceReduced { epochs: usize, horizon: usize, b1: usize, b2: usize },
    /// Every batch has `batch` points.
    Uniform { epochs: usize, horizon: usize, batch: usize },
}

impl Layout {
    fn total(&self) -> usize {
        match *self {
            Layout::VarianceReduced { epochs, horizon, b1, b2 } => epochs * (b1 + b2 * (horizon - 1)),
            Layout::Uniform { epochs, horizon, batch } => epochs * horizon * batch,
        }
    }

    fn range(&self, k: usize, t: usize) -> std::ops::Range<usize> {
        match *self {
            Layout::VarianceReduced { horizon, b1, b2, .. } => {
                let start = (k - 1) * (b1 + b2 * (horizon - 1));
                if t == 1 {
                    start..start + b1
                } else {
                    let s = start + b1 + b2 * (t - 2);
                    s..s + b2
                }
            }
            Layout::Uniform { horizon, batch, .. } => {
                let s = ((k - 1) * horizon + (t - 1)) * batch;
                s..s + batch
            }
        }
    }

    fn shape(&self) -> (usize, usize) {
        match *self {
            Layout::VarianceReduced { epochs, horizon, .. } | Layout::Uniform { epochs, horizon, .. } => {
                (epochs, horizon)
            }
        }
    }
}

/// Disjoint contiguous batches `Z_t^k` over an ordered copy of the data.
#[derive(Debug, Clone)]
pub struct Partition<Z> {
    data: Vec<Z>,
    layout: Layout,
}

impl<Z: Clone> Partition<Z> {
    fn build(points: Vec<Z>, layout: Layout) -> Result<Self> {
        let need = layout.total();
        if points.len() < need {
            return Err(Error::invalid(format!(
                "partition needs {need} data points, dataset has {}",
                points.len()
            )));
        }
        let mut data = points;
        data.truncate(need);
        Ok(Self { data, layout })
    }

    /// Variance-reduced layout over `points` in their given order.
    pub fn variance_reduced(points: Vec<Z>, epochs: usize, horizon: usize, b1: usize, b2: usize) -> Result<Self> {
        if epochs == 0 || horizon == 0 || b1 == 0 || b2 == 0 {
            return Err(Error::invalid("partition sizes must be >= 1"));
        }
        Self::build(points, Layout::VarianceReduced { epochs, horizon, b1, b2 })
    }

    /// Equal batches over `points` in their given order.
    pub fn uniform(points: Vec<Z>, epochs: usize, horizon: usize, batch: usize) -> Result<Self> {
        if epochs == 0 || horizon == 0 || batch == 0 {
            return Err(Error::invalid("partition sizes must be >= 1"));
        }
        Self::build(points, Layout::Uniform { epochs, horizon, batch })
    }

    /// Batch `Z_t^k`, both indices 1-based.
    pub fn batch(&self, k: usize, t: usize) -> Result<&[Z]> {
        let (epochs, horizon) = self.layout.shape();
        if k == 0 || k > epochs || t == 0 || t > horizon {
            return Err(Error::invalid(format!("batch ({k}, {t}) outside {epochs} x {horizon}")));
        }
        Ok(&self.data[self.layout.range(k, t)])
    }

    /// Number of data points covered by the batches.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Shuffles the dataset once with `rng` and slices it according to the plan:
/// uniform batches of `B2` for the naive oracle, otherwise `B1` then `B2`.
pub fn partition_dataset<Z: Clone>(
    dataset: &Dataset<Z>,
    plan: &RunPlan,
    rng: &mut dyn RngCore,
) -> Result<Partition<Z>> {
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(rng);
    let need = plan.consumed_by_oracle();
    if dataset.len() < need {
        return Err(Error::invalid(format!(
            "plan needs {need} data points, dataset has {}",
            dataset.len()
        )));
    }
    let points: Vec<Z> = order[..need].iter().map(|&i| dataset.points()[i].clone()).collect();
    match plan.oracle_kind {
        OracleKind::Naive => Partition::uniform(points, plan.epochs, plan.horizon, plan.b2),
        _ => Partition::variance_reduced(points, plan.epochs, plan.horizon, plan.b1, plan.b2),
    }
}

/// One oracle answer.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutput {
    /// The vector handed to the learner.
    pub released: ParamVector,
    /// `released` before noise.
    pub pre_noise: ParamVector,
    /// Estimator output added to the running sum at this step, for the tree
    /// oracle; the fresh estimate otherwise.
    pub increment: ParamVector,
    pub noise_norm: f64,
}

/// A gradient oracle queried at `(k, t, w_t^k)` in order.
pub trait GradientOracle {
    fn query(&mut self, k: usize, t: usize, w: &[f64]) -> Result<OracleOutput>;

    /// Per-index Gaussian noise scale.
    fn sigma(&self) -> f64;
}

/// Tracks the `(k, t)` query order shared by all oracles.
#[derive(Debug, Clone, Default)]
struct QueryClock {
    k: usize,
    t: usize,
}

impl QueryClock {
    fn advance(&mut self, k: usize, t: usize) -> Result<()> {
        let ok = if t == 1 { k > self.k || (self.k == 0 && k >= 1) } else { k == self.k && t == self.t + 1 };
        if !ok || k == 0 {
            return Err(Error::InvalidState(format!(
                "oracle queried at (k={k}, t={t}) after (k={}, t={})",
                self.k, self.t
            )));
        }
        self.k = k;
        self.t = t;
        Ok(())
    }
}

/// Variance-reduced private oracle: `g_1 = Grad(w_1, Z_1)`,
/// `g_t = g_{t−1} + Diff(w_t, w_{t−1}, Z_t)`, released as `g_t + Tree(t)`.
pub struct VarianceReducedOracle<'a, O: StochasticObjective> {
    objective: &'a O,
    partition: &'a Partition<O::Datum>,
    smoothing: SmoothingParams,
    tree: TreeState,
    g_running: ParamVector,
    w_prev: ParamVector,
    clock: QueryClock,
    estimator_rng: StreamRng,
    noise_rng: StreamRng,
}

impl<'a, O: StochasticObjective> VarianceReducedOracle<'a, O> {
    pub fn new(
        objective: &'a O,
        partition: &'a Partition<O::Datum>,
        plan: &RunPlan,
        estimator_rng: StreamRng,
        noise_rng: StreamRng,
    ) -> Result<Self> {
        let sigma = sigma_schedule(plan.dim, plan.lipschitz, plan.b2, plan.horizon, plan.budget().rho())?;
        Ok(Self {
            objective,
            partition,
            smoothing: plan.smoothing()?,
            tree: TreeState::uniform(plan.horizon, sigma, plan.dim)?,
            g_running: vec![0.0; plan.dim],
            w_prev: vec![0.0; plan.dim],
            clock: QueryClock::default(),
            estimator_rng,
            noise_rng,
        })
    }

    /// Pre-noise running estimate `g_t^k`.
    pub fn running_estimate(&self) -> &[f64] {
        &self.g_running
    }

    pub fn tree(&self) -> &TreeState {
        &self.tree
    }
}

impl<O: StochasticObjective> GradientOracle for VarianceReducedOracle<'_, O> {
    fn query(&mut self, k: usize, t: usize, w: &[f64]) -> Result<OracleOutput> {
        self.clock.advance(k, t)?;
        let batch = self.partition.batch(k, t)?;
        let increment = if t == 1 {
            self.tree.reset();
            let g = grad_estimate(self.objective, &self.smoothing, w, batch, &mut self.estimator_rng)?;
            self.g_running = g.clone();
            g
        } else {
            let d = diff_estimate(self.objective, &self.smoothing, w, &self.w_prev, batch, &mut self.estimator_rng)?;
            axpy(1.0, &d, &mut self.g_running);
            d
        };
        self.w_prev = w.to_vec();
        let noise = self.tree.noise(t, &mut self.noise_rng)?;
        Ok(OracleOutput {
            released: add(&self.g_running, &noise),
            pre_noise: self.g_running.clone(),
            increment,
            noise_norm: norm(&noise),
        })
    }

    fn sigma(&self) -> f64 {
        self.tree.sigma()[0]
    }
}

/// Baseline private oracle: a fresh two-point estimate with one direction
/// per data point, plus independent `N(0, σ²I)` noise with `σ = dL/(Bρ)`.
pub struct NaiveOracle<'a, O: StochasticObjective> {
    objective: &'a O,
    partition: &'a Partition<O::Datum>,
    smoothing: SmoothingParams,
    sigma: f64,
    clock: QueryClock,
    estimator_rng: StreamRng,
    noise_rng: StreamRng,
}

impl<'a, O: StochasticObjective> NaiveOracle<'a, O> {
    pub fn new(
        objective: &'a O,
        partition: &'a Partition<O::Datum>,
        plan: &RunPlan,
        estimator_rng: StreamRng,
        noise_rng: StreamRng,
    ) -> Result<Self> {
        Ok(Self {
            objective,
            partition,
            smoothing: plan.smoothing()?,
            sigma: naive_sigma(plan.dim, plan.lipschitz, plan.b2, plan.budget().rho())?,
            clock: QueryClock::default(),
            estimator_rng,
            noise_rng,
        })
    }
}

/// `(1/B) Σ_i (d/2δ)(f(w + δu_i, z_i) − f(w − δu_i, z_i)) u_i`.
fn single_direction_estimate<O: StochasticObjective>(
    f: &O,
    sp: &SmoothingParams,
    w: &[f64],
    batch: &[O::Datum],
    rng: &mut dyn RngCore,
) -> Result<ParamVector> {
    let d = sp.dim();
    let scale = d as f64 / (2.0 * sp.delta());
    let mut out = vec![0.0; d];
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    for z in batch {
        let u = sample_unit_sphere(d, rng)?;
        for i in 0..d {
            plus[i] = w[i] + sp.delta() * u.as_slice()[i];
            minus[i] = w[i] - sp.delta() * u.as_slice()[i];
        }
        let c = scale * (f.value(&plus, z) - f.value(&minus, z));
        axpy(c, u.as_slice(), &mut out);
    }
    out.iter_mut().for_each(|v| *v /= batch.len() as f64);
    Ok(out)
}

impl<O: StochasticObjective> GradientOracle for NaiveOracle<'_, O> {
    fn query(&mut self, k: usize, t: usize, w: &[f64]) -> Result<OracleOutput> {
        self.clock.advance(k, t)?;
        if w.len() != self.smoothing.dim() {
            return Err(Error::invalid("query point dimension mismatch"));
        }
        let batch = self.partition.batch(k, t)?;
        let g = single_direction_estimate(self.objective, &self.smoothing, w, batch, &mut self.estimator_rng)?;
        let (released, noise_norm) = if self.sigma == 0.0 {
            (g.clone(), 0.0)
        } else {
            let noise: Vec<f64> = (0..g.len())
                .map(|_| self.sigma * self.noise_rng.sample::<f64, _>(StandardNormal))
                .collect();
            (add(&g, &noise), norm(&noise))
        };
        Ok(OracleOutput { released, pre_noise: g.clone(), increment: g, noise_norm })
    }

    fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Non-private debug oracle: the closed-form population gradient when the
/// objective has one, otherwise the mean a.e. gradient over the step's batch.
pub struct ExactOracle<'a, O: StochasticObjective> {
    objective: &'a O,
    partition: &'a Partition<O::Datum>,
    clock: QueryClock,
}

impl<'a, O: StochasticObjective> ExactOracle<'a, O> {
    pub fn new(objective: &'a O, partition: &'a Partition<O::Datum>) -> Self {
        Self { objective, partition, clock: QueryClock::default() }
    }
}

impl<O: StochasticObjective> GradientOracle for ExactOracle<'_, O> {
    fn query(&mut self, k: usize, t: usize, w: &[f64]) -> Result<OracleOutput> {
        self.clock.advance(k, t)?;
        let g = match self.objective.population_grad(w) {
            Some(g) => g,
            None => {
                let batch = self.partition.batch(k, t)?;
                let grads: Vec<ParamVector> = batch.iter().map(|z| self.objective.grad_ae(w, z)).collect();
                mean(&grads)
            }
        };
        Ok(OracleOutput { released: g.clone(), pre_noise: g.clone(), increment: g, noise_norm: 0.0 })
    }

    fn sigma(&self) -> f64 {
        0.0
    }
}

/// One inner step of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub t: usize,
    /// Interpolation weight `s_t^k`, drawn before the oracle call.
    pub s: f64,
    pub w: ParamVector,
    /// The learner's play `Δ_t^k`.
    pub delta: ParamVector,
    /// Oracle output `g̃_t^k`.
    pub released: ParamVector,
    pub released_norm: f64,
    pub pre_noise_norm: f64,
    pub noise_norm: f64,
    pub delta_norm: f64,
    /// `‖w_t − w_{t−1}‖`, zero at `t = 1`.
    pub w_step: f64,
}

/// Summary of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub k: usize,
    pub x_start: ParamVector,
    pub x_end: ParamVector,
    pub w_bar: ParamVector,
    /// `max_t ‖w_t − w̄‖`.
    pub w_spread: f64,
    pub regret: RegretAudit,
}

/// Full record of a run: `K·T` steps and `K` epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose `w̄` was output.
    pub output_epoch: usize,
    pub sigma: f64,
}

/// Worst observed values of the iterate-geometry quantities of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryReport {
    pub max_delta_norm: f64,
    pub max_w_step: f64,
    pub max_w_spread: f64,
}

impl GeometryReport {
    /// `‖Δ‖ ≤ D`, `‖w_{t+1} − w_t‖ ≤ 2D`, `‖w_t − w̄‖ ≤ δ`, up to rounding.
    pub fn within(&self, radius: f64, delta: f64) -> bool {
        let slack = 1.0 + 1e-9;
        self.max_delta_norm <= radius * slack
            && self.max_w_step <= 2.0 * radius * slack
            && self.max_w_spread <= delta * slack
    }
}

impl Trace {
    /// Steps of epoch `k` (1-based).
    pub fn epoch_steps(&self, k: usize) -> &[StepRecord] {
        let horizon = self.steps.len() / self.epochs.len().max(1);
        &self.steps[(k - 1) * horizon..k * horizon]
    }

    pub fn epoch_points(&self, k: usize) -> Vec<&[f64]> {
        self.epoch_steps(k).iter().map(|s| s.w.as_slice()).collect()
    }

    pub fn geometry(&self) -> GeometryReport {
        GeometryReport {
            max_delta_norm: self.steps.iter().map(|s| s.delta_norm).fold(0.0, f64::max),
            max_w_step: self.steps.iter().map(|s| s.w_step).fold(0.0, f64::max),
            max_w_spread: self.epochs.iter().map(|e| e.w_spread).fold(0.0, f64::max),
        }
    }
}

/// Result of [`run_o2nc`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub w_bar: ParamVector,
    pub trace: Trace,
}

/// Independent random streams of one run, all derived from the plan seed.
pub struct RunStreams {
    pub shuffle: StreamRng,
    pub interpolation: StreamRng,
    pub estimator: StreamRng,
    pub noise: StreamRng,
    pub output: StreamRng,
}

impl RunStreams {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            shuffle: stream(seed, Stream::Shuffle),
            interpolation: stream(seed, Stream::Interpolation),
            estimator: stream(seed, Stream::Estimator),
            noise: stream(seed, Stream::TreeNoise),
            output: stream(seed, Stream::OutputChoice),
        }
    }
}

/// Runs `K` epochs of `T` steps from `x_init` with the plan's oracle.
pub fn run_o2nc<O: StochasticObjective>(
    objective: &O,
    dataset: &Dataset<O::Datum>,
    plan: &RunPlan,
    x_init: &[f64],
) -> Result<RunOutput> {
    plan.validate()?;
    if x_init.len() != plan.dim || objective.dim() != plan.dim {
        return Err(Error::invalid("initial point, objective and plan dimensions differ"));
    }
    let RunStreams { mut shuffle, mut interpolation, estimator, noise, mut output } =
        RunStreams::from_seed(plan.seed);
    let partition = partition_dataset(dataset, plan, &mut shuffle)?;
    let mut oracle: Box<dyn GradientOracle + '_> = match plan.oracle_kind {
        OracleKind::Tree => Box::new(VarianceReducedOracle::new(objective, &partition, plan, estimator, noise)?),
        OracleKind::Naive => Box::new(NaiveOracle::new(objective, &partition, plan, estimator, noise)?),
        OracleKind::ExactDebug => Box::new(ExactOracle::new(objective, &partition)),
    };
    let mut trace = drive(oracle.as_mut(), plan, x_init, &mut interpolation)?;
    let pick = output.random_range(0..plan.epochs);
    trace.output_epoch = pick + 1;
    trace.sigma = oracle.sigma();
    Ok(RunOutput { w_bar: trace.epochs[pick].w_bar.clone(), trace })
}

/// The conversion loop against an arbitrary oracle. `output_epoch` and
/// `sigma` of the returned trace are left for the caller.
pub fn drive(
    oracle: &mut dyn GradientOracle,
    plan: &RunPlan,
    x_init: &[f64],
    interpolation: &mut dyn RngCore,
) -> Result<Trace> {
    let dim = plan.dim;
    let mut steps = Vec::with_capacity(plan.epochs * plan.horizon);
    let mut epochs = Vec::with_capacity(plan.epochs);
    let mut x = x_init.to_vec();
    let mut osd = OsdState::new(dim, plan.radius)?;
    for k in 1..=plan.epochs {
        osd.reset();
        let x_start = x.clone();
        let first = steps.len();
        let mut w_prev: Option<ParamVector> = None;
        for t in 1..=plan.horizon {
            let delta = osd.current().to_vec();
            let s: f64 = interpolation.random();
            let w: ParamVector = x.iter().zip(&delta).map(|(xi, di)| xi + s * di).collect();
            axpy(1.0, &delta, &mut x);
            let out = oracle.query(k, t, &w)?;
            osd.step(&out.released)?;
            let w_step = w_prev.as_ref().map_or(0.0, |p| dist(p, &w));
            steps.push(StepRecord {
                k,
                t,
                s,
                delta_norm: norm(&delta),
                released_norm: norm(&out.released),
                pre_noise_norm: norm(&out.pre_noise),
                noise_norm: out.noise_norm,
                w_step,
                w: w.clone(),
                delta,
                released: out.released,
            });
            w_prev = Some(w);
        }
        let epoch = &steps[first..];
        let points: Vec<&[f64]> = epoch.iter().map(|s| s.w.as_slice()).collect();
        let w_bar = mean(&points);
        let w_spread = points.iter().map(|p| dist(p, &w_bar)).fold(0.0, f64::max);
        let plays: Vec<&[f64]> = epoch.iter().map(|s| s.delta.as_slice()).collect();
        let grads: Vec<&[f64]> = epoch.iter().map(|s| s.released.as_slice()).collect();
        let regret = regret_audit(&plays, &grads, plan.radius)?;
        epochs.push(EpochRecord { k, x_start, x_end: x.clone(), w_bar, w_spread, regret });
    }
    Ok(Trace { steps, epochs, output_epoch: 0, sigma: 0.0 })
}
