//! Tree mechanism for private prefix sums.
//!
//! The prefix `[1, t]` is covered by the dyadic intervals returned by
//! [`node`]; every interval owns one Gaussian noise vector keyed by its right
//! endpoint, so a release at time `t` carries at most `⌈log2 t⌉ + 1` noise
//! terms and consecutive releases share most of them.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{add, axpy, ParamVector};

/// Closed index interval `[lo, hi]`, `1 ≤ lo ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo == 0 || hi < lo {
            return Err(Error::invalid(format!("bad interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `⌈log2 t⌉` for `t ≥ 1`.
pub fn ceil_log2(t: usize) -> u32 {
    debug_assert!(t >= 1);
    if t <= 1 {
        0
    } else {
        usize::BITS - (t - 1).leading_zeros()
    }
}

/// Dyadic decomposition of `[1, t]`, largest block first.
///
/// Starting from `k = 0`, for `i = 0..=⌈log2 t⌉` while `k < t`, the candidate
/// block `(k+1, k + 2^{⌈log2 t⌉ − i})` is kept whenever it ends at or before
/// `t`.
pub fn node(t: usize) -> Result<Vec<Interval>> {
    if t == 0 {
        return Err(Error::invalid("node(t) needs t >= 1"));
    }
    let depth = ceil_log2(t);
    let mut k = 0usize;
    let mut out = Vec::with_capacity(depth as usize + 1);
    for i in 0..=depth {
        if k >= t {
            break;
        }
        let next = k + (1usize << (depth - i));
        if next <= t {
            out.push(Interval { lo: k + 1, hi: next });
            k = next;
        }
    }
    Ok(out)
}

/// Per-epoch noise store of the tree mechanism.
#[derive(Debug, Clone)]
pub struct TreeState {
    horizon: usize,
    sigma: Vec<f64>,
    dim: usize,
    noise: BTreeMap<usize, ParamVector>,
    last_query: usize,
}

impl TreeState {
    /// `sigma[i − 1]` is the noise scale of index `i`.
    pub fn new(horizon: usize, sigma: Vec<f64>, dim: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("tree horizon must be >= 1"));
        }
        if dim == 0 {
            return Err(Error::invalid("tree dimension must be >= 1"));
        }
        if sigma.len() != horizon {
            return Err(Error::invalid(format!(
                "sigma schedule has {} entries for horizon {horizon}",
                sigma.len()
            )));
        }
        if sigma.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid("noise scales must be finite and nonnegative"));
        }
        Ok(Self { horizon, sigma, dim, noise: BTreeMap::new(), last_query: 0 })
    }

    pub fn uniform(horizon: usize, sigma: f64, dim: usize) -> Result<Self> {
        Self::new(horizon, vec![sigma; horizon], dim)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Clears the noise store; called at the start of every epoch.
    pub fn reset(&mut self) {
        self.noise.clear();
        self.last_query = 0;
    }

    /// Stored `ξ_i`, if already drawn this epoch.
    pub fn stored(&self, index: usize) -> Option<&[f64]> {
        self.noise.get(&index).map(Vec::as_slice)
    }

    pub fn stored_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.noise.keys().copied()
    }

    /// Noise for the release at time `t`: `Σ_{(·, i) ∈ node(t)} ξ_i`.
    ///
    /// Queries must strictly increase within an epoch. Every index up to `t`
    /// not yet seen gets its `ξ_i ∼ N(0, σ_i² I)` drawn, in index order; an
    /// index with `σ_i = 0` stores the zero vector without touching `rng`.
    pub fn noise(&mut self, t: usize, rng: &mut dyn RngCore) -> Result<ParamVector> {
        if t == 0 || t > self.horizon {
            return Err(Error::invalid(format!("tree query {t} outside [1, {}]", self.horizon)));
        }
        if t <= self.last_query {
            return Err(Error::InvalidState(format!(
                "tree queried at {t} after {}; queries must increase within an epoch",
                self.last_query
            )));
        }
        for index in self.last_query + 1..=t {
            let sigma = self.sigma[index - 1];
            let xi = if sigma == 0.0 {
                vec![0.0; self.dim]
            } else {
                (0..self.dim)
                    .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            };
            self.noise.insert(index, xi);
        }
        self.last_query = t;
        let mut total = vec![0.0; self.dim];
        for interval in node(t)? {
            axpy(1.0, &self.noise[&interval.hi], &mut total);
        }
        Ok(total)
    }
}

/// Releases noisy running sums `x_i = Σ_{j ≤ i} m_j + noise(i)` of
/// increments that may depend on everything released so far.
#[derive(Debug, Clone)]
pub struct PrefixSumRelease {
    tree: TreeState,
    running: ParamVector,
    released: usize,
}

impl PrefixSumRelease {
    /// Takes ownership of a tree state and resets it.
    pub fn new(mut tree: TreeState) -> Self {
        tree.reset();
        let running = vec![0.0; tree.dim()];
        Self { tree, running, released: 0 }
    }

    /// Adds the next increment and returns the released noisy sum.
    pub fn release(&mut self, increment: &[f64], rng: &mut dyn RngCore) -> Result<ParamVector> {
        if increment.len() != self.tree.dim() {
            return Err(Error::invalid("increment dimension mismatch"));
        }
        let noise = self.tree.noise(self.released + 1, rng)?;
        axpy(1.0, increment, &mut self.running);
        self.released += 1;
        Ok(add(&self.running, &noise))
    }

    /// Exact (noise-free) running sum.
    pub fn exact_sum(&self) -> &[f64] {
        &self.running
    }

    pub fn tree(&self) -> &TreeState {
        &self.tree
    }
}

/// Runs [`PrefixSumRelease`] for `steps` rounds. `next_increment` receives the
/// round index (1-based) and all sums released so far.
pub fn private_prefix_sum<G>(
    steps: usize,
    mut next_increment: G,
    tree: TreeState,
    rng: &mut dyn RngCore,
) -> Result<Vec<ParamVector>>
where
    G: FnMut(usize, &[ParamVector]) -> Result<ParamVector>,
{
    if steps > tree.horizon() {
        return Err(Error::invalid(format!(
            "{steps} releases exceed tree horizon {}",
            tree.horizon()
        )));
    }
    let mut release = PrefixSumRelease::new(tree);
    let mut out = Vec::with_capacity(steps);
    for i in 1..=steps {
        let inc = next_increment(i, &out)?;
        let x = release.release(&inc, rng)?;
        out.push(x);
    }
    Ok(out)
}
