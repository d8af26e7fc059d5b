//! Matched-seed comparison of the tree oracle against the naive oracle.

use po2nc_core::o2nc::OracleKind;
use po2nc_core::tree::node;
use serde::Serialize;

use crate::config::{rho_label, ExperimentConfig};
use crate::error::HarnessResult;
use crate::experiment::{run_experiment, write_json, ExperimentReport};

pub const COMPARISON_FILE: &str = "comparison.json";

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub oracle_kind: OracleKind,
    /// Per-index noise std reported by the oracle implementation.
    pub sigma: f64,
    /// Injected noise variance per release, averaged over `t = 1..T`:
    /// `d·σ²` for the naive oracle, `|node(t)|·d·σ²` for the tree.
    pub mean_noise_variance: f64,
    pub median_first_certificate: f64,
    pub median_final_certificate: f64,
    pub final_certificates: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub version: String,
    pub rho: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "B2")]
    pub b2: usize,
    pub d: usize,
    pub tree: OracleSummary,
    pub naive: OracleSummary,
    /// `σ_naive / σ_tree` from the implementations; `None` without noise.
    pub sigma_ratio: Option<f64>,
    /// `T / (4√(2 ln T))`, the ratio the two calibrations predict for `B = B2 = 1`.
    pub sigma_ratio_analytic: f64,
    /// Naive per-step noise variance over the tree's, per `t = 1..T`.
    pub variance_ratio_per_step: Option<Vec<f64>>,
    /// `T² / (32 ln T)`: squared analytic σ ratio, one tree node per release.
    pub single_release_variance_ratio: f64,
    pub note: String,
}

/// `T / (4√(2 ln T))`.
pub fn analytic_sigma_ratio(horizon: usize) -> f64 {
    let t = horizon as f64;
    t / (4.0 * (2.0 * t.ln()).sqrt())
}

/// Node count `|node(t)|` for `t = 1..=horizon`.
fn node_counts(horizon: usize) -> HarnessResult<Vec<usize>> {
    (1..=horizon).map(|t| Ok(node(t)?.len())).collect()
}

fn summarize(report: &ExperimentReport, counts: &[usize]) -> OracleSummary {
    let r0 = &report.replicates[0];
    let d = r0.plan.dim as f64;
    let sigma = r0.sigma;
    let mean_noise_variance = match r0.plan.oracle_kind {
        OracleKind::Tree => counts.iter().map(|&c| c as f64 * d * sigma * sigma).sum::<f64>() / counts.len() as f64,
        _ => d * sigma * sigma,
    };
    OracleSummary {
        oracle_kind: r0.plan.oracle_kind,
        sigma,
        mean_noise_variance,
        median_first_certificate: report.median_first_certificate,
        median_final_certificate: report.median_final_certificate,
        final_certificates: report.replicates.iter().map(|r| r.final_certificate()).collect(),
    }
}

/// Runs the config with the tree and the naive oracle on the same seeds,
/// writing each experiment to `out_dir/<oracle>/` and the comparison to
/// `out_dir/comparison.json`.
pub fn compare_oracles(config: &ExperimentConfig) -> HarnessResult<ComparisonReport> {
    let run = |kind: OracleKind| {
        let mut c = config.clone();
        c.oracle = kind;
        c.out_dir = config.out_dir.join(kind.as_str());
        run_experiment(&c)
    };
    let tree_report = run(OracleKind::Tree)?;
    let naive_report = run(OracleKind::Naive)?;
    let plan = &tree_report.replicates[0].plan;
    let counts = node_counts(plan.horizon)?;
    let tree = summarize(&tree_report, &counts);
    let naive = summarize(&naive_report, &counts);
    let private = tree.sigma > 0.0 && naive.sigma > 0.0;
    let variance_ratio_per_step = private.then(|| {
        counts
            .iter()
            .map(|&c| naive.sigma * naive.sigma / (c as f64 * tree.sigma * tree.sigma))
            .collect()
    });
    let t = plan.horizon as f64;
    let report = ComparisonReport {
        version: po2nc_core::VERSION.to_string(),
        rho: rho_label(plan.rho),
        horizon: plan.horizon,
        b2: plan.b2,
        d: plan.dim,
        sigma_ratio: private.then(|| naive.sigma / tree.sigma),
        sigma_ratio_analytic: analytic_sigma_ratio(plan.horizon),
        variance_ratio_per_step,
        single_release_variance_ratio: t * t / (32.0 * t.ln()),
        note: "naive releases an independent estimate per step with no variance reduction; \
               tree releases a running sum of difference estimates"
            .to_string(),
        tree,
        naive,
    };
    std::fs::create_dir_all(&config.out_dir)?;
    write_json(&report, &config.out_dir.join(COMPARISON_FILE))?;
    Ok(report)
}
