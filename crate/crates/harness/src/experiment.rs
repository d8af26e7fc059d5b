//! Seeded experiment execution and result export.
//!
//! `results.csv` layout: comment lines `# po2nc <version>` and one
//! `# plan <json>` per replicate, then the fixed header
//!
//! `seed,oracle_kind,rho,T,K,epoch,certificate_kind,certificate,stderr,data_used`
//!
//! with one row per (seed, epoch) carrying the epoch's inner-average
//! certificate, followed by a `final` row per seed with the ball-sample
//! certificate at the output point. The CSV is a pure function of the config;
//! wall times only appear in `summary.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use po2nc_core::o2nc::{plan_run, run_o2nc, GeometryReport, RunPlan};
use po2nc_core::objectives::{
    make_abs_sum, make_piecewise_linear_regression, make_quadratic, Dataset, RegressionLoss, RegressionSpec,
    StochasticObjective,
};
use po2nc_core::rng::{stream, Stream};
use po2nc_core::stationarity::{ball_sample_certificate, inner_average_certificate, Certificate};
use po2nc_core::{ParamVector, VERSION};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{rho_label, ExperimentConfig, ObjectiveKind};
use crate::error::{HarnessError, HarnessResult};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// One replicate of an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicateResult {
    pub seed: u64,
    pub plan: RunPlan,
    /// 1-based epoch whose mean iterate was output.
    pub output_epoch: usize,
    pub w_bar: ParamVector,
    /// Inner-average certificate of every epoch, in order.
    pub epoch_certificates: Vec<Certificate>,
    /// Ball-sample certificate at the output point.
    pub output_certificate: Certificate,
    pub sigma: f64,
    pub max_delta_norm: f64,
    pub max_w_step: f64,
    pub max_w_spread: f64,
    pub geometry_ok: bool,
    pub regret_ok: bool,
    pub wall_time_s: f64,
}

impl ReplicateResult {
    pub fn first_certificate(&self) -> f64 {
        self.epoch_certificates[0].value
    }

    /// Inner-average certificate of the last epoch.
    pub fn final_certificate(&self) -> f64 {
        self.epoch_certificates.last().map_or(f64::NAN, |c| c.value)
    }
}

/// Fixed-schema CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub seed: u64,
    pub oracle_kind: String,
    pub rho: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "K")]
    pub epochs: usize,
    /// Epoch index, or `final`.
    pub epoch: String,
    pub certificate_kind: String,
    pub certificate: f64,
    pub stderr: f64,
    /// Data points consumed up to and including this epoch.
    pub data_used: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub replicates: Vec<ReplicateResult>,
    pub median_first_certificate: f64,
    pub median_final_certificate: f64,
    #[serde(skip)]
    pub csv_path: PathBuf,
    #[serde(skip)]
    pub summary_path: PathBuf,
}

impl ExperimentReport {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.replicates.iter().flat_map(result_rows).collect()
    }

    /// Median over replicates of the epoch-`k` certificate (1-based).
    pub fn median_epoch_certificate(&self, k: usize) -> f64 {
        median(self.replicates.iter().map(|r| r.epoch_certificates[k - 1].value).collect())
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn result_rows(r: &ReplicateResult) -> Vec<ResultRow> {
    let plan = &r.plan;
    let per_epoch = plan.consumed_by_oracle() / plan.epochs;
    let row = |epoch: String, c: &Certificate, data_used: usize| ResultRow {
        seed: r.seed,
        oracle_kind: plan.oracle_kind.to_string(),
        rho: rho_label(plan.rho),
        horizon: plan.horizon,
        epochs: plan.epochs,
        epoch,
        certificate_kind: match c.kind {
            po2nc_core::stationarity::CertificateKind::InnerAverage => "inner-average".into(),
            po2nc_core::stationarity::CertificateKind::BallSample => "ball-sample".into(),
        },
        certificate: c.value,
        stderr: c.stderr,
        data_used,
    };
    let mut rows: Vec<ResultRow> = r
        .epoch_certificates
        .iter()
        .enumerate()
        .map(|(i, c)| row((i + 1).to_string(), c, (i + 1) * per_epoch))
        .collect();
    rows.push(row("final".into(), &r.output_certificate, plan.consumed_by_oracle()));
    rows
}

/// Thread pool sized by `PO2NC_THREADS` when set, rayon's default otherwise.
pub fn thread_pool() -> HarnessResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("PO2NC_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| HarnessError::Config(format!("PO2NC_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| HarnessError::Config(e.to_string()))
}

/// Resolved plan for a config and seed.
pub fn resolve_plan(config: &ExperimentConfig, lipschitz: f64, seed: u64) -> HarnessResult<RunPlan> {
    let l = config.lipschitz.unwrap_or(lipschitz);
    Ok(plan_run(config.dim, config.delta, l, config.f_star, config.m, config.rho)?
        .with_oracle(config.oracle)
        .with_seed(seed))
}

fn run_replicate<O: StochasticObjective>(
    config: &ExperimentConfig,
    f: &O,
    data: &Dataset<O::Datum>,
    seed: u64,
) -> HarnessResult<ReplicateResult> {
    let start = Instant::now();
    let plan = resolve_plan(config, f.lipschitz(), seed)?;
    let out = run_o2nc(f, data, &plan, &config.x_init())?;
    let mut rng = stream(seed, Stream::Certificate);
    let epoch_certificates = (1..=plan.epochs)
        .map(|k| inner_average_certificate(f, &out.trace.epoch_points(k), plan.delta, config.n_mc, &mut rng))
        .collect::<po2nc_core::Result<Vec<_>>>()?;
    let output_certificate =
        ball_sample_certificate(f, &out.w_bar, plan.delta, config.n_points, config.n_mc, &mut rng)?;
    let GeometryReport { max_delta_norm, max_w_step, max_w_spread } = out.trace.geometry();
    Ok(ReplicateResult {
        seed,
        output_epoch: out.trace.output_epoch,
        geometry_ok: out.trace.geometry().within(plan.radius, plan.delta),
        regret_ok: out.trace.epochs.iter().all(|e| e.regret.holds()),
        sigma: out.trace.sigma,
        w_bar: out.w_bar,
        epoch_certificates,
        output_certificate,
        max_delta_norm,
        max_w_step,
        max_w_spread,
        plan,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn run_all<O: StochasticObjective>(
    config: &ExperimentConfig,
    f: &O,
    data: &Dataset<O::Datum>,
) -> HarnessResult<Vec<ReplicateResult>> {
    // fail fast on an infeasible plan before spawning replicates
    resolve_plan(config, f.lipschitz(), config.seeds[0])?;
    thread_pool()?.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| run_replicate(config, f, data, seed))
            .collect()
    })
}

/// Builds the objective and dataset from `data_seed` and runs every replicate.
pub fn run_replicates(config: &ExperimentConfig) -> HarnessResult<Vec<ReplicateResult>> {
    config.validate()?;
    let mut rng = stream(config.data_seed, Stream::Data);
    let n = config.n_data();
    match config.objective {
        ObjectiveKind::Capped | ObjectiveKind::Absolute => {
            let loss = match config.objective {
                ObjectiveKind::Capped => RegressionLoss::Capped(config.cap),
                _ => RegressionLoss::Absolute,
            };
            let spec = RegressionSpec {
                dim: config.dim,
                loss,
                noise_std: config.noise_std,
                planted_norm: config.planted_norm,
            };
            let (f, data) = make_piecewise_linear_regression(spec, n, &mut rng)?;
            run_all(config, &f, &data)
        }
        ObjectiveKind::Quadratic => {
            let f = make_quadratic(config.dim, config.radius)?;
            run_all(config, &f, &Dataset::new(vec![(); n]))
        }
        ObjectiveKind::AbsSum => {
            let f = make_abs_sum(config.dim)?;
            run_all(config, &f, &Dataset::new(vec![(); n]))
        }
    }
}

/// Runs the experiment and writes `results.csv` and `summary.json` into
/// `config.out_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> HarnessResult<ExperimentReport> {
    let replicates = run_replicates(config)?;
    let report = ExperimentReport {
        version: VERSION.to_string(),
        config: config.clone(),
        median_first_certificate: median(replicates.iter().map(|r| r.first_certificate()).collect()),
        median_final_certificate: median(replicates.iter().map(|r| r.final_certificate()).collect()),
        replicates,
        csv_path: config.out_dir.join(RESULTS_FILE),
        summary_path: config.out_dir.join(SUMMARY_FILE),
    };
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", config.out_dir.display())))?;
    write_results_csv(&report, &report.csv_path)?;
    write_json(&report, &report.summary_path)?;
    Ok(report)
}

pub fn write_results_csv(report: &ExperimentReport, path: &Path) -> HarnessResult<()> {
    let file = File::create(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# po2nc {}", report.version)?;
    for r in &report.replicates {
        writeln!(out, "# plan {}", serde_json::to_string(&r.plan)?)?;
    }
    let mut writer = csv::Writer::from_writer(out);
    for row in report.rows() {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> HarnessResult<()> {
    let file = File::create(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
