//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.

#![allow(clippy::needless_range_loop)]

use std::path::Path;
use std::time::Instant;

use po2nc_core::o2nc::{
    partition_dataset, run_o2nc, OracleKind, Partition, RunPlan, RunStreams, VarianceReducedOracle, GradientOracle,
};
use po2nc_core::objectives::{
    make_linear, make_piecewise_linear_regression, make_quadratic, make_random_linear, Dataset, RegressionSpec,
    StochasticObjective,
};
use po2nc_core::oco::{regret_audit, OsdState};
use po2nc_core::privacy::{
    empirical_sensitivity_probe, naive_sigma, sensitivity_bounds, sigma_schedule, ProbeStep,
};
use po2nc_core::rng::seeded;
use po2nc_core::smoothing::{
    diff_estimate, grad_estimate, sample_unit_sphere, smoothed_grad_reference, SmoothingParams, VectorMoments,
};
use po2nc_core::tree::{ceil_log2, node, TreeState};
use po2nc_core::vector::{dist, norm_sq, sub, ParamVector};
use po2nc_harness::compare::analytic_sigma_ratio;
use po2nc_harness::experiment::{run_replicates, ReplicateResult};
use po2nc_harness::{compare_oracles, run_experiment, ExperimentConfig, ObjectiveKind};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_point(dim: usize, radius: f64, rng: &mut dyn RngCore) -> ParamVector {
    let u = sample_unit_sphere(dim, rng).unwrap();
    u.as_slice().iter().map(|v| radius * v).collect()
}

fn c1_node_exactness() -> Outcome {
    let show = |t| node(t).unwrap().iter().map(|i| (i.lo, i.hi)).collect::<Vec<_>>();
    if show(7) != vec![(1, 4), (5, 6), (7, 7)] || show(8) != vec![(1, 8)] {
        return Err(format!("node(7) = {:?}, node(8) = {:?}", show(7), show(8)));
    }
    for t in 1..=4096usize {
        let ivs = node(t).unwrap();
        let mut next = 1;
        for iv in &ivs {
            if iv.lo != next {
                return Err(format!("node({t}) does not tile [1, {t}]"));
            }
            next = iv.hi + 1;
        }
        if next != t + 1 || ivs.len() > ceil_log2(t) as usize + 1 {
            return Err(format!("node({t}) has {} intervals ending at {}", ivs.len(), next - 1));
        }
    }
    Ok("node(7), node(8) exact; partitions valid for t <= 4096".into())
}

fn unbiased_cell<O: StochasticObjective<Datum = ()>>(f: &O, b: usize, seed: u64) -> Result<f64, String> {
    let d = f.dim();
    let delta = 0.1;
    let sp = SmoothingParams::new(delta, d, f.lipschitz()).unwrap();
    let mut rng = seeded(seed);
    let x = random_point(d, 0.5, &mut rng);
    let y: ParamVector = x.iter().zip(random_point(d, 0.05, &mut rng)).map(|(a, b)| a + b).collect();
    let batch = vec![(); b];
    let want_x = f.smoothed_grad_closed_form(&x, delta).unwrap();
    let want_diff = sub(&want_x, &f.smoothed_grad_closed_form(&y, delta).unwrap());
    let n = 100_000;
    let mut worst: f64 = 0.0;
    for (estimator, want) in [(0, &want_x), (1, &want_diff)] {
        let mut m = VectorMoments::new(d);
        for _ in 0..n {
            let g = if estimator == 0 {
                grad_estimate(f, &sp, &x, &batch, &mut rng)
            } else {
                diff_estimate(f, &sp, &x, &y, &batch, &mut rng)
            }
            .unwrap();
            m.push(&g);
        }
        let est = m.finish();
        for i in 0..d {
            let err = (est.mean[i] - want[i]).abs();
            // floor covers estimators that are exact up to rounding
            let tol = 4.0 * est.stderr[i] + 1e-12;
            if err > tol {
                return Err(format!("d={d} b={b} estimator {estimator}: |err| {err:.3e} > {tol:.3e}"));
            }
            if est.stderr[i] > 0.0 {
                worst = worst.max(err / est.stderr[i]);
            }
        }
    }
    Ok(worst)
}

fn c2_unbiasedness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut seed = 100;
    for d in [1usize, 2, 4, 8] {
        for b in [1usize, 4] {
            seed += 1;
            let a: ParamVector = (0..d).map(|i| 1.0 - 0.3 * i as f64).collect();
            worst = worst.max(unbiased_cell(&make_linear(a).unwrap(), b, seed)?);
            worst = worst.max(unbiased_cell(&make_quadratic(d, 10.0).unwrap(), b, seed + 1000)?);
        }
    }
    Ok(format!("max |mean - closed form| / stderr = {worst:.2} (limit 4)"))
}

fn c3_variance_bounds() -> Outcome {
    let delta = 0.1;
    let n = 100_000;
    let mut worst: f64 = 0.0;
    for d in [1usize, 2, 4, 8] {
        let mut rng = seeded(300 + d as u64);
        let (f, _) = make_piecewise_linear_regression(RegressionSpec::capped(d, 0.5), 1, &mut rng).unwrap();
        let l = f.lipschitz();
        let sp = SmoothingParams::new(delta, d, l).unwrap();
        for b in [1usize, 4] {
            let x = random_point(d, 0.5, &mut rng);
            let y: ParamVector = x.iter().zip(random_point(d, 0.08, &mut rng)).map(|(a, b)| a + b).collect();
            let dxy = dist(&x, &y);
            let (mut grad_sq, mut diff_sq) = (0.0, 0.0);
            for _ in 0..n {
                let batch: Vec<_> = (0..b).map(|_| f.sample_datum(&mut rng)).collect();
                grad_sq += norm_sq(&grad_estimate(&f, &sp, &x, &batch, &mut rng).unwrap());
                diff_sq += norm_sq(&diff_estimate(&f, &sp, &x, &y, &batch, &mut rng).unwrap());
            }
            let grad_bound = 16.0 * d as f64 * l * l / b as f64;
            let diff_bound = grad_bound * dxy * dxy / (delta * delta);
            let rg = grad_sq / n as f64 / grad_bound;
            let rd = diff_sq / n as f64 / diff_bound;
            if rg > 1.05 || rd > 1.05 {
                return Err(format!("d={d} b={b}: moment/bound {rg:.3} (grad), {rd:.3} (diff)"));
            }
            worst = worst.max(rg).max(rd);
        }
    }
    Ok(format!("largest second moment / bound = {worst:.3} (limit 1.05)"))
}

fn c4_sensitivity() -> Outcome {
    let delta = 0.1;
    let mut worst: f64 = 0.0;
    for d in [1usize, 2, 4, 8] {
        for b in [1usize, 4] {
            let mut rng = seeded(400 + 10 * d as u64 + b as u64);
            let x = random_point(d, 0.5, &mut rng);
            let y: ParamVector = x.iter().zip(random_point(d, 0.05, &mut rng)).map(|(a, b)| a + b).collect();
            let steps = [ProbeStep::Grad { x: &x }, ProbeStep::Diff { x: &x, y: &y }];

            let (reg, _) = make_piecewise_linear_regression(RegressionSpec::absolute(d), 1, &mut rng).unwrap();
            let sp = SmoothingParams::new(delta, d, reg.lipschitz()).unwrap();
            let batch: Vec<_> = (0..b).map(|_| reg.sample_datum(&mut rng)).collect();
            for step in steps {
                let s = empirical_sensitivity_probe(&reg, &sp, step, &batch, 200, |_, r| reg.sample_datum(r), &mut rng)
                    .unwrap();
                let bound = step.analytic_bound(&sp, b);
                if s > bound + 1e-9 {
                    return Err(format!("regression d={d} b={b}: {s} > {bound}"));
                }
                worst = worst.max(s / bound);
            }

            let lin = make_random_linear(d, 1.5).unwrap();
            let sp = SmoothingParams::new(delta, d, lin.lipschitz()).unwrap();
            let batch: Vec<_> = (0..b).map(|_| lin.sample_datum(&mut rng)).collect();
            for step in steps {
                let s = empirical_sensitivity_probe(&lin, &sp, step, &batch, 200, |_, r| lin.sample_datum(r), &mut rng)
                    .unwrap();
                let bound = step.analytic_bound(&sp, b);
                if s > bound + 1e-9 {
                    return Err(format!("random-linear d={d} b={b}: {s} > {bound}"));
                }
                worst = worst.max(s / bound);
            }
        }
    }
    // 1-d worst case: flipping the sign of the datum of f(x, z) = L z x
    let lin = make_random_linear(1, 2.0).unwrap();
    let sp = SmoothingParams::new(delta, 1, 2.0).unwrap();
    let x = [0.4];
    let step = ProbeStep::Grad { x: &x };
    let s = empirical_sensitivity_probe(&lin, &sp, step, &[vec![1.0]], 5, |z, _| vec![-z[0]], &mut seeded(9)).unwrap();
    let bound = step.analytic_bound(&sp, 1);
    ensure(
        s >= 0.99 * bound && s <= bound + 1e-9,
        format!("grid max probe / bound = {worst:.3}; 1-d worst case attains {:.4} of bound", s / bound),
    )
}

fn c5_calibration() -> Outcome {
    let s = sigma_schedule(4, 1.0, 1, 16, 1.0).unwrap();
    let want = (2.0 * 16f64.ln()).sqrt();
    if ((s - want) / want).abs() > 1e-12 {
        return Err(format!("sigma_schedule(4,1,1,16,1) = {s}, expected {want}"));
    }
    let mut worst: f64 = 0.0;
    for d in [1usize, 4, 16, 100] {
        for l in [0.5, 1.0, 3.0] {
            for t in [2usize, 16, 1000, 65_536] {
                for b2 in [1usize, 3] {
                    for rho in [0.1, 1.0, 10.0] {
                        let delta = 0.1;
                        let sigma = sigma_schedule(d, l, b2, t, rho).unwrap();
                        let s_diff = sensitivity_bounds(d, l, t + 1, b2, delta, delta / t as f64).diff.s;
                        let got = (2.0 * (t as f64).ln()).sqrt() * s_diff / sigma;
                        worst = worst.max(((got - rho) / rho).abs());
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-12, format!("sigma(4,1,1,16,1) = {s:.12}; identity max rel error {worst:.1e}"))
}

fn c6_tree_noise() -> Outcome {
    let (dim, sigma, horizon, epochs) = (4usize, 1.3, 64usize, 10_000);
    let mut tree = TreeState::uniform(horizon, sigma, dim).unwrap();
    let mut rng = seeded(600);
    let mut sums = vec![0.0; horizon + 1];
    for _ in 0..epochs {
        tree.reset();
        for t in 1..=horizon {
            sums[t] += norm_sq(&tree.noise(t, &mut rng).unwrap());
        }
    }
    let unit = dim as f64 * sigma * sigma;
    let mut worst_rel: f64 = 0.0;
    for t in 2..=horizon {
        let emp = sums[t] / epochs as f64;
        let exact = node(t).unwrap().len() as f64 * unit;
        let rel = (emp / exact - 1.0).abs();
        let cap = 2.0 * (t as f64).ln() * unit * 1.05;
        if rel > 0.05 || emp > cap {
            return Err(format!("t={t}: E|Tree|^2 = {emp:.4}, |node|d s^2 = {exact:.4}, cap {cap:.4}"));
        }
        worst_rel = worst_rel.max(rel);
    }
    Ok(format!("max relative deviation from |node(t)| d sigma^2 = {worst_rel:.4} (limit 0.05)"))
}

fn manual_plan(dim: usize, delta: f64, lipschitz: f64, horizon: usize, epochs: usize, seed: u64) -> RunPlan {
    let plan = RunPlan {
        dim,
        delta,
        lipschitz,
        f_star: 1.0,
        data_size: epochs * 2 * horizon,
        data_available: epochs * 2 * horizon,
        rho: None,
        horizon,
        epochs,
        b1: horizon + 1,
        b2: 1,
        radius: delta / horizon as f64,
        seed,
        oracle_kind: OracleKind::Tree,
    };
    plan.validate().unwrap();
    plan
}

fn c7_zero_noise_equivalence() -> Outcome {
    let mut rng = seeded(700);
    let plan = manual_plan(3, 0.1, 1.0, 16, 2, 77);
    let (f, data) = make_piecewise_linear_regression(RegressionSpec::capped(3, 0.5), plan.data_size, &mut rng).unwrap();
    let out = run_o2nc(&f, &data, &plan, &[0.0; 3]).unwrap();
    let sp = plan.smoothing().unwrap();
    let RunStreams { mut shuffle, mut estimator, .. } = RunStreams::from_seed(plan.seed);
    let part = partition_dataset(&data, &plan, &mut shuffle).unwrap();
    let mut g: ParamVector = Vec::new();
    let mut checked = 0;
    for k in 1..=plan.epochs {
        let steps = out.trace.epoch_steps(k);
        for (i, step) in steps.iter().enumerate() {
            let t = i + 1;
            let batch = part.batch(k, t).unwrap();
            if t == 1 {
                g = grad_estimate(&f, &sp, &step.w, batch, &mut estimator).unwrap();
            } else {
                let d = diff_estimate(&f, &sp, &step.w, &steps[i - 1].w, batch, &mut estimator).unwrap();
                g = g.iter().zip(&d).map(|(a, b)| a + b).collect();
            }
            if step.released != g || step.noise_norm != 0.0 {
                return Err(format!("k={k} t={t}: released {:?} != recursion {:?}", step.released, g));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} releases bit-identical to g_1 + sum of differences (K=2, T=16)"))
}

fn c8_oracle_variance() -> Outcome {
    let (dim, delta) = (4usize, 0.1);
    let replicates = 4_000;
    let mut details = Vec::new();
    for horizon in [8usize, 32] {
        let mut rng = seeded(800 + horizon as u64);
        let (f, _) = make_piecewise_linear_regression(RegressionSpec::capped(dim, 0.5), 1, &mut rng).unwrap();
        let l = f.lipschitz();
        let plan = manual_plan(dim, delta, l, horizon, 1, 0);
        let sp = plan.smoothing().unwrap();
        // fixed trajectory with consecutive steps of length at most 2D
        let mut w = vec![random_point(dim, 0.3, &mut rng)];
        for _ in 1..horizon {
            let step = random_point(dim, 2.0 * plan.radius * rng.random::<f64>(), &mut rng);
            let next = w.last().unwrap().iter().zip(&step).map(|(a, b)| a + b).collect();
            w.push(next);
        }
        let checkpoints = [1, horizon / 2, horizon];
        let refs: Vec<ParamVector> = checkpoints
            .iter()
            .map(|&t| smoothed_grad_reference(&f, &sp, &w[t - 1], 1_000_000, &mut rng).unwrap().mean)
            .collect();
        let mut sq = [0.0; 3];
        for _ in 0..replicates {
            let data = Dataset::sample(&f, plan.required_data(), &mut rng);
            let part = Partition::variance_reduced(data.into_points(), 1, horizon, plan.b1, plan.b2).unwrap();
            let est = seeded(rng.next_u64());
            let noise = seeded(rng.next_u64());
            let mut oracle = VarianceReducedOracle::new(&f, &part, &plan, est, noise).unwrap();
            for t in 1..=horizon {
                let out = oracle.query(1, t, &w[t - 1]).unwrap();
                if let Some(j) = checkpoints.iter().position(|&c| c == t) {
                    sq[j] += norm_sq(&sub(&out.pre_noise, &refs[j]));
                }
            }
        }
        let d = dim as f64;
        let bound = 16.0 * d * l * l / plan.b1 as f64 + 64.0 * d * l * l / (plan.b2 * horizon) as f64;
        for (j, &t) in checkpoints.iter().enumerate() {
            let emp = sq[j] / replicates as f64;
            if emp > bound * 1.1 {
                return Err(format!("T={horizon} t={t}: E|g - grad F_delta|^2 = {emp:.4} > 1.1 x {bound:.4}"));
            }
            details.push(format!("T={horizon},t={t}: {:.3}", emp / bound));
        }
    }
    Ok(format!("moment / bound: {}", details.join(", ")))
}

fn random_regret_sequences() -> Result<usize, String> {
    for seed in 0..100u64 {
        let mut rng = seeded(1_000 + seed);
        let dim = 1 + (seed as usize % 6);
        let radius = 0.01 + rng.random::<f64>();
        let scale = 0.1 + 10.0 * rng.random::<f64>();
        let mut osd = OsdState::new(dim, radius).unwrap();
        let (mut plays, mut grads) = (Vec::new(), Vec::new());
        for _ in 0..256 {
            let g: ParamVector = (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
            plays.push(osd.current().to_vec());
            osd.step(&g).unwrap();
            grads.push(g);
        }
        let audit = regret_audit(&plays, &grads, radius).unwrap();
        if !audit.holds() {
            return Err(format!("sequence {seed}: regret {} > bound {}", audit.regret, audit.bound));
        }
    }
    Ok(100)
}

fn trend_config(rho: Option<f64>, out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(0.2, 200_000);
    c.objective = ObjectiveKind::Capped;
    c.dim = 10;
    c.delta = 0.1;
    c.rho = rho;
    c.seeds = (0..10).collect();
    c.n_points = 16;
    c.out_dir = out.to_path_buf();
    c
}

fn c11_trend(non_private: &[ReplicateResult], private: &[ReplicateResult]) -> Outcome {
    let med = |rs: &[ReplicateResult], f: fn(&ReplicateResult) -> f64| {
        po2nc_harness::experiment::median(rs.iter().map(f).collect())
    };
    let r_np = med(non_private, ReplicateResult::final_certificate) / med(non_private, ReplicateResult::first_certificate);
    let r_p = med(private, ReplicateResult::final_certificate) / med(private, ReplicateResult::first_certificate);
    ensure(
        r_np <= 0.5 && r_p <= 0.7,
        format!("median final / epoch-1 certificate: non-private {r_np:.3} (limit 0.5), rho=1 {r_p:.3} (limit 0.7)"),
    )
}

fn c12_comparison(tmp: &Path) -> Outcome {
    let mut worst: f64 = 0.0;
    for t in [2usize, 8, 64, 1000, 100_000] {
        for (d, l, rho) in [(1usize, 1.0, 1.0), (10, 0.7, 0.3), (50, 2.0, 5.0)] {
            let ratio = naive_sigma(d, l, 1, rho).unwrap() / sigma_schedule(d, l, 1, t, rho).unwrap();
            worst = worst.max((ratio / analytic_sigma_ratio(t) - 1.0).abs());
        }
    }
    let mut c = ExperimentConfig::new(0.2, 6_000);
    c.dim = 4;
    c.rho = Some(1.0);
    c.seeds = vec![3, 4];
    c.n_points = 8;
    c.out_dir = tmp.join("compare");
    let report = compare_oracles(&c).map_err(|e| e.to_string())?;
    let implemented = report.sigma_ratio.ok_or("private comparison reported no ratio")?;
    let rel = (implemented / report.sigma_ratio_analytic - 1.0).abs();
    ensure(
        worst <= 1e-9 && rel <= 1e-9,
        format!(
            "formula max rel error {worst:.1e}; report T={} ratio {implemented:.6} vs {:.6} (rel {rel:.1e})",
            report.horizon, report.sigma_ratio_analytic
        ),
    )
}

fn c13_determinism(tmp: &Path) -> Outcome {
    let mut checked = Vec::new();
    for (name, oracle, rho) in [
        ("tree", OracleKind::Tree, Some(1.0)),
        ("naive", OracleKind::Naive, Some(0.5)),
        ("exact", OracleKind::ExactDebug, None),
    ] {
        let mut c = ExperimentConfig::new(0.2, 20_000);
        c.dim = 5;
        c.oracle = oracle;
        c.rho = rho;
        c.seeds = vec![11, 12, 13];
        let mut files = Vec::new();
        for run in 0..2 {
            c.out_dir = tmp.join(format!("det-{name}-{run}"));
            let report = run_experiment(&c).map_err(|e| e.to_string())?;
            files.push(std::fs::read(&report.csv_path).map_err(|e| e.to_string())?);
        }
        if files[0] != files[1] {
            return Err(format!("{name}: CSV outputs differ between identical runs"));
        }
        checked.push(format!("{name} ({} bytes)", files[0].len()));
    }
    Ok(format!("byte-identical CSVs: {}", checked.join(", ")))
}

/// Small runs across objectives, oracles and privacy settings, used for the
/// per-run geometry and regret audits.
fn audit_runs() -> Result<Vec<ReplicateResult>, String> {
    let mut all = Vec::new();
    for objective in [ObjectiveKind::Capped, ObjectiveKind::Absolute, ObjectiveKind::Quadratic, ObjectiveKind::AbsSum] {
        for oracle in [OracleKind::Tree, OracleKind::Naive, OracleKind::ExactDebug] {
            for rho in [None, Some(0.5)] {
                let mut c = ExperimentConfig::new(0.5, 8_000);
                c.objective = objective;
                c.dim = 3;
                c.oracle = oracle;
                c.rho = rho;
                c.seeds = vec![21, 22];
                c.n_points = 4;
                c.n_mc = 1;
                c.x_init = Some(vec![0.5, -0.3, 0.2]);
                all.extend(run_replicates(&c).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(all)
}

fn c9_geometry(runs: &[&ReplicateResult]) -> Outcome {
    let bad: Vec<_> = runs.iter().filter(|r| !r.geometry_ok).collect();
    let worst = runs
        .iter()
        .map(|r| (r.max_delta_norm / r.plan.radius).max(r.max_w_step / (2.0 * r.plan.radius)).max(r.max_w_spread / r.plan.delta))
        .fold(0.0, f64::max);
    ensure(
        bad.is_empty(),
        format!("{} run traces, {} violations; largest ratio to its bound {worst:.6}", runs.len(), bad.len()),
    )
}

fn c10_regret(runs: &[&ReplicateResult]) -> Outcome {
    let sequences = random_regret_sequences()?;
    let bad = runs.iter().filter(|r| !r.regret_ok).count();
    ensure(bad == 0, format!("{sequences} random sequences hold; {} run traces, {bad} violations", runs.len()))
}

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn record(&mut self, id: u32, name: &str, start: Instant, outcome: Outcome) {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {id:>2} {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                println!("FAIL criterion {id:>2} {name}: {detail} [{secs:.1}s]");
                self.failed.push(format!("{id} {name}"));
            }
        }
    }
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; a filter
    // argument or `--list` selects nothing here.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    if args.iter().any(|a| !a.starts_with('-') && a != "acceptance") {
        return;
    }

    let tmp = tempfile::tempdir().expect("tempdir");
    let mut report = Report { failed: Vec::new() };
    let timed = |f: &dyn Fn() -> Outcome| {
        let s = Instant::now();
        (s, f())
    };

    let (s, o) = timed(&c1_node_exactness);
    report.record(1, "node exactness", s, o);
    let (s, o) = timed(&c2_unbiasedness);
    report.record(2, "estimator unbiasedness", s, o);
    let (s, o) = timed(&c3_variance_bounds);
    report.record(3, "estimator variance bounds", s, o);
    let (s, o) = timed(&c4_sensitivity);
    report.record(4, "sensitivity bounds", s, o);
    let (s, o) = timed(&c5_calibration);
    report.record(5, "noise calibration", s, o);
    let (s, o) = timed(&c6_tree_noise);
    report.record(6, "tree noise magnitude", s, o);
    let (s, o) = timed(&c7_zero_noise_equivalence);
    report.record(7, "zero-noise oracle equivalence", s, o);
    let (s, o) = timed(&c8_oracle_variance);
    report.record(8, "oracle variance", s, o);

    let start = Instant::now();
    let trend = (|| -> Result<_, String> {
        let np = run_experiment(&trend_config(None, &tmp.path().join("trend-none"))).map_err(|e| e.to_string())?;
        let p = run_experiment(&trend_config(Some(1.0), &tmp.path().join("trend-rho1"))).map_err(|e| e.to_string())?;
        Ok((np.replicates, p.replicates))
    })();
    let audits = audit_runs();
    match (&trend, &audits) {
        (Ok((np, p)), Ok(extra)) => {
            let runs: Vec<&ReplicateResult> = np.iter().chain(p).chain(extra).collect();
            report.record(9, "iterate geometry", start, c9_geometry(&runs));
            let s = Instant::now();
            report.record(10, "regret audit", s, c10_regret(&runs));
            let s = Instant::now();
            report.record(11, "end-to-end trend", s, c11_trend(np, p));
        }
        (Err(e), _) | (_, Err(e)) => {
            for (id, name) in [(9, "iterate geometry"), (10, "regret audit"), (11, "end-to-end trend")] {
                report.record(id, name, start, Err(format!("runs failed: {e}")));
            }
        }
    }

    let s = Instant::now();
    report.record(12, "oracle comparison", s, c12_comparison(tmp.path()));
    let s = Instant::now();
    report.record(13, "determinism", s, c13_determinism(tmp.path()));

    if report.failed.is_empty() {
        println!("acceptance: all 13 criteria passed");
    } else {
        println!("acceptance: {} failed: {}", report.failed.len(), report.failed.join("; "));
        std::process::exit(1);
    }
}
