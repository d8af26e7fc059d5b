use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use po2nc_core::o2nc::{plan_run, OracleKind};
use po2nc_harness::config::parse_rho;
use po2nc_harness::{compare_oracles, run_experiment, ExperimentConfig, HarnessResult};

#[derive(Parser)]
#[command(name = "po2nc", version, about = "Private zeroth-order online-to-nonconvex optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write results.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run this single replicate seed instead of the config's list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_oracle)]
        oracle: Option<OracleKind>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the tree and naive oracles on matched seeds and compare them.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the resolved run plan as JSON.
    Plan {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long = "L")]
        lipschitz: f64,
        #[arg(long)]
        fstar: f64,
        #[arg(long = "M")]
        m: usize,
        /// Privacy parameter, or `none` for the non-private mode.
        #[arg(long, value_parser = parse_rho_arg, default_value = "none")]
        rho: RhoArg,
    },
}

/// Parsed `--rho`; `None` is the non-private mode.
#[derive(Debug, Clone, Copy)]
struct RhoArg(Option<f64>);

fn parse_rho_arg(s: &str) -> Result<RhoArg, String> {
    parse_rho(s).map(RhoArg)
}

fn parse_oracle(s: &str) -> Result<OracleKind, String> {
    s.parse().map_err(|e: po2nc_core::Error| e.to_string())
}

fn execute(cli: Cli) -> HarnessResult<()> {
    match cli.command {
        Command::Run { config, seed, oracle, out } => {
            let mut c = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                c.seeds = vec![s];
            }
            if let Some(o) = oracle {
                c.oracle = o;
            }
            if let Some(o) = out {
                c.out_dir = o;
            }
            let report = run_experiment(&c)?;
            println!(
                "wrote {} ({} replicates, median final certificate {:.6})",
                report.csv_path.display(),
                report.replicates.len(),
                report.median_final_certificate
            );
        }
        Command::Compare { config, out } => {
            let mut c = ExperimentConfig::load(&config)?;
            c.out_dir = out;
            let report = compare_oracles(&c)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Plan { d, delta, lipschitz, fstar, m, rho } => {
            let plan = plan_run(d, delta, lipschitz, fstar, m, rho.0)?;
            println!("{}", serde_json::to_string_pretty(&plan)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // exit code 2 is reserved for infeasible plans
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("po2nc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
