use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nhota_cli::check::{run_checks, Scale};
use nhota_cli::experiment::{gen_data, is_monotone, run_experiment, sweep_u};
use nhota_cli::{CliError, ConfigError, ExperimentConfig, SEED_ENV};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUN: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nhota",
    version,
    about = "Nonmonotone higher-order Taylor solver for F + h"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run once at the configured `u`.
    Run { config: PathBuf },
    /// Run every `u` in `u_list` on shared data.
    Sweep { config: PathBuf },
    /// Run the invariant check suite.
    Check {
        /// Include desk-scale instances and more seeds.
        #[arg(long)]
        full: bool,
    },
    /// Write a phase-retrieval data bundle.
    GenData { config: PathBuf },
}

fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    let mut cfg = ExperimentConfig::parse(&text)
        .map_err(|e| ConfigError::general(format!("{}: {e}", path.display())))?;
    if let Ok(seed) = std::env::var(SEED_ENV) {
        cfg.override_seed(&seed)?;
    }
    Ok(cfg)
}

fn exit_for(e: &CliError) -> ExitCode {
    eprintln!("nhota: {e}");
    ExitCode::from(match e {
        CliError::Config(_) => EXIT_CONFIG,
        CliError::Io(..) | CliError::Run(_) => EXIT_RUN,
    })
}

fn run(path: &Path) -> Result<bool, CliError> {
    let cfg = load(path)?;
    let report = run_experiment(&cfg)?;
    let last = report.trace.last();
    println!(
        "{} after {} iterations: f = {:e}, stationarity = {:e}",
        report.trace.status, last.k, last.f, last.stationarity
    );
    println!("wrote {}", cfg.output_dir.display());
    if let Some(e) = &report.error {
        eprintln!("nhota: run failed: {e}");
    }
    Ok(report.error.is_none())
}

fn sweep(path: &Path) -> Result<bool, CliError> {
    let cfg = load(path)?;
    let reports = sweep_u(&cfg)?;
    let mut ok = true;
    for r in &reports {
        let last = r.trace.last();
        let monotone = if is_monotone(&r.trace) {
            "monotone"
        } else {
            "nonmonotone"
        };
        println!(
            "u={}: {} at k={}, f = {:e}, {monotone}",
            r.u, r.trace.status, last.k, last.f
        );
        if let Some(e) = &r.error {
            eprintln!("nhota: u={} failed: {e}", r.u);
            ok = false;
        }
    }
    println!("wrote {}", cfg.output_dir.display());
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config } => run(config),
        Command::Sweep { config } => sweep(config),
        Command::GenData { config } => {
            load(config)
                .and_then(|cfg| gen_data(&cfg))
                .map(|(path, hash)| {
                    println!("wrote {} (sha256 {hash})", path.display());
                    true
                })
        }
        Command::Check { full } => {
            let scale = if *full { Scale::Full } else { Scale::Quick };
            let results = run_checks(scale, |r| {
                let verdict = if r.pass { "PASS" } else { "FAIL" };
                println!("{verdict} {} ({:.0} ms): {}", r.name, r.millis, r.detail);
            });
            let passed = results.iter().filter(|r| r.pass).count();
            println!("{passed} of {} checks passed", results.len());
            return if passed == results.len() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK)
            };
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_RUN),
        Err(e) => exit_for(&e),
    }
}
