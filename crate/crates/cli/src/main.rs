use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lsscatter::checks::oracle_suite;
use lsscatter_cli::config::RunConfig;
use lsscatter_cli::runner::{cache_moments, run_single, run_sweep, RunRecord};
use lsscatter_cli::{configure_threads, CliError};

/// Spectral Lippmann-Schwinger scattering solver.
///
/// Worker threads default to the number of cores; set LSSCATTER_THREADS to cap them.
#[derive(Parser)]
#[command(name = "lsscatter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration; writes solution.csv, slice.csv and report.json.
    Solve { config: PathBuf },
    /// Run the configured convergence sweep; writes table.csv and sweep.json.
    Sweep { config: PathBuf },
    /// Precompute and store every moment table the configuration needs.
    CacheMoments { config: PathBuf },
    /// Cross-check the solver against the brute-force oracles.
    Selftest,
}

fn summary(r: &RunRecord) -> String {
    let err = r.relative_error.map(|e| format!("{e:.6e}")).unwrap_or_else(|| "n/a".into());
    format!(
        "Ni = {:>4}  F = {:>4}  iterations = {:>4}  time/iteration = {:.3} s  relative error = {err}",
        r.intervals, r.band, r.iterations, r.time_per_iteration
    )
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Solve { config } => {
            let cfg = RunConfig::load(&config)?;
            let record = run_single(&cfg)?;
            println!("{}", summary(&record));
            println!("wrote {}", cfg.output.dir.display());
        }
        Command::Sweep { config } => {
            let cfg = RunConfig::load(&config)?;
            if cfg.sweep.is_none() {
                return Err(CliError::Config("config has no [sweep] table".into()));
            }
            for r in run_sweep(&cfg)? {
                println!("{}", summary(&r));
            }
            println!("wrote {}", cfg.output.dir.join("table.csv").display());
        }
        Command::CacheMoments { config } => {
            let cfg = RunConfig::load(&config)?;
            for (path, status) in cache_moments(&cfg)? {
                println!("{:<8} {}", format!("{status:?}").to_lowercase(), path.display());
            }
        }
        Command::Selftest => {
            let outcomes = oracle_suite();
            for o in &outcomes {
                println!("{o}");
            }
            return Ok(outcomes.iter().all(|o| o.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("lsscatter: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
