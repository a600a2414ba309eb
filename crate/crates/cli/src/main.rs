use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use patchflow_cli::check::check_output;
use patchflow_cli::runner::run_scenario;
use patchflow_cli::tools::{decompose_snapshot, stokes_tail, TailError};

/// Density-patch Navier–Stokes runs and their verification reports.
#[derive(Parser)]
#[command(name = "patchflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its artifacts.
    Run { config: PathBuf },
    /// Re-evaluate the hard invariants of a finished run.
    Check { output_dir: PathBuf },
    /// Atomic decomposition of a snapshot's velocity, as JSON on stdout.
    Decompose {
        snapshot: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        eta: f64,
    },
    /// Far-field decay of the Stokes response to a source.
    StokesTail { source_spec: PathBuf },
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("PATCHFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("PATCHFLOW_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(64);
    }
    let code: u8 = match cli.command {
        Command::Run { config } => match run_scenario(&config) {
            Ok(out) => {
                for f in &out.failures {
                    eprintln!("invariant failed: {f}");
                }
                println!(
                    "{}: wrote {} ({:.1}s)",
                    out.manifest.name,
                    out.output_dir.display(),
                    out.manifest.wall_seconds
                );
                out.exit_code() as u8
            }
            Err(e) => {
                eprintln!("{}: {e}", config.display());
                e.exit_code() as u8
            }
        },
        Command::Check { output_dir } => match check_output(&output_dir) {
            Ok(r) => {
                for (name, c) in &r.invariants {
                    let verdict = if c.passed { "ok" } else { "FAIL" };
                    println!("{verdict:<4} {name} = {:e} (limit {:e})", c.value, c.limit);
                }
                for (row, why) in &r.unresolved {
                    println!("FAIL trace `{}`: {why}", row.check);
                }
                if r.passed() {
                    0
                } else {
                    2
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", output_dir.display());
                1
            }
        },
        Command::Decompose { snapshot, eta } => match decompose_snapshot(&snapshot, eta) {
            Ok(json) => {
                println!("{json}");
                0
            }
            Err(patchflow::Error::InvalidParameter(m)) => {
                eprintln!("error: {m}");
                64
            }
            Err(e) => {
                eprintln!("{}: {e}", snapshot.display());
                1
            }
        },
        Command::StokesTail { source_spec } => match stokes_tail(&source_spec) {
            Ok(r) => {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&r).expect("plain report")
                );
                0
            }
            Err(e @ TailError::Spec(_)) => {
                eprintln!("{}: {e}", source_spec.display());
                64
            }
            Err(e) => {
                eprintln!("{}: {e}", source_spec.display());
                1
            }
        },
    };
    ExitCode::from(code)
}
