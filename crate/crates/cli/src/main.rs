use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lse_bench::config::{Command, Overrides};
use lse_bench::selfcheck::{run_selfcheck, Fault};
use lse_bench::{run, threads_from_env, CliError};
use lse_core::harness::{preset, PRESET_NAMES};

/// Line spectral estimation benchmarks and Monte Carlo validation.
///
/// Exit status: 0 success, 1 failed self-check, 2 configuration error,
/// 3 numerical failure, 4 output error. `LSE_BENCH_THREADS` caps the number
/// of worker threads (0 = one per core).
#[derive(Parser)]
#[command(name = "lse-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Empirical vs Gaussianized GLRT error probability and Γ histogram.
    KernelValidate(RunArgs),
    /// Frequency-side SNR sweep against MUSIC.
    FreqSweep(RunArgs),
    /// Amplitude-side SNR sweep against MUSIC + least squares.
    AmpSweep(RunArgs),
    /// Model-order sweep over random frequency configurations.
    OrderSweep(RunArgs),
    /// Runs the built-in invariant checks.
    Selfcheck {
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Prints a preset as a JSON config.
    Preset { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; keys override the preset. A manifest.json is accepted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the Monte Carlo trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Starting preset: viiA, viiB, viiC or viiD.
    #[arg(long)]
    preset: Option<String>,
}

fn experiment(command: Command, args: RunArgs) -> Result<(), CliError> {
    let overrides = Overrides {
        preset: args.preset,
        seed: args.seed,
        trials: args.trials,
    };
    let threads = threads_from_env()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Numerical(format!("cannot start worker pool: {e}")))?;
    let written =
        pool.install(|| run::execute(command, args.config.as_deref(), &args.out, &overrides))?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn selfcheck(inject_fault: Option<String>) -> ExitCode {
    let fault = match inject_fault.as_deref().map(|s| (s, Fault::parse(s))) {
        None => None,
        Some((_, Some(f))) => Some(f),
        Some((s, None)) => {
            eprintln!("unknown fault '{s}'");
            return ExitCode::from(2);
        }
    };
    let outcomes = run_selfcheck(fault);
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag}  {:<26} {}", o.name, o.detail);
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name)
        .collect();
    println!("{} checks, {} failed", outcomes.len(), failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("selfcheck failed: {}", failed.join(", "));
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::KernelValidate(a) => experiment(Command::KernelValidate, a),
        Cmd::FreqSweep(a) => experiment(Command::FreqSweep, a),
        Cmd::AmpSweep(a) => experiment(Command::AmpSweep, a),
        Cmd::OrderSweep(a) => experiment(Command::OrderSweep, a),
        Cmd::Selfcheck { inject_fault } => return selfcheck(inject_fault),
        Cmd::Preset { name } => match preset(&name) {
            Some(spec) => {
                let mut value = serde_json::to_value(spec).expect("presets serialize");
                value["preset"] = name.into();
                println!(
                    "{}",
                    serde_json::to_string_pretty(&value).expect("valid JSON")
                );
                Ok(())
            }
            None => Err(CliError::Config(format!(
                "preset: unknown preset '{name}' (expected one of {})",
                PRESET_NAMES.join(", ")
            ))),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lse-bench: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
