//! The experiment commands.

use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use lse_core::harness::{
    run_amp_experiment, run_freq_experiment, run_kernel_validation, run_order_sweep,
};
use serde_json::json;

use crate::config::{resolve, Command, Overrides};
use crate::output::{
    prepare_out_dir, write_configs_csv, write_hist_csv, write_kernel_csv, write_manifest,
    write_sweep_csv, RunManifest, ARTIFACT,
};
use crate::CliError;

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Resolves the config, runs `command` on the current rayon pool and writes
/// its CSVs plus `manifest.json` into `out_dir`. Returns the written paths.
pub fn execute(
    command: Command,
    config_path: Option<&Path>,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<Vec<PathBuf>, CliError> {
    let resolved = resolve(command, config_path, overrides)?;
    prepare_out_dir(out_dir)?;
    let spec = &resolved.spec;
    let started_at = now();

    let mut outputs = Vec::new();
    let diagnostics = match command {
        Command::KernelValidate => {
            let v = run_kernel_validation(spec)?;
            let table = out_dir.join("kernel_validation.csv");
            write_kernel_csv(&table, &v.rows)?;
            let hist = out_dir.join("gamma_hist.csv");
            write_hist_csv(&hist, &v.histogram)?;
            outputs.extend([table, hist]);
            let max_gap = v
                .rows
                .iter()
                .map(|r| (r.pe_empirical - r.pe_gaussian).abs())
                .fold(0.0, f64::max);
            json!({
                "max_abs_pe_gap": max_gap,
                "histogram": {
                    "delta_label": v.histogram.delta_label,
                    "snr_db": v.histogram.snr_db,
                    "trials": v.histogram.trials,
                    "mu_gamma": v.histogram.mu,
                    "sigma_gamma": v.histogram.sigma,
                    "ks_distance": v.histogram.ks_distance,
                }
            })
        }
        Command::FreqSweep | Command::AmpSweep | Command::OrderSweep => {
            let result = match command {
                Command::FreqSweep => run_freq_experiment(spec)?,
                Command::AmpSweep => run_amp_experiment(spec)?,
                _ => run_order_sweep(spec)?,
            };
            let table = out_dir.join("sweep.csv");
            write_sweep_csv(&table, &result)?;
            let configs = out_dir.join("configs.csv");
            write_configs_csv(&configs, &result)?;
            outputs.extend([table, configs]);
            json!({
                "flagged_configs": result.configs.iter().filter(|c| c.flagged).count(),
                "benchmark_excluded_configs":
                    result.configs.iter().filter(|c| c.benchmark_excluded).count(),
                "wall_time_s": result.rows.iter().map(|r| r.wall_time_s).sum::<f64>(),
            })
        }
    };

    let manifest_path = out_dir.join("manifest.json");
    let manifest = RunManifest {
        artifact: ARTIFACT,
        artifact_version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        preset: resolved.preset.clone(),
        master_seed: spec.master_seed,
        spec: spec.clone(),
        zeta: spec.zeta(),
        worker_threads: rayon::current_num_threads(),
        started_at,
        finished_at: now(),
        outputs: outputs
            .iter()
            .map(|p| {
                p.file_name()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| p.clone())
            })
            .collect(),
        diagnostics,
    };
    write_manifest(&manifest_path, &manifest)?;
    outputs.push(manifest_path);
    Ok(outputs)
}
