//! CSV tables and the run manifest.
//!
//! Numbers are written in Rust's shortest round-trip decimal form, so a
//! rerun of the same spec reproduces every CSV byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use lse_core::harness::{ExperimentSpec, GammaHistogram, KernelRow, SweepResult};
use serde::Serialize;

use crate::CliError;

pub const ARTIFACT: &str = "lse-bench";

pub const SWEEP_COLUMNS: [&str; 16] = [
    "sweep_value",
    "snr_db",
    "trials",
    "mse_freq_emp",
    "stderr_freq",
    "mse_amp_emp",
    "stderr_amp",
    "crb_omega",
    "b_basic",
    "b_corr",
    "apb_ord",
    "b_oracle",
    "b_plug",
    "crb_x",
    "shortfall_count",
    "excluded_count",
];

pub const CONFIG_COLUMNS: [&str; 6] = [
    "sweep_value",
    "config_index",
    "omega",
    "gram_condition",
    "flagged",
    "benchmark_excluded",
];

pub const KERNEL_COLUMNS: [&str; 6] = [
    "delta_label",
    "snr_db",
    "pe_empirical",
    "pe_gaussian",
    "std_err",
    "trials",
];

pub const HIST_COLUMNS: [&str; 5] = ["bin_lo", "bin_hi", "count", "density", "normal_density"];

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

/// Creates `dir` if needed and checks that a file can be written into it.
pub fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let probe = dir.join(".lse-bench-write-probe");
    fs::write(&probe, b"").map_err(|e| io_err(dir, e))?;
    fs::remove_file(&probe).map_err(|e| io_err(dir, e))?;
    Ok(())
}

fn write_table(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<(), CliError> {
    let rows = result
        .rows
        .iter()
        .map(|r| {
            vec![
                r.sweep_value.to_string(),
                fmt_f64(r.snr_db),
                r.trials.to_string(),
                fmt_f64(r.mse_freq_emp),
                fmt_f64(r.stderr_freq),
                fmt_f64(r.mse_amp_emp),
                fmt_f64(r.stderr_amp),
                fmt_f64(r.crb_omega),
                fmt_f64(r.b_basic),
                fmt_f64(r.b_corr),
                fmt_f64(r.apb_ord),
                fmt_f64(r.b_oracle),
                fmt_f64(r.b_plug),
                fmt_f64(r.crb_x),
                r.shortfall_count.to_string(),
                r.excluded_count.to_string(),
            ]
        })
        .collect();
    write_table(path, &SWEEP_COLUMNS, rows)
}

/// Per-instance diagnostics; `omega` is a space-separated list in radians.
pub fn write_configs_csv(path: &Path, result: &SweepResult) -> Result<(), CliError> {
    let rows = result
        .configs
        .iter()
        .map(|c| {
            vec![
                c.sweep_value.to_string(),
                c.config_index.to_string(),
                c.omega
                    .iter()
                    .map(|w| fmt_f64(*w))
                    .collect::<Vec<_>>()
                    .join(" "),
                fmt_f64(c.gram_condition),
                c.flagged.to_string(),
                c.benchmark_excluded.to_string(),
            ]
        })
        .collect();
    write_table(path, &CONFIG_COLUMNS, rows)
}

pub fn write_kernel_csv(path: &Path, rows: &[KernelRow]) -> Result<(), CliError> {
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.delta_label.clone(),
                fmt_f64(r.snr_db),
                fmt_f64(r.pe_empirical),
                fmt_f64(r.pe_gaussian),
                fmt_f64(r.std_err),
                r.trials.to_string(),
            ]
        })
        .collect();
    write_table(path, &KERNEL_COLUMNS, rows)
}

pub fn write_hist_csv(path: &Path, hist: &GammaHistogram) -> Result<(), CliError> {
    let rows = hist
        .bins
        .iter()
        .map(|b| {
            vec![
                fmt_f64(b.lo),
                fmt_f64(b.hi),
                b.count.to_string(),
                fmt_f64(b.density),
                fmt_f64(b.normal_density),
            ]
        })
        .collect();
    write_table(path, &HIST_COLUMNS, rows)
}

/// Everything needed to rerun a command; passing this file back as
/// `--config` reproduces the CSVs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub artifact_version: &'static str,
    pub command: &'static str,
    pub preset: String,
    pub master_seed: u64,
    pub spec: ExperimentSpec,
    /// Prior width used for the ordered a priori bound.
    pub zeta: f64,
    /// Informational only; results do not depend on it.
    pub worker_threads: usize,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
    pub diagnostics: serde_json::Value,
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| io_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1e-7, 123456.789, -2.5e-300, 1.0 / 3.0, 100.0, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn unwritable_target_is_an_output_error() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let err = prepare_out_dir(&f.path().join("sub")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
