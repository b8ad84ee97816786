//! Seeded Monte Carlo experiments.
//!
//! An [`ExperimentSpec`] describes one family of runs: a fixed-geometry SNR
//! sweep, a snapshot-count sweep, a model-order sweep over random frequency
//! configurations, or the GLRT kernel validation. Angles in the spec are in
//! units of π so presets stay readable.
//!
//! Seeds: trial `n` of sweep value `v`, configuration `c` and SNR point `s`
//! draws its noise from `derive_seed(master_seed, [v, c, s, n])`. Amplitude
//! matrices and random frequency vectors come from `instance_seed`, so
//! changing `master_seed` redraws the noise only. Trials run on the rayon
//! pool and are reduced in trial order, which makes every number independent
//! of the worker count.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ampbench::plugin_benchmark;
use crate::error::{Error, Result};
use crate::estimators::{ls_amplitudes, music_estimate, DEFAULT_GRID_SIZE, MIN_GRID_SIZE};
use crate::fisher::marginal_crb;
use crate::freqbench::corrected_benchmark;
use crate::glrtkernel::{gaussian_kernel, kernel_moments, sample_statistics, HypothesisPair};
use crate::linalg::{fro2, hermitian_condition};
use crate::linmodel::{
    build_a, random_amplitudes, random_ordered_frequencies, synthesize, ModelConfig,
};
use crate::rng::derive_seed;
use crate::special::normal_pdf;
use crate::stats::{ks_distance_normal, mean_and_stderr, CompensatedSum};

/// Gram condition number above which a random configuration is flagged.
pub const FLAG_CONDITION: f64 = 1e8;

/// What varies across the blocks of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    /// A single block at the base snapshot count.
    None,
    /// One block per snapshot count, fixed frequencies.
    Snapshots { t_values: Vec<usize> },
    /// One block per model order; each block averages `n_configs` random
    /// ordered frequency vectors drawn uniformly on the prior support.
    Order {
        k_values: Vec<usize>,
        n_configs: usize,
    },
}

/// A hypothesis perturbation `δ = magnitude·e_coordinate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub label: String,
    /// 1-based frequency index.
    pub coordinate: usize,
    pub magnitude_pi: f64,
}

/// Settings used only by [`run_kernel_validation`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSettings {
    pub perturbations: Vec<Perturbation>,
    /// Label of the perturbation whose standardized statistic is histogrammed.
    pub histogram_perturbation: String,
    pub histogram_snr_db: f64,
    pub histogram_trials: usize,
    pub histogram_bins: usize,
}

impl Default for KernelSettings {
    fn default() -> Self {
        let p = |label: &str, magnitude_pi| Perturbation {
            label: label.into(),
            coordinate: 3,
            magnitude_pi,
        };
        Self {
            perturbations: vec![p("loc", 0.01), p("mod", 0.10)],
            histogram_perturbation: "loc".into(),
            histogram_snr_db: -15.0,
            histogram_trials: 100_000,
            histogram_bins: 64,
        }
    }
}

/// A complete, serializable experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub m: usize,
    /// Snapshot count for `none` and `order` sweeps.
    pub t: usize,
    /// Ordered true frequencies in units of π; unused by `order` sweeps.
    pub omega_pi: Vec<f64>,
    pub prior_lo_pi: f64,
    pub prior_hi_pi: f64,
    /// Seed for amplitude matrices and random frequency configurations.
    pub instance_seed: u64,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub sweep: Sweep,
    pub grid_size: usize,
    #[serde(default)]
    pub kernel: KernelSettings,
}

impl ExperimentSpec {
    /// Checks everything that does not need numerical work; error messages
    /// name the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.snr_grid_db.is_empty() {
            return bad("snr_grid_db must contain at least one SNR value".into());
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_grid_db entries must be finite".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        if self.t == 0 {
            return bad("t must be positive".into());
        }
        if self.grid_size < MIN_GRID_SIZE {
            return bad(format!("grid_size must be at least {MIN_GRID_SIZE}"));
        }
        if !(self.prior_hi_pi > self.prior_lo_pi) {
            return bad("prior_hi_pi must exceed prior_lo_pi".into());
        }
        match &self.sweep {
            Sweep::None => {}
            Sweep::Snapshots { t_values } => {
                if t_values.is_empty() || t_values.contains(&0) {
                    return bad("sweep.t_values must be a nonempty list of positive counts".into());
                }
            }
            Sweep::Order {
                k_values,
                n_configs,
            } => {
                if k_values.is_empty() || k_values.iter().any(|&k| k == 0 || k >= self.m) {
                    return bad("sweep.k_values must be nonempty with 0 < K < m".into());
                }
                if *n_configs == 0 {
                    return bad("sweep.n_configs must be at least 1".into());
                }
            }
        }
        if !matches!(self.sweep, Sweep::Order { .. }) {
            let k = self.omega_pi.len();
            if k == 0 || k >= self.m {
                return bad(format!(
                    "omega_pi must hold between 1 and m-1 frequencies, got {k}"
                ));
            }
            if self.omega_pi.windows(2).any(|w| w[1] <= w[0]) {
                return bad("omega_pi must be strictly increasing".into());
            }
            if self.omega_pi[0] < self.prior_lo_pi || self.omega_pi[k - 1] > self.prior_hi_pi {
                return bad("omega_pi must lie inside [prior_lo_pi, prior_hi_pi]".into());
            }
        }
        Ok(())
    }

    /// Prior support in radians.
    pub fn prior(&self) -> (f64, f64) {
        (self.prior_lo_pi * PI, self.prior_hi_pi * PI)
    }

    pub fn zeta(&self) -> f64 {
        let (lo, hi) = self.prior();
        hi - lo
    }

    /// Frequencies in radians.
    pub fn omega(&self) -> Vec<f64> {
        self.omega_pi.iter().map(|w| w * PI).collect()
    }

    /// The fixed-frequency instance at `t` snapshots, with unit-norm
    /// amplitudes from `derive_seed(instance_seed, [t])` and unit noise.
    pub fn fixed_config(&self, t: usize) -> Result<ModelConfig> {
        let (lo, hi) = self.prior();
        let omega = self.omega();
        let x = random_amplitudes(omega.len(), t, derive_seed(self.instance_seed, &[t as u64]));
        ModelConfig::new(self.m, omega, x, 1.0, lo, hi)
    }

    /// Random configuration `c` of order `k`: frequencies from
    /// `derive_seed(instance_seed, [k, c, 0])`, amplitudes from
    /// `derive_seed(instance_seed, [k, c, 1])`.
    pub fn random_config(&self, k: usize, c: usize) -> Result<ModelConfig> {
        let (lo, hi) = self.prior();
        let (k64, c64) = (k as u64, c as u64);
        let omega =
            random_ordered_frequencies(k, lo, hi, derive_seed(self.instance_seed, &[k64, c64, 0]));
        let x = random_amplitudes(k, self.t, derive_seed(self.instance_seed, &[k64, c64, 1]));
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(format!(
                "random configuration {c} for K={k} has coincident frequencies"
            )));
        }
        ModelConfig::new(self.m, omega, x, 1.0, lo, hi)
    }
}

/// Named defaults for the four experiment families.
pub fn preset(name: &str) -> Option<ExperimentSpec> {
    let paper_omega = vec![-0.35, -0.15, 0.0, 0.15, 0.35];
    let base = ExperimentSpec {
        m: 50,
        t: 20,
        omega_pi: paper_omega,
        prior_lo_pi: -1.0,
        prior_hi_pi: 1.0,
        instance_seed: 1,
        snr_grid_db: vec![],
        trials: 1000,
        master_seed: 2024,
        sweep: Sweep::None,
        grid_size: DEFAULT_GRID_SIZE,
        kernel: KernelSettings::default(),
    };
    let spec = match name {
        "viiA" => ExperimentSpec {
            snr_grid_db: vec![-35.0, -30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0],
            trials: 10_000,
            ..base
        },
        "viiB" => ExperimentSpec {
            t: 100,
            snr_grid_db: grid(-45.0, 5.0, 2.5),
            ..base
        },
        "viiC" => ExperimentSpec {
            m: 20,
            t: 20,
            omega_pi: vec![-0.3, 0.0, 0.3],
            prior_lo_pi: -0.5,
            prior_hi_pi: 0.5,
            snr_grid_db: grid(-30.0, 10.0, 1.0),
            sweep: Sweep::Snapshots {
                t_values: vec![10, 20, 40],
            },
            ..base
        },
        "viiD" => ExperimentSpec {
            m: 20,
            t: 20,
            omega_pi: vec![],
            snr_grid_db: grid(-30.0, 20.0, 2.5),
            trials: 100,
            sweep: Sweep::Order {
                k_values: vec![2, 3, 4],
                n_configs: 10,
            },
            ..base
        },
        _ => return None,
    };
    Some(spec)
}

pub const PRESET_NAMES: [&str; 4] = ["viiA", "viiB", "viiC", "viiD"];

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// One `(sweep value, SNR)` point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    /// `T` for snapshot and fixed sweeps, `K` for order sweeps.
    pub sweep_value: usize,
    pub snr_db: f64,
    /// Trials attempted at this point, summed over configurations.
    pub trials: usize,
    pub mse_freq_emp: f64,
    pub stderr_freq: f64,
    pub mse_amp_emp: f64,
    pub stderr_amp: f64,
    pub crb_omega: f64,
    pub b_basic: f64,
    pub b_corr: f64,
    pub apb_ord: f64,
    pub b_oracle: f64,
    pub b_plug: f64,
    pub crb_x: f64,
    /// Nonlocal score `γ̄_L`, averaged over configurations.
    pub gamma_bar: f64,
    pub shortfall_count: usize,
    pub excluded_count: usize,
    pub wall_time_s: f64,
}

/// Diagnostics for one model instance of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigRecord {
    pub sweep_value: usize,
    pub config_index: usize,
    pub omega: Vec<f64>,
    pub gram_condition: f64,
    /// Gram condition above [`FLAG_CONDITION`].
    pub flagged: bool,
    /// Closed-form benchmarks could not be evaluated; the configuration still
    /// contributes Monte Carlo trials but not benchmark averages.
    pub benchmark_excluded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub configs: Vec<ConfigRecord>,
    /// Prior width used by the `apb_ord` column.
    pub zeta: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Benchmarks {
    crb_omega: f64,
    b_basic: f64,
    b_corr: f64,
    apb_ord: f64,
    b_oracle: f64,
    b_plug: f64,
    crb_x: f64,
    gamma_bar: f64,
}

impl Benchmarks {
    fn at(config: &ModelConfig) -> Result<Self> {
        let fisher = marginal_crb(config)?;
        let freq = corrected_benchmark(config, &fisher.c_omega)?;
        let amp = plugin_benchmark(config, &fisher.c_omega, &freq.b_basic_i)?;
        let b = Self {
            crb_omega: fisher.crb_omega_trace_avg,
            b_basic: freq.b_basic,
            b_corr: freq.b_corr,
            apb_ord: freq.apb_ord,
            b_oracle: amp.b_oracle,
            b_plug: amp.b_plug,
            crb_x: amp.crb_x,
            gamma_bar: freq.gamma_bar,
        };
        if b.as_array().iter().all(|v| v.is_finite()) {
            Ok(b)
        } else {
            Err(Error::Singular("benchmark evaluation"))
        }
    }

    fn as_array(&self) -> [f64; 8] {
        [
            self.crb_omega,
            self.b_basic,
            self.b_corr,
            self.apb_ord,
            self.b_oracle,
            self.b_plug,
            self.crb_x,
            self.gamma_bar,
        ]
    }

    fn mean(all: &[Self]) -> Self {
        let cols: Vec<f64> = (0..8)
            .map(|j| {
                let mut s = CompensatedSum::new();
                all.iter().for_each(|b| s.add(b.as_array()[j]));
                s.value() / all.len() as f64
            })
            .collect();
        Self {
            crb_omega: cols[0],
            b_basic: cols[1],
            b_corr: cols[2],
            apb_ord: cols[3],
            b_oracle: cols[4],
            b_plug: cols[5],
            crb_x: cols[6],
            gamma_bar: cols[7],
        }
    }
}

/// Per-trial outcome. `None` marks a numerical failure.
#[derive(Clone, Copy, Debug)]
struct Trial {
    freq_se: Option<f64>,
    amp_se: Option<f64>,
    shortfall: bool,
}

fn run_trial(config: &ModelConfig, grid_size: usize, seed: u64) -> Trial {
    let y = synthesize(config, seed);
    let est = match music_estimate(&y, config.k, grid_size, config.prior_lo, config.prior_hi) {
        Ok(e) => e,
        Err(_) => {
            return Trial {
                freq_se: None,
                amp_se: None,
                shortfall: false,
            }
        }
    };
    let k = config.k as f64;
    let freq_se = est
        .omega_hat
        .iter()
        .zip(&config.omega)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / k;
    let amp_se = ls_amplitudes(&y, &est.omega_hat)
        .ok()
        .map(|a| fro2(&(a.x_hat - &config.x)) / (k * config.t as f64));
    Trial {
        freq_se: Some(freq_se),
        amp_se,
        shortfall: est.shortfall > 0,
    }
}

/// Monte Carlo summary of one configuration at one SNR.
#[derive(Clone, Copy, Debug)]
struct PointStats {
    freq: Option<(f64, f64)>,
    amp: Option<(f64, f64)>,
    shortfall: usize,
    excluded: usize,
}

fn simulate(config: &ModelConfig, spec: &ExperimentSpec, path: [u64; 3]) -> PointStats {
    let trials: Vec<Trial> = (0..spec.trials)
        .into_par_iter()
        .map(|n| {
            let seed = derive_seed(spec.master_seed, &[path[0], path[1], path[2], n as u64]);
            run_trial(config, spec.grid_size, seed)
        })
        .collect();
    let freq: Vec<f64> = trials.iter().filter_map(|t| t.freq_se).collect();
    let amp: Vec<f64> = trials.iter().filter_map(|t| t.amp_se).collect();
    let stats = |xs: &[f64]| (!xs.is_empty()).then(|| mean_and_stderr(xs));
    PointStats {
        freq: stats(&freq),
        amp: stats(&amp),
        shortfall: trials.iter().filter(|t| t.shortfall).count(),
        excluded: trials.iter().filter(|t| t.amp_se.is_none()).count(),
    }
}

/// Averages per-configuration means with equal weight; the standard error
/// combines the per-configuration standard errors. A point with no usable
/// trials reports an infinite MSE rather than NaN.
fn combine(parts: &[Option<(f64, f64)>]) -> (f64, f64) {
    let ok: Vec<(f64, f64)> = parts.iter().flatten().copied().collect();
    if ok.is_empty() {
        return (f64::INFINITY, 0.0);
    }
    let n = ok.len() as f64;
    let (mut m, mut v) = (CompensatedSum::new(), CompensatedSum::new());
    for (mean, se) in &ok {
        m.add(*mean);
        v.add(se * se);
    }
    (m.value() / n, v.value().sqrt() / n)
}

struct Block {
    sweep_value: usize,
    configs: Vec<ModelConfig>,
}

fn gram_condition(config: &ModelConfig) -> f64 {
    let a = build_a(&config.omega, config.m);
    hermitian_condition(&(a.adjoint() * &a))
}

fn run_blocks(spec: &ExperimentSpec, blocks: &[Block]) -> Result<SweepResult> {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (vi, block) in blocks.iter().enumerate() {
        let cond: Vec<f64> = block.configs.iter().map(gram_condition).collect();
        let mut bench_ok = vec![true; block.configs.len()];
        let mut block_rows = Vec::new();
        for (si, &snr_db) in spec.snr_grid_db.iter().enumerate() {
            let start = Instant::now();
            let mut benches = Vec::new();
            let mut freq = Vec::new();
            let mut amp = Vec::new();
            let (mut shortfall, mut excluded) = (0, 0);
            for (ci, base) in block.configs.iter().enumerate() {
                let config = base.with_snr_db(snr_db);
                match Benchmarks::at(&config) {
                    Ok(b) => benches.push(b),
                    Err(e) if block.configs.len() == 1 => return Err(e),
                    Err(_) => bench_ok[ci] = false,
                }
                let p = simulate(&config, spec, [vi as u64, ci as u64, si as u64]);
                freq.push(p.freq);
                amp.push(p.amp);
                shortfall += p.shortfall;
                excluded += p.excluded;
            }
            if benches.is_empty() {
                return Err(Error::Singular("benchmarks of every configuration"));
            }
            let b = Benchmarks::mean(&benches);
            let (mse_freq_emp, stderr_freq) = combine(&freq);
            let (mse_amp_emp, stderr_amp) = combine(&amp);
            block_rows.push(SweepRow {
                sweep_value: block.sweep_value,
                snr_db,
                trials: spec.trials * block.configs.len(),
                mse_freq_emp,
                stderr_freq,
                mse_amp_emp,
                stderr_amp,
                crb_omega: b.crb_omega,
                b_basic: b.b_basic,
                b_corr: b.b_corr,
                apb_ord: b.apb_ord,
                b_oracle: b.b_oracle,
                b_plug: b.b_plug,
                crb_x: b.crb_x,
                gamma_bar: b.gamma_bar,
                shortfall_count: shortfall,
                excluded_count: excluded,
                wall_time_s: start.elapsed().as_secs_f64(),
            });
        }
        rows.extend(block_rows);
        for (ci, config) in block.configs.iter().enumerate() {
            records.push(ConfigRecord {
                sweep_value: block.sweep_value,
                config_index: ci,
                omega: config.omega.clone(),
                gram_condition: cond[ci],
                flagged: !(cond[ci] <= FLAG_CONDITION),
                benchmark_excluded: !bench_ok[ci],
            });
        }
    }
    Ok(SweepResult {
        rows,
        configs: records,
        zeta: spec.zeta(),
    })
}

fn fixed_blocks(spec: &ExperimentSpec) -> Result<Vec<Block>> {
    let t_values = match &spec.sweep {
        Sweep::None => vec![spec.t],
        Sweep::Snapshots { t_values } => t_values.clone(),
        Sweep::Order { .. } => {
            return Err(Error::InvalidConfig(
                "sweep.kind = order needs the order-sweep runner".into(),
            ))
        }
    };
    t_values
        .into_iter()
        .map(|t| {
            Ok(Block {
                sweep_value: t,
                configs: vec![spec.fixed_config(t)?],
            })
        })
        .collect()
}

/// Frequency-side SNR sweep at fixed frequencies (`none` or `snapshots`).
///
/// Each trial runs MUSIC and the least-squares reconstruction, so the
/// amplitude columns are filled as well.
pub fn run_freq_experiment(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    run_blocks(spec, &fixed_blocks(spec)?)
}

/// Amplitude-side SNR sweep; identical trial pipeline to
/// [`run_freq_experiment`], typically used with a `snapshots` sweep.
pub fn run_amp_experiment(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    run_blocks(spec, &fixed_blocks(spec)?)
}

/// Model-order sweep over random ordered frequency configurations. Each
/// row averages first over trials and then over configurations.
pub fn run_order_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let Sweep::Order {
        k_values,
        n_configs,
    } = &spec.sweep
    else {
        return Err(Error::InvalidConfig(
            "sweep.kind must be order for an order sweep".into(),
        ));
    };
    let blocks = k_values
        .iter()
        .map(|&k| {
            Ok(Block {
                sweep_value: k,
                configs: (0..*n_configs)
                    .map(|c| spec.random_config(k, c))
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    run_blocks(spec, &blocks)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelRow {
    pub delta_label: String,
    pub snr_db: f64,
    pub pe_empirical: f64,
    pub pe_gaussian: f64,
    pub std_err: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Empirical density of the standardized statistic.
    pub density: f64,
    /// Standard normal density at the bin centre.
    pub normal_density: f64,
}

/// Distribution of `(Γ − μ_Γ)/σ_Γ` under `H₀` at one operating point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaHistogram {
    pub delta_label: String,
    pub snr_db: f64,
    pub trials: usize,
    pub mu: f64,
    pub sigma: f64,
    pub ks_distance: f64,
    pub bins: Vec<HistogramBin>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelValidation {
    pub rows: Vec<KernelRow>,
    pub histogram: GammaHistogram,
}

/// Standardized histogram range, in units of `σ_Γ`.
const HIST_HALF_WIDTH: f64 = 4.0;

fn hypothesis(config: &ModelConfig, p: &Perturbation) -> Result<HypothesisPair> {
    if p.coordinate == 0 || p.coordinate > config.k {
        return Err(Error::InvalidConfig(format!(
            "kernel.perturbations: coordinate {} of '{}' is outside 1..={}",
            p.coordinate, p.label, config.k
        )));
    }
    let mut delta = vec![0.0; config.k];
    delta[p.coordinate - 1] = p.magnitude_pi * PI;
    HypothesisPair::new(config.omega.clone(), delta)
}

/// Empirical versus Gaussianized pairwise error probability for every
/// perturbation and SNR, plus the standardized-Γ histogram.
///
/// Point `(d, s)` uses `derive_seed(master_seed, [d, s])` as its stream
/// root; the histogram uses `derive_seed(master_seed, [u64::MAX])`.
pub fn run_kernel_validation(spec: &ExperimentSpec) -> Result<KernelValidation> {
    spec.validate()?;
    let ks = &spec.kernel;
    if ks.perturbations.is_empty() {
        return Err(Error::InvalidConfig(
            "kernel.perturbations must not be empty".into(),
        ));
    }
    if ks.histogram_trials < 2 || ks.histogram_bins == 0 {
        return Err(Error::InvalidConfig(
            "kernel.histogram_trials must be at least 2 and kernel.histogram_bins positive".into(),
        ));
    }
    let base = spec.fixed_config(spec.t)?;
    let mut rows = Vec::new();
    for (di, p) in ks.perturbations.iter().enumerate() {
        let pair = hypothesis(&base, p)?;
        for (si, &snr_db) in spec.snr_grid_db.iter().enumerate() {
            let config = base.with_snr_db(snr_db);
            let seed = derive_seed(spec.master_seed, &[di as u64, si as u64]);
            let gammas = sample_statistics(&config, &pair, spec.trials, seed)?;
            let errors: Vec<f64> = gammas
                .iter()
                .map(|&g| {
                    if g < 0.0 {
                        1.0
                    } else if g == 0.0 {
                        0.5
                    } else {
                        0.0
                    }
                })
                .collect();
            let (pe, _) = mean_and_stderr(&errors);
            let n = spec.trials as f64;
            rows.push(KernelRow {
                delta_label: p.label.clone(),
                snr_db,
                pe_empirical: pe,
                pe_gaussian: gaussian_kernel(&kernel_moments(&config, &pair)?),
                std_err: (pe * (1.0 - pe) / n).sqrt(),
                trials: spec.trials,
            });
        }
    }

    let hp = ks
        .perturbations
        .iter()
        .find(|p| p.label == ks.histogram_perturbation)
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "kernel.histogram_perturbation '{}' matches no perturbation label",
                ks.histogram_perturbation
            ))
        })?;
    let config = base.with_snr_db(ks.histogram_snr_db);
    let pair = hypothesis(&config, hp)?;
    let mom = kernel_moments(&config, &pair)?;
    if !(mom.sigma2 > 0.0) {
        return Err(Error::Singular("histogram: Γ has zero variance"));
    }
    let sigma = mom.sigma2.sqrt();
    let z: Vec<f64> = sample_statistics(
        &config,
        &pair,
        ks.histogram_trials,
        derive_seed(spec.master_seed, &[u64::MAX]),
    )?
    .iter()
    .map(|g| (g - mom.mu) / sigma)
    .collect();
    Ok(KernelValidation {
        rows,
        histogram: GammaHistogram {
            delta_label: hp.label.clone(),
            snr_db: ks.histogram_snr_db,
            trials: ks.histogram_trials,
            mu: mom.mu,
            sigma,
            ks_distance: ks_distance_normal(&z),
            bins: histogram(&z, ks.histogram_bins),
        },
    })
}

fn histogram(z: &[f64], bins: usize) -> Vec<HistogramBin> {
    let width = 2.0 * HIST_HALF_WIDTH / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in z {
        let b = ((v + HIST_HALF_WIDTH) / width).floor();
        if b >= 0.0 && (b as usize) < bins {
            counts[b as usize] += 1;
        }
    }
    counts
        .iter()
        .enumerate()
        .map(|(b, &count)| {
            let lo = -HIST_HALF_WIDTH + b as f64 * width;
            HistogramBin {
                lo,
                hi: lo + width,
                count,
                density: count as f64 / (z.len() as f64 * width),
                normal_density: normal_pdf(lo + 0.5 * width),
            }
        })
        .collect()
}
