//! Small-scale invariant checks across all modules.
//!
//! Each check compares a library result against an independent route:
//! numerical quadrature, a direct matrix inversion, finite differences or a
//! closed-form special case.

use std::f64::consts::PI;

use lse_core::ampbench::{
    diagonal_hessian, mismatch_kernel, transfer_hessian, transfer_hessian_trace_form,
};
use lse_core::estimators::{ls_amplitudes, music_estimate, DEFAULT_GRID_SIZE};
use lse_core::fisher::{effective_fim, joint_crb, marginal_crb, projector};
use lse_core::freqbench::{alpha_c, nonlocal_bracket, ordered_apb, report_from_parts};
use lse_core::glrtkernel::{glrt_statistic, kernel_moments, sample_statistics, HypothesisPair};
use lse_core::harness::{run_freq_experiment, ExperimentSpec, KernelSettings, Sweep};
use lse_core::linalg::{fro2, CMat, RMat};
use lse_core::linmodel::{build_a, random_amplitudes, synthesize, ModelConfig};
use lse_core::nalgebra::DVector;
use lse_core::special::{normal_cdf, q_func};
use lse_core::stats::mean_and_stderr;

/// Deliberate faults for negative-control testing of the suite itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Perturbs the `2aφ(a)` coefficient inside `α_C`.
    AlphaC,
}

impl Fault {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "alpha-c" => Some(Fault::AlphaC),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckResult = Result<String, String>;

fn within(label: &str, err: f64, tol: f64) -> CheckResult {
    let msg = format!("{label} {err:.2e} (tol {tol:.0e})");
    if err <= tol {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn paper_omega() -> Vec<f64> {
    [-0.35, -0.15, 0.0, 0.15, 0.35]
        .iter()
        .map(|v| v * PI)
        .collect()
}

fn config(m: usize, omega: Vec<f64>, t: usize, sigma2: f64, seed: u64) -> ModelConfig {
    let x = random_amplitudes(omega.len(), t, seed);
    ModelConfig::new(m, omega, x, sigma2, -PI, PI).expect("fixed check instance is valid")
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    quadrature::integrate(f, a, b, tol).integral
}

/// Uniform order-statistic density of `θ_i` on `[0, ζ]`.
fn order_density(i: usize, k: usize, zeta: f64, u: f64) -> f64 {
    let ln_binom = (1..=k).map(|n| (n as f64).ln()).sum::<f64>()
        - (1..i).map(|n| (n as f64).ln()).sum::<f64>()
        - (1..=k - i).map(|n| (n as f64).ln()).sum::<f64>();
    let s = u / zeta;
    ln_binom.exp() * s.powi(i as i32 - 1) * (1.0 - s).powi((k - i) as i32) / zeta
}

fn special_functions() -> CheckResult {
    let refs = [
        (q_func(1.0), 0.158_655_253_931_457_05),
        (q_func(3.0), 1.349_898_031_630_094_6e-3),
        (q_func(6.0), 9.865_876_450_376_98e-10),
        (normal_cdf(-2.0), 2.275_013_194_817_921e-2),
    ];
    let worst = refs
        .iter()
        .map(|(v, r)| ((v - r) / r).abs())
        .fold(0.0, f64::max);
    within("max relative error", worst, 1e-12)
}

fn projector_properties() -> CheckResult {
    let a = build_a(&[-0.8, 0.1, 1.2], 12);
    let p = projector(&a).map_err(fail)?;
    let idem = (&p * &p - &p).norm();
    let herm = (&p - p.adjoint()).norm();
    let keeps = (&p * &a - &a).norm() / a.norm();
    within(
        "max of |P²-P|, |P-Pᴴ|, |PA-A|",
        idem.max(herm).max(keeps),
        1e-12,
    )
}

fn quadrature_alpha(alpha: &dyn Fn(f64) -> f64) -> CheckResult {
    let mut worst = 0.0f64;
    for a in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let qa = q_func(a);
        let oracle = 4.0 * integrate(|u| u * (q_func(u) - qa), 0.0, a, 1e-14);
        worst = worst.max((alpha(a) - oracle).abs());
    }
    within("max |α_C - 4∫u(Q(u)-Q(a))du|", worst, 1e-8)
}

fn quadrature_nonlocal() -> CheckResult {
    let zeta = 2.0;
    let plateau = 0.37;
    let mut worst = 0.0f64;
    for k in 1..=6 {
        for i in 1..=k {
            let f = |u: f64| order_density(i, k, zeta, u);
            let outer = |h: f64| {
                if zeta - h <= 0.0 {
                    return 0.0;
                }
                h * integrate(|u| f(u) + f(u + h), 0.0, zeta - h, 1e-13)
            };
            let oracle = 0.5 * plateau * integrate(outer, 0.0, zeta, 1e-12);
            let closed = plateau * zeta * zeta / 4.0 * nonlocal_bracket(i, k);
            worst = worst.max(((closed - oracle) / oracle).abs());
        }
    }
    within("max relative gap over K≤6", worst, 1e-6)
}

fn apb_identity() -> CheckResult {
    for k in 1..=20usize {
        let s: usize = (1..=k).map(|i| i * (k + 1 - i)).sum();
        if s * 6 != k * (k + 1) * (k + 2) {
            return Err(format!("Σi(K+1-i) identity fails at K={k}"));
        }
        let brackets: f64 = (1..=k).map(|i| nonlocal_bracket(i, k)).sum::<f64>() / k as f64;
        if (brackets - 2.0 / 3.0).abs() > 1e-13 {
            return Err(format!("bracket mean {brackets} at K={k}"));
        }
    }
    Ok("exact for K ≤ 20".into())
}

fn schur_identity() -> CheckResult {
    let c = config(8, vec![-0.6, 0.9], 2, 0.3, 5);
    let joint = joint_crb(&c).map_err(fail)?;
    let marginal = marginal_crb(&c).map_err(fail)?;
    let rel = (&joint.c_omega - &marginal.c_omega).norm() / marginal.c_omega.norm();
    within("relative gap of ω-blocks", rel, 1e-8)
}

fn transfer_crb() -> CheckResult {
    let c = config(8, vec![-0.6, 0.9], 2, 0.3, 5);
    let joint = joint_crb(&c).map_err(fail)?;
    let marginal = marginal_crb(&c).map_err(fail)?;
    within(
        "relative gap of amplitude CRB",
        ((marginal.crb_x - joint.crb_x) / joint.crb_x).abs(),
        1e-6,
    )
}

fn hessian_finite_difference() -> CheckResult {
    let c = config(10, vec![-0.4, 0.2, 0.9], 3, 0.1, 8);
    let h = transfer_hessian(&c).map_err(fail)?;
    let d = |delta: &[f64]| {
        let nu: Vec<f64> = c.omega.iter().zip(delta).map(|(w, d)| w + d).collect();
        mismatch_kernel(&c.omega, &nu, &c.x, c.m)
    };
    let step = 1e-4;
    let mut worst = 0.0f64;
    for i in 0..c.k {
        for j in 0..c.k {
            let mut v = [0.0; 3];
            let mut at = |si: f64, sj: f64| {
                v = [0.0; 3];
                v[i] += si * step;
                v[j] += sj * step;
                d(&v)
            };
            let fd = (at(1.0, 1.0).map_err(fail)?
                - at(1.0, -1.0).map_err(fail)?
                - at(-1.0, 1.0).map_err(fail)?
                + at(-1.0, -1.0).map_err(fail)?)
                / (8.0 * step * step);
            worst = worst.max(((fd - h[(i, j)]) / h[(i, j)]).abs());
        }
    }
    within("max entrywise relative error", worst, 1e-3)
}

fn hessian_routes() -> CheckResult {
    let c = config(50, paper_omega(), 20, 0.01, 1);
    let a = transfer_hessian(&c).map_err(fail)?;
    let b = transfer_hessian_trace_form(&c).map_err(fail)?;
    within("relative gap", (&a - &b).norm() / a.norm(), 1e-10)
}

fn hessian_diagonal() -> CheckResult {
    let c = config(50, paper_omega(), 20, 0.01, 1);
    let h = transfer_hessian(&c).map_err(fail)?;
    let worst = diagonal_hessian(&c)
        .iter()
        .enumerate()
        .map(|(i, d)| ((h[(i, i)] - d) / h[(i, i)]).abs())
        .fold(0.0, f64::max);
    within("max relative gap on the diagonal", worst, 0.05)
}

fn benchmark_limits() -> CheckResult {
    let c = RMat::from_diagonal(&DVector::from_vec(vec![1e-4, 3e-4, 2e-4]));
    let zeta = 2.0 * PI;
    let apb = ordered_apb(3, zeta);
    let lo = report_from_parts(3, zeta, 1e-8, &c);
    let hi = report_from_parts(3, zeta, 40.0, &c);
    let e1 = (lo.b_corr / apb - 1.0).abs();
    let e2 = (lo.b_basic / (zeta * zeta / 12.0) - 1.0).abs();
    let e3 = (hi.b_corr / hi.crb_omega - 1.0).abs();
    within(
        "max relative gap to APB, ζ²/12 and CRB",
        e1.max(e2).max(e3),
        1e-6,
    )
}

fn single_tone_fim() -> CheckResult {
    let m = 16;
    let c = config(m, vec![0.7], 5, 0.2, 4);
    let j = effective_fim(&c).map_err(fail)?;
    let mf = m as f64;
    let expected = 2.0 / 0.2 * fro2(&c.x) * mf * (mf * mf - 1.0) / 12.0;
    within(
        "relative gap",
        ((j[(0, 0)] - expected) / expected).abs(),
        1e-12,
    )
}

fn glrt_moments() -> CheckResult {
    let c = config(20, vec![-0.5, 0.4], 10, 0.5, 6);
    let pair = HypothesisPair::new(c.omega.clone(), vec![0.0, 0.15]).map_err(fail)?;
    let noise_free = c.with_sigma2(0.0);
    let g0 = glrt_statistic(&synthesize(&noise_free, 0), &pair).map_err(fail)?;
    let mu0 = kernel_moments(&noise_free, &pair).map_err(fail)?.mu;
    if (g0 - mu0).abs() > 1e-9 * mu0.abs() {
        return Err(format!("noise-free Γ {g0} differs from μ {mu0}"));
    }
    let mom = kernel_moments(&c, &pair).map_err(fail)?;
    let draws = sample_statistics(&c, &pair, 4000, 17).map_err(fail)?;
    let (mean, se) = mean_and_stderr(&draws);
    let z = (mean - mom.mu) / se;
    let var = se * se * draws.len() as f64;
    let var_gap = (var / mom.sigma2 - 1.0).abs();
    if z.abs() > 4.0 {
        return Err(format!("sample mean is {z:.2} standard errors from μ"));
    }
    within("relative variance gap", var_gap, 0.1)
}

fn music_noise_free() -> CheckResult {
    let c = ModelConfig::new(
        20,
        vec![-0.3 * PI, 0.0, 0.3 * PI],
        random_amplitudes(3, 10, 3),
        0.0,
        -0.5 * PI,
        0.5 * PI,
    )
    .map_err(fail)?;
    let est = music_estimate(
        &synthesize(&c, 0),
        3,
        DEFAULT_GRID_SIZE,
        c.prior_lo,
        c.prior_hi,
    )
    .map_err(fail)?;
    let worst = est
        .omega_hat
        .iter()
        .zip(&c.omega)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let tol = c.zeta() / (DEFAULT_GRID_SIZE * DEFAULT_GRID_SIZE) as f64;
    within("max |ω̂-ω|", worst, tol)
}

fn ls_residual() -> CheckResult {
    let c = config(16, vec![-1.0, 0.3, 1.4], 4, 0.3, 12);
    let y = synthesize(&c, 21);
    let x_hat = ls_amplitudes(&y, &c.omega).map_err(fail)?.x_hat;
    let resid = fro2(&(&y.y - c.steering_matrix() * &x_hat));
    let p = projector(&c.steering_matrix()).map_err(fail)?;
    let proj: CMat = y.y.adjoint() * p * &y.y;
    let expected = fro2(&y.y) - proj.trace().re;
    within("relative gap", ((resid - expected) / expected).abs(), 1e-8)
}

fn determinism() -> CheckResult {
    let spec = ExperimentSpec {
        m: 10,
        t: 4,
        omega_pi: vec![-0.3, 0.2],
        prior_lo_pi: -0.5,
        prior_hi_pi: 0.5,
        instance_seed: 2,
        snr_grid_db: vec![-5.0, 15.0],
        trials: 24,
        master_seed: 9,
        sweep: Sweep::None,
        grid_size: 512,
        kernel: KernelSettings::default(),
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(fail)?
            .install(|| run_freq_experiment(&spec))
            .map_err(fail)
    };
    let bits = |r: &lse_core::harness::SweepResult| -> Vec<u64> {
        r.rows
            .iter()
            .flat_map(|row| [row.mse_freq_emp.to_bits(), row.mse_amp_emp.to_bits()])
            .collect()
    };
    if bits(&run(1)?) == bits(&run(3)?) {
        Ok("identical with 1 and 3 workers".into())
    } else {
        Err("results depend on the worker count".into())
    }
}

/// Runs every check; `fault` injects a known defect for negative testing.
type NamedCheck<'a> = (&'static str, Box<dyn Fn() -> CheckResult + 'a>);

pub fn run_selfcheck(fault: Option<Fault>) -> Vec<CheckOutcome> {
    let alpha: Box<dyn Fn(f64) -> f64> = match fault {
        None => Box::new(alpha_c),
        Some(Fault::AlphaC) => Box::new(|a: f64| {
            1.0 - 2.0 * q_func(a) - 2.000_01 * a * lse_core::special::normal_pdf(a)
        }),
    };
    let checks: Vec<NamedCheck<'_>> = vec![
        ("special-functions", Box::new(special_functions)),
        ("projector", Box::new(projector_properties)),
        ("quadrature-alpha", Box::new(|| quadrature_alpha(&*alpha))),
        ("quadrature-nonlocal", Box::new(quadrature_nonlocal)),
        ("apb-identity", Box::new(apb_identity)),
        ("schur-identity", Box::new(schur_identity)),
        ("transfer-crb", Box::new(transfer_crb)),
        (
            "hessian-finite-difference",
            Box::new(hessian_finite_difference),
        ),
        ("hessian-routes", Box::new(hessian_routes)),
        ("hessian-diagonal", Box::new(hessian_diagonal)),
        ("benchmark-limits", Box::new(benchmark_limits)),
        ("single-tone-fim", Box::new(single_tone_fim)),
        ("glrt-moments", Box::new(glrt_moments)),
        ("music-noise-free", Box::new(music_noise_free)),
        ("ls-residual", Box::new(ls_residual)),
        ("determinism", Box::new(determinism)),
    ];
    checks
        .into_iter()
        .map(|(name, f)| {
            let (passed, detail) = match f() {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome {
                name,
                passed,
                detail,
            }
        })
        .collect()
}
