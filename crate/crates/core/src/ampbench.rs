//! Oracle amplitude baseline, transfer Hessian and the plug-in amplitude
//! benchmark.
//!
//! Reconstructing `X` by least squares at a mismatched frequency vector
//! `ν = ω + δ` leaves a deterministic error `(I − T(ω,ν))X` whose normalized
//! energy is `δᵀ H_X δ + o(‖δ‖²)`. Feeding per-coordinate frequency error
//! levels through the diagonal part of `H_X` gives the plug-in benchmark.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{fro2, gram_inverse, symmetrize, CMat, RMat};
use crate::linmodel::{build_a, build_a_derivative, ModelConfig};

#[derive(Clone, Debug)]
pub struct AmpBenchReport {
    /// Oracle least-squares MSE with the true frequencies.
    pub b_oracle: f64,
    /// Exact transfer Hessian.
    pub h_exact: RMat,
    /// Well-separated diagonal approximation `(M−1)²‖x_i‖²/(4KT)`.
    pub h_diag: Vec<f64>,
    /// Plug-in benchmark driven by the coordinate-wise frequency benchmarks.
    pub b_plug: f64,
    /// Amplitude CRB, `b_oracle + Tr(H_X C_ω)`.
    pub crb_x: f64,
    /// Amplitude CRB with the diagonal Hessian.
    pub crb_x_diag: f64,
}

/// `(σ²/K)·Tr[(AᴴA)⁻¹]`.
pub fn oracle_baseline(config: &ModelConfig) -> Result<f64> {
    let ginv = gram_inverse(&config.steering_matrix())?;
    Ok(config.sigma2 * ginv.trace().re / config.k as f64)
}

/// `T(φ,ν) = (Aᴴ(ν)A(ν))⁻¹Aᴴ(ν)A(φ)`.
pub fn transfer_matrix(phi: &[f64], nu: &[f64], m: usize) -> Result<CMat> {
    let a_nu = build_a(nu, m);
    let ginv = gram_inverse(&a_nu)?;
    Ok(ginv * a_nu.adjoint() * build_a(phi, m))
}

/// `‖(I − T(φ,ν))X‖²_F / (KT)`.
pub fn mismatch_kernel(phi: &[f64], nu: &[f64], x: &CMat, m: usize) -> Result<f64> {
    if phi.len() != x.nrows() || nu.len() != x.nrows() {
        return Err(Error::InvalidConfig(
            "frequency vectors and amplitude rows differ in length".into(),
        ));
    }
    let t = transfer_matrix(phi, nu, m)?;
    let k = x.nrows();
    let resid = (CMat::identity(k, k) - t) * x;
    Ok(fro2(&resid) / (k * x.ncols()) as f64)
}

fn kt(config: &ModelConfig) -> f64 {
    (config.k * config.t) as f64
}

/// Transfer Hessian through `p_i = G⁻¹Aᴴa'_i`:
/// `H_ij = Re{(x_iᴴx_j)(p_iᴴp_j)}/(KT)`.
pub fn transfer_hessian(config: &ModelConfig) -> Result<RMat> {
    let a = config.steering_matrix();
    let ginv = gram_inverse(&a)?;
    let p = ginv * a.adjoint() * build_a_derivative(&config.omega, config.m);
    let pp = p.adjoint() * &p;
    let xx = &config.x * config.x.adjoint();
    let s = 1.0 / kt(config);
    Ok(symmetrize(&RMat::from_fn(config.k, config.k, |i, j| {
        s * (xx[(j, i)] * pp[(i, j)]).re
    })))
}

/// Transfer Hessian assembled literally as
/// `Re Tr(Xᴴ A_iᴴ A G⁻² Aᴴ A_j X)/(KT)` with `A_i = a'_i e_iᵀ`.
pub fn transfer_hessian_trace_form(config: &ModelConfig) -> Result<RMat> {
    let (m, k) = (config.m, config.k);
    let a = config.steering_matrix();
    let ginv = gram_inverse(&a)?;
    let core = &a * &ginv * &ginv * a.adjoint();
    let d = build_a_derivative(&config.omega, m);
    let partial = |i: usize| {
        let mut ai = CMat::zeros(m, k);
        ai.set_column(i, &d.column(i));
        ai
    };
    let s = 1.0 / kt(config);
    let mut h = RMat::zeros(k, k);
    for i in 0..k {
        let left = config.x.adjoint() * partial(i).adjoint() * &core;
        for j in 0..k {
            h[(i, j)] = s * (&left * partial(j) * &config.x).trace().re;
        }
    }
    Ok(symmetrize(&h))
}

/// Diagonal approximation `(M−1)²‖x_i‖²/(4KT)`.
pub fn diagonal_hessian(config: &ModelConfig) -> Vec<f64> {
    let c = ((config.m - 1) as f64).powi(2) / (4.0 * kt(config));
    config
        .x
        .row_iter()
        .map(|row| c * row.iter().map(Complex64::norm_sqr).sum::<f64>())
        .collect()
}

/// Plug-in amplitude benchmark with the coordinate-wise basic frequency
/// benchmarks as the diagonal frequency-error proxy.
pub fn plugin_benchmark(
    config: &ModelConfig,
    c_omega: &RMat,
    b_basic_i: &[f64],
) -> Result<AmpBenchReport> {
    if b_basic_i.len() != config.k || c_omega.nrows() != config.k {
        return Err(Error::InvalidConfig(
            "plug-in benchmark inputs must have length K".into(),
        ));
    }
    let b_oracle = oracle_baseline(config)?;
    let h_exact = transfer_hessian(config)?;
    let h_diag = diagonal_hessian(config);
    let b_plug = b_oracle
        + h_diag
            .iter()
            .zip(b_basic_i)
            .map(|(h, b)| h * b)
            .sum::<f64>();
    let crb_x = b_oracle + (&h_exact * c_omega).trace();
    let crb_x_diag = b_oracle
        + h_diag
            .iter()
            .enumerate()
            .map(|(i, h)| h * c_omega[(i, i)])
            .sum::<f64>();
    Ok(AmpBenchReport {
        b_oracle,
        h_exact,
        h_diag,
        b_plug,
        crb_x,
        crb_x_diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;
    use crate::linmodel::random_amplitudes;
    use std::f64::consts::PI;

    fn paper_cfg() -> ModelConfig {
        let omega: Vec<f64> = [-0.35, -0.15, 0.0, 0.15, 0.35]
            .iter()
            .map(|v| v * PI)
            .collect();
        ModelConfig::new(50, omega, random_amplitudes(5, 20, 1), 0.01, -PI, PI).unwrap()
    }

    #[test]
    fn transfer_identity_and_weak_coupling() {
        let phi = [-1.0, 0.5];
        let t = transfer_matrix(&phi, &phi, 16).unwrap();
        assert!((t - CMat::identity(2, 2)).norm() < 1e-12);
        let x = random_amplitudes(2, 3, 2);
        assert!(mismatch_kernel(&phi, &phi, &x, 16).unwrap() < 1e-24);
        // ν on Dirichlet nulls of φ: cross-Gram vanishes.
        let step = 2.0 * PI / 16.0;
        let nu = [-1.0 + 3.0 * step, 0.5 + 3.0 * step];
        let t = transfer_matrix(&phi, &nu, 16).unwrap();
        assert!(t.norm() < 0.3);
    }

    #[test]
    fn single_tone_hessian_is_exact() {
        let m = 12;
        let x = random_amplitudes(1, 4, 7);
        let c = ModelConfig::new(m, vec![0.4], x.clone(), 0.1, -3.0, 3.0).unwrap();
        let h = transfer_hessian(&c).unwrap();
        let expected = ((m - 1) as f64).powi(2) * fro2(&x) / (4.0 * 4.0);
        assert!((h[(0, 0)] - expected).abs() < 1e-10 * expected);
        assert!((diagonal_hessian(&c)[0] - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn two_assembly_routes_agree() {
        let c = paper_cfg();
        let a = transfer_hessian(&c).unwrap();
        let b = transfer_hessian_trace_form(&c).unwrap();
        assert!((&a - &b).norm() < 1e-10 * a.norm());
        assert!(min_eigenvalue(&a) > -1e-10 * a.norm());
    }

    #[test]
    fn diagonal_approximation_close_when_well_separated() {
        let c = paper_cfg();
        let h = transfer_hessian(&c).unwrap();
        for (i, d) in diagonal_hessian(&c).iter().enumerate() {
            assert!((h[(i, i)] - d).abs() < 0.05 * d, "{} vs {}", h[(i, i)], d);
        }
    }

    #[test]
    fn oracle_is_linear_in_noise() {
        let c = paper_cfg();
        let b = oracle_baseline(&c).unwrap();
        assert!((oracle_baseline(&c.with_sigma2(0.02)).unwrap() - 2.0 * b).abs() < 1e-15);
        // near σ²/M for well-separated tones
        assert!((b / (0.01 / 50.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn scale_covariance() {
        let c = paper_cfg();
        let mut s = c.clone();
        s.x = c.x.map(|z| z * 2.0);
        let h = transfer_hessian(&c).unwrap();
        assert!((transfer_hessian(&s).unwrap() - &h * 4.0).norm() < 1e-10 * h.norm());
        let nu: Vec<f64> = c.omega.iter().map(|w| w + 1e-3).collect();
        let d = mismatch_kernel(&c.omega, &nu, &c.x, 50).unwrap();
        let ds = mismatch_kernel(&c.omega, &nu, &s.x, 50).unwrap();
        assert!((ds - 4.0 * d).abs() < 1e-10 * d);
    }
}
