//! Local Fisher references for the deterministic-amplitude model.
//!
//! The amplitudes are a nuisance for frequency estimation; eliminating them
//! gives the projector form
//! `J_eff[i,j] = (2/σ²)·Re{(a'_iᴴ P⊥ a'_j)·(X Xᴴ)_{ji}}`
//! whose inverse is the marginalized frequency CRB. [`joint_crb`] builds the
//! full real-parameter FIM explicitly and is only used to cross-check the
//! projector form and the transfer form of the amplitude CRB.

use num_complex::Complex64;

use crate::ampbench;
use crate::error::{Error, Result};
use crate::linalg::{gram_inverse, spd_inverse, symmetrize, CMat, RMat};
use crate::linmodel::{build_a, build_a_derivative, ModelConfig};

#[derive(Clone, Debug)]
pub struct FisherSummary {
    /// Effective frequency FIM after eliminating the amplitudes.
    pub j_eff: RMat,
    /// Marginalized frequency CRB, `J_eff⁻¹`.
    pub c_omega: RMat,
    /// `Tr(C_ω)/K`.
    pub crb_omega_trace_avg: f64,
    /// Normalized amplitude CRB `Tr(C_x)/(KT)`, oracle baseline plus transfer term.
    pub crb_x: f64,
}

/// Orthogonal projector onto the column space of `a`.
pub fn projector(a: &CMat) -> Result<CMat> {
    let ginv = gram_inverse(a)?;
    let p = a * ginv * a.adjoint();
    Ok((&p + p.adjoint()).map(|z| z * 0.5))
}

fn complementary_projector(a: &CMat) -> Result<CMat> {
    let m = a.nrows();
    Ok(CMat::identity(m, m) - projector(a)?)
}

/// Effective (Schur-complement) frequency FIM.
pub fn effective_fim(config: &ModelConfig) -> Result<RMat> {
    if config.sigma2 <= 0.0 {
        return Err(Error::DegenerateNoise);
    }
    let a = config.steering_matrix();
    let d = build_a_derivative(&config.omega, config.m);
    let p_perp = complementary_projector(&a)?;
    let b = d.adjoint() * p_perp * &d;
    let xx = &config.x * config.x.adjoint();
    let scale = 2.0 / config.sigma2;
    let k = config.k;
    let j = RMat::from_fn(k, k, |i, jj| scale * (b[(i, jj)] * xx[(jj, i)]).re);
    Ok(symmetrize(&j))
}

/// Fisher information of the frequencies when the amplitudes are known
/// (`P⊥` replaced by the identity).
pub fn known_amplitude_fim(config: &ModelConfig) -> RMat {
    let d = build_a_derivative(&config.omega, config.m);
    let b = d.adjoint() * &d;
    let xx = &config.x * config.x.adjoint();
    let scale = 2.0 / config.sigma2;
    symmetrize(&RMat::from_fn(config.k, config.k, |i, j| {
        scale * (b[(i, j)] * xx[(j, i)]).re
    }))
}

/// Marginalized frequency CRB and the normalized amplitude CRB.
pub fn marginal_crb(config: &ModelConfig) -> Result<FisherSummary> {
    let j_eff = effective_fim(config)?;
    let c_omega = spd_inverse(&j_eff, "effective frequency FIM")?;
    let crb_omega_trace_avg = c_omega.trace() / config.k as f64;
    let h = ampbench::transfer_hessian(config)?;
    let crb_x = ampbench::oracle_baseline(config)? + (&h * &c_omega).trace();
    Ok(FisherSummary {
        j_eff,
        c_omega,
        crb_omega_trace_avg,
        crb_x,
    })
}

/// Full Fisher matrix for `η = [ω; vec(Re X); vec(Im X)]`.
///
/// Uses the Gaussian-mean form `(2/σ²)·Re{(∂μ/∂η_a)ᴴ(∂μ/∂η_b)}` with
/// `μ = vec(A(ω)X)`. Size is `K + 2KT`, so keep instances small.
pub fn joint_fim(config: &ModelConfig) -> Result<RMat> {
    if config.sigma2 <= 0.0 {
        return Err(Error::DegenerateNoise);
    }
    let (m, k, t) = (config.m, config.k, config.t);
    let a = build_a(&config.omega, m);
    let d = build_a_derivative(&config.omega, m);
    let n_par = k + 2 * k * t;
    let mut jac = CMat::zeros(m * t, n_par);
    for i in 0..k {
        for tt in 0..t {
            for r in 0..m {
                jac[(r + m * tt, i)] = d[(r, i)] * config.x[(i, tt)];
            }
        }
    }
    for tt in 0..t {
        for kk in 0..k {
            let col_re = k + kk + k * tt;
            let col_im = k + k * t + kk + k * tt;
            for r in 0..m {
                jac[(r + m * tt, col_re)] = a[(r, kk)];
                jac[(r + m * tt, col_im)] = a[(r, kk)] * Complex64::i();
            }
        }
    }
    let gram = jac.adjoint() * &jac;
    let scale = 2.0 / config.sigma2;
    Ok(symmetrize(&RMat::from_fn(n_par, n_par, |r, c| {
        scale * gram[(r, c)].re
    })))
}

/// Blocks of the inverse joint FIM.
#[derive(Clone, Debug)]
pub struct JointCrb {
    /// ω-block of `J_η⁻¹`.
    pub c_omega: RMat,
    /// `Tr([J_η⁻¹]_xx)/(KT)`.
    pub crb_x: f64,
}

/// Inverts the full joint FIM directly.
pub fn joint_crb(config: &ModelConfig) -> Result<JointCrb> {
    let j = joint_fim(config)?;
    let inv = spd_inverse(&j, "joint FIM")?;
    let k = config.k;
    let n = inv.nrows();
    let c_omega = inv.view((0, 0), (k, k)).into_owned();
    let x_trace: f64 = (k..n).map(|i| inv[(i, i)]).sum();
    Ok(JointCrb {
        c_omega,
        crb_x: x_trace / (k * config.t) as f64,
    })
}

/// Relative Frobenius gap between the ω-block of the inverse joint FIM and
/// the inverse of the projector-form effective FIM.
pub fn schur_identity_residual(config: &ModelConfig) -> Result<f64> {
    let joint = joint_crb(config)?;
    let marginal = spd_inverse(&effective_fim(config)?, "effective frequency FIM")?;
    Ok((&joint.c_omega - &marginal).norm() / marginal.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;
    use crate::linmodel::{random_amplitudes, steering, steering_derivative};

    fn cfg(m: usize, omega: Vec<f64>, t: usize, sigma2: f64, seed: u64) -> ModelConfig {
        let x = random_amplitudes(omega.len(), t, seed);
        ModelConfig::new(
            m,
            omega,
            x,
            sigma2,
            -std::f64::consts::PI,
            std::f64::consts::PI,
        )
        .unwrap()
    }

    #[test]
    fn single_tone_projector() {
        let a = build_a(&[0.7], 9);
        let p = projector(&a).unwrap();
        let v = steering(0.7, 9);
        let expected = &v * v.adjoint() / Complex64::new(9.0, 0.0);
        assert!((p.clone() - expected).norm() < 1e-12);
        assert!((p.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_is_idempotent_hermitian() {
        let omega: Vec<f64> = [-0.35, -0.15, 0.0, 0.15, 0.35]
            .iter()
            .map(|v| v * std::f64::consts::PI)
            .collect();
        let a = build_a(&omega, 50);
        let p = projector(&a).unwrap();
        assert!((&p * &p - &p).norm() < 1e-10);
        assert!((&p - p.adjoint()).norm() < 1e-12);
        assert!((p.trace().re - 5.0).abs() < 1e-10);
        assert!((&p * &a - &a).norm() < 1e-10);
    }

    #[test]
    fn effective_fim_matches_literal_trace_form() {
        let c = cfg(12, vec![-1.1, 0.2, 0.9], 4, 0.3, 3);
        let j = effective_fim(&c).unwrap();
        let a = c.steering_matrix();
        let p_perp = CMat::identity(12, 12) - projector(&a).unwrap();
        for i in 0..3 {
            for jj in 0..3 {
                let mut di = CMat::zeros(12, 3);
                di.set_column(i, &steering_derivative(c.omega[i], 12));
                let mut dj = CMat::zeros(12, 3);
                dj.set_column(jj, &steering_derivative(c.omega[jj], 12));
                let v = (c.x.adjoint() * di.adjoint() * &p_perp * dj * &c.x)
                    .trace()
                    .re
                    * 2.0
                    / c.sigma2;
                assert!((v - j[(i, jj)]).abs() < 1e-9 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn single_tone_fim() {
        // For one tone, ‖P⊥a'‖² = M(M²−1)/12.
        let m = 10;
        let x = CMat::from_element(1, 1, Complex64::new(1.0, 0.0));
        let c = ModelConfig::new(m, vec![0.3], x, 0.5, -3.0, 3.0).unwrap();
        let j = effective_fim(&c).unwrap();
        let mf = m as f64;
        let expected = 2.0 / 0.5 * mf * (mf * mf - 1.0) / 12.0;
        assert!((j[(0, 0)] - expected).abs() < 1e-9 * expected);
        let s = marginal_crb(&c).unwrap();
        assert!((s.c_omega[(0, 0)] - 1.0 / j[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn scaling_rules() {
        let c = cfg(8, vec![-0.9, 0.4], 3, 0.2, 4);
        let j = effective_fim(&c).unwrap();
        let mut scaled = c.clone();
        scaled.x = c.x.map(|z| z * Complex64::new(0.0, 3.0));
        assert!((effective_fim(&scaled).unwrap() - &j * 9.0).norm() < 1e-9 * j.norm());
        let noisier = c.with_sigma2(0.4);
        assert!((effective_fim(&noisier).unwrap() - &j * 0.5).norm() < 1e-12 * j.norm());
    }

    #[test]
    fn duplicated_snapshots_halve_crb() {
        let c = cfg(8, vec![-0.9, 0.4], 3, 0.2, 4);
        let mut x2 = CMat::zeros(2, 6);
        x2.view_mut((0, 0), (2, 3)).copy_from(&c.x);
        x2.view_mut((0, 3), (2, 3)).copy_from(&c.x);
        let c2 = ModelConfig::new(8, c.omega.clone(), x2, 0.2, c.prior_lo, c.prior_hi).unwrap();
        let a = marginal_crb(&c).unwrap().c_omega;
        let b = marginal_crb(&c2).unwrap().c_omega;
        assert!((&a * 0.5 - b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn schur_identity_small_instance() {
        let c = cfg(8, vec![-0.8, 0.5], 2, 0.1, 21);
        assert!(schur_identity_residual(&c).unwrap() < 1e-8);
    }

    #[test]
    fn elimination_loses_information() {
        let c = cfg(10, vec![-0.3, 0.1, 0.6], 3, 0.1, 8);
        let diff = known_amplitude_fim(&c) - effective_fim(&c).unwrap();
        assert!(min_eigenvalue(&diff) > -1e-9 * diff.norm());
    }

    #[test]
    fn zero_noise_is_rejected() {
        let c = cfg(8, vec![-0.9, 0.4], 3, 0.0, 4);
        assert_eq!(effective_fim(&c).unwrap_err(), Error::DegenerateNoise);
    }
}
