//! Reference estimators: spectral MUSIC for the frequencies and
//! least-squares plug-in reconstruction of the amplitudes.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{gram_inverse, CMat};
use crate::linmodel::{build_a, Snapshot};

/// Smallest grid accepted by [`music_estimate`].
pub const MIN_GRID_SIZE: usize = 256;
pub const DEFAULT_GRID_SIZE: usize = 8192;

#[derive(Clone, Debug, PartialEq)]
pub struct FreqEstimate {
    /// Estimated frequencies, ascending.
    pub omega_hat: Vec<f64>,
    /// Number of estimates filled from the grid because fewer than K
    /// pseudospectrum peaks were found.
    pub shortfall: usize,
    /// `(ω, p(ω))` over the search grid, when requested.
    pub spectrum_grid: Option<Vec<(f64, f64)>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmpEstimate {
    pub x_hat: CMat,
}

/// `q(ω) = ‖E_nᴴ a(ω)‖²` stored as the trigonometric polynomial
/// `c₀ + 2·Re Σ_{d≥1} c_d e^{jdω}` with `c_d = Σ_m P_n[m, m+d]`.
///
/// Depends only on the noise-subspace projector, not on the chosen basis.
#[derive(Clone, Debug)]
pub struct NullSpectrum {
    coeffs: Vec<Complex64>,
}

impl NullSpectrum {
    pub fn from_noise_basis(e_n: &CMat) -> Self {
        let p = e_n * e_n.adjoint();
        let m = p.nrows();
        let coeffs = (0..m)
            .map(|d| (0..m - d).map(|r| p[(r, r + d)]).sum())
            .collect();
        Self { coeffs }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let z = Complex64::cis(omega);
        let mut s = Complex64::new(0.0, 0.0);
        for c in self.coeffs[1..].iter().rev() {
            s = s * z + c;
        }
        self.coeffs[0].re + 2.0 * (s * z).re
    }

    /// `(q, q', q'')` at `omega`.
    pub fn eval_with_derivatives(&self, omega: f64) -> (f64, f64, f64) {
        let mut q = self.coeffs[0].re;
        let (mut dq, mut d2q) = (0.0, 0.0);
        for (d, c) in self.coeffs.iter().enumerate().skip(1) {
            let v = c * Complex64::cis(d as f64 * omega);
            let df = d as f64;
            q += 2.0 * v.re;
            dq -= 2.0 * df * v.im;
            d2q -= 2.0 * df * df * v.re;
        }
        (q, dq, d2q)
    }

    /// MUSIC pseudospectrum `1/q(ω)`.
    pub fn pseudospectrum(&self, omega: f64) -> f64 {
        1.0 / self.eval(omega)
    }
}

/// Noise subspace of the sample covariance `YYᴴ/T`: eigenvectors of the
/// `M − K` smallest eigenvalues.
pub fn noise_subspace(y: &Snapshot, k: usize) -> Result<CMat> {
    let (m, t) = (y.y.nrows(), y.y.ncols());
    if k == 0 || k >= m {
        return Err(Error::InvalidConfig(format!(
            "need 0 < K < M, got K={k}, M={m}"
        )));
    }
    let r = (&y.y * y.y.adjoint()).map(|z| z / t as f64);
    let r = (&r + r.adjoint()).map(|z| z * 0.5);
    let eig =
        SymmetricEigen::try_new(r, f64::EPSILON, 10_000).ok_or(Error::DegenerateCovariance)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut e_n = CMat::zeros(m, m - k);
    for (c, &idx) in order.iter().take(m - k).enumerate() {
        e_n.set_column(c, &eig.eigenvectors.column(idx));
    }
    Ok(e_n)
}

/// Spectral MUSIC over a uniform grid on `[prior_lo, prior_hi]`.
pub fn music_estimate(
    y: &Snapshot,
    k: usize,
    grid_size: usize,
    prior_lo: f64,
    prior_hi: f64,
) -> Result<FreqEstimate> {
    music(y, k, grid_size, prior_lo, prior_hi, false)
}

/// [`music_estimate`] that also returns the pseudospectrum on the grid.
pub fn music_estimate_with_spectrum(
    y: &Snapshot,
    k: usize,
    grid_size: usize,
    prior_lo: f64,
    prior_hi: f64,
) -> Result<FreqEstimate> {
    music(y, k, grid_size, prior_lo, prior_hi, true)
}

fn music(
    y: &Snapshot,
    k: usize,
    grid_size: usize,
    lo: f64,
    hi: f64,
    keep_spectrum: bool,
) -> Result<FreqEstimate> {
    if grid_size < MIN_GRID_SIZE {
        return Err(Error::InvalidConfig(format!(
            "grid_size={grid_size} is below {MIN_GRID_SIZE}"
        )));
    }
    if !(hi > lo) {
        return Err(Error::InvalidConfig("prior_hi must exceed prior_lo".into()));
    }
    let spectrum = NullSpectrum::from_noise_basis(&noise_subspace(y, k)?);
    let step = (hi - lo) / (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size).map(|g| lo + g as f64 * step).collect();
    let q: Vec<f64> = grid.iter().map(|&w| spectrum.eval(w)).collect();

    // Local maxima of 1/q are local minima of q.
    let mut peaks: Vec<usize> = (1..grid_size - 1)
        .filter(|&g| q[g] < q[g - 1] && q[g] <= q[g + 1])
        .collect();
    peaks.sort_by(|&a, &b| q[a].total_cmp(&q[b]).then(a.cmp(&b)));
    peaks.truncate(k);

    let mut omega_hat: Vec<f64> = peaks
        .iter()
        .map(|&g| refine_minimum(&spectrum, &q, &grid, g, step))
        .collect();

    let shortfall = k - peaks.len();
    if shortfall > 0 {
        let mut rest: Vec<usize> = (0..grid_size).filter(|g| !peaks.contains(g)).collect();
        rest.sort_by(|&a, &b| q[a].total_cmp(&q[b]).then(a.cmp(&b)));
        omega_hat.extend(rest.iter().take(shortfall).map(|&g| grid[g]));
    }
    omega_hat.sort_by(f64::total_cmp);

    let spectrum_grid =
        keep_spectrum.then(|| grid.iter().zip(&q).map(|(&w, &v)| (w, 1.0 / v)).collect());
    Ok(FreqEstimate {
        omega_hat,
        shortfall,
        spectrum_grid,
    })
}

/// Parabolic vertex through the three grid values, then Newton steps on
/// `q'(ω) = 0`, kept inside the neighbouring grid cells.
fn refine_minimum(s: &NullSpectrum, q: &[f64], grid: &[f64], g: usize, step: f64) -> f64 {
    let (qm, q0, qp) = (q[g - 1], q[g], q[g + 1]);
    let curv = qm - 2.0 * q0 + qp;
    let offset = if curv > 0.0 {
        (0.5 * (qm - qp) / curv).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let seed = grid[g] + offset * step;
    let (lo, hi) = (grid[g] - step, grid[g] + step);
    let mut w = seed;
    for _ in 0..20 {
        let (_, d1, d2) = s.eval_with_derivatives(w);
        if !(d2 > 0.0) {
            return seed;
        }
        let next = w - d1 / d2;
        if !(lo..=hi).contains(&next) {
            return seed;
        }
        let done = (next - w).abs() <= 1e-15 * (1.0 + w.abs());
        w = next;
        if done {
            break;
        }
    }
    if s.eval(w) <= s.eval(seed) {
        w
    } else {
        seed
    }
}

/// Least-squares amplitudes `(AᴴA)⁻¹AᴴY` at the given frequencies.
pub fn ls_amplitudes(y: &Snapshot, omega_hat: &[f64]) -> Result<AmpEstimate> {
    let a = build_a(omega_hat, y.y.nrows());
    let ginv = gram_inverse(&a)?;
    Ok(AmpEstimate {
        x_hat: ginv * a.adjoint() * &y.y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::projector;
    use crate::linalg::{fro2, re_trace};
    use crate::linmodel::{random_amplitudes, synthesize, ModelConfig};
    use std::f64::consts::PI;

    fn cfg(sigma2: f64) -> ModelConfig {
        let omega = vec![-0.3 * PI, 0.0, 0.3 * PI];
        ModelConfig::new(
            20,
            omega,
            random_amplitudes(3, 10, 5),
            sigma2,
            -0.5 * PI,
            0.5 * PI,
        )
        .unwrap()
    }

    #[test]
    fn noise_free_music_recovers_truth() {
        let c = cfg(0.0);
        let y = synthesize(&c, 0);
        let est = music_estimate(&y, 3, 8192, c.prior_lo, c.prior_hi).unwrap();
        let tol = c.zeta() / (8192.0f64 * 8192.0);
        for (a, b) in est.omega_hat.iter().zip(&c.omega) {
            assert!((a - b).abs() < tol, "{a} vs {b}");
        }
        assert_eq!(est.shortfall, 0);
    }

    #[test]
    fn spectrum_invariant_to_basis_rotation() {
        let c = cfg(0.05);
        let y = synthesize(&c, 3);
        let e_n = noise_subspace(&y, 3).unwrap();
        // random unitary from the QR of a seeded Gaussian matrix
        let g = crate::linmodel::noise_matrix(17, 17, 1.0, 99);
        let u = g.qr().q();
        let a = NullSpectrum::from_noise_basis(&e_n);
        let b = NullSpectrum::from_noise_basis(&(&e_n * u));
        for w in [-1.3, -0.2, 0.0, 0.4, 1.1] {
            assert!((a.eval(w) - b.eval(w)).abs() < 1e-12);
        }
    }

    #[test]
    fn null_spectrum_matches_direct_evaluation() {
        let c = cfg(0.05);
        let e_n = noise_subspace(&synthesize(&c, 3), 3).unwrap();
        let s = NullSpectrum::from_noise_basis(&e_n);
        for w in [-1.0, 0.3, 2.2] {
            let a = crate::linmodel::steering(w, 20);
            let direct = (e_n.adjoint() * &a).norm_squared();
            assert!((s.eval(w) - direct).abs() < 1e-12 * direct.max(1.0));
            let (q, d1, d2) = s.eval_with_derivatives(w);
            assert!((q - direct).abs() < 1e-12 * direct.max(1.0));
            let h = 1e-5;
            let fd1 = (s.eval(w + h) - s.eval(w - h)) / (2.0 * h);
            let fd2 = (s.eval(w + h) - 2.0 * q + s.eval(w - h)) / (h * h);
            assert!((d1 - fd1).abs() < 1e-5 * d1.abs().max(1.0));
            assert!((d2 - fd2).abs() < 1e-3 * d2.abs().max(1.0));
        }
    }

    #[test]
    fn shortfall_fill_is_deterministic() {
        // pure noise with a large K: plenty of grid fill-ins may be needed
        let c = cfg(1.0);
        let mut y = synthesize(&c, 8);
        y.y = crate::linmodel::noise_matrix(20, 10, 1.0, 8);
        let a = music_estimate(&y, 3, 256, -PI, PI).unwrap();
        let b = music_estimate(&y, 3, 256, -PI, PI).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.omega_hat.len(), 3);
        assert!(a.omega_hat.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn small_grid_rejected() {
        let c = cfg(0.1);
        let y = synthesize(&c, 1);
        assert!(music_estimate(&y, 3, 100, -1.0, 1.0).is_err());
    }

    #[test]
    fn ls_exact_without_noise() {
        let c = cfg(0.0);
        let y = synthesize(&c, 0);
        let x = ls_amplitudes(&y, &c.omega).unwrap().x_hat;
        assert!((x - &c.x).norm() < 1e-12);
    }

    #[test]
    fn residual_projector_identity() {
        let c = cfg(0.2);
        let y = synthesize(&c, 6);
        let w = [-0.9, 0.05, 1.0];
        let x = ls_amplitudes(&y, &w).unwrap().x_hat;
        let a = build_a(&w, 20);
        let lhs = fro2(&(&y.y - &a * x));
        let rhs = fro2(&y.y) - re_trace(&(y.y.adjoint() * projector(&a).unwrap() * &y.y));
        assert!((lhs - rhs).abs() < 1e-8 * lhs);
    }

    #[test]
    fn ls_rejects_coincident_frequencies() {
        let c = cfg(0.2);
        let y = synthesize(&c, 6);
        assert!(matches!(
            ls_amplitudes(&y, &[0.1, 0.1, 0.5]),
            Err(Error::IllConditioned { .. })
        ));
    }
}
