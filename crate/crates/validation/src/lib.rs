//! Independent reference computations for checking `lse-core`.
//!
//! Everything here is rebuilt from the model definition with different
//! numerical routes than the library uses: projectors from a QR
//! factorization instead of a Gram inverse, Fisher matrices from explicit
//! mean derivatives, transfer matrices from a linear solve and integrals by
//! adaptive quadrature. Only the special functions are shared.

use lse_core::nalgebra::DMatrix;
use lse_core::special::{normal_cdf, q_func};
use lse_core::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

/// `M × K` matrix with entries `exp(j·m·ω_k)`.
pub fn steering(omega: &[f64], m: usize) -> CMat {
    CMat::from_fn(m, omega.len(), |r, c| {
        Complex64::from_polar(1.0, r as f64 * omega[c])
    })
}

/// Column-wise derivative of [`steering`] with respect to `ω_k`.
pub fn steering_derivative(omega: &[f64], m: usize) -> CMat {
    CMat::from_fn(m, omega.len(), |r, c| {
        Complex64::new(0.0, r as f64) * Complex64::from_polar(1.0, r as f64 * omega[c])
    })
}

pub fn fro2(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Orthogonal projector onto the column space of `a`, via QR.
pub fn qr_projector(a: &CMat) -> CMat {
    let q = a.clone().qr().q();
    &q * q.adjoint()
}

/// `σ²` that puts the per-entry SNR of `A(ω)X` at `snr_db`.
pub fn sigma2_at(omega: &[f64], x: &CMat, m: usize, snr_db: f64) -> f64 {
    let s = fro2(&(steering(omega, m) * x)) / (m * x.ncols()) as f64;
    s / 10f64.powf(snr_db / 10.0)
}

/// Nonlocal score `M‖X‖²/√(2Mσ²‖X‖² + 2KTσ⁴)`.
pub fn gamma_bar(m: usize, k: usize, t: usize, x_fro2: f64, sigma2: f64) -> f64 {
    let m = m as f64;
    m * x_fro2 / (2.0 * m * sigma2 * x_fro2 + 2.0 * (k * t) as f64 * sigma2 * sigma2).sqrt()
}

/// Noise level at which [`gamma_bar`] equals `g`.
pub fn sigma2_for_gamma(m: usize, k: usize, t: usize, x_fro2: f64, g: f64) -> f64 {
    let (m, kt) = (m as f64, (k * t) as f64);
    let a = 2.0 * kt;
    let b = 2.0 * m * x_fro2;
    let c = -(m * x_fro2 / g).powi(2);
    (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
}

/// Mean and variance of `Γ = Tr(YᴴDY)` under `H₀`, where
/// `D = P(φ) − P(φ+δ)` and `Y = A(φ)X + N`.
pub fn glrt_moments(phi: &[f64], x: &CMat, m: usize, sigma2: f64, delta: &[f64]) -> (f64, f64) {
    let alt: Vec<f64> = phi.iter().zip(delta).map(|(a, b)| a + b).collect();
    let d = qr_projector(&steering(phi, m)) - qr_projector(&steering(&alt, m));
    let m0 = steering(phi, m) * x;
    let dm0 = &d * &m0;
    let mean = (m0.adjoint() * &dm0).trace().re;
    let var = 2.0 * sigma2 * fro2(&dm0) + x.ncols() as f64 * sigma2 * sigma2 * fro2(&d);
    (mean, var)
}

/// Gaussianized pairwise error probability `Q(μ/σ)`.
pub fn gaussian_pe(phi: &[f64], x: &CMat, m: usize, sigma2: f64, delta: &[f64]) -> f64 {
    let (mean, var) = glrt_moments(phi, x, m, sigma2, delta);
    q_func(mean / var.sqrt())
}

/// One-sample Kolmogorov-Smirnov distance to the standard normal.
pub fn ks_to_normal(mut z: Vec<f64>) -> f64 {
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = normal_cdf(v);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Fisher matrix of `[ω; vec Re X; vec Im X]` as `(2/σ²)·Re(DᴴD)`, with
/// `D` the Jacobian of `vec(A(ω)X)`.
pub fn joint_fim(omega: &[f64], x: &CMat, m: usize, sigma2: f64) -> RMat {
    let (k, t) = (omega.len(), x.ncols());
    let a = steering(omega, m);
    let da = steering_derivative(omega, m);
    let mut d = CMat::zeros(m * t, k + 2 * k * t);
    for kk in 0..k {
        for tt in 0..t {
            for r in 0..m {
                let row = tt * m + r;
                d[(row, kk)] = da[(r, kk)] * x[(kk, tt)];
                let re = k + tt * k + kk;
                d[(row, re)] = a[(r, kk)];
                d[(row, re + k * t)] = Complex64::i() * a[(r, kk)];
            }
        }
    }
    (d.adjoint() * &d).map(|z| 2.0 * z.re / sigma2)
}

/// `‖(I − T)X‖²/(KT)` with `T = A(ν)⁺A(ω)`, `ν = ω + δ`, from a linear solve.
pub fn mismatch(omega: &[f64], delta: &[f64], x: &CMat, m: usize) -> f64 {
    let nu: Vec<f64> = omega.iter().zip(delta).map(|(a, b)| a + b).collect();
    let a_nu = steering(&nu, m);
    let rhs = a_nu.adjoint() * steering(omega, m);
    let t = (a_nu.adjoint() * &a_nu)
        .lu()
        .solve(&rhs)
        .expect("Gram matrix is invertible");
    let k = x.nrows();
    fro2(&((CMat::identity(k, k) - t) * x)) / (k * x.ncols()) as f64
}

/// Central second difference of [`mismatch`]; estimates `H_ij` of
/// `mismatch ≈ δᵀHδ`.
pub fn mismatch_hessian_fd(omega: &[f64], x: &CMat, m: usize, step: f64) -> RMat {
    let k = omega.len();
    RMat::from_fn(k, k, |i, j| {
        let at = |si: f64, sj: f64| {
            let mut d = vec![0.0; k];
            d[i] += si * step;
            d[j] += sj * step;
            mismatch(omega, &d, x, m)
        };
        (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (8.0 * step * step)
    })
}

/// `max |a − b| / max |b|`.
pub fn max_rel(a: &RMat, b: &RMat) -> f64 {
    (a - b).abs().max() / b.abs().max()
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    quadrature::integrate(f, a, b, tol).integral
}

/// `4∫₀ᵃ u(Q(u) − Q(a)) du`.
pub fn alpha_quadrature(a: f64) -> f64 {
    let qa = q_func(a);
    4.0 * integrate(|u| u * (q_func(u) - qa), 0.0, a, 1e-14)
}

/// Density of the `i`-th smallest of `K` i.i.d. uniforms on `[0, ζ]`.
pub fn order_statistic_density(i: usize, k: usize, zeta: f64, u: f64) -> f64 {
    let coef = (1..=k).product::<usize>() as f64
        / ((1..i).product::<usize>() * (1..=k - i).product::<usize>()) as f64;
    let s = u / zeta;
    coef * s.powi(i as i32 - 1) * (1.0 - s).powi((k - i) as i32) / zeta
}

/// Nonlocal term of coordinate `i` from its defining double integral
/// `(P/2)∫₀^ζ h ∫₀^{ζ−h} [f_i(u) + f_i(u+h)] du dh` with a constant
/// plateau `P`.
pub fn nonlocal_quadrature(i: usize, k: usize, zeta: f64, plateau: f64) -> f64 {
    let f = |u: f64| order_statistic_density(i, k, zeta, u);
    let outer = |h: f64| {
        if h >= zeta {
            0.0
        } else {
            h * integrate(|u| f(u) + f(u + h), 0.0, zeta - h, 1e-13)
        }
    };
    0.5 * plateau * integrate(outer, 0.0, zeta, 1e-12)
}
