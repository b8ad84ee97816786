//! The K-tone line spectral model `Y = A(ω)X + N`.
//!
//! Frequencies are radians, kept unwrapped; steering vectors use the
//! uniform-sampling geometry `a(ω)_m = exp(j·m·ω)`, `m = 0..M`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{fro2, CMat};
use crate::rng::GaussianStream;

/// A deterministic problem instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    /// Observation dimension.
    pub m: usize,
    /// Number of tones.
    pub k: usize,
    /// Number of snapshots.
    pub t: usize,
    /// True frequencies, strictly increasing.
    pub omega: Vec<f64>,
    /// `K × T` amplitude matrix.
    pub x: CMat,
    /// Noise variance per complex entry.
    pub sigma2: f64,
    pub prior_lo: f64,
    pub prior_hi: f64,
}

impl ModelConfig {
    pub fn new(
        m: usize,
        omega: Vec<f64>,
        x: CMat,
        sigma2: f64,
        prior_lo: f64,
        prior_hi: f64,
    ) -> Result<Self> {
        let cfg = Self {
            m,
            k: omega.len(),
            t: x.ncols(),
            omega,
            x,
            sigma2,
            prior_lo,
            prior_hi,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k == 0 || self.m == 0 || self.t == 0 {
            return bad(format!(
                "M, K and T must be positive (M={}, K={}, T={})",
                self.m, self.k, self.t
            ));
        }
        if self.k >= self.m {
            return bad(format!("K={} must be smaller than M={}", self.k, self.m));
        }
        if self.x.nrows() != self.k || self.x.ncols() != self.t {
            return bad(format!(
                "amplitude matrix is {}x{}, expected {}x{}",
                self.x.nrows(),
                self.x.ncols(),
                self.k,
                self.t
            ));
        }
        if !(self.prior_hi > self.prior_lo) {
            return bad(format!(
                "prior_hi={} must exceed prior_lo={}",
                self.prior_hi, self.prior_lo
            ));
        }
        if self.omega.iter().any(|w| !w.is_finite()) {
            return bad("omega contains non-finite entries".into());
        }
        if self.omega.windows(2).any(|w| w[1] <= w[0]) {
            return bad("omega must be strictly increasing".into());
        }
        if self.omega[0] < self.prior_lo || self.omega[self.k - 1] > self.prior_hi {
            return bad("omega must lie inside [prior_lo, prior_hi]".into());
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return bad(format!(
                "sigma2={} must be finite and nonnegative",
                self.sigma2
            ));
        }
        Ok(())
    }

    /// Prior support width `ζ`.
    pub fn zeta(&self) -> f64 {
        self.prior_hi - self.prior_lo
    }

    pub fn steering_matrix(&self) -> CMat {
        build_a(&self.omega, self.m)
    }

    /// Noise-free mean `A(ω)X`.
    pub fn signal(&self) -> CMat {
        self.steering_matrix() * &self.x
    }

    /// Per-entry signal-to-noise ratio `‖AX‖²/(M·T·σ²)`.
    pub fn snr(&self) -> f64 {
        fro2(&self.signal()) / (self.m as f64 * self.t as f64 * self.sigma2)
    }

    pub fn with_sigma2(&self, sigma2: f64) -> Self {
        Self {
            sigma2,
            ..self.clone()
        }
    }

    /// Same geometry with `σ²` chosen to hit the given SNR in dB.
    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        self.with_sigma2(sigma2_for_snr_db(&self.signal(), snr_db))
    }
}

/// One noisy `M × T` observation.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub y: CMat,
}

/// `a(ω)`; entry `m` is `exp(j·m·ω)`.
pub fn steering(omega: f64, m: usize) -> DVector<Complex64> {
    DVector::from_fn(m, |i, _| Complex64::cis(i as f64 * omega))
}

/// `∂a/∂ω`; entry `m` is `j·m·exp(j·m·ω)`.
pub fn steering_derivative(omega: f64, m: usize) -> DVector<Complex64> {
    DVector::from_fn(m, |i, _| {
        Complex64::new(0.0, i as f64) * Complex64::cis(i as f64 * omega)
    })
}

/// Vandermonde matrix with columns `a(ω_k)`.
pub fn build_a(omega: &[f64], m: usize) -> CMat {
    CMat::from_fn(m, omega.len(), |i, k| Complex64::cis(i as f64 * omega[k]))
}

/// Matrix whose column `k` is `a'(ω_k)`.
pub fn build_a_derivative(omega: &[f64], m: usize) -> CMat {
    CMat::from_fn(m, omega.len(), |i, k| {
        Complex64::new(0.0, i as f64) * Complex64::cis(i as f64 * omega[k])
    })
}

/// Noise variance giving `‖signal‖²/(M·T·σ²) = 10^(snr_db/10)`.
pub fn sigma2_for_snr_db(signal: &CMat, snr_db: f64) -> f64 {
    let per_entry = fro2(signal) / (signal.nrows() * signal.ncols()) as f64;
    per_entry / 10f64.powf(snr_db / 10.0)
}

/// I.i.d. `CN(0, σ²)` noise matrix from a seeded stream.
pub fn noise_matrix(rows: usize, cols: usize, sigma2: f64, seed: u64) -> CMat {
    let mut g = GaussianStream::new(seed);
    // column-major fill so the stream order matches snapshot order
    let mut n = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            n[(r, c)] = g.complex_normal(sigma2);
        }
    }
    n
}

/// Draws one realization of `Y = A(ω)X + N`.
pub fn synthesize(config: &ModelConfig, noise_seed: u64) -> Snapshot {
    let mut y = config.signal();
    if config.sigma2 > 0.0 {
        y += noise_matrix(config.m, config.t, config.sigma2, noise_seed);
    }
    Snapshot { y }
}

/// Standard circular Gaussian `K × T` amplitudes scaled to unit Frobenius norm.
pub fn random_amplitudes(k: usize, t: usize, seed: u64) -> CMat {
    let x = noise_matrix(k, t, 1.0, seed);
    let norm = fro2(&x).sqrt();
    x.map(|z| z / norm)
}

/// Sorted i.i.d. uniform frequencies on `[lo, hi]`.
pub fn random_ordered_frequencies(k: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut g = GaussianStream::new(seed);
    let mut w: Vec<f64> = (0..k).map(|_| lo + (hi - lo) * g.uniform()).collect();
    w.sort_by(f64::total_cmp);
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn steering_examples() {
        assert!(steering(0.0, 4)
            .iter()
            .all(|z| close(*z, Complex64::new(1.0, 0.0))));
        let s = steering(PI, 3);
        let expected = [1.0, -1.0, 1.0];
        for (z, e) in s.iter().zip(expected) {
            assert!(close(*z, Complex64::new(e, 0.0)));
        }
        let m = 16;
        let w = 0.37;
        let ip = steering(w - 2.0 * PI / m as f64, m).dotc(&steering(w, m));
        assert!(ip.norm() < 1e-12);
    }

    #[test]
    fn derivative_examples() {
        let d = steering_derivative(0.0, 3);
        let expected = [0.0, 1.0, 2.0];
        for (z, e) in d.iter().zip(expected) {
            assert!(close(*z, Complex64::new(0.0, e)));
        }
        let d = steering_derivative(PI, 2);
        assert!(close(d[1], Complex64::new(0.0, -1.0)));
        for &w in &[-2.0, 0.1, 1.7] {
            let m = 9;
            let ip = steering(w, m).dotc(&steering_derivative(w, m));
            assert!(close(ip, Complex64::new(0.0, (m * (m - 1) / 2) as f64)));
        }
    }

    #[test]
    fn gram_examples() {
        let a = build_a(&[0.4], 7);
        assert!(((a.adjoint() * &a)[(0, 0)] - Complex64::new(7.0, 0.0)).norm() < 1e-12);
        let m = 8;
        let a = build_a(&[0.2, 0.2 + 2.0 * PI / m as f64], m);
        let g = a.adjoint() * &a;
        assert!((g - CMat::identity(2, 2).map(|z| z * m as f64)).norm() < 1e-12);
        let a = build_a(&[0.2, 0.2 + 1e-9], m);
        let g = a.adjoint() * &a;
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        assert!(det.norm() < 1e-6);
    }

    #[test]
    fn noise_free_synthesis_is_exact() {
        let x = random_amplitudes(2, 3, 5);
        let cfg = ModelConfig::new(6, vec![-0.5, 0.9], x, 0.0, -3.0, 3.0).unwrap();
        assert_eq!(synthesize(&cfg, 1).y, cfg.signal());
    }

    #[test]
    fn seeds_control_noise() {
        let x = random_amplitudes(2, 3, 5);
        let cfg = ModelConfig::new(6, vec![-0.5, 0.9], x, 0.3, -3.0, 3.0).unwrap();
        assert_eq!(synthesize(&cfg, 42), synthesize(&cfg, 42));
        assert_ne!(synthesize(&cfg, 42), synthesize(&cfg, 43));
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let x = random_amplitudes(2, 1, 5);
        assert!(ModelConfig::new(6, vec![0.9, -0.5], x.clone(), 1.0, -3.0, 3.0).is_err());
        assert!(ModelConfig::new(2, vec![-0.5, 0.9], x.clone(), 1.0, -3.0, 3.0).is_err());
        assert!(ModelConfig::new(6, vec![-0.5, 0.9], x.clone(), 1.0, 3.0, -3.0).is_err());
        assert!(ModelConfig::new(6, vec![-0.5, 3.5], x.clone(), 1.0, -3.0, 3.0).is_err());
        assert!(ModelConfig::new(6, vec![-0.5, 0.9], x, -1.0, -3.0, 3.0).is_err());
    }

    #[test]
    fn snr_definition_roundtrip() {
        let x = random_amplitudes(3, 4, 9);
        let cfg = ModelConfig::new(10, vec![-1.0, 0.0, 1.0], x, 1.0, -3.0, 3.0).unwrap();
        let c = cfg.with_snr_db(7.0);
        assert!((10.0 * c.snr().log10() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn amplitudes_have_unit_norm() {
        let x = random_amplitudes(4, 7, 3);
        assert!((fro2(&x) - 1.0).abs() < 1e-14);
    }
}
