//! Gaussian tail, density and distribution functions.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Gaussian tail probability `Q(x) = 1 - Φ(x)`.
pub fn q_func(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}
