//! Seed derivation and complex Gaussian sampling.
//!
//! Every Monte Carlo trial gets its own ChaCha stream keyed by a seed derived
//! from the master seed and the trial's coordinates, so results do not
//! depend on scheduling order.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of indices into a stream seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p.wrapping_add(GOLDEN)))
    })
}

/// Box–Muller Gaussian source on top of a ChaCha8 stream.
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform on (0, 1].
    fn open_unit(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// A pair of independent standard normals.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.open_unit();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }

    /// Circularly symmetric complex Gaussian with `E|z|^2 = variance`.
    pub fn complex_normal(&mut self, variance: f64) -> Complex64 {
        let (a, b) = self.normal_pair();
        let s = (0.5 * variance).sqrt();
        Complex64::new(s * a, s * b)
    }
}
