//! GLRT pairwise detector between two frequency hypotheses and its
//! Gaussianized error probability.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fisher::projector;
use crate::linalg::{fro2, gram_inverse, re_trace, CMat};
use crate::linmodel::{build_a, noise_matrix, ModelConfig, Snapshot};
use crate::rng::derive_seed;
use crate::special::q_func;
use crate::stats::CompensatedSum;

/// `H₀: φ` against `H₁: φ + δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisPair {
    pub phi: Vec<f64>,
    pub delta: Vec<f64>,
}

impl HypothesisPair {
    pub fn new(phi: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if phi.len() != delta.len() {
            return Err(Error::InvalidConfig(format!(
                "phi has {} entries but delta has {}",
                phi.len(),
                delta.len()
            )));
        }
        Ok(Self { phi, delta })
    }

    /// Frequencies under the alternative.
    pub fn alternative(&self) -> Vec<f64> {
        self.phi
            .iter()
            .zip(&self.delta)
            .map(|(p, d)| p + d)
            .collect()
    }

    /// The same test with the roles of the hypotheses exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            phi: self.alternative(),
            delta: self.delta.iter().map(|d| -d).collect(),
        }
    }
}

/// First two moments of `Γ` under `H₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelMoments {
    pub mu: f64,
    pub sigma2: f64,
}

impl KernelMoments {
    /// `μ_Γ/σ_Γ`; `+∞` when the statistic is deterministic and positive.
    pub fn score(&self) -> f64 {
        if self.sigma2 > 0.0 {
            self.mu / self.sigma2.sqrt()
        } else if self.mu > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// Orthonormal basis `B` of `range(A)`, so `P = B Bᴴ`.
fn orthonormal_basis(a: &CMat) -> Result<CMat> {
    // Whitening by the inverse Cholesky factor of the Gram matrix.
    let ginv = gram_inverse(a)?;
    let chol = nalgebra::Cholesky::new(ginv).ok_or(Error::Singular("inverse Gram"))?;
    Ok(a * chol.l())
}

/// Precomputed detector for one hypothesis pair.
///
/// `Γ(Y) = ‖B₀ᴴY‖² − ‖B₁ᴴY‖² = Tr(Yᴴ(P_φ − P_{φ+δ})Y)`.
#[derive(Clone, Debug)]
pub struct GlrtDetector {
    null_basis: CMat,
    alt_basis: CMat,
}

impl GlrtDetector {
    pub fn new(pair: &HypothesisPair, m: usize) -> Result<Self> {
        let null_basis = orthonormal_basis(&build_a(&pair.phi, m))?.adjoint();
        let alt_basis = orthonormal_basis(&build_a(&pair.alternative(), m))?.adjoint();
        Ok(Self {
            null_basis,
            alt_basis,
        })
    }

    pub fn statistic(&self, y: &CMat) -> f64 {
        fro2(&(&self.null_basis * y)) - fro2(&(&self.alt_basis * y))
    }
}

/// `Γ = Tr(Yᴴ(P_φ − P_{φ+δ})Y)`.
pub fn glrt_statistic(y: &Snapshot, pair: &HypothesisPair) -> Result<f64> {
    Ok(GlrtDetector::new(pair, y.y.nrows())?.statistic(&y.y))
}

/// Mean and variance of `Γ` under `H₀`, with `M₀ = A(φ)X`:
/// `μ = Tr(M₀ᴴΔM₀)`, `σ² = 2σ_n²Tr(M₀ᴴΔ²M₀) + Tσ_n⁴Tr(Δ²)`.
pub fn kernel_moments(config: &ModelConfig, pair: &HypothesisPair) -> Result<KernelMoments> {
    if pair.phi.len() != config.k {
        return Err(Error::InvalidConfig(format!(
            "hypothesis has {} frequencies, model has K={}",
            pair.phi.len(),
            config.k
        )));
    }
    let m = config.m;
    let delta = projector(&build_a(&pair.phi, m))? - projector(&build_a(&pair.alternative(), m))?;
    let m0 = build_a(&pair.phi, m) * &config.x;
    let dm0 = &delta * &m0;
    let mu = re_trace(&(m0.adjoint() * &dm0)).max(0.0);
    let s2 = config.sigma2;
    let var = 2.0 * s2 * fro2(&dm0) + config.t as f64 * s2 * s2 * fro2(&delta);
    Ok(KernelMoments { mu, sigma2: var })
}

/// Gaussianized error probability `Q(μ_Γ/σ_Γ)`.
///
/// A deterministic statistic gives 0 when `μ_Γ > 0` and 1/2 for
/// indistinguishable hypotheses.
pub fn gaussian_kernel(moments: &KernelMoments) -> f64 {
    if moments.sigma2 > 0.0 {
        q_func(moments.mu / moments.sigma2.sqrt())
    } else if moments.mu > 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Monte Carlo error probability with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmpiricalKernel {
    pub pe: f64,
    pub std_err: f64,
    pub trials: usize,
}

/// Draws of `Γ` under `H₀`, in trial order.
///
/// Trial `n` uses noise seeded by `derive_seed(seed, [n])`; the result does
/// not depend on how rayon schedules the trials.
pub fn sample_statistics(
    config: &ModelConfig,
    pair: &HypothesisPair,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let det = GlrtDetector::new(pair, config.m)?;
    let m0 = build_a(&pair.phi, config.m) * &config.x;
    Ok((0..trials)
        .into_par_iter()
        .map(|n| {
            let mut y = m0.clone();
            if config.sigma2 > 0.0 {
                y += noise_matrix(
                    config.m,
                    config.t,
                    config.sigma2,
                    derive_seed(seed, &[n as u64]),
                );
            }
            det.statistic(&y)
        })
        .collect())
}

/// Fraction of draws under `H₀` with `Γ < 0`; exact ties count 1/2.
pub fn empirical_kernel(
    config: &ModelConfig,
    pair: &HypothesisPair,
    trials: usize,
    seed: u64,
) -> Result<EmpiricalKernel> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let gammas = sample_statistics(config, pair, trials, seed)?;
    let mut errors = CompensatedSum::new();
    for g in &gammas {
        errors.add(if *g < 0.0 {
            1.0
        } else if *g == 0.0 {
            0.5
        } else {
            0.0
        });
    }
    let n = trials as f64;
    let pe = errors.value() / n;
    let std_err = (pe * (1.0 - pe) / n).sqrt();
    Ok(EmpiricalKernel {
        pe,
        std_err,
        trials,
    })
}
