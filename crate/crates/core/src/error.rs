use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Gram matrix of a steering matrix is too close to singular; usually
    /// two frequencies (nearly) coincide.
    #[error("ill-conditioned Gram matrix: condition number {cond:.3e} exceeds {limit:.0e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    /// The nonlocal score is unbounded when the noise variance is zero.
    #[error("noise variance is zero")]
    DegenerateNoise,

    #[error("covariance eigendecomposition did not converge")]
    DegenerateCovariance,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
