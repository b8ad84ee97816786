//! Dense complex/real matrix helpers shared by the benchmark modules.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

/// Largest Gram condition number accepted before a solve is refused.
pub const GRAM_COND_LIMIT: f64 = 1e12;

/// Spectral condition number of a Hermitian positive semidefinite matrix.
pub fn hermitian_condition(g: &CMat) -> f64 {
    let eig = SymmetricEigen::new(g.clone());
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &l in eig.eigenvalues.iter() {
        lo = lo.min(l);
        hi = hi.max(l.abs());
    }
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `(AᴴA)⁻¹`, refusing near-singular Gram matrices.
pub fn gram_inverse(a: &CMat) -> Result<CMat> {
    let g = a.adjoint() * a;
    let cond = hermitian_condition(&g);
    if !(cond <= GRAM_COND_LIMIT) {
        return Err(Error::IllConditioned {
            cond,
            limit: GRAM_COND_LIMIT,
        });
    }
    let n = g.nrows();
    let chol = Cholesky::new(g).ok_or(Error::IllConditioned {
        cond: f64::INFINITY,
        limit: GRAM_COND_LIMIT,
    })?;
    Ok(chol.solve(&CMat::identity(n, n)))
}

/// Inverse of a real symmetric positive definite matrix, symmetrized.
pub fn spd_inverse(m: &RMat, what: &'static str) -> Result<RMat> {
    let n = m.nrows();
    let inv = match Cholesky::new(m.clone()) {
        Some(c) => c.solve(&RMat::identity(n, n)),
        None => m
            .clone()
            .lu()
            .solve(&RMat::identity(n, n))
            .ok_or(Error::Singular(what))?,
    };
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(what));
    }
    Ok(symmetrize(&inv))
}

pub fn symmetrize(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Real trace of a complex matrix.
pub fn re_trace(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Squared Frobenius norm.
pub fn fro2(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eigenvalue(m: &RMat) -> f64 {
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_inverse_rejects_duplicate_columns() {
        let col = CMat::from_fn(4, 1, |i, _| Complex64::new(1.0, i as f64));
        let mut a = CMat::zeros(4, 2);
        a.set_column(0, &col.column(0));
        a.set_column(1, &col.column(0));
        assert!(matches!(
            gram_inverse(&a),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn spd_inverse_identity() {
        let m = RMat::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let inv = spd_inverse(&m, "test").unwrap();
        let prod = &m * &inv;
        assert!((prod - RMat::identity(2, 2)).norm() < 1e-14);
    }
}
