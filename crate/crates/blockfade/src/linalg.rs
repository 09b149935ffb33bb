//! Small dense Hermitian linear algebra on top of nalgebra.
//!
//! Spectral densities evaluate to Hermitian positive-semidefinite matrices,
//! so everything here assumes (and where cheap, checks) Hermitian structure.
//! Log-determinants go through Cholesky when the matrix is positive definite
//! and fall back to an eigenvalue sum with a floor when it is numerically
//! semidefinite, which is exactly the situation at infinite signal-to-noise
//! ratio for irregular processes.

use crate::error::{Error, Result};
use nalgebra::{Complex, DMatrix, DVector};

/// Complex double-precision scalar used throughout the crate.
pub type C64 = Complex<f64>;

/// `log det M` via Cholesky; `None` when the factorization fails (matrix not
/// numerically positive definite).
pub fn cholesky_logdet(m: &DMatrix<C64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let d = chol.l()[(i, i)].re;
        if d <= 0.0 {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc)
}

/// `log det M` for Hermitian `M`, clamping eigenvalues below `floor` to
/// `floor` so semidefinite matrices yield a large negative value instead of
/// `-inf`/NaN.  Tries Cholesky first (cheap, exact for definite input).
pub fn hermitian_logdet_clamped(m: &DMatrix<C64>, floor: f64) -> f64 {
    if let Some(v) = cholesky_logdet(m) {
        return v;
    }
    hermitian_eigenvalues(m)
        .into_iter()
        .map(|lambda| lambda.max(floor).ln())
        .sum()
}

/// Eigenvalues of a Hermitian matrix, ascending.  (Imaginary parts are
/// discarded by the Hermitian solver, so feed it genuinely Hermitian input.)
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut vals: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Principal minor of `m` on the given (0-based, strictly increasing not
/// required) row/column indices.
pub fn principal_minor(m: &DMatrix<C64>, indices: &[usize]) -> DMatrix<C64> {
    let k = indices.len();
    DMatrix::from_fn(k, k, |r, c| m[(indices[r], indices[c])])
}

/// Validates that `m` is Hermitian to within `tol` entrywise.
pub fn check_hermitian(m: &DMatrix<C64>, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::validation(format!(
            "spectral density must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            let upper = m[(r, c)];
            let lower = m[(c, r)].conj();
            if (upper - lower).norm() > tol {
                return Err(Error::validation(format!(
                    "spectral density must be Hermitian: entry ({r}, {c}) \
                     differs from the conjugate of ({c}, {r}) by {:.3e}",
                    (upper - lower).norm()
                )));
            }
        }
    }
    Ok(())
}

/// Solves `A x = b` for Hermitian positive-semidefinite `A` using the
/// eigendecomposition pseudoinverse: eigenvalues at or below
/// `rel_threshold * lambda_max` are treated as zero.
///
/// This is what conditioning a Gaussian vector on possibly degenerate pilots
/// needs — a singular pilot covariance (perfectly correlated pilots) is
/// legitimate there and the pseudoinverse gives the right conditional law.
pub fn pseudo_solve_hermitian(
    a: &DMatrix<C64>,
    b: &DVector<C64>,
    rel_threshold: f64,
) -> DVector<C64> {
    let eig = a.clone().symmetric_eigen();
    let lambda_max = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, &l| m.max(l.abs()));
    let cutoff = rel_threshold * lambda_max;
    // x = V diag(1/lambda_i or 0) V^H b
    let vhb = eig.eigenvectors.adjoint() * b;
    let scaled = DVector::from_iterator(
        vhb.len(),
        vhb.iter().zip(eig.eigenvalues.iter()).map(|(&y, &l)| {
            if l > cutoff {
                y / Complex::new(l, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        }),
    );
    eig.eigenvectors * scaled
}
