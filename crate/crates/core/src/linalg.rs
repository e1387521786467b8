//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMat = DMatrix<Complex64>;
pub type ComplexVec = DVector<Complex64>;

/// Relative eigenvalue floor applied when forming inverse square roots.
pub const EIGEN_FLOOR: f64 = 1e-12;

pub fn identity(n: usize) -> ComplexMat {
    ComplexMat::identity(n, n)
}

pub fn scaled_identity(n: usize, scale: f64) -> ComplexMat {
    ComplexMat::from_diagonal_element(n, n, Complex64::new(scale, 0.0))
}

/// Squared Frobenius norm.
pub fn frobenius_sq(m: &ComplexMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn is_hermitian(m: &ComplexMat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let n = m.nrows();
    (0..n).all(|i| (i..n).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol * scale))
}

fn diagonal_entries(m: &ComplexMat) -> Option<Vec<f64>> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] != Complex64::new(0.0, 0.0) {
                return None;
            }
        }
    }
    Some((0..n).map(|i| m[(i, i)].re).collect())
}

/// Applies `f` to the spectrum of a Hermitian positive-definite matrix.
///
/// Eigenvalues below `EIGEN_FLOOR * max_eigenvalue` are clamped to that floor.
fn hermitian_spectral_map(m: &ComplexMat, f: impl Fn(f64) -> f64) -> Result<ComplexMat> {
    if !is_hermitian(m, 1e-9) {
        return Err(Error::Numerical("matrix is not Hermitian".into()));
    }
    // Diagonal matrices (the common R_z = r I case) skip the eigensolver.
    if let Some(diag) = diagonal_entries(m) {
        let max = diag.iter().cloned().fold(f64::MIN, f64::max);
        if !(max > 0.0) || diag.iter().any(|&d| d <= -EIGEN_FLOOR * max) {
            return Err(Error::Numerical("matrix is not positive definite".into()));
        }
        let floor = EIGEN_FLOOR * max;
        let mapped: Vec<Complex64> = diag
            .iter()
            .map(|&d| Complex64::new(f(d.max(floor)), 0.0))
            .collect();
        return Ok(ComplexMat::from_diagonal(&ComplexVec::from_vec(mapped)));
    }
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    if !(max > 0.0) || eig.eigenvalues.iter().any(|&l| l <= -EIGEN_FLOOR * max) {
        return Err(Error::Numerical("matrix is not positive definite".into()));
    }
    let floor = EIGEN_FLOOR * max;
    let u = &eig.eigenvectors;
    let mapped = ComplexVec::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&l| Complex64::new(f(l.max(floor)), 0.0)),
    );
    Ok(u * ComplexMat::from_diagonal(&mapped) * u.adjoint())
}

/// `M^{-1/2}` for Hermitian positive-definite `M`.
pub fn hermitian_inv_sqrt(m: &ComplexMat) -> Result<ComplexMat> {
    hermitian_spectral_map(m, |l| 1.0 / l.sqrt())
}

/// `M^{-1}` for Hermitian positive-definite `M`.
pub fn hermitian_inverse(m: &ComplexMat) -> Result<ComplexMat> {
    hermitian_spectral_map(m, |l| 1.0 / l)
}

/// Real parts of the eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMat) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .cloned()
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hpd(n: usize) -> ComplexMat {
        let a = ComplexMat::from_fn(n, n, |i, j| {
            Complex64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64)
        });
        &a * a.adjoint() + scaled_identity(n, 0.5)
    }

    #[test]
    fn inverse_sqrt_squares_to_inverse() {
        let m = random_hpd(5);
        let w = hermitian_inv_sqrt(&m).unwrap();
        let prod = &w * &m * &w;
        assert!((prod - identity(5)).norm() < 1e-10);
    }

    #[test]
    fn diagonal_fast_path_matches() {
        let m = scaled_identity(4, 4.0);
        let w = hermitian_inv_sqrt(&m).unwrap();
        assert!((w - scaled_identity(4, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn rejects_indefinite() {
        let mut m = scaled_identity(3, 1.0);
        m[(1, 1)] = Complex64::new(-1.0, 0.0);
        assert!(hermitian_inv_sqrt(&m).is_err());
        let mut h = random_hpd(3);
        h[(0, 1)] += Complex64::new(0.0, 3.0);
        assert!(hermitian_inverse(&h).is_err());
    }
}
