//! Thin helpers over nalgebra's dense complex routines.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending and
/// eigenvectors as the matching columns.
pub fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Eigenvalues of a real symmetric matrix, descending.
pub fn symmetric_eigenvalues_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

/// `f(H)` for Hermitian `H` through its spectral decomposition.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigh(m);
    let d = DVector::from_iterator(vals.len(), vals.iter().map(|&v| C64::new(f(v), 0.0)));
    let scaled = CMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * d[j]);
    scaled * vecs.adjoint()
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let n = m.nrows();
    for i in 0..n {
        for j in i..n {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Σ_ij |m_ij|², i.e. Tr(m m†).
pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Builds `Σ_k w |v_k⟩⟨v_k|` with a single matrix product.
pub fn weighted_gram(vectors: &[&[C64]], weight: f64) -> CMatrix {
    let n = vectors.first().map_or(0, |v| v.len());
    let x = CMatrix::from_fn(n, vectors.len(), |i, k| vectors[k][i]);
    (&x * x.adjoint()) * C64::new(weight, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_reconstructs_input() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(1.0, 0.0)],
        );
        let (vals, vecs) = hermitian_eigh(&m);
        assert!(vals[0] <= vals[1]);
        let d = CMatrix::from_diagonal(&DVector::from_iterator(2, vals.iter().map(|&v| C64::new(v, 0.0))));
        let back = &vecs * d * vecs.adjoint();
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn matrix_sqrt_squares_back() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.7, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.3, 0.0)],
        );
        let s = hermitian_function(&m, |v| v.max(0.0).sqrt());
        assert!((&s * &s - m).norm() < 1e-12);
    }
}
