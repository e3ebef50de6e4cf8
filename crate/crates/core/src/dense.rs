//! Dense conversions and small eigenvalue computations.
//! Only meant for coarse grids and desk-scale diagnostics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::sparse::CsrMatrix;

pub fn to_dense(a: &CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.n_rows(), a.n_cols());
    for i in 0..a.n_rows() {
        let (c, v) = a.row(i);
        for (&j, &x) in c.iter().zip(v) {
            d[(i, j)] = x;
        }
    }
    d
}

/// Dense matrix of an operator, one column per unit vector.
pub fn operator_to_dense(op: &dyn LinearOperator) -> DMatrix<f64> {
    let n = op.dim();
    let mut d = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut y = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut y);
        e[j] = 0.0;
        d.set_column(j, &DVector::from_column_slice(&y));
    }
    d
}

/// Ascending eigenvalues of the symmetric part of `a`.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let s = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Moore-Penrose inverse of a symmetric matrix; eigenvalues below
/// `rel_tol · max |λ|` are treated as zero.
pub fn symmetric_pseudo_inverse(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let s = (a + a.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = rel_tol * lmax;
    let inv = eig.eigenvalues.map(|l| if l.abs() > cut { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// Eigenvalues of a general real matrix as `(re, im)` pairs.
pub fn general_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let m = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let ev = m.eigenvalues().map_err(|e| Error::Numerical(format!("eigenvalue iteration failed: {e:?}")))?;
    Ok(ev.iter().map(|z| (z.re, z.im)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudo_inverse_of_singular_laplacian() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let p = symmetric_pseudo_inverse(&a, 1e-12);
        // A P A = A
        assert!((&a * &p * &a - &a).amax() < 1e-12);
        // P annihilates the kernel
        assert!((&p * DVector::from_element(3, 1.0)).amax() < 1e-12);
    }

    #[test]
    fn dense_round_trip() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)]);
        assert_eq!(to_dense(&a), operator_to_dense(&a));
        assert_eq!(symmetric_eigenvalues(&to_dense(&CsrMatrix::from_diagonal(&[3.0, 1.0]))), vec![1.0, 3.0]);
    }
}
