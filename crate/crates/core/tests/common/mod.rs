//! Dense reference solver for `min ½xᵀAx − bᵀx` over `lo ≤ x ≤ hi`,
//! independent of the multigrid code.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Set {
    Lower,
    Upper,
    Free,
}

/// Largest violation of the KKT conditions, with the gradient `Ax − b`
/// scaled by the diagonal of `A`.
pub fn kkt_violation(a: &DMatrix<f64>, b: &[f64], lo: &[f64], hi: &[f64], x: &[f64]) -> f64 {
    let g = a * DVector::from_column_slice(x) - DVector::from_column_slice(b);
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let gi = g[i] / a[(i, i)];
        worst = worst.max((lo[i] - x[i]).max(x[i] - hi[i]).max(0.0));
        let v = if x[i] <= lo[i] {
            (-gi).max(0.0)
        } else if x[i] >= hi[i] {
            gi.max(0.0)
        } else {
            gi.abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Primal-dual active set iteration with a dense solve per step. Returns
/// the solution once the sets repeat and the KKT conditions hold to
/// `tol`.
pub fn box_qp(a: &DMatrix<f64>, b: &[f64], lo: &[f64], hi: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    let mut x: Vec<f64> = (0..n).map(|i| 0.0f64.clamp(lo[i], hi[i])).collect();
    let mut sets = vec![Set::Free; n];
    for _ in 0..200 {
        let g = a * DVector::from_column_slice(&x) - DVector::from_column_slice(b);
        let next: Vec<Set> = (0..n)
            .map(|i| {
                let trial = x[i] - g[i] / a[(i, i)];
                if trial < lo[i] {
                    Set::Lower
                } else if trial > hi[i] {
                    Set::Upper
                } else {
                    Set::Free
                }
            })
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| next[i] == Set::Free).collect();
        let mut y: Vec<f64> = (0..n)
            .map(|i| match next[i] {
                Set::Lower => lo[i],
                Set::Upper => hi[i],
                Set::Free => 0.0,
            })
            .collect();
        if !free.is_empty() {
            let fixed = DVector::from_column_slice(&y);
            let rhs = DVector::from_column_slice(b) - a * fixed;
            let sub = a.select_rows(&free).select_columns(&free);
            let r = rhs.select_rows(&free);
            let z = sub.cholesky()?.solve(&r);
            for (k, &i) in free.iter().enumerate() {
                y[i] = z[k];
            }
        }
        let repeat = next == sets;
        sets = next;
        x = y;
        if repeat && kkt_violation(a, b, lo, hi, &x) <= tol {
            return Some(x);
        }
    }
    None
}
