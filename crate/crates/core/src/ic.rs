//! Zero-fill incomplete Cholesky factorization.

use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::sparse::CsrMatrix;

/// Relative diagonal shifts tried, in order, after a non-positive pivot.
const SHIFTS: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// `A ≈ L Lᵀ` with `L` restricted to the lower-triangular pattern of `A`.
/// Applying the operator performs the two triangular solves.
#[derive(Debug, Clone)]
pub struct IcFactor {
    l: CsrMatrix,
    /// Relative diagonal shift that was needed, 0 if none.
    pub shift: f64,
}

pub fn ic_factor(a: &CsrMatrix) -> Result<IcFactor> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::Contract("incomplete Cholesky needs a square matrix".into()));
    }
    if let Some(i) = a.diagonal().iter().position(|&d| d <= 0.0) {
        return Err(Error::Contract(format!("diagonal entry {i} is not positive")));
    }
    if let Some(l) = try_factor(a, 0.0) {
        return Ok(IcFactor { l, shift: 0.0 });
    }
    for s in SHIFTS {
        if let Some(l) = try_factor(a, s) {
            return Ok(IcFactor { l, shift: s });
        }
    }
    Err(Error::Numerical(format!(
        "incomplete Cholesky broke down even with diagonal shift {}",
        SHIFTS[SHIFTS.len() - 1]
    )))
}

fn try_factor(a: &CsrMatrix, shift: f64) -> Option<CsrMatrix> {
    let n = a.n_rows();
    let mut row_ptr = vec![0usize; n + 1];
    let mut cols: Vec<usize> = Vec::with_capacity(a.nnz() / 2 + n);
    let mut vals: Vec<f64> = Vec::with_capacity(a.nnz() / 2 + n);
    // diagonal position of every finished row (always the last entry)
    for i in 0..n {
        let (ac, av) = a.row(i);
        let start = cols.len();
        let mut diag = 0.0;
        for (&j, &v) in ac.iter().zip(av) {
            if j < i {
                cols.push(j);
                vals.push(v);
            } else if j == i {
                diag = v * (1.0 + shift);
            }
        }
        // L_ik = (a_ik - Σ_{j<k} L_ij L_kj) / L_kk over the shared pattern
        for p in start..cols.len() {
            let k = cols[p];
            let (ks, ke) = (row_ptr[k], row_ptr[k + 1] - 1);
            let mut s = vals[p];
            let (mut q, mut r) = (start, ks);
            while q < p && r < ke {
                match cols[q].cmp(&cols[r]) {
                    std::cmp::Ordering::Less => q += 1,
                    std::cmp::Ordering::Greater => r += 1,
                    std::cmp::Ordering::Equal => {
                        s -= vals[q] * vals[r];
                        q += 1;
                        r += 1;
                    }
                }
            }
            vals[p] = s / vals[ke];
        }
        let off: f64 = vals[start..].iter().map(|v| v * v).sum();
        let pivot = diag - off;
        if !(pivot > 0.0) || !pivot.is_finite() {
            return None;
        }
        cols.push(i);
        vals.push(pivot.sqrt());
        row_ptr[i + 1] = cols.len();
    }
    Some(CsrMatrix::new(n, n, row_ptr, cols, vals).expect("factor layout is valid"))
}

impl IcFactor {
    pub fn lower(&self) -> &CsrMatrix {
        &self.l
    }
}

impl LinearOperator for IcFactor {
    fn dim(&self) -> usize {
        self.l.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        // L z = x
        for i in 0..n {
            let (c, v) = self.l.row(i);
            let last = c.len() - 1;
            let mut s = x[i];
            for k in 0..last {
                s -= v[k] * y[c[k]];
            }
            y[i] = s / v[last];
        }
        // Lᵀ y = z, column sweep over the rows of L
        for i in (0..n).rev() {
            let (c, v) = self.l.row(i);
            let last = c.len() - 1;
            y[i] /= v[last];
            let yi = y[i];
            for k in 0..last {
                y[c[k]] -= v[k] * yi;
            }
        }
    }
}
