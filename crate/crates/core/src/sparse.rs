//! Compressed sparse row storage and the kernels the solvers need.
//!
//! Column indices are strictly increasing within each row and assembled
//! matrices never keep explicit zeros.

use crate::error::{Error, Result};
use crate::linalg::{dot, LinearOperator};

/// Aggregate index of a node that belongs to no aggregate.
pub const UNAGGREGATED: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, validating the layout.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != n_rows + 1 || col_idx.len() != values.len() {
            return Err(Error::Contract("inconsistent CSR array lengths".into()));
        }
        if row_ptr[0] != 0 || row_ptr[n_rows] != col_idx.len() {
            return Err(Error::Contract("row pointer does not span the entries".into()));
        }
        for i in 0..n_rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::Contract("row pointer not monotone".into()));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Contract(format!("row {i}: columns not strictly increasing")));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return Err(Error::Contract(format!("row {i}: column out of range")));
            }
        }
        Ok(Self { n_rows, n_cols, row_ptr, col_idx, values })
    }

    /// Sums duplicate entries and drops exact zeros. The result does not
    /// depend on the order of `triplets` beyond floating-point summation
    /// order, which follows the input order for each (row, col) pair.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, j, _) in triplets {
            assert!(i < n_rows && j < n_cols, "triplet ({i},{j}) out of range");
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        // bucket by row, stable in input order
        let mut next = counts.clone();
        let mut bucket = vec![(0usize, 0.0f64); triplets.len()];
        for &(i, j, v) in triplets {
            bucket[next[i]] = (j, v);
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for i in 0..n_rows {
            let row = &mut bucket[counts[i]..counts[i + 1]];
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == j {
                    sum += row[k].1;
                    k += 1;
                }
                if sum != 0.0 {
                    col_idx.push(j);
                    values.push(sum);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), d.len(), &t)
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// `y += alpha * A x`
    pub fn spmv_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let s: f64 = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
            *yi += alpha * s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push((j, i, v));
            }
        }
        Self::from_triplets(self.n_cols, self.n_rows, &t)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        if alpha == 0.0 {
            return Self::zeros(self.n_rows, self.n_cols);
        }
        out
    }

    /// `alpha * self + beta * other` on the union pattern.
    pub fn add(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Self {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            t.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, alpha * x)));
            let (c, v) = other.row(i);
            t.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, beta * x)));
        }
        Self::from_triplets(self.n_rows, self.n_cols, &t)
    }

    /// `self + diag(d)`
    pub fn add_diagonal(&self, d: &[f64]) -> Self {
        self.add(1.0, &Self::from_diagonal(d), 1.0)
    }

    /// Keeps entries with `keep[i] && keep[j]` (the product `T A T` for the
    /// 0/1 diagonal `T = diag(keep)`), then puts `unit` on the diagonal of
    /// every dropped index (`+ unit * T̂`).
    pub fn mask_symmetric(&self, keep: &[bool], unit: f64) -> Self {
        assert_eq!(self.n_rows, self.n_cols);
        assert_eq!(keep.len(), self.n_rows);
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            if !keep[i] {
                if unit != 0.0 {
                    t.push((i, i, unit));
                }
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if keep[j] {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(self.n_rows, self.n_cols, &t)
    }

    /// `A T`: zero every column `j` with `!keep[j]`.
    pub fn mask_columns(&self, keep: &[bool]) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            t.extend(cols.iter().zip(vals).filter(|(&j, _)| keep[j]).map(|(&j, &v)| (i, j, v)));
        }
        Self::from_triplets(self.n_rows, self.n_cols, &t)
    }

    /// `T A`: zero every row `i` with `!keep[i]`.
    pub fn mask_rows(&self, keep: &[bool]) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in (0..self.n_rows).filter(|&i| keep[i]) {
            let (cols, vals) = self.row(i);
            t.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v)));
        }
        Self::from_triplets(self.n_rows, self.n_cols, &t)
    }

    /// Row sums, `A 1`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// Lumped version: row sums on the diagonal.
    pub fn lumped(&self) -> Self {
        Self::from_diagonal(&self.row_sums())
    }

    /// Galerkin product `Pᵀ A P` for a piecewise-constant prolongation
    /// given as an aggregate index per fine node. Nodes marked
    /// [`UNAGGREGATED`] have a zero row in `P`.
    pub fn galerkin_aggregates(&self, aggregate: &[usize], n_coarse: usize) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            if aggregate[i] == UNAGGREGATED {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if aggregate[j] != UNAGGREGATED {
                    t.push((aggregate[i], aggregate[j], v));
                }
            }
        }
        Self::from_triplets(n_coarse, n_coarse, &t)
    }

    /// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv(x, y)
    }
}

/// A symmetric matrix stored as `S + f fᵀ`, with `S` sparse and `f` a dense
/// vector. Forming `f fᵀ` would fill the whole matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePlusRankOne {
    pub sparse: CsrMatrix,
    pub factor: Vec<f64>,
}

impl SparsePlusRankOne {
    pub fn new(sparse: CsrMatrix, factor: Vec<f64>) -> Self {
        assert_eq!(sparse.n_rows(), factor.len());
        Self { sparse, factor }
    }

    /// Pure sparse matrix, zero rank-one factor.
    pub fn sparse_only(sparse: CsrMatrix) -> Self {
        let n = sparse.n_rows();
        Self { sparse, factor: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.factor.len()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = self.sparse.diagonal();
        d.iter_mut().zip(&self.factor).for_each(|(d, f)| *d += f * f);
        d
    }

    pub fn galerkin_aggregates(&self, aggregate: &[usize], n_coarse: usize) -> Self {
        let mut f = vec![0.0; n_coarse];
        for (i, &a) in aggregate.iter().enumerate() {
            if a == UNAGGREGATED {
                continue;
            }
            f[a] += self.factor[i];
        }
        Self { sparse: self.sparse.galerkin_aggregates(aggregate, n_coarse), factor: f }
    }

    /// Energy `½ vᵀ A v - bᵀ v`.
    pub fn energy(&self, v: &[f64], b: &[f64]) -> f64 {
        let av = self.mul_vec(v);
        0.5 * dot(&av, v) - dot(b, v)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl LinearOperator for SparsePlusRankOne {
    fn dim(&self) -> usize {
        self.factor.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.sparse.spmv(x, y);
        let s = dot(&self.factor, x);
        if s != 0.0 {
            y.iter_mut().zip(&self.factor).for_each(|(y, f)| *y += s * f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CsrMatrix {
        CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)],
        )
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 0, 3.0), (0, 1, -1.0), (1, 1, 0.5), (1, 1, 0.5)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.get(1, 1), 1.0);
    }

    #[test]
    fn new_rejects_unsorted_columns() {
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![1, 2], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn masking_matches_definition() {
        let a = small();
        let keep = [true, false, true];
        let m = a.mask_symmetric(&keep, 1.0);
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 2), 0.0);
        assert_eq!(m.get(0, 0), 2.0);
        let c = a.mask_columns(&keep);
        assert_eq!(c.get(0, 1), 0.0);
        assert_eq!(c.get(1, 0), -1.0);
        let r = a.mask_rows(&keep);
        assert_eq!(r.row(1).0.len(), 0);
        assert_eq!(r.transpose(), a.mask_columns(&keep));
    }

    #[test]
    fn galerkin_of_rank_one_keeps_factor_structure() {
        let a = SparsePlusRankOne::new(small(), vec![1.0, 2.0, 3.0]);
        let agg = [0, 0, 1];
        let c = a.galerkin_aggregates(&agg, 2);
        assert_eq!(c.factor, vec![3.0, 3.0]);
        // Pᵀ S P entry (0,0) = a00 + a01 + a10 + a11
        assert_eq!(c.sparse.get(0, 0), 2.0);
        let x = [0.3, -0.7];
        let px = [0.3, 0.3, -0.7];
        let lhs = dot(&x, &c.mul_vec(&x));
        let rhs = dot(&px, &a.mul_vec(&px));
        assert!((lhs - rhs).abs() < 1e-14);
    }
}
