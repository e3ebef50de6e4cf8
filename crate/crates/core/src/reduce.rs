//! Active-set truncation of the saddle system and the operators GMRES works
//! with.
//!
//! With `T` zeroing active nodes and `T̂ = I − T`, the truncated blocks are
//! `Â = TAT + T̂`, `B̂ = MT`, `K̂ = TKT + T̂` and `m̂ = Tm`. Substituting
//! `d = ε y'` turns the reduced system into
//!
//! ```text
//! [ K̂ + m̂m̂ᵀ   B̂ᵀ ] [x ]   [ r₁' ]
//! [ B̂        −ηK ] [y'] = [ r₂  ]        η = τε
//! ```

use crate::error::{Error, Result};
use crate::fem::SaddleSystem;
use crate::linalg::{dot, LinearOperator};
use crate::sparse::{CsrMatrix, SparsePlusRankOne};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncationMask {
    active: Vec<bool>,
    n_active: usize,
}

impl TruncationMask {
    pub fn from_active(active: Vec<bool>) -> Self {
        let n_active = active.iter().filter(|&&a| a).count();
        Self { active, n_active }
    }

    pub fn none(n: usize) -> Self {
        Self::from_active(vec![false; n])
    }

    pub fn all(n: usize) -> Self {
        Self::from_active(vec![true; n])
    }

    pub fn dim(&self) -> usize {
        self.active.len()
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    /// Diagonal of `T`: true where the node is kept.
    pub fn inactive(&self) -> Vec<bool> {
        self.active.iter().map(|a| !a).collect()
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    /// `|N•|`
    pub fn n_active(&self) -> usize {
        self.n_active
    }

    /// `k`
    pub fn n_inactive(&self) -> usize {
        self.active.len() - self.n_active
    }

    /// `v ← T v`
    pub fn apply_t(&self, v: &mut [f64]) {
        for (v, &a) in v.iter_mut().zip(&self.active) {
            if a {
                *v = 0.0;
            }
        }
    }

    /// `T v`
    pub fn t(&self, v: &[f64]) -> Vec<f64> {
        let mut w = v.to_vec();
        self.apply_t(&mut w);
        w
    }
}

/// Active where `u_j` equals `−1` or `+1` exactly.
pub fn compute_truncation(u: &[f64]) -> Result<TruncationMask> {
    if let Some(i) = u.iter().position(|v| !(v.abs() <= 1.0)) {
        return Err(Error::Contract(format!("u[{i}] = {} is outside [-1, 1]", u[i])));
    }
    Ok(TruncationMask::from_active(u.iter().map(|&v| v == 1.0 || v == -1.0).collect()))
}

#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub mask: TruncationMask,
    /// `TAT + T̂ = εTKT + T̂ + (√ε m̂)(√ε m̂)ᵀ`
    pub a_hat: SparsePlusRankOne,
    /// `B̂ = MT`
    pub b_hat: CsrMatrix,
    /// `B̂ᵀ = TM`
    pub b_hat_t: CsrMatrix,
    /// `C = τK`
    pub c: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    /// `K̂ = TKT + T̂`
    pub k_hat: CsrMatrix,
    /// `m̂ = Tm`
    pub m_hat: Vec<f64>,
    pub epsilon: f64,
    pub tau: f64,
    pub eta: f64,
}

pub fn truncate_system(sys: &SaddleSystem, mask: &TruncationMask) -> Result<ReducedSystem> {
    if mask.dim() != sys.dim() {
        return Err(Error::Contract(format!("mask has {} entries, system {}", mask.dim(), sys.dim())));
    }
    let keep = mask.inactive();
    let m_hat = mask.t(&sys.mean);
    let se = sys.epsilon.sqrt();
    let a_hat = SparsePlusRankOne::new(
        sys.a.sparse.mask_symmetric(&keep, 1.0),
        m_hat.iter().map(|v| se * v).collect(),
    );
    let b_hat = sys.mass.mask_columns(&keep);
    let b_hat_t = sys.mass.mask_rows(&keep);
    Ok(ReducedSystem {
        mask: mask.clone(),
        a_hat,
        b_hat,
        b_hat_t,
        c: sys.c.clone(),
        stiffness: sys.stiffness.clone(),
        mass: sys.mass.clone(),
        k_hat: sys.stiffness.mask_symmetric(&keep, 1.0),
        m_hat,
        epsilon: sys.epsilon,
        tau: sys.tau,
        eta: sys.eta,
    })
}

impl ReducedSystem {
    pub fn dim(&self) -> usize {
        self.m_hat.len()
    }

    /// `K̂̄ = TK̄T + T̂ = K̂ + m̂m̂ᵀ`
    pub fn kbar_hat(&self) -> SparsePlusRankOne {
        SparsePlusRankOne::new(self.k_hat.clone(), self.m_hat.clone())
    }

    /// `[Â B̂ᵀ; B̂ −C]` in the original variables.
    pub fn unscaled_operator(&self) -> BlockSaddle<'_> {
        BlockSaddle {
            a11: &self.a_hat.sparse,
            a11_factor: &self.a_hat.factor,
            b: &self.b_hat,
            bt: &self.b_hat_t,
            c: &self.c,
            c_scale: 1.0,
            c_factor: None,
        }
    }

    /// `[K̂̄ B̂ᵀ; B̂ −ηK]`, the system GMRES solves.
    pub fn scaled_operator(&self) -> ScaledSaddle<'_> {
        ScaledSaddle {
            inner: BlockSaddle {
                a11: &self.k_hat,
                a11_factor: &self.m_hat,
                b: &self.b_hat,
                bt: &self.b_hat_t,
                c: &self.stiffness,
                c_scale: self.eta,
                c_factor: None,
            },
        }
    }

    /// `[K̂̄ B̂ᵀ; B̂ −η(K + m̂m̂ᵀ)]`: the scaled operator minus the rank-one
    /// term `m̂_ext m̂_extᵀ`. The preconditioners are built for this form.
    pub fn split_operator(&self) -> ScaledSaddle<'_> {
        ScaledSaddle {
            inner: BlockSaddle {
                a11: &self.k_hat,
                a11_factor: &self.m_hat,
                b: &self.b_hat,
                bt: &self.b_hat_t,
                c: &self.stiffness,
                c_scale: self.eta,
                c_factor: Some(&self.m_hat),
            },
        }
    }
}

/// Matrix-free `[A₁₁ Bᵀ; B −s(C + ffᵀ)]` with `A₁₁` sparse plus rank-one.
#[derive(Debug, Clone, Copy)]
pub struct BlockSaddle<'a> {
    a11: &'a CsrMatrix,
    a11_factor: &'a [f64],
    b: &'a CsrMatrix,
    bt: &'a CsrMatrix,
    c: &'a CsrMatrix,
    c_scale: f64,
    c_factor: Option<&'a [f64]>,
}

impl LinearOperator for BlockSaddle<'_> {
    fn dim(&self) -> usize {
        2 * self.a11.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.a11.n_rows();
        let (x1, x2) = x.split_at(n);
        let (y1, y2) = y.split_at_mut(n);
        self.a11.spmv(x1, y1);
        let s = dot(self.a11_factor, x1);
        if s != 0.0 {
            y1.iter_mut().zip(self.a11_factor).for_each(|(y, f)| *y += s * f);
        }
        self.bt.spmv_add(1.0, x2, y1);
        self.b.spmv(x1, y2);
        self.c.spmv_add(-self.c_scale, x2, y2);
        if let Some(f) = self.c_factor {
            let s = self.c_scale * dot(f, x2);
            y2.iter_mut().zip(f).for_each(|(y, f)| *y -= s * f);
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScaledSaddle<'a> {
    inner: BlockSaddle<'a>,
}

impl LinearOperator for ScaledSaddle<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply(x, y)
    }
}

/// The change of variables `y' = y / ε` between the original reduced system
/// and the scaled one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableScaling {
    pub epsilon: f64,
    pub eta: f64,
}

impl VariableScaling {
    pub fn new(epsilon: f64, tau: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !(tau > 0.0) {
            return Err(Error::Config(format!("scaling needs ε, τ > 0 (got {epsilon}, {tau})")));
        }
        Ok(Self { epsilon, eta: tau * epsilon })
    }

    /// Right-hand side of the scaled system. Inactive rows of the first
    /// block are divided by `ε`; active rows carry the identity and keep
    /// their value.
    pub fn scale_rhs(&self, mask: &TruncationMask, r1: &[f64], r2: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * r1.len());
        out.extend(r1.iter().enumerate().map(|(i, v)| if mask.is_active(i) { *v } else { v / self.epsilon }));
        out.extend_from_slice(r2);
        out
    }

    /// `(u, y')` to `(u, y = ε y')`.
    pub fn back_map(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = x.len() / 2;
        (x[..n].to_vec(), x[n..].iter().map(|v| v * self.epsilon).collect())
    }

    /// `(u, y)` to the scaled unknown `(u, y / ε)`.
    pub fn forward_map(&self, u: &[f64], y: &[f64]) -> Vec<f64> {
        u.iter().copied().chain(y.iter().map(|v| v / self.epsilon)).collect()
    }
}

pub fn scale_variables(red: &ReducedSystem, rhs_w: &[f64]) -> Result<(Vec<f64>, VariableScaling)> {
    let sc = VariableScaling::new(red.epsilon, red.tau)?;
    let zero = vec![0.0; red.dim()];
    Ok((sc.scale_rhs(&red.mask, &zero, rhs_w), sc))
}

/// `m̂_ext = [0; √η m̂]`, so that the scaled operator equals the split
/// operator plus `m̂_ext m̂_extᵀ`.
pub fn rank_one_vector(red: &ReducedSystem) -> Result<Vec<f64>> {
    if !(red.eta > 0.0) {
        return Err(Error::Config(format!("η must be positive, got {}", red.eta)));
    }
    let s = red.eta.sqrt();
    let n = red.dim();
    let mut v = vec![0.0; 2 * n];
    v[n..].iter_mut().zip(&red.m_hat).for_each(|(v, m)| *v = s * m);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchurProduct {
    pub value: Vec<f64>,
    /// No inactive node: `B̂ = 0` and `S = C`, which is singular.
    pub singular: bool,
}

/// `(C + B̂ Â⁻¹ B̂ᵀ) v` with `a_hat_inv` applying `Â⁻¹`.
pub fn schur_apply(red: &ReducedSystem, a_hat_inv: &dyn LinearOperator, v: &[f64]) -> SchurProduct {
    let mut value = red.c.mul_vec(v);
    let btv = red.b_hat_t.mul_vec(v);
    let z = a_hat_inv.apply_vec(&btv);
    red.b_hat.spmv_add(1.0, &z, &mut value);
    SchurProduct { value, singular: red.mask.n_inactive() == 0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{operator_to_dense, to_dense};
    use crate::fem::assemble_system;
    use crate::inner::{InnerConfig, InnerKind};
    use crate::linalg::{norm2, sub};
    use crate::mesh::build_uniform_mesh;
    use crate::rank_one::RankOneSolver;
    use nalgebra::{DMatrix, DVector};

    fn system(eps: f64, tau: f64) -> SaddleSystem {
        assemble_system(&build_uniform_mesh(3).unwrap(), eps, tau).unwrap()
    }

    fn mask_every(n: usize, k: usize) -> TruncationMask {
        TruncationMask::from_active((0..n).map(|i| i % k == 0).collect())
    }

    #[test]
    fn truncation_counts() {
        let m = compute_truncation(&[0.0; 5]).unwrap();
        assert_eq!((m.n_active(), m.n_inactive()), (0, 5));
        let m = compute_truncation(&[1.0; 5]).unwrap();
        assert_eq!(m.n_active(), 5);
        let m = compute_truncation(&[1.0, 0.3, 1.0, -0.999, 1.0, 0.0]).unwrap();
        assert_eq!(m.n_active(), 3);
        assert!(compute_truncation(&[1.5]).is_err());
        assert!(compute_truncation(&[f64::NAN]).is_err());
        // exact test: one ulp inside is not active
        let m = compute_truncation(&[1.0 - f64::EPSILON, -1.0]).unwrap();
        assert_eq!(m.active(), &[false, true]);
    }

    #[test]
    fn extreme_masks() {
        let sys = system(0.1, 0.1);
        let n = sys.dim();
        let red = truncate_system(&sys, &TruncationMask::none(n)).unwrap();
        assert_eq!(red.a_hat, sys.a);
        assert_eq!(red.b_hat, sys.mass);
        let red = truncate_system(&sys, &TruncationMask::all(n)).unwrap();
        assert_eq!(red.a_hat.sparse, CsrMatrix::identity(n));
        assert!(red.a_hat.factor.iter().all(|&f| f == 0.0));
        assert_eq!(red.b_hat.nnz(), 0);
    }

    #[test]
    fn a_hat_matches_dense_masking() {
        let sys = system(0.05, 0.05);
        let n = sys.dim();
        let mask = mask_every(n, 3);
        let red = truncate_system(&sys, &mask).unwrap();
        let f = DVector::from_column_slice(&sys.a.factor);
        let a = to_dense(&sys.a.sparse) + &f * f.transpose();
        let t = DMatrix::from_diagonal(&DVector::from_iterator(n, mask.inactive().iter().map(|&k| if k { 1.0 } else { 0.0 })));
        let th = DMatrix::identity(n, n) - &t;
        let expect = &t * a * &t + th;
        let got = operator_to_dense(&red.a_hat);
        assert!((got - expect).amax() <= 1e-15);
        for i in 0..n {
            if mask.is_active(i) {
                assert_eq!(red.b_hat_t.row(i).0.len(), 0);
            }
        }
        assert_eq!(red.b_hat.transpose(), red.b_hat_t);
    }

    #[test]
    fn eta_from_substitution() {
        // 2×2 instance: [εk, m; m, −τk][u; y] = [r₁; r₂] with y = ε y'
        let (eps, tau, k, m) = (0.3, 0.7, 2.0, 0.5);
        let (u, yp) = (0.4, -1.3);
        let y = eps * yp;
        let r1 = eps * k * u + m * y;
        let r2 = m * u - tau * k * y;
        // scaled rows: [k, m; m, −ηk][u; y'] = [r₁/ε; r₂]
        let sc = VariableScaling::new(eps, tau).unwrap();
        assert!((k * u + m * yp - r1 / eps).abs() < 1e-15);
        assert!((m * u - sc.eta * k * yp - r2).abs() < 1e-15);
        assert_eq!(VariableScaling::new(1.0, 1.0).unwrap().eta, 1.0);
        assert!((VariableScaling::new(1e-2, 1e-2).unwrap().eta - 1e-4).abs() < 1e-20);
    }

    #[test]
    fn scaling_round_trip() {
        let sc = VariableScaling::new(1e-3, 1e-3).unwrap();
        let u = [0.1, 0.2];
        let y = [3.0, -7.0];
        let (u2, y2) = sc.back_map(&sc.forward_map(&u, &y));
        assert_eq!(u2, u);
        for (a, b) in y2.iter().zip(y) {
            assert!((a - b).abs() <= 1e-15 * b.abs());
        }
        let sc = VariableScaling::new(1.0, 1.0).unwrap();
        assert_eq!(sc.back_map(&[1.0, 2.0]).1, vec![2.0]);
    }

    #[test]
    fn scaled_system_is_equivalent() {
        let sys = system(0.05, 0.02);
        let n = sys.dim();
        let mask = mask_every(n, 4);
        let red = truncate_system(&sys, &mask).unwrap();
        let sc = VariableScaling::new(red.epsilon, red.tau).unwrap();
        let u: Vec<f64> = (0..n).map(|i| if mask.is_active(i) { 0.0 } else { (i as f64).sin() }).collect();
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let x: Vec<f64> = u.iter().chain(&y).copied().collect();
        let r = red.unscaled_operator().apply_vec(&x);
        let rs = sc.scale_rhs(&mask, &r[..n], &r[n..]);
        let got = red.scaled_operator().apply_vec(&sc.forward_map(&u, &y));
        assert!(norm2(&sub(&got, &rs)) <= 1e-12 * norm2(&rs));
    }

    #[test]
    fn rank_one_split_is_exact() {
        let sys = system(0.01, 0.01);
        let n = sys.dim();
        for mask in [TruncationMask::none(n), mask_every(n, 2), TruncationMask::all(n)] {
            let red = truncate_system(&sys, &mask).unwrap();
            let me = rank_one_vector(&red).unwrap();
            let v: Vec<f64> = (0..2 * n).map(|i| (i as f64 * 1.3).sin()).collect();
            let mut split = red.split_operator().apply_vec(&v);
            let s = dot(&me, &v);
            split.iter_mut().zip(&me).for_each(|(y, m)| *y += s * m);
            let full = red.scaled_operator().apply_vec(&v);
            assert!(norm2(&sub(&split, &full)) <= 1e-13 * norm2(&full));
            if mask.n_inactive() == 0 {
                assert!(me.iter().all(|&x| x == 0.0));
            }
        }
        let sys = system(1.0, 1.0);
        let red = truncate_system(&sys, &TruncationMask::none(n)).unwrap();
        assert_eq!(&rank_one_vector(&red).unwrap()[n..], &sys.mean[..]);
    }

    #[test]
    fn schur_complement_spd_with_partial_mask() {
        let sys = system(0.05, 0.05);
        let n = sys.dim();
        let red = truncate_system(&sys, &mask_every(n, 3)).unwrap();
        let cfg = InnerConfig { kind: InnerKind::Dense, ..Default::default() };
        let inv = RankOneSolver::new(&red.a_hat.sparse, red.a_hat.factor.clone(), &cfg).unwrap();
        let ones = vec![1.0; n];
        let s1 = schur_apply(&red, &inv, &ones);
        assert!(!s1.singular);
        assert!(dot(&ones, &s1.value) > 0.0);
        let op = crate::linalg::FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
            y.copy_from_slice(&schur_apply(&red, &inv, x).value)
        });
        let s = operator_to_dense(&op);
        assert!((&s - s.transpose()).amax() <= 1e-12 * s.amax());
        assert!(crate::dense::symmetric_eigenvalues(&s)[0] > 0.0);
    }

    #[test]
    fn all_active_schur_is_singular() {
        let sys = system(0.05, 0.05);
        let n = sys.dim();
        let red = truncate_system(&sys, &TruncationMask::all(n)).unwrap();
        let id = crate::linalg::Identity(n);
        let r = schur_apply(&red, &id, &vec![1.0; n]);
        assert!(r.singular);
        assert!(crate::linalg::norm_inf(&r.value) <= 1e-14);
    }
}
