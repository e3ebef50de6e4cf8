//! Approximate inverses of the sparse SPD blocks used inside the
//! preconditioners: diagonally scaled CG with an AMG or IC(0) preconditioner,
//! or a dense factorization for small diagnostic problems.

use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::amg::{amg_with_config, Amg, AmgConfig};
use crate::dense::{symmetric_pseudo_inverse, to_dense};
use crate::error::{Error, Result};
use crate::ic::{ic_factor, IcFactor};
use crate::krylov::pcg;
use crate::linalg::{dot, LinearOperator};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerKind {
    Amg,
    Ic,
    Dense,
}

impl FromStr for InnerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "amg" => Ok(Self::Amg),
            "ic" | "ic0" => Ok(Self::Ic),
            "dense" => Ok(Self::Dense),
            other => Err(Error::Config(format!("unknown inner solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    pub kind: InnerKind,
    pub rtol: f64,
    pub max_iters: usize,
    pub amg: AmgConfig,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self { kind: InnerKind::Amg, rtol: 1e-10, max_iters: 1000, amg: AmgConfig::default() }
    }
}

impl InnerConfig {
    /// Tight inner solves on small meshes, looser from `p = 6` on.
    pub fn for_level(p: u32) -> Self {
        Self { rtol: if p <= 5 { 1e-10 } else { 1e-6 }, ..Self::default() }
    }
}

#[derive(Debug)]
enum Backend {
    Amg(Amg),
    Ic(IcFactor),
    Dense(DMatrix<f64>),
}

/// Counters shared by all solves through one inner solver.
#[derive(Debug, Default)]
pub struct InnerCounters {
    pub solves: AtomicUsize,
    pub iterations: AtomicUsize,
    pub failures: AtomicUsize,
}

/// Solves `A x = b` for a symmetric positive (semi)definite sparse `A`.
///
/// The system is symmetrically scaled by its diagonal first. A matrix whose
/// rows all sum to zero is treated as singular with kernel `1`: right-hand
/// sides are projected onto the range and the returned solution is the one
/// CG produces from zero, which has no particular kernel component.
#[derive(Debug)]
pub struct InnerSolver {
    scaled: CsrMatrix,
    /// `D^{-1/2}`
    scale: Vec<f64>,
    /// Unit null vector of the scaled matrix, if singular.
    null: Option<Vec<f64>>,
    backend: Backend,
    rtol: f64,
    max_iters: usize,
    pub counters: InnerCounters,
}

impl InnerSolver {
    pub fn new(a: &CsrMatrix, cfg: &InnerConfig) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(Error::Contract("inner solver needs a square matrix".into()));
        }
        let d = a.diagonal();
        if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Contract(format!("inner solver: diagonal entry {i} is not positive")));
        }
        let scale: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
        let scaled = scale_symmetric(a, &scale);
        let tol = 1e-12 * a.max_abs();
        let null = if a.row_sums().iter().all(|r| r.abs() <= tol) {
            let z: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
            let nz = dot(&z, &z).sqrt();
            Some(z.into_iter().map(|v| v / nz).collect())
        } else {
            None
        };
        let backend = match cfg.kind {
            InnerKind::Amg => Backend::Amg(amg_with_config(&scaled, cfg.amg)?),
            InnerKind::Ic => Backend::Ic(ic_factor(&scaled)?),
            InnerKind::Dense => {
                let dm = to_dense(&scaled);
                let inv = if null.is_some() {
                    symmetric_pseudo_inverse(&dm, 1e-13)
                } else {
                    dm.cholesky()
                        .ok_or_else(|| Error::Numerical("dense Cholesky failed: matrix not SPD".into()))?
                        .inverse()
                };
                Backend::Dense(inv)
            }
        };
        Ok(Self { scaled, scale, null, backend, rtol: cfg.rtol, max_iters: cfg.max_iters, counters: InnerCounters::default() })
    }

    pub fn is_singular(&self) -> bool {
        self.null.is_some()
    }

    pub fn failures(&self) -> usize {
        self.counters.failures.load(Ordering::Relaxed)
    }

    fn solve_scaled(&self, b: &[f64], x: &mut [f64]) {
        self.counters.solves.fetch_add(1, Ordering::Relaxed);
        match &self.backend {
            Backend::Dense(inv) => {
                let y = inv * DVector::from_column_slice(b);
                x.copy_from_slice(y.as_slice());
            }
            Backend::Amg(amg) => self.cg(amg, b, x),
            Backend::Ic(ic) => self.cg(ic, b, x),
        }
    }

    fn cg(&self, prec: &dyn LinearOperator, b: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        let st = pcg(&self.scaled, prec, b, x, self.rtol, self.max_iters);
        self.counters.iterations.fetch_add(st.iterations, Ordering::Relaxed);
        if !st.converged {
            self.counters.failures.fetch_add(1, Ordering::Relaxed);
        }
    }
}

/// `S A S` for `S = diag(scale)`.
fn scale_symmetric(a: &CsrMatrix, scale: &[f64]) -> CsrMatrix {
    let mut t = Vec::with_capacity(a.nnz());
    for i in 0..a.n_rows() {
        let (c, v) = a.row(i);
        for (&j, &x) in c.iter().zip(v) {
            t.push((i, j, scale[i] * x * scale[j]));
        }
    }
    CsrMatrix::from_triplets(a.n_rows(), a.n_cols(), &t)
}

impl LinearOperator for InnerSolver {
    fn dim(&self) -> usize {
        self.scale.len()
    }

    fn apply(&self, b: &[f64], x: &mut [f64]) {
        let mut bs: Vec<f64> = b.iter().zip(&self.scale).map(|(b, s)| b * s).collect();
        if let Some(z) = &self.null {
            let c = dot(&bs, z);
            bs.iter_mut().zip(z).for_each(|(b, z)| *b -= c * z);
        }
        self.solve_scaled(&bs, x);
        x.iter_mut().zip(&self.scale).for_each(|(x, s)| *x *= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, assemble_stiffness};
    use crate::linalg::{norm2, sub};
    use crate::mesh::build_uniform_mesh;

    fn rel_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
        norm2(&sub(&a.mul_vec(x), b)) / norm2(b)
    }

    #[test]
    fn all_backends_solve_badly_scaled_block() {
        let mesh = build_uniform_mesh(4).unwrap();
        let k = assemble_stiffness(&mesh).unwrap();
        let m = assemble_mass(&mesh).unwrap();
        // η K + √η M with η = 1e-8
        let a = k.add(1e-8, &m, 1e-4);
        let b: Vec<f64> = (0..a.n_rows()).map(|i| (i as f64).sin()).collect();
        for kind in [InnerKind::Amg, InnerKind::Ic, InnerKind::Dense] {
            let s = InnerSolver::new(&a, &InnerConfig { kind, ..Default::default() }).unwrap();
            let x = s.apply_vec(&b);
            assert!(rel_residual(&a, &x, &b) <= 1e-9, "{kind:?}");
            assert_eq!(s.failures(), 0);
        }
    }

    #[test]
    fn singular_laplacian_gets_projected() {
        let k = assemble_stiffness(&build_uniform_mesh(4).unwrap()).unwrap();
        let n = k.n_rows();
        let mut b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mean = b.iter().sum::<f64>() / n as f64;
        b.iter_mut().for_each(|v| *v -= mean);
        for kind in [InnerKind::Amg, InnerKind::Ic, InnerKind::Dense] {
            let s = InnerSolver::new(&k, &InnerConfig { kind, ..Default::default() });
            // IC(0) of a singular M-matrix may break down; then the shift kicks in
            let Ok(s) = s else { continue };
            assert!(s.is_singular());
            let x = s.apply_vec(&b);
            if kind != InnerKind::Ic {
                assert!(rel_residual(&k, &x, &b) <= 1e-8, "{kind:?}");
            }
        }
    }

    #[test]
    fn parses_kind() {
        assert_eq!("AMG".parse::<InnerKind>().unwrap(), InnerKind::Amg);
        assert_eq!("ic".parse::<InnerKind>().unwrap(), InnerKind::Ic);
        assert!("lu".parse::<InnerKind>().is_err());
    }
}
