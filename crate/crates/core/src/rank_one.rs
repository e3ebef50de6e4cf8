//! Solves with a sparse matrix plus a symmetric rank-one term, `(S + u uᵀ) x = b`,
//! through the Sherman-Morrison-Woodbury formula.

use crate::error::{Error, Result};
use crate::inner::{InnerConfig, InnerSolver};
use crate::linalg::{axpy, dot, LinearOperator};
use crate::sparse::CsrMatrix;

/// `(S + u uᵀ)⁻¹ rhs = S⁻¹rhs − S⁻¹u (uᵀS⁻¹rhs) / (1 + uᵀS⁻¹u)` where
/// `base_solve` applies `S⁻¹`.
pub fn smw_solve(base_solve: &dyn LinearOperator, u: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = base_solve.apply_vec(rhs);
    if u.iter().all(|&v| v == 0.0) {
        return Ok(x);
    }
    let su = base_solve.apply_vec(u);
    let denom = 1.0 + dot(u, &su);
    if !(denom > 0.0) {
        return Err(Error::Numerical(format!("1 + uᵀS⁻¹u = {denom}: matrix is not SPD")));
    }
    axpy(-dot(u, &x) / denom, &su, &mut x);
    Ok(x)
}

#[derive(Debug)]
enum Mode {
    Plain,
    Smw { base_inv_u: Vec<f64>, denom: f64 },
    /// `S 1 = 0` and `1ᵀu ≠ 0`: `uᵀx = 1ᵀb / 1ᵀu` is known in advance, the
    /// remaining singular system is consistent and the kernel component
    /// is fixed afterwards.
    KernelOne { u_sum: f64 },
}

/// Reusable `(S + u uᵀ)⁻¹` with `S⁻¹u` computed once.
#[derive(Debug)]
pub struct RankOneSolver {
    base: InnerSolver,
    u: Vec<f64>,
    mode: Mode,
}

impl RankOneSolver {
    pub fn new(sparse: &CsrMatrix, u: Vec<f64>, cfg: &InnerConfig) -> Result<Self> {
        if sparse.n_rows() != u.len() {
            return Err(Error::Contract("rank-one vector has the wrong length".into()));
        }
        let base = InnerSolver::new(sparse, cfg)?;
        let zero = u.iter().all(|&v| v == 0.0);
        let mode = if base.is_singular() {
            let u_sum: f64 = u.iter().sum();
            if zero || u_sum.abs() <= 1e-14 * u.iter().map(|v| v.abs()).sum::<f64>() {
                return Err(Error::Numerical("singular base and rank-one term does not fix the kernel".into()));
            }
            Mode::KernelOne { u_sum }
        } else if zero {
            Mode::Plain
        } else {
            let base_inv_u = base.apply_vec(&u);
            let denom = 1.0 + dot(&u, &base_inv_u);
            if !(denom > 0.0) {
                return Err(Error::Numerical(format!("1 + uᵀS⁻¹u = {denom}: matrix is not SPD")));
            }
            Mode::Smw { base_inv_u, denom }
        };
        Ok(Self { base, u, mode })
    }

    pub fn inner(&self) -> &InnerSolver {
        &self.base
    }
}

impl LinearOperator for RankOneSolver {
    fn dim(&self) -> usize {
        self.u.len()
    }

    fn apply(&self, b: &[f64], x: &mut [f64]) {
        match &self.mode {
            Mode::Plain => self.base.apply(b, x),
            Mode::Smw { base_inv_u, denom } => {
                self.base.apply(b, x);
                let c = dot(&self.u, x) / denom;
                axpy(-c, base_inv_u, x);
            }
            Mode::KernelOne { u_sum } => {
                let ux = b.iter().sum::<f64>() / u_sum;
                let mut r = b.to_vec();
                axpy(-ux, &self.u, &mut r);
                self.base.apply(&r, x);
                let alpha = (ux - dot(&self.u, x)) / u_sum;
                x.iter_mut().for_each(|v| *v += alpha);
            }
        }
    }
}
