//! Restarted right-preconditioned GMRES and preconditioned CG.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovConfig {
    pub restart_dim: usize,
    pub max_iters: usize,
    pub rtol: f64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self { restart_dim: 200, max_iters: 300, rtol: 1e-7 }
    }
}

impl KrylovConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restart_dim < 1 {
            return Err(Error::Config("restart dimension must be at least 1".into()));
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::Config(format!("rtol {} outside (0, 1)", self.rtol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_relres: f64,
    pub converged: bool,
    pub wall_time: f64,
    /// Relative residual after every iteration. For GMRES these are the
    /// Arnoldi estimates, which equal the true residual up to rounding.
    pub history: Vec<f64>,
}

/// Loss of orthogonality above which a second Gram-Schmidt pass is made.
const REORTH_THRESHOLD: f64 = 1e-8;

/// Restarted GMRES with right preconditioning, `A P⁻¹ (P x) = b`, from a
/// zero initial guess.
///
/// The preconditioned directions `P⁻¹ v_j` are kept, so the update stays
/// exact when `precond` is itself an inexact inner solve. The reported
/// residual is always the true `‖b - A x‖ / ‖b‖`.
pub fn gmres_right(
    op: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    b: &[f64],
    cfg: &KrylovConfig,
) -> (Vec<f64>, SolveStats) {
    let n = b.len();
    assert_eq!(op.dim(), n, "operator dimension mismatch");
    assert_eq!(precond.dim(), n, "preconditioner dimension mismatch");
    let start = Instant::now();
    let mut x = vec![0.0; n];
    let mut stats = SolveStats::default();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        stats.converged = true;
        return (x, stats);
    }

    let m = cfg.restart_dim.max(1);
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    loop {
        // true residual
        op.apply(&x, &mut r);
        r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
        let beta = norm2(&r);
        stats.final_relres = beta / bnorm;
        if stats.final_relres <= cfg.rtol || stats.iterations >= cfg.max_iters {
            break;
        }

        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        v.push(r.iter().map(|ri| ri / beta).collect());
        // Hessenberg columns, rotated in place
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut breakdown = false;

        for j in 0..m {
            if stats.iterations >= cfg.max_iters {
                break;
            }
            let zj = precond.apply_vec(&v[j]);
            op.apply(&zj, &mut w);
            z.push(zj);
            stats.iterations += 1;

            let mut col = vec![0.0; j + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                col[i] = hij;
                axpy(-hij, vi, &mut w);
            }
            let mut wnorm = norm2(&w);
            if wnorm > 0.0 {
                let loss = v.iter().map(|vi| dot(&w, vi).abs()).fold(0.0, f64::max) / wnorm;
                if loss > REORTH_THRESHOLD {
                    for (i, vi) in v.iter().enumerate() {
                        let c = dot(&w, vi);
                        col[i] += c;
                        axpy(-c, vi, &mut w);
                    }
                    wnorm = norm2(&w);
                }
            }
            col[j + 1] = wnorm;

            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (c, s) = givens(col[j], col[j + 1]);
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            cs.push(c);
            sn.push(s);
            h.push(col);

            let est = g[j + 1].abs() / bnorm;
            stats.history.push(est);
            // lucky breakdown: the Krylov space is invariant
            if wnorm <= 1e-14 * beta.max(f64::MIN_POSITIVE) {
                breakdown = true;
                break;
            }
            v.push(w.iter().map(|wi| wi / wnorm).collect());
            if est <= cfg.rtol {
                break;
            }
        }

        let k = h.len();
        if k == 0 {
            break;
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for l in i + 1..k {
                s -= h[l][i] * y[l];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (yi, zi) in y.iter().zip(&z) {
            axpy(*yi, zi, &mut x);
        }
        if breakdown {
            op.apply(&x, &mut r);
            r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
            stats.final_relres = norm2(&r) / bnorm;
            break;
        }
    }
    stats.converged = stats.final_relres <= cfg.rtol;
    stats.wall_time = start.elapsed().as_secs_f64();
    (x, stats)
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else if a == 0.0 {
        (0.0, 1.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// Preconditioned conjugate gradients for SPD (or consistent semidefinite)
/// systems, starting from `x`.
pub fn pcg(
    op: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iters: usize,
) -> SolveStats {
    let start = Instant::now();
    let n = b.len();
    let mut stats = SolveStats::default();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        stats.converged = true;
        return stats;
    }
    let mut r = op.apply_vec(x);
    r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    let mut rn = norm2(&r);
    stats.final_relres = rn / bnorm;
    if stats.final_relres <= rtol {
        stats.converged = true;
        return stats;
    }
    let mut z = precond.apply_vec(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    while stats.iterations < max_iters {
        op.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 || !pq.is_finite() {
            break;
        }
        let alpha = rz / pq;
        axpy(alpha, &p, x);
        axpy(-alpha, &q, &mut r);
        stats.iterations += 1;
        rn = norm2(&r);
        stats.final_relres = rn / bnorm;
        stats.history.push(stats.final_relres);
        if stats.final_relres <= rtol {
            break;
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    stats.converged = stats.final_relres <= rtol;
    stats.wall_time = start.elapsed().as_secs_f64();
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{FnOperator, Identity};
    use crate::sparse::CsrMatrix;

    fn dense_solve(a: &[[f64; 5]; 5], b: &[f64]) -> Vec<f64> {
        // Gaussian elimination with partial pivoting
        let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &bi)| r.iter().copied().chain([bi]).collect()).collect();
        for c in 0..5 {
            let p = (c..5).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
            m.swap(c, p);
            for r in c + 1..5 {
                let f = m[r][c] / m[c][c];
                for k in c..6 {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
        let mut x = vec![0.0; 5];
        for r in (0..5).rev() {
            let s: f64 = (r + 1..5).map(|k| m[r][k] * x[k]).sum();
            x[r] = (m[r][5] - s) / m[r][r];
        }
        x
    }

    #[test]
    fn identity_converges_in_one_step() {
        let b = vec![1.0, -2.0, 3.0];
        let (x, st) = gmres_right(&Identity(3), &Identity(3), &b, &KrylovConfig::default());
        assert_eq!(st.iterations, 1);
        assert!(st.converged);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_inverse_preconditioner() {
        let a = CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let inv = CsrMatrix::from_diagonal(&[1.0, 0.5, 1.0 / 3.0, 0.25, 0.2]);
        let b = vec![1.0; 5];
        let (_, st) = gmres_right(&a, &inv, &b, &KrylovConfig::default());
        assert_eq!(st.iterations, 1);
        assert!(st.converged);
    }

    #[test]
    fn spd_five_by_five_against_dense_lu() {
        let a = [
            [4.0, 1.0, 0.5, 0.0, 0.2],
            [1.0, 5.0, 1.0, 0.3, 0.0],
            [0.5, 1.0, 6.0, 1.0, 0.1],
            [0.0, 0.3, 1.0, 3.0, 0.7],
            [0.2, 0.0, 0.1, 0.7, 2.5],
        ];
        let t: Vec<_> = (0..5).flat_map(|i| (0..5).map(move |j| (i, j, a[i][j]))).collect();
        let m = CsrMatrix::from_triplets(5, 5, &t);
        let b = vec![1.0, -1.0, 2.0, 0.5, -0.3];
        let cfg = KrylovConfig { rtol: 1e-13, ..Default::default() };
        let (x, st) = gmres_right(&m, &Identity(5), &b, &cfg);
        let xs = dense_solve(&a, &b);
        let err = norm2(&crate::linalg::sub(&x, &xs)) / norm2(&xs);
        assert!(st.converged);
        assert!(err <= 1e-10, "err {err}");
    }

    #[test]
    fn residual_history_monotone_within_cycle() {
        let n = 60;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5 + (i as f64).sin()));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -0.4));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).cos()).collect();
        let cfg = KrylovConfig { restart_dim: 200, max_iters: 300, rtol: 1e-10 };
        let (_, st) = gmres_right(&a, &Identity(n), &b, &cfg);
        assert!(st.converged);
        assert!(st.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn stagnation_reports_not_converged() {
        // cyclic shift: GMRES makes no progress until n steps
        let n = 20;
        let op = FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
            for i in 0..x.len() {
                y[(i + 1) % x.len()] = x[i];
            }
        });
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        let cfg = KrylovConfig { restart_dim: 5, max_iters: 15, rtol: 1e-8 };
        let (_, st) = gmres_right(&op, &Identity(n), &b, &cfg);
        assert!(!st.converged);
        assert_eq!(st.iterations, 15);
        assert!(st.final_relres > cfg.rtol);
    }

    #[test]
    fn cg_solves_laplacian() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let st = pcg(&a, &Identity(n), &b, &mut x, 1e-12, 200);
        assert!(st.converged);
        assert!(st.iterations <= n);
    }

    #[test]
    fn config_validation() {
        assert!(KrylovConfig { restart_dim: 0, ..Default::default() }.validate().is_err());
        assert!(KrylovConfig { rtol: 1.5, ..Default::default() }.validate().is_err());
        assert!(KrylovConfig::default().validate().is_ok());
    }
}
