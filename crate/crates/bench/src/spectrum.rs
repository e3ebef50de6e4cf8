//! Dense spectral diagnostics of the truncated system on small meshes.

use std::fmt;

use chsolver_core::dense::{symmetric_eigenvalues, to_dense};
use chsolver_core::fem::{assemble_system, SaddleSystem};
use chsolver_core::inner::{InnerConfig, InnerKind};
use chsolver_core::mesh::build_uniform_mesh;
use chsolver_core::precond::{dense_of, prec1_spectrum, spectrum_check_prec2, PrecondConfig};
use chsolver_core::reduce::{truncate_system, TruncationMask};
use nalgebra::DMatrix;
use rand_core::SeedableRng;
use rand_xoshiro::SplitMix64;

use crate::initial::unit_uniform;
use crate::{BenchError, Result};

/// Largest level for which the dense analysis is allowed.
pub const MAX_LEVEL: u32 = 5;

/// Tolerance for counting eigenvalues equal to one.
pub const UNIT_TOL: f64 = 1e-8;

/// Every node is active with probability `fraction`.
pub fn random_mask(n: usize, fraction: f64, seed: u64) -> TruncationMask {
    let mut rng = SplitMix64::seed_from_u64(seed);
    TruncationMask::from_active((0..n).map(|_| unit_uniform(&mut rng) < fraction).collect())
}

/// Worst violation of `λ_j(A) ≤ μ_j ≤ λ_{j+n−k}(A)`, where `μ` are the
/// eigenvalues of the principal submatrix of the inactive nodes. Zero when
/// the interlacing holds.
pub fn interlacing_violation(a: &DMatrix<f64>, mask: &TruncationMask) -> f64 {
    let idx: Vec<usize> = (0..mask.dim()).filter(|&i| !mask.is_active(i)).collect();
    if idx.is_empty() {
        return 0.0;
    }
    let sub = a.select_rows(&idx).select_columns(&idx);
    let lam = symmetric_eigenvalues(a);
    let mu = symmetric_eigenvalues(&sub);
    let shift = a.nrows() - idx.len();
    mu.iter()
        .enumerate()
        .map(|(j, &m)| (lam[j] - m).max(m - lam[j + shift]).max(0.0))
        .fold(0.0, f64::max)
}

/// Dense `S = C + B̂ Â⁻¹ B̂ᵀ`.
pub fn dense_schur(sys: &SaddleSystem, mask: &TruncationMask) -> Result<DMatrix<f64>> {
    let red = truncate_system(sys, mask)?;
    let a_inv = dense_of(&red.a_hat)
        .try_inverse()
        .ok_or_else(|| BenchError::Invalid("truncated block is singular".into()))?;
    let b = to_dense(&red.b_hat);
    Ok(to_dense(&red.c) + &b * a_inv * b.transpose())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskReport {
    pub n_active: usize,
    pub interlacing_violation: f64,
    pub k_hat_inv_min: f64,
    pub schur_asymmetry: f64,
    pub schur_min_eig: f64,
    pub prec1_radius: f64,
    pub prec1_condition: f64,
    pub prec2_unit_count: usize,
    /// Inactive node count.
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub p: u32,
    pub epsilon: f64,
    pub tau: f64,
    pub masks: Vec<MaskReport>,
}

pub fn mask_report(sys: &SaddleSystem, mask: &TruncationMask, cfg: &PrecondConfig) -> Result<MaskReport> {
    let red = truncate_system(sys, mask)?;
    let a = dense_of(&sys.a);
    // without active nodes K̂ = K is singular
    let k_hat_inv_min = if mask.n_active() == 0 {
        f64::NAN
    } else {
        to_dense(&red.k_hat)
            .try_inverse()
            .ok_or_else(|| BenchError::Invalid("truncated stiffness is singular".into()))?
            .min()
    };
    let s = dense_schur(sys, mask)?;
    let asym = (&s - s.transpose()).amax() / s.amax();
    let schur_min = symmetric_eigenvalues(&(0.5 * (&s + s.transpose())))[0];
    let (radius, condition, unit) = if mask.n_inactive() == 0 {
        (f64::NAN, f64::NAN, 0)
    } else {
        let op = red.scaled_operator();
        let p1 = prec1_spectrum(&red, cfg, &op)?;
        let p2 = spectrum_check_prec2(&red, &op, UNIT_TOL)?;
        (p1.spectral_radius, p1.condition, p2.unit_count)
    };
    Ok(MaskReport {
        n_active: mask.n_active(),
        interlacing_violation: interlacing_violation(&a, mask),
        k_hat_inv_min,
        schur_asymmetry: asym,
        schur_min_eig: schur_min,
        prec1_radius: radius,
        prec1_condition: condition,
        prec2_unit_count: unit,
        k: mask.n_inactive(),
    })
}

/// Dense analysis for every mask at level `p`.
pub fn spectrum_report(p: u32, epsilon: f64, tau: f64, masks: &[TruncationMask]) -> Result<SpectrumReport> {
    if p > MAX_LEVEL {
        return Err(BenchError::Invalid(format!("dense spectrum analysis needs p ≤ {MAX_LEVEL}, got {p}")));
    }
    let sys = assemble_system(&build_uniform_mesh(p)?, epsilon, tau)?;
    let cfg = PrecondConfig {
        inner: InnerConfig { kind: InnerKind::Dense, ..Default::default() },
        ..Default::default()
    };
    let masks = masks.iter().map(|m| mask_report(&sys, m, &cfg)).collect::<Result<_>>()?;
    Ok(SpectrumReport { p, epsilon, tau, masks })
}

pub const REPORT_HEADER: &str =
    "n_active,k,interlacing_violation,k_hat_inv_min,schur_asymmetry,schur_min_eig,prec1_radius,prec1_condition,prec2_unit_count";

impl fmt::Display for SpectrumReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# p={} epsilon={:e} tau={:e}", self.p, self.epsilon, self.tau)?;
        writeln!(f, "{REPORT_HEADER}")?;
        for m in &self.masks {
            writeln!(
                f,
                "{},{},{:.3e},{:.3e},{:.3e},{:.6e},{:.6},{:.6},{}",
                m.n_active,
                m.k,
                m.interlacing_violation,
                m.k_hat_inv_min,
                m.schur_asymmetry,
                m.schur_min_eig,
                m.prec1_radius,
                m.prec1_condition,
                m.prec2_unit_count
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_mask_is_deterministic() {
        let a = random_mask(81, 0.3, 5);
        assert_eq!(a, random_mask(81, 0.3, 5));
        assert!(a.n_active() > 5 && a.n_active() < 50);
    }

    #[test]
    fn too_large_level_is_rejected() {
        assert!(spectrum_report(MAX_LEVEL + 1, 0.1, 0.1, &[]).is_err());
    }
}
