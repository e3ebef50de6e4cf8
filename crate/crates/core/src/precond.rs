//! Preconditioners for the scaled truncated saddle system.
//!
//! Preconditioner I is block diagonal,
//! `diag(T(K̄ + η^{-1/2}M)T + T̂, Q)` with `Q ≈ ηK̄ + η^{1/2}M`.
//! Preconditioner II is block lower triangular,
//! `[K̂̄ 0; B̂ −S̃]` with `S̃ = (M̂ + √η K̄) K̄⁻¹ (M̂ + √η K̄)` and `M̂ = TMT`.
//! Here `K̄ = K + m̂m̂ᵀ`, the (2,2) block of the split operator.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::dense::{general_eigenvalues, operator_to_dense, to_dense};
use crate::error::{Error, Result};
use crate::inner::{InnerConfig, InnerKind};
use crate::linalg::LinearOperator;
use crate::rank_one::RankOneSolver;
use crate::reduce::ReducedSystem;
use crate::sparse::{CsrMatrix, SparsePlusRankOne};

/// How the second block of Preconditioner I is truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QBlockForm {
    /// `T(ηK̄ + √ηM)T + T̂`, the same masking as the first block.
    Mirrored,
    /// `ηK̄ + √η TMT`: only the mass term, which stems from `B̂`, is
    /// truncated.
    MassTruncated,
    /// `ηK̄ + √ηM`, no truncation.
    Full,
    /// `ηK̄ + √η B̂ D⁻¹ B̂ᵀ` with `D` the lumped mass of the inactive nodes,
    /// which keeps the coupling of active nodes next to the interface.
    Coupled,
}

impl FromStr for QBlockForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mirrored" => Ok(Self::Mirrored),
            "mass-truncated" | "mass" => Ok(Self::MassTruncated),
            "full" => Ok(Self::Full),
            "coupled" => Ok(Self::Coupled),
            other => Err(Error::Config(format!("unknown Q-block form '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecondConfig {
    pub inner: InnerConfig,
    pub q_block: QBlockForm,
    /// Replace `M` by its lumped diagonal inside the blocks.
    pub lump_mass: bool,
    /// Run the two Preconditioner I block solves on separate threads from
    /// this many unknowns per block on.
    pub parallel_threshold: usize,
}

impl Default for PrecondConfig {
    fn default() -> Self {
        Self {
            inner: InnerConfig::default(),
            q_block: QBlockForm::MassTruncated,
            lump_mass: false,
            parallel_threshold: 20_000,
        }
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Config(format!("η must be positive, got {eta}")));
    }
    Ok(())
}

fn mass_of(red: &ReducedSystem, cfg: &PrecondConfig) -> CsrMatrix {
    if cfg.lump_mass {
        red.mass.lumped()
    } else {
        red.mass.clone()
    }
}

fn scaled_vec(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| s * x).collect()
}

/// The two Preconditioner I blocks with their rank-one parts factored.
pub fn prec1_blocks(red: &ReducedSystem, cfg: &PrecondConfig) -> Result<(SparsePlusRankOne, SparsePlusRankOne)> {
    check_eta(red.eta)?;
    let se = red.eta.sqrt();
    let keep = red.mask.inactive();
    let m = mass_of(red, cfg);
    let tmt = m.mask_symmetric(&keep, 0.0);
    let v_mass = if cfg.q_block == QBlockForm::Coupled { tmt.lumped() } else { tmt.clone() };
    let v = SparsePlusRankOne::new(red.k_hat.add(1.0, &v_mass, 1.0 / se), red.m_hat.clone());
    let q_sparse = match cfg.q_block {
        QBlockForm::Mirrored => red.stiffness.add(red.eta, &m, se).mask_symmetric(&keep, 1.0),
        QBlockForm::MassTruncated => red.stiffness.add(red.eta, &tmt, se),
        QBlockForm::Full => red.stiffness.add(red.eta, &m, se),
        QBlockForm::Coupled => red.stiffness.add(red.eta, &coupled_mass(&m, &keep), se),
    };
    let q = SparsePlusRankOne::new(q_sparse, scaled_vec(&red.m_hat, se));
    Ok((v, q))
}

/// `M T D⁻¹ T M` with `D` the row sums of `TMT`.
pub fn coupled_mass(m: &CsrMatrix, keep: &[bool]) -> CsrMatrix {
    let d = m.mask_symmetric(keep, 0.0).row_sums();
    let mut t = Vec::new();
    for k in (0..m.n_rows()).filter(|&k| keep[k]) {
        let (c, v) = m.row(k);
        for (&i, &a) in c.iter().zip(v) {
            for (&j, &b) in c.iter().zip(v) {
                t.push((i, j, a * b / d[k]));
            }
        }
    }
    CsrMatrix::from_triplets(m.n_rows(), m.n_cols(), &t)
}

#[derive(Debug)]
pub struct PrecondI {
    n: usize,
    v: RankOneSolver,
    q: RankOneSolver,
    parallel: bool,
}

pub fn prec1_build(red: &ReducedSystem, cfg: &PrecondConfig) -> Result<PrecondI> {
    let (v, q) = prec1_blocks(red, cfg)?;
    let n = red.dim();
    Ok(PrecondI {
        n,
        v: RankOneSolver::new(&v.sparse, v.factor, &cfg.inner)?,
        q: RankOneSolver::new(&q.sparse, q.factor, &cfg.inner)?,
        parallel: n >= cfg.parallel_threshold,
    })
}

impl PrecondI {
    pub fn inner_failures(&self) -> usize {
        self.v.inner().failures() + self.q.inner().failures()
    }
}

pub fn prec1_apply(p: &PrecondI, r: &[f64]) -> Vec<f64> {
    p.apply_vec(r)
}

impl LinearOperator for PrecondI {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn apply(&self, r: &[f64], x: &mut [f64]) {
        let (r1, r2) = r.split_at(self.n);
        let (x1, x2) = x.split_at_mut(self.n);
        if self.parallel {
            std::thread::scope(|s| {
                s.spawn(|| self.v.apply(r1, x1));
                self.q.apply(r2, x2);
            });
        } else {
            self.v.apply(r1, x1);
            self.q.apply(r2, x2);
        }
    }
}

/// `(K̂̄, M̂ + √η K̄, K̄)` for Preconditioner II.
pub fn prec2_parts(
    red: &ReducedSystem,
    cfg: &PrecondConfig,
) -> Result<(SparsePlusRankOne, SparsePlusRankOne, SparsePlusRankOne)> {
    check_eta(red.eta)?;
    let se = red.eta.sqrt();
    let keep = red.mask.inactive();
    let tmt = mass_of(red, cfg).mask_symmetric(&keep, 0.0);
    let g = SparsePlusRankOne::new(tmt.add(1.0, &red.stiffness, se), scaled_vec(&red.m_hat, se.sqrt()));
    let kbar = SparsePlusRankOne::new(red.stiffness.clone(), red.m_hat.clone());
    Ok((red.kbar_hat(), g, kbar))
}

#[derive(Debug)]
pub struct PrecondII {
    n: usize,
    k11: RankOneSolver,
    g: RankOneSolver,
    kbar: SparsePlusRankOne,
    b_hat: CsrMatrix,
}

pub fn prec2_build(red: &ReducedSystem, cfg: &PrecondConfig) -> Result<PrecondII> {
    let (k11, g, kbar) = prec2_parts(red, cfg)?;
    Ok(PrecondII {
        n: red.dim(),
        k11: RankOneSolver::new(&k11.sparse, k11.factor, &cfg.inner)?,
        g: RankOneSolver::new(&g.sparse, g.factor, &cfg.inner)?,
        kbar,
        b_hat: red.b_hat.clone(),
    })
}

impl PrecondII {
    pub fn inner_failures(&self) -> usize {
        self.k11.inner().failures() + self.g.inner().failures()
    }

    /// `S̃⁻¹ t = G⁻¹ K̄ G⁻¹ t` with `G = M̂ + √η K̄`.
    pub fn schur_inverse(&self, t: &[f64]) -> Vec<f64> {
        let z = self.g.apply_vec(t);
        self.g.apply_vec(&self.kbar.mul_vec(&z))
    }
}

pub fn prec2_apply(p: &PrecondII, r: &[f64]) -> Vec<f64> {
    p.apply_vec(r)
}

impl LinearOperator for PrecondII {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn apply(&self, r: &[f64], x: &mut [f64]) {
        let (r1, r2) = r.split_at(self.n);
        let (x1, x2) = x.split_at_mut(self.n);
        self.k11.apply(r1, x1);
        let mut t = self.b_hat.mul_vec(x1);
        t.iter_mut().zip(r2).for_each(|(t, r)| *t -= r);
        x2.copy_from_slice(&self.schur_inverse(&t));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecondKind {
    I,
    II,
}

impl FromStr for PrecondKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "I" | "i" => Ok(Self::I),
            "2" | "II" | "ii" => Ok(Self::II),
            other => Err(Error::Config(format!("unknown preconditioner '{other}' (expected 1 or 2)"))),
        }
    }
}

impl std::fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::I => "1",
            Self::II => "2",
        })
    }
}

#[derive(Debug)]
pub enum Preconditioner {
    I(PrecondI),
    II(PrecondII),
}

impl Preconditioner {
    pub fn build(kind: PrecondKind, red: &ReducedSystem, cfg: &PrecondConfig) -> Result<Self> {
        Ok(match kind {
            PrecondKind::I => Self::I(prec1_build(red, cfg)?),
            PrecondKind::II => Self::II(prec2_build(red, cfg)?),
        })
    }

    pub fn inner_failures(&self) -> usize {
        match self {
            Self::I(p) => p.inner_failures(),
            Self::II(p) => p.inner_failures(),
        }
    }
}

impl LinearOperator for Preconditioner {
    fn dim(&self) -> usize {
        match self {
            Self::I(p) => p.dim(),
            Self::II(p) => p.dim(),
        }
    }

    fn apply(&self, r: &[f64], x: &mut [f64]) {
        match self {
            Self::I(p) => p.apply(r, x),
            Self::II(p) => p.apply(r, x),
        }
    }
}

pub fn dense_of(a: &SparsePlusRankOne) -> DMatrix<f64> {
    let f = DVector::from_column_slice(&a.factor);
    to_dense(&a.sparse) + &f * f.transpose()
}

/// Spectrum of the Preconditioner I preconditioned operator, computed from
/// the symmetric form `L⁻¹ 𝒜 L⁻ᵀ` with `P = L Lᵀ`, which is similar to
/// `P⁻¹𝒜` and has the same (real) eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Prec1Spectrum {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    pub spectral_radius: f64,
    pub min_abs: f64,
    pub condition: f64,
}

/// Dense Preconditioner I analysis of `op` (the scaled or the split
/// operator of `red`).
pub fn prec1_spectrum(red: &ReducedSystem, cfg: &PrecondConfig, op: &dyn LinearOperator) -> Result<Prec1Spectrum> {
    let (v, q) = prec1_blocks(red, cfg)?;
    let n = red.dim();
    let chol = |a: DMatrix<f64>| {
        a.cholesky().ok_or_else(|| Error::Numerical("preconditioner block is not SPD".into()))
    };
    let lv = chol(dense_of(&v))?.l();
    let lq = chol(dense_of(&q))?.l();
    let mut l = DMatrix::zeros(2 * n, 2 * n);
    l.view_mut((0, 0), (n, n)).copy_from(&lv);
    l.view_mut((n, n), (n, n)).copy_from(&lq);
    let a = operator_to_dense(op);
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(2 * n, 2 * n))
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let s = &linv * a * linv.transpose();
    let ev = crate::dense::symmetric_eigenvalues(&s);
    let radius = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_abs = ev.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    Ok(Prec1Spectrum { eigenvalues: ev, spectral_radius: radius, min_abs, condition: radius / min_abs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prec2Spectrum {
    /// `(re, im)` eigenvalues of `P⁻¹𝒜`.
    pub eigenvalues: Vec<(f64, f64)>,
    /// Eigenvalues within the tolerance of 1.
    pub unit_count: usize,
    /// Untruncated node count `k`.
    pub k: usize,
}

/// Dense eigenvalues of Preconditioner II applied to `op`, with exact
/// inner solves. Only for small meshes.
pub fn spectrum_check_prec2(red: &ReducedSystem, op: &dyn LinearOperator, tol: f64) -> Result<Prec2Spectrum> {
    let cfg = PrecondConfig {
        inner: InnerConfig { kind: InnerKind::Dense, ..InnerConfig::default() },
        ..PrecondConfig::default()
    };
    let p = prec2_build(red, &cfg)?;
    let pinv = operator_to_dense(&p);
    let a = operator_to_dense(op);
    let ev = general_eigenvalues(&(pinv * a))?;
    let unit_count = ev.iter().filter(|(re, im)| (re - 1.0).hypot(*im) <= tol).count();
    Ok(Prec2Spectrum { eigenvalues: ev, unit_count, k: red.mask.n_inactive() })
}
