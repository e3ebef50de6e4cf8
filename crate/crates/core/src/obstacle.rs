//! Monotone multigrid for box-constrained quadratic minimization
//!
//! ```text
//! min ½ vᵀAv − bᵀv   subject to   lower ≤ v ≤ upper
//! ```
//!
//! with `A` sparse plus a symmetric rank-one term. Coarse levels come from
//! the same greedy aggregation as the AMG preconditioner; coarse obstacles
//! are the max/min of the fine defect obstacles over each aggregate, so every
//! coarse correction is feasible and no V-cycle increases the energy.

use std::time::Instant;

use crate::amg::{aggregate, Aggregation};
use crate::error::{Error, Result};
use crate::krylov::SolveStats;
use crate::linalg::{dot, LinearOperator};
use crate::sparse::{CsrMatrix, SparsePlusRankOne, UNAGGREGATED};

#[derive(Debug, Clone, PartialEq)]
pub struct BoxConstraints {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxConstraints {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Contract("box bounds differ in length".into()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::Contract(format!("box component {i}: lower {} > upper {}", lower[i], upper[i])));
        }
        Ok(Self { lower, upper })
    }

    /// `[-bound, bound]` in every component.
    pub fn symmetric(n: usize, bound: f64) -> Self {
        Self { lower: vec![-bound; n], upper: vec![bound; n] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, &v)| self.lower[i] <= v && v <= self.upper[i])
    }

    pub fn project(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = clamp(*v, self.lower[i], self.upper[i]);
        }
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Contract("iterate and box differ in length".into()));
        }
        match (0..x.len()).find(|&i| !(self.lower[i] <= x[i] && x[i] <= self.upper[i])) {
            Some(i) => Err(Error::Contract(format!("iterate infeasible at component {i}: {}", x[i]))),
            None => Ok(()),
        }
    }
}

/// Exact assignment of the bound when violated.
#[inline]
fn clamp(v: f64, lo: f64, hi: f64) -> f64 {
    if v >= hi {
        hi
    } else if v <= lo {
        lo
    } else {
        v
    }
}

fn sweep(a: &SparsePlusRankOne, diag: &[f64], b: &[f64], lower: &[f64], upper: &[f64], x: &mut [f64]) {
    let f = &a.factor;
    let mut ftx = dot(f, x);
    for i in 0..x.len() {
        let d = diag[i];
        if d == 0.0 {
            continue;
        }
        let (cols, vals) = a.sparse.row(i);
        let mut ax = f[i] * ftx;
        for (&j, &v) in cols.iter().zip(vals) {
            ax += v * x[j];
        }
        let new = clamp(x[i] + (b[i] - ax) / d, lower[i], upper[i]);
        ftx += f[i] * (new - x[i]);
        x[i] = new;
    }
}

/// One forward projected Gauss-Seidel sweep. `x` must be feasible and stays
/// feasible; components that hit a bound are set to it exactly.
pub fn pgs_sweep(a: &SparsePlusRankOne, b: &[f64], bx: &BoxConstraints, x: &mut [f64]) -> Result<()> {
    if a.dim() != x.len() || b.len() != x.len() {
        return Err(Error::Contract("pgs_sweep: dimension mismatch".into()));
    }
    bx.check(x)?;
    sweep(a, &a.diagonal(), b, &bx.lower, &bx.upper, x);
    Ok(())
}

/// `max_i |x_i − proj(x_i − (Ax − b)_i)|`, zero exactly at the constrained
/// minimizer.
pub fn projected_residual(a: &SparsePlusRankOne, b: &[f64], bx: &BoxConstraints, x: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    projected_residual_from(&ax, b, &bx.lower, &bx.upper, x)
}

fn projected_residual_from(ax: &[f64], b: &[f64], lower: &[f64], upper: &[f64], x: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| (x[i] - clamp(x[i] - (ax[i] - b[i]), lower[i], upper[i])).abs())
        .fold(0.0, f64::max)
}

/// Coarse bounds: `lower_c = max{lower_j : P_ji ≠ 0}`,
/// `upper_c = min{upper_j : P_ji ≠ 0}`. Coarse components without any fine
/// node get `[0, 0]`, and so do components whose bounds cross.
pub fn restrict_obstacles(p: &CsrMatrix, lower: &[f64], upper: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nc = p.n_cols();
    let mut lo = vec![f64::NEG_INFINITY; nc];
    let mut hi = vec![f64::INFINITY; nc];
    let mut seen = vec![false; nc];
    for j in 0..p.n_rows() {
        let (cols, vals) = p.row(j);
        for (&i, &v) in cols.iter().zip(vals) {
            if v != 0.0 {
                lo[i] = lo[i].max(lower[j]);
                hi[i] = hi[i].min(upper[j]);
                seen[i] = true;
            }
        }
    }
    freeze(&mut lo, &mut hi, &seen);
    (lo, hi)
}

fn freeze(lo: &mut [f64], hi: &mut [f64], seen: &[bool]) {
    for i in 0..lo.len() {
        if !seen[i] || lo[i] > hi[i] {
            lo[i] = 0.0;
            hi[i] = 0.0;
        }
    }
}

fn restrict_obstacles_agg(agg: &Aggregation, lower: &[f64], upper: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nc = agg.n_coarse;
    let mut lo = vec![f64::NEG_INFINITY; nc];
    let mut hi = vec![f64::INFINITY; nc];
    let mut seen = vec![false; nc];
    for (j, &i) in agg.map.iter().enumerate() {
        if i != UNAGGREGATED {
            lo[i] = lo[i].max(lower[j]);
            hi[i] = hi[i].min(upper[j]);
            seen[i] = true;
        }
    }
    freeze(&mut lo, &mut hi, &seen);
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmgConfig {
    /// Projected Gauss-Seidel sweeps per level before the coarse correction.
    pub sweeps: usize,
    /// Sweeps after the coarse correction.
    pub post_sweeps: usize,
    /// Scale each coarse correction by the energy-minimizing step that
    /// keeps the iterate feasible.
    pub line_search: bool,
    pub coarse_tol: f64,
    pub coarse_max_sweeps: usize,
    pub max_levels: usize,
    pub min_coarse: usize,
    pub strength: f64,
}

impl Default for MmgConfig {
    fn default() -> Self {
        Self {
            sweeps: 3,
            post_sweeps: 3,
            line_search: true,
            coarse_tol: 1e-12,
            coarse_max_sweeps: 100,
            max_levels: 10,
            min_coarse: 50,
            strength: 0.08,
        }
    }
}

impl MmgConfig {
    /// Pre-smoothing only and unscaled coarse corrections.
    pub fn plain() -> Self {
        Self { post_sweeps: 0, line_search: false, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct ObstacleLevel {
    pub a: SparsePlusRankOne,
    diag: Vec<f64>,
    /// Aggregation of this level's nodes onto the next coarser level.
    pub to_coarse: Option<Aggregation>,
}

/// Level matrices, coarsest first and finest last.
#[derive(Debug, Clone)]
pub struct ObstacleHierarchy {
    pub levels: Vec<ObstacleLevel>,
    pub cfg: MmgConfig,
}

impl ObstacleHierarchy {
    pub fn build(a: &SparsePlusRankOne, cfg: MmgConfig) -> Result<Self> {
        if cfg.max_levels == 0 || cfg.sweeps == 0 {
            return Err(Error::Config("monotone multigrid needs a level and a sweep".into()));
        }
        let mut fine_first = Vec::new();
        let mut current = a.clone();
        loop {
            let n = current.dim();
            let diag = current.diagonal();
            if fine_first.len() + 1 >= cfg.max_levels || n <= cfg.min_coarse {
                fine_first.push(ObstacleLevel { a: current, diag, to_coarse: None });
                break;
            }
            let agg = aggregate(&current.sparse, cfg.strength);
            if agg.n_coarse == 0 || agg.n_coarse as f64 > 0.9 * n as f64 {
                fine_first.push(ObstacleLevel { a: current, diag, to_coarse: None });
                break;
            }
            let coarse = current.galerkin_aggregates(&agg.map, agg.n_coarse);
            fine_first.push(ObstacleLevel { a: current, diag, to_coarse: Some(agg) });
            current = coarse;
        }
        fine_first.reverse();
        Ok(Self { levels: fine_first, cfg })
    }

    /// Single-level hierarchy: cycles reduce to projected Gauss-Seidel.
    pub fn single_level(a: &SparsePlusRankOne, cfg: MmgConfig) -> Self {
        let diag = a.diagonal();
        Self { levels: vec![ObstacleLevel { a: a.clone(), diag, to_coarse: None }], cfg }
    }

    pub fn finest(&self) -> &SparsePlusRankOne {
        &self.levels.last().expect("non-empty hierarchy").a
    }

    pub fn dim(&self) -> usize {
        self.finest().dim()
    }

    /// Prolongation from level `l - 1` to level `l` (levels counted from
    /// the coarsest), as a matrix.
    pub fn prolongation(&self, l: usize) -> Option<CsrMatrix> {
        self.levels.get(l)?.to_coarse.as_ref().map(Aggregation::prolongation)
    }

    fn coarse_solve(&self, level: &ObstacleLevel, b: &[f64], lower: &[f64], upper: &[f64], x: &mut [f64]) {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = self.cfg.coarse_tol * scale.max(f64::MIN_POSITIVE);
        let mut ax = vec![0.0; x.len()];
        for _ in 0..self.cfg.coarse_max_sweeps {
            sweep(&level.a, &level.diag, b, lower, upper, x);
            level.a.apply(x, &mut ax);
            if projected_residual_from(&ax, b, lower, upper, x) <= tol {
                break;
            }
        }
    }

    /// One V-cycle. `u` must be feasible; the result is feasible and has
    /// energy no larger than `u`.
    pub fn vcycle(&self, u: &[f64], b: &[f64], bx: &BoxConstraints) -> Result<Vec<f64>> {
        let n = self.dim();
        if u.len() != n || b.len() != n || bx.dim() != n {
            return Err(Error::Contract("mmg_vcycle: dimension mismatch".into()));
        }
        bx.check(u)?;
        let mut x = u.to_vec();
        self.cycle_in_place(&mut x, b, bx);
        Ok(x)
    }

    fn cycle_in_place(&self, x: &mut [f64], b: &[f64], bx: &BoxConstraints) {
        self.level_cycle(self.levels.len() - 1, x, b, &bx.lower, &bx.upper);
    }

    /// Improves `v` for `min ½vᵀA_l v − bᵀv` over `[lo, hi]` on level `l`.
    /// Coarser levels work on the defect problem, starting from zero.
    fn level_cycle(&self, l: usize, v: &mut [f64], b: &[f64], lo: &[f64], hi: &[f64]) {
        let level = &self.levels[l];
        let Some(agg) = level.to_coarse.as_ref().filter(|_| l > 0) else {
            self.coarse_solve(level, b, lo, hi, v);
            return;
        };
        for _ in 0..self.cfg.sweeps {
            sweep(&level.a, &level.diag, b, lo, hi, v);
        }
        let av = level.a.mul_vec(v);
        let r: Vec<f64> = b.iter().zip(&av).map(|(b, a)| b - a).collect();
        let dl: Vec<f64> = lo.iter().zip(v.iter()).map(|(l, v)| l - v).collect();
        let du: Vec<f64> = hi.iter().zip(v.iter()).map(|(h, v)| h - v).collect();
        let mut rc = vec![0.0; agg.n_coarse];
        agg.restrict(&r, &mut rc);
        let (lc, hc) = restrict_obstacles_agg(agg, &dl, &du);
        let mut vc = vec![0.0; agg.n_coarse];
        self.level_cycle(l - 1, &mut vc, &rc, &lc, &hc);

        let mut c = vec![0.0; v.len()];
        agg.prolongate_add(&vc, &mut c);
        let mut t = 1.0;
        if self.cfg.line_search {
            // energy along v + t c is quadratic; stay inside the box
            let den = dot(&vc, &self.levels[l - 1].a.mul_vec(&vc));
            if den > 0.0 {
                let mut t_max = f64::INFINITY;
                for i in 0..v.len() {
                    if c[i] > 0.0 {
                        t_max = t_max.min((hi[i] - v[i]) / c[i]);
                    } else if c[i] < 0.0 {
                        t_max = t_max.min((lo[i] - v[i]) / c[i]);
                    }
                }
                t = (dot(&rc, &vc) / den).min(t_max).max(0.0);
            }
        }
        for i in 0..v.len() {
            if c[i] != 0.0 {
                v[i] = clamp(v[i] + t * c[i], lo[i], hi[i]);
            }
        }
        for _ in 0..self.cfg.post_sweeps {
            sweep(&level.a, &level.diag, b, lo, hi, v);
        }
    }

    /// V-cycles from `x0` (or the projection of zero) until the projected
    /// residual drops to `tol` or `max_cycles` is reached.
    pub fn solve(
        &self,
        b: &[f64],
        bx: &BoxConstraints,
        x0: Option<&[f64]>,
        tol: f64,
        max_cycles: usize,
    ) -> Result<(Vec<f64>, SolveStats)> {
        let start = Instant::now();
        let n = self.dim();
        if b.len() != n || bx.dim() != n {
            return Err(Error::Contract("solve_obstacle: dimension mismatch".into()));
        }
        let mut x = match x0 {
            Some(x0) => {
                bx.check(x0)?;
                x0.to_vec()
            }
            None => {
                let mut z = vec![0.0; n];
                bx.project(&mut z);
                z
            }
        };
        let a = self.finest();
        let mut stats = SolveStats::default();
        let mut res = projected_residual(a, b, bx, &x);
        stats.history.push(res);
        while res > tol && stats.iterations < max_cycles {
            self.cycle_in_place(&mut x, b, bx);
            stats.iterations += 1;
            res = projected_residual(a, b, bx, &x);
            stats.history.push(res);
        }
        stats.final_relres = res;
        stats.converged = res <= tol;
        stats.wall_time = start.elapsed().as_secs_f64();
        Ok((x, stats))
    }
}

/// Builds a hierarchy with default settings and solves from zero.
pub fn solve_obstacle(
    a: &SparsePlusRankOne,
    b: &[f64],
    bx: &BoxConstraints,
    tol: f64,
    max_cycles: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    ObstacleHierarchy::build(a, MmgConfig::default())?.solve(b, bx, None, tol, max_cycles)
}

/// Convenience wrapper of [`ObstacleHierarchy::vcycle`].
pub fn mmg_vcycle(h: &ObstacleHierarchy, u: &[f64], b: &[f64], bx: &BoxConstraints) -> Result<Vec<f64>> {
    h.vcycle(u, b, bx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_system;
    use crate::mesh::build_uniform_mesh;
    use proptest::prelude::*;

    fn one_by_one(a: f64) -> SparsePlusRankOne {
        SparsePlusRankOne::sparse_only(CsrMatrix::from_diagonal(&[a]))
    }

    fn p3_matrix() -> SparsePlusRankOne {
        assemble_system(&build_uniform_mesh(3).unwrap(), 1e-2, 1e-2).unwrap().a
    }

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    #[test]
    fn scalar_clamps_to_bound() {
        let a = one_by_one(2.0);
        let mut x = vec![0.0];
        pgs_sweep(&a, &[10.0], &BoxConstraints::symmetric(1, 1.0), &mut x).unwrap();
        assert_eq!(x, vec![1.0]);
    }

    #[test]
    fn wide_box_is_plain_gauss_seidel() {
        let t = [(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 5.0)];
        let a = CsrMatrix::from_triplets(3, 3, &t);
        let b = [1.0, 2.0, 3.0];
        let mut x = vec![0.1, -0.2, 0.3];
        let mut gs = x.clone();
        for i in 0..3 {
            let (c, v) = a.row(i);
            let s: f64 = c.iter().zip(v).filter(|(&j, _)| j != i).map(|(&j, &v)| v * gs[j]).sum();
            gs[i] = (b[i] - s) / a.get(i, i);
        }
        pgs_sweep(&SparsePlusRankOne::sparse_only(a), &b, &BoxConstraints::symmetric(3, 1e30), &mut x).unwrap();
        for (p, q) in x.iter().zip(&gs) {
            assert!((p - q).abs() <= 1e-15);
        }
    }

    #[test]
    fn infeasible_start_is_contract_error() {
        let a = one_by_one(1.0);
        let mut x = vec![2.0];
        assert!(matches!(pgs_sweep(&a, &[0.0], &BoxConstraints::symmetric(1, 1.0), &mut x), Err(Error::Contract(_))));
        assert!(BoxConstraints::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn sweep_decreases_energy_on_random_starts() {
        let a = p3_matrix();
        let n = a.dim();
        let mut rnd = lcg(7);
        let bx = BoxConstraints::symmetric(n, 1.0);
        for _ in 0..10 {
            let b: Vec<f64> = (0..n).map(|_| 0.1 * (rnd() - 0.5)).collect();
            let mut x: Vec<f64> = (0..n).map(|_| 2.0 * rnd() - 1.0).collect();
            let before = a.energy(&x, &b);
            pgs_sweep(&a, &b, &bx, &mut x).unwrap();
            assert!(a.energy(&x, &b) <= before + 1e-15);
            assert!(bx.contains(&x));
        }
    }

    #[test]
    fn restriction_rules() {
        let p = CsrMatrix::from_triplets(4, 2, &[(0, 0, 1.0), (1, 0, 1.0), (2, 1, 1.0), (3, 1, 1.0)]);
        let (lo, hi) = restrict_obstacles(&p, &[-1.0; 4], &[1.0; 4]);
        assert_eq!((lo, hi), (vec![-1.0; 2], vec![1.0; 2]));
        let lower = [-1.0, 0.5, -0.2, -1.0];
        let upper = [1.0, 1.0, 0.7, 0.9];
        let (lo, hi) = restrict_obstacles(&p, &lower, &upper);
        assert_eq!(lo, vec![0.5, -0.2]);
        assert_eq!(hi, vec![1.0, 0.7]);
        let id = CsrMatrix::identity(4);
        assert_eq!(restrict_obstacles(&id, &lower, &upper), (lower.to_vec(), upper.to_vec()));
        // crossing bounds freeze the component
        let (lo, hi) = restrict_obstacles(&p, &[0.5, -1.0, -1.0, -1.0], &[1.0, 0.2, 1.0, 1.0]);
        assert_eq!((lo[0], hi[0]), (0.0, 0.0));
    }

    #[test]
    fn hierarchy_is_galerkin() {
        let mesh = build_uniform_mesh(5).unwrap();
        let a = assemble_system(&mesh, 1e-2, 1e-2).unwrap().a;
        let h = ObstacleHierarchy::build(&a, MmgConfig::default()).unwrap();
        assert!(h.levels.len() >= 3);
        assert!(h.levels[0].a.dim() <= 50);
        for l in 1..h.levels.len() {
            let p = crate::dense::to_dense(&h.prolongation(l).unwrap());
            let fine = &h.levels[l].a;
            let fd = crate::dense::to_dense(&fine.sparse)
                + nalgebra::DVector::from_column_slice(&fine.factor) * nalgebra::DVector::from_column_slice(&fine.factor).transpose();
            let coarse = &h.levels[l - 1].a;
            let cd = crate::dense::to_dense(&coarse.sparse)
                + nalgebra::DVector::from_column_slice(&coarse.factor) * nalgebra::DVector::from_column_slice(&coarse.factor).transpose();
            let rap = p.transpose() * fd * &p;
            assert!((rap - &cd).amax() <= 1e-12 * cd.amax());
            for c in 0..p.ncols() {
                assert!(p.column(c).iter().any(|&v| v != 0.0));
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = p3_matrix();
        let bx = BoxConstraints::symmetric(a.dim(), 1.0);
        let (x, st) = solve_obstacle(&a, &vec![0.0; a.dim()], &bx, 1e-12, 10).unwrap();
        assert!(st.converged);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn strong_forcing_hits_upper_bound() {
        let a = p3_matrix();
        let n = a.dim();
        let bx = BoxConstraints::symmetric(n, 1.0);
        let b: Vec<f64> = (0..n).map(|i| if i < 20 { 10.0 } else { 0.0 }).collect();
        let (x, st) = solve_obstacle(&a, &b, &bx, 1e-12, 200).unwrap();
        assert!(st.converged);
        assert!(x[..20].iter().all(|&v| v == 1.0));
        // multiplier at the upper bound: b − Ax ≥ 0
        let ax = a.mul_vec(&x);
        assert!((0..20).all(|i| b[i] - ax[i] >= -1e-12));
    }

    #[test]
    fn fixed_point_and_single_level() {
        let a = p3_matrix();
        let n = a.dim();
        let bx = BoxConstraints::symmetric(n, 1.0);
        let mut rnd = lcg(3);
        let b: Vec<f64> = (0..n).map(|_| 0.2 * (rnd() - 0.5)).collect();
        let h = ObstacleHierarchy::build(&a, MmgConfig::default()).unwrap();
        let (x, st) = h.solve(&b, &bx, None, 1e-14, 500).unwrap();
        assert!(st.converged, "{st:?}");
        let y = h.vcycle(&x, &b, &bx).unwrap();
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() <= 1e-12));

        let single = ObstacleHierarchy::single_level(&a, MmgConfig::default());
        let x0: Vec<f64> = vec![0.0; n];
        let mut manual = x0.clone();
        let mut sweeps = 0;
        while sweeps < 100 {
            pgs_sweep(&a, &b, &bx, &mut manual).unwrap();
            sweeps += 1;
            if projected_residual(&a, &b, &bx, &manual) <= 1e-12 * crate::linalg::norm_inf(&b) {
                break;
            }
        }
        assert_eq!(single.vcycle(&x0, &b, &bx).unwrap(), manual);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn vcycles_feasible_and_monotone(seed in any::<u64>(), scale in 1e-3f64..1.0) {
            let a = p3_matrix();
            let n = a.dim();
            let mut rnd = lcg(seed);
            let lower: Vec<f64> = (0..n).map(|_| -1.0 + 0.5 * rnd()).collect();
            let upper: Vec<f64> = lower.iter().map(|l| l + 0.1 + rnd()).collect();
            let bx = BoxConstraints::new(lower, upper).unwrap();
            let b: Vec<f64> = (0..n).map(|_| scale * (rnd() - 0.5)).collect();
            let h = ObstacleHierarchy::build(&a, MmgConfig { min_coarse: 10, ..MmgConfig::default() }).unwrap();
            let mut x = vec![0.0; n];
            bx.project(&mut x);
            let mut e = a.energy(&x, &b);
            for _ in 0..5 {
                x = h.vcycle(&x, &b, &bx).unwrap();
                prop_assert!(bx.contains(&x));
                let e2 = a.energy(&x, &b);
                prop_assert!(e2 <= e + 1e-14 * e.abs().max(1e-300));
                e = e2;
            }
        }
    }
}
