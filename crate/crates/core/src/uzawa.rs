//! Preconditioned Uzawa (nonsmooth Newton–Schur) iteration for one implicit
//! Cahn-Hilliard time step, and the time stepping built on it.
//!
//! For `f = M u^{k−1}` and `g = M u^{k−1}` the step solves
//! `u = argmin_{|v|≤1} ½vᵀAv − (f − Bᵀw)ᵀv` and `Bu − Cw = g`.
//! The dual residual `R(w) = B u(w) − C w − g` is the gradient of the concave
//! dual function, so the outer loop is an ascent method along Newton
//! directions `d = S⁻¹R` obtained from the truncated saddle system.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::fem::SaddleSystem;
use crate::krylov::{gmres_right, pcg, KrylovConfig};
use crate::linalg::{axpy, dot, norm2, norm_inf, Identity};
use crate::obstacle::{BoxConstraints, MmgConfig, ObstacleHierarchy};
use crate::precond::{PrecondConfig, PrecondKind, Preconditioner};
use crate::reduce::{compute_truncation, scale_variables, truncate_system, TruncationMask};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStepConfig {
    pub epsilon: f64,
    pub tau: f64,
    /// Stop when `‖R‖₂ ≤ outer_tol ‖g‖₂`.
    pub outer_tol: f64,
    /// ... and `|𝟏ᵀR| ≤ mass_tol · 𝟏ᵀM𝟏`.
    pub mass_tol: f64,
    pub max_outer: usize,
    pub bisection_budget: usize,
    pub rho_max: f64,
    /// Accept `ρ = 1` when `|φ'(1)| ≤ unit_step_tol · φ'(0)`.
    pub unit_step_tol: f64,
    pub prec: PrecondKind,
    pub precond: PrecondConfig,
    pub krylov: KrylovConfig,
    pub mmg: MmgConfig,
    /// Obstacle solves stop at projected residual `forcing · ‖R‖∞`.
    pub obstacle_forcing: f64,
    /// Lower limit of the obstacle tolerance, relative to `‖f‖∞`.
    pub obstacle_floor: f64,
    pub obstacle_max_cycles: usize,
    /// V-cycle cap for the obstacle solves inside the step-length search.
    pub line_search_cycles: usize,
    /// Return an error instead of a flagged state when a step fails.
    pub abort_on_failure: bool,
}

impl TimeStepConfig {
    /// Defaults with `τ = ε`.
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            tau: epsilon,
            outer_tol: 1e-7,
            mass_tol: 1e-11,
            max_outer: 100,
            bisection_budget: 10,
            rho_max: 2.0,
            unit_step_tol: 1e-3,
            prec: PrecondKind::I,
            precond: PrecondConfig::default(),
            krylov: KrylovConfig::default(),
            mmg: MmgConfig::default(),
            obstacle_forcing: 1e-6,
            obstacle_floor: 1e-13,
            obstacle_max_cycles: 1000,
            line_search_cycles: 30,
            abort_on_failure: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        pos("epsilon", self.epsilon)?;
        pos("tau", self.tau)?;
        pos("outer_tol", self.outer_tol)?;
        pos("mass_tol", self.mass_tol)?;
        pos("obstacle_forcing", self.obstacle_forcing)?;
        pos("obstacle_floor", self.obstacle_floor)?;
        if !(0.0..1.0).contains(&self.unit_step_tol) {
            return Err(Error::Config(format!("unit_step_tol must lie in [0, 1), got {}", self.unit_step_tol)));
        }
        if !(self.rho_max >= 1.0) {
            return Err(Error::Config(format!("rho_max must be at least 1, got {}", self.rho_max)));
        }
        if self.max_outer == 0 || self.obstacle_max_cycles == 0 || self.line_search_cycles == 0 {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        self.krylov.validate()
    }
}

/// Diagnostics of one outer step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UzawaStepRecord {
    /// `‖R‖₂ / ‖g‖₂` before the step.
    pub residual: f64,
    pub n_active: usize,
    pub gmres_iterations: usize,
    pub gmres_converged: bool,
    pub gmres_time: f64,
    pub rho: f64,
    /// No sign change of the directional derivative was found.
    pub rho_flag: bool,
    /// Every node was active; the direction came from the fallback system.
    pub singular: bool,
    pub obstacle_cycles: usize,
    pub inner_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UzawaState {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    /// Time index of `u`.
    pub k: usize,
    /// Outer iterations spent on the current time step.
    pub i: usize,
    /// Relative residuals of the current time step.
    pub history: Vec<f64>,
    pub steps: Vec<UzawaStepRecord>,
    /// The last time step met the stopping rule.
    pub converged: bool,
    /// Some step fell back to a flagged path.
    pub flagged: bool,
    pub time: f64,
}

impl UzawaState {
    pub fn new(u0: Vec<f64>) -> Result<Self> {
        let n = u0.len();
        BoxConstraints::symmetric(n, 1.0).check(&u0)?;
        Ok(Self {
            u: u0,
            w: vec![0.0; n],
            k: 0,
            i: 0,
            history: Vec::new(),
            steps: Vec::new(),
            converged: true,
            flagged: false,
            time: 0.0,
        })
    }

    pub fn gmres_total(&self) -> usize {
        self.steps.iter().map(|s| s.gmres_iterations).sum()
    }
}

/// Data of the time step being solved.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRhs {
    pub u_prev: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl StepRhs {
    pub fn new(sys: &SaddleSystem, u_prev: &[f64]) -> Self {
        let f = sys.mass.mul_vec(u_prev);
        Self { u_prev: u_prev.to_vec(), g: f.clone(), f }
    }
}

/// System, obstacle hierarchy and configuration of one run.
#[derive(Debug)]
pub struct UzawaSolver {
    pub sys: SaddleSystem,
    pub cfg: TimeStepConfig,
    pub hierarchy: ObstacleHierarchy,
    bounds: BoxConstraints,
}

impl UzawaSolver {
    pub fn new(sys: SaddleSystem, cfg: TimeStepConfig) -> Result<Self> {
        cfg.validate()?;
        if (sys.epsilon - cfg.epsilon).abs() > 1e-14 * cfg.epsilon || (sys.tau - cfg.tau).abs() > 1e-14 * cfg.tau {
            return Err(Error::Config("system and time step configuration disagree on ε or τ".into()));
        }
        let hierarchy = ObstacleHierarchy::build(&sys.a, cfg.mmg)?;
        let bounds = BoxConstraints::symmetric(sys.dim(), 1.0);
        Ok(Self { sys, cfg, hierarchy, bounds })
    }

    pub fn dim(&self) -> usize {
        self.sys.dim()
    }

    /// `R = Bu − Cw − g`.
    pub fn residual(&self, rhs: &StepRhs, u: &[f64], w: &[f64]) -> Vec<f64> {
        let mut r = self.sys.mass.mul_vec(u);
        self.sys.c.spmv_add(-1.0, w, &mut r);
        axpy(-1.0, &rhs.g, &mut r);
        r
    }

    fn residual_scale(&self, rhs: &StepRhs) -> f64 {
        let g = norm2(&rhs.g);
        if g > 0.0 {
            g
        } else {
            norm2(&self.sys.mean)
        }
    }

    fn obstacle_tol(&self, rhs: &StepRhs, r_inf: f64) -> f64 {
        let floor = self.cfg.obstacle_floor * norm_inf(&rhs.f).max(f64::MIN_POSITIVE);
        (self.cfg.obstacle_forcing * r_inf).max(floor)
    }

    /// `u(w)` from the warm start `u0`.
    pub fn obstacle_solve(
        &self,
        rhs: &StepRhs,
        w: &[f64],
        u0: &[f64],
        tol: f64,
        max_cycles: usize,
    ) -> Result<(Vec<f64>, usize, bool)> {
        let mut b = rhs.f.clone();
        self.sys.mass.spmv_add(-1.0, w, &mut b);
        let (u, st) = self.hierarchy.solve(&b, &self.bounds, Some(u0), tol, max_cycles)?;
        Ok((u, st.iterations, st.converged))
    }

    /// Negated dual function `J(w) = −min_u L(u, w)` evaluated at the
    /// minimizer `u` of the Lagrangian; convex, with gradient `−R`.
    pub fn dual_energy(&self, rhs: &StepRhs, u: &[f64], w: &[f64]) -> f64 {
        let au = self.sys.a.mul_vec(u);
        let bu = self.sys.mass.mul_vec(u);
        let cw = self.sys.c.mul_vec(w);
        let lag = 0.5 * dot(u, &au) - dot(&rhs.f, u) + dot(w, &bu) - 0.5 * dot(w, &cw) - dot(&rhs.g, w);
        -lag
    }

    /// Newton direction `d` with `S d = R` from the truncated system.
    /// Returns `(d, gmres iterations, gmres converged, singular, inner
    /// failures, gmres time)`.
    fn direction(&self, mask: &TruncationMask, r: &[f64]) -> Result<(Vec<f64>, usize, bool, bool, usize, f64)> {
        let start = Instant::now();
        let n = self.dim();
        if mask.n_inactive() == 0 {
            // S = C is singular; take (C + M) d = R instead
            let a = self.sys.c.add(1.0, &self.sys.mass, 1.0);
            let mut d = vec![0.0; n];
            let st = pcg(&a, &Identity(n), r, &mut d, self.cfg.krylov.rtol, 10 * n.max(100));
            return Ok((d, st.iterations, st.converged, true, 0, start.elapsed().as_secs_f64()));
        }
        let red = truncate_system(&self.sys, mask)?;
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let (b, scaling) = scale_variables(&red, &neg_r)?;
        let op = red.scaled_operator();
        let prec = Preconditioner::build(self.cfg.prec, &red, &self.cfg.precond)?;
        let (x, st) = gmres_right(&op, &prec, &b, &self.cfg.krylov);
        let (_, d) = scaling.back_map(&x);
        Ok((d, st.iterations, st.converged, false, prec.inner_failures(), start.elapsed().as_secs_f64()))
    }
}

/// Result of the step-length search.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLength {
    pub rho: f64,
    /// No sign change in `[0, ρ_max]`; `ρ = 1` was returned.
    pub flag: bool,
    /// The obstacle solution at the last evaluated step length, a warm
    /// start for the next outer iteration.
    pub u: Vec<f64>,
    pub u_rho: f64,
    pub obstacle_cycles: usize,
}

/// Step length along `d` from the root of `φ'(ρ) = ⟨R(w + ρd), d⟩` by
/// bisection. `φ'` is non-increasing because the dual function is concave.
pub fn bisection_step_length(
    solver: &UzawaSolver,
    rhs: &StepRhs,
    state: &UzawaState,
    d: &[f64],
    budget: usize,
) -> Result<StepLength> {
    if d.iter().all(|&v| v == 0.0) {
        return Err(Error::Contract("step length needs a nonzero direction".into()));
    }
    let r0 = solver.residual(rhs, &state.u, &state.w);
    let tol = solver.obstacle_tol(rhs, norm_inf(&r0));
    let cap = solver.cfg.line_search_cycles;
    let mut cycles = 0;
    let mut dphi = |rho: f64, warm: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut w = state.w.clone();
        axpy(rho, d, &mut w);
        let (u, c, _) = solver.obstacle_solve(rhs, &w, warm, tol, cap)?;
        cycles += c;
        Ok((dot(&solver.residual(rhs, &u, &w), d), u))
    };
    let phi0 = dot(&r0, d);
    let (phi1, u1) = dphi(1.0, &state.u)?;
    if phi1.abs() <= solver.cfg.unit_step_tol * phi0.abs() {
        return Ok(StepLength { rho: 1.0, flag: false, u: u1, u_rho: 1.0, obstacle_cycles: cycles });
    }
    let (mut lo, mut hi, mut u_lo) = if phi1 < 0.0 {
        (0.0, 1.0, state.u.clone())
    } else {
        let (phim, _) = dphi(solver.cfg.rho_max, &u1)?;
        if phim > 0.0 {
            return Ok(StepLength { rho: 1.0, flag: true, u: u1, u_rho: 1.0, obstacle_cycles: cycles });
        }
        (1.0, solver.cfg.rho_max, u1)
    };
    let mut last = (0.0, state.u.clone());
    for _ in 0..budget {
        let mid = 0.5 * (lo + hi);
        let (p, u) = dphi(mid, &u_lo)?;
        if p == 0.0 {
            return Ok(StepLength { rho: mid, flag: false, u, u_rho: mid, obstacle_cycles: cycles });
        }
        if p > 0.0 {
            lo = mid;
            u_lo.clone_from(&u);
        } else {
            hi = mid;
        }
        last = (mid, u);
    }
    let (u_rho, u) = last;
    Ok(StepLength { rho: 0.5 * (lo + hi), flag: false, u, u_rho, obstacle_cycles: cycles })
}

/// Refreshes `u = u(w)` and returns the residual.
fn refresh(solver: &UzawaSolver, rhs: &StepRhs, state: &mut UzawaState, r_prev_inf: f64) -> Result<(Vec<f64>, usize, bool)> {
    let tol = solver.obstacle_tol(rhs, r_prev_inf);
    let (u, cycles, ok) = solver.obstacle_solve(rhs, &state.w, &state.u, tol, solver.cfg.obstacle_max_cycles)?;
    state.u = u;
    Ok((solver.residual(rhs, &state.u, &state.w), cycles, ok))
}

/// Steps (b)–(e) from a refreshed state with residual `r`.
fn advance(solver: &UzawaSolver, rhs: &StepRhs, state: &mut UzawaState, r: &[f64], rec: &mut UzawaStepRecord) -> Result<()> {
    let mask = compute_truncation(&state.u)?;
    rec.n_active = mask.n_active();
    let (d, its, ok, singular, fails, t) = solver.direction(&mask, r)?;
    rec.gmres_iterations = its;
    rec.gmres_converged = ok;
    rec.singular = singular;
    rec.inner_failures = fails;
    rec.gmres_time = t;
    if !ok || singular || fails > 0 {
        state.flagged = true;
    }
    if d.iter().all(|&v| v == 0.0) {
        rec.rho = 0.0;
        return Ok(());
    }
    let sl = bisection_step_length(solver, rhs, state, &d, solver.cfg.bisection_budget)?;
    rec.rho = sl.rho;
    rec.rho_flag = sl.flag;
    rec.obstacle_cycles += sl.obstacle_cycles;
    if sl.flag {
        state.flagged = true;
    }
    axpy(sl.rho, &d, &mut state.w);
    if sl.u_rho == sl.rho {
        state.u = sl.u;
    }
    Ok(())
}

/// One outer iteration: obstacle solve, truncation, reduced solve, step
/// length and update of `w`.
pub fn uzawa_iterate(solver: &UzawaSolver, rhs: &StepRhs, state: &mut UzawaState) -> Result<UzawaStepRecord> {
    let r_inf = state
        .steps
        .last()
        .map(|_| norm_inf(&solver.residual(rhs, &state.u, &state.w)))
        .unwrap_or_else(|| norm_inf(&rhs.g));
    let (r, cycles, _) = refresh(solver, rhs, state, r_inf)?;
    let mut rec = UzawaStepRecord { residual: norm2(&r) / solver.residual_scale(rhs), obstacle_cycles: cycles, ..Default::default() };
    state.history.push(rec.residual);
    advance(solver, rhs, state, &r, &mut rec)?;
    state.i += 1;
    state.steps.push(rec.clone());
    Ok(rec)
}

/// Solves time step `k + 1` from `state.u = u^k`.
pub fn time_step(solver: &UzawaSolver, state: &mut UzawaState) -> Result<()> {
    let rhs = StepRhs::new(&solver.sys, &state.u);
    state.i = 0;
    state.history.clear();
    state.steps.clear();
    let scale = solver.residual_scale(&rhs);
    let total_mass: f64 = solver.sys.mean.iter().sum();
    let mut r_inf = norm_inf(&rhs.g).max(f64::MIN_POSITIVE);
    let mut converged = false;
    loop {
        let (r, cycles, obstacle_ok) = refresh(solver, &rhs, state, r_inf)?;
        let rel = norm2(&r) / scale;
        let mass_defect = r.iter().sum::<f64>().abs();
        state.history.push(rel);
        r_inf = norm_inf(&r);
        if obstacle_ok && rel <= solver.cfg.outer_tol && mass_defect <= solver.cfg.mass_tol * total_mass {
            converged = true;
            break;
        }
        if state.i >= solver.cfg.max_outer {
            break;
        }
        let mut rec = UzawaStepRecord { residual: rel, obstacle_cycles: cycles, ..Default::default() };
        advance(solver, &rhs, state, &r, &mut rec)?;
        state.i += 1;
        state.steps.push(rec);
    }
    state.converged = converged;
    if !converged {
        state.flagged = true;
        if solver.cfg.abort_on_failure {
            return Err(Error::Numerical(format!(
                "time step {} did not converge in {} outer iterations (residual {:.3e})",
                state.k + 1,
                state.i,
                state.history.last().copied().unwrap_or(f64::NAN)
            )));
        }
    }
    state.k += 1;
    state.time += solver.cfg.tau;
    Ok(())
}

/// `ε/2 uᵀKu + ½ (𝟏ᵀM𝟏 − uᵀMu)`.
pub fn gl_energy(sys: &SaddleSystem, u: &[f64]) -> f64 {
    let ku = sys.stiffness.mul_vec(u);
    let mu = sys.mass.mul_vec(u);
    let total: f64 = sys.mean.iter().sum();
    0.5 * sys.epsilon * dot(u, &ku) + 0.5 * (total - dot(u, &mu))
}

/// `⟨u, 𝟏⟩_M`.
pub fn mass(sys: &SaddleSystem, u: &[f64]) -> f64 {
    dot(&sys.mean, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_system;
    use crate::mesh::build_uniform_mesh;

    fn solver(p: u32, eps: f64) -> UzawaSolver {
        let sys = assemble_system(&build_uniform_mesh(p).unwrap(), eps, eps).unwrap();
        UzawaSolver::new(sys, TimeStepConfig::new(eps)).unwrap()
    }

    fn bump(p: u32) -> Vec<f64> {
        let mesh = build_uniform_mesh(p).unwrap();
        mesh.coords
            .iter()
            .map(|[x, y]| {
                let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
                (1.0 - 8.0 * (r - 0.1).max(0.0)).clamp(-1.0, 1.0)
            })
            .collect()
    }

    #[test]
    fn uniform_state_is_stationary() {
        let s = solver(3, 0.05);
        let n = s.dim();
        let mut st = UzawaState::new(vec![0.3; n]).unwrap();
        time_step(&s, &mut st).unwrap();
        assert!(st.converged);
        for v in &st.u {
            assert!((v - 0.3).abs() <= 1e-9, "{v}");
        }
        for v in &st.w {
            assert!((v - 0.3 * 0.95).abs() <= 1e-8, "{v}");
        }
    }

    #[test]
    fn sign_of_g_matches_stationary_state() {
        // with g = −M u^{k−1} the uniform state would not be a fixed point
        let s = solver(2, 0.1);
        let n = s.dim();
        let c = -0.4;
        let u = vec![c; n];
        let w = vec![c * 0.9; n];
        let rhs = StepRhs::new(&s.sys, &u);
        assert!(norm2(&s.residual(&rhs, &u, &w)) <= 1e-15);
        let mut flipped = rhs.clone();
        flipped.g.iter_mut().for_each(|v| *v = -*v);
        assert!(norm2(&s.residual(&flipped, &u, &w)) > 1e-3);
        // first order condition A u + Bᵀ w = f on the inactive set
        let mut kkt = s.sys.a.mul_vec(&u);
        s.sys.mass.spmv_add(1.0, &w, &mut kkt);
        axpy(-1.0, &rhs.f, &mut kkt);
        assert!(norm_inf(&kkt) <= 1e-15);
    }

    #[test]
    fn time_step_conserves_mass_and_energy_decreases() {
        let mut s = solver(4, 0.05);
        s.cfg.outer_tol = 1e-10;
        let mut st = UzawaState::new(bump(4)).unwrap();
        let m0 = mass(&s.sys, &st.u);
        let e0 = gl_energy(&s.sys, &st.u);
        time_step(&s, &mut st).unwrap();
        assert!(st.converged, "{:?}", st.history);
        assert!((mass(&s.sys, &st.u) - m0).abs() <= 1e-10);
        assert!(gl_energy(&s.sys, &st.u) <= e0);
        assert!(st.u.iter().all(|v| v.abs() <= 1.0));
        assert_eq!(st.k, 1);
    }

    #[test]
    fn fixed_point_is_kept() {
        let s = solver(3, 0.05);
        let mut st = UzawaState::new(bump(3)).unwrap();
        time_step(&s, &mut st).unwrap();
        // restart the same step from its converged solution
        let prev = {
            let mut p = UzawaState::new(bump(3)).unwrap();
            p.w = st.w.clone();
            p
        };
        let rhs = StepRhs::new(&s.sys, &prev.u);
        let mut again = prev.clone();
        again.u = st.u.clone();
        let rec = uzawa_iterate(&s, &rhs, &mut again).unwrap();
        assert!(rec.residual <= s.cfg.outer_tol);
        assert!(norm_inf(&crate::linalg::sub(&again.w, &st.w)) <= 1e-6 * norm_inf(&st.w));
    }

    #[test]
    fn dual_energy_decreases_along_steps() {
        let s = solver(3, 0.05);
        let st0 = UzawaState::new(bump(3)).unwrap();
        let rhs = StepRhs::new(&s.sys, &st0.u);
        let mut st = st0.clone();
        let mut prev = f64::INFINITY;
        for _ in 0..6 {
            let rec = uzawa_iterate(&s, &rhs, &mut st).unwrap();
            let (u, _, _) = s.obstacle_solve(&rhs, &st.w, &st.u, 1e-14, 1000).unwrap();
            let j = s.dual_energy(&rhs, &u, &st.w);
            assert!(j <= prev + 1e-14 * prev.abs().max(1.0), "{j} > {prev}");
            prev = j;
            if rec.residual < 1e-12 {
                break;
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut c = TimeStepConfig::new(1e-2);
        assert!(c.validate().is_ok());
        c.rho_max = 0.5;
        assert!(c.validate().is_err());
        let c = TimeStepConfig { tau: 0.0, ..TimeStepConfig::new(1e-2) };
        assert!(c.validate().is_err());
    }
}
