//! Single runs and parameter sweeps with per-outer-step GMRES statistics.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use chsolver_core::fem::assemble_system;
use chsolver_core::inner::InnerConfig;
use chsolver_core::mesh::build_uniform_mesh;
use chsolver_core::precond::PrecondKind;
use chsolver_core::uzawa::{gl_energy, mass, time_step, TimeStepConfig, UzawaSolver, UzawaState, UzawaStepRecord};

use crate::initial::{gen_initial, Shape};
use crate::{BenchError, Result};

pub const CSV_HEADER: &str = "shape,p,epsilon,tau,prec,step,its,time,converged";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub shape: Shape,
    pub p: u32,
    pub seed: u64,
    pub steps: usize,
    pub solver: TimeStepConfig,
}

impl RunConfig {
    /// One time step with `τ = ε` and inner tolerances chosen by level.
    pub fn new(shape: Shape, p: u32, epsilon: f64, prec: PrecondKind) -> Self {
        let mut solver = TimeStepConfig::new(epsilon);
        solver.prec = prec;
        solver.precond.inner = InnerConfig::for_level(p);
        Self { shape, p, seed: 1, steps: 1, solver }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepLabel {
    /// Outer iteration `i` (from 1) of time step `k` (from 1).
    Outer { k: usize, i: usize },
    Total { k: usize },
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepLabel::Outer { k, i } => write!(f, "{k}:{i}"),
            StepLabel::Total { k } => write!(f, "{k}:total"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub shape: Shape,
    pub p: u32,
    pub epsilon: f64,
    pub tau: f64,
    pub prec: PrecondKind,
    pub step: StepLabel,
    pub gmres_iterations: usize,
    pub wall_time_seconds: f64,
    pub converged: bool,
}

impl ExperimentRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{},{},{},{:.6},{}",
            self.shape,
            self.p,
            self.epsilon,
            self.tau,
            self.prec,
            self.step,
            self.gmres_iterations,
            self.wall_time_seconds,
            self.converged
        )
    }
}

/// Per-time-step physical diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSummary {
    pub k: usize,
    pub outer_iterations: usize,
    pub gmres_total: usize,
    pub converged: bool,
    pub mass: f64,
    pub energy: f64,
    /// `max |u|` after the step.
    pub max_abs_u: f64,
    pub wall_time: f64,
    pub outer: Vec<UzawaStepRecord>,
    /// Relative residual at every refresh, the last one after the final step.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<ExperimentRecord>,
    pub summaries: Vec<StepSummary>,
    pub initial_mass: f64,
    pub initial_energy: f64,
    pub state: UzawaState,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }

    /// GMRES iterations of the first outer step of the first time step.
    pub fn first_step_iterations(&self) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.step == StepLabel::Outer { k: 1, i: 1 })
            .map(|r| r.gmres_iterations)
    }

    pub fn total_iterations(&self, k: usize) -> Option<usize> {
        self.records.iter().find(|r| r.step == StepLabel::Total { k }).map(|r| r.gmres_iterations)
    }
}

/// Runs `cfg.steps` time steps from the seeded initial condition. `on_step`
/// sees the state after every time step (and once for `u⁰`).
pub fn run_experiment(cfg: &RunConfig, mut on_step: impl FnMut(&UzawaState) -> Result<()>) -> Result<RunOutcome> {
    if cfg.steps == 0 {
        return Err(BenchError::Invalid("at least one time step is needed".into()));
    }
    let mesh = build_uniform_mesh(cfg.p)?;
    let sys = assemble_system(&mesh, cfg.solver.epsilon, cfg.solver.tau)?;
    let solver = UzawaSolver::new(sys, cfg.solver)?;
    let mut state = UzawaState::new(gen_initial(cfg.shape, &mesh, cfg.seed))?;
    let initial_mass = mass(&solver.sys, &state.u);
    let initial_energy = gl_energy(&solver.sys, &state.u);
    on_step(&state)?;
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    let row = |step, its, time, converged| ExperimentRecord {
        shape: cfg.shape,
        p: cfg.p,
        epsilon: cfg.solver.epsilon,
        tau: cfg.solver.tau,
        prec: cfg.solver.prec,
        step,
        gmres_iterations: its,
        wall_time_seconds: time,
        converged,
    };
    for _ in 0..cfg.steps {
        let start = Instant::now();
        time_step(&solver, &mut state)?;
        let wall = start.elapsed().as_secs_f64();
        let k = state.k;
        for (i, s) in state.steps.iter().enumerate() {
            records.push(row(StepLabel::Outer { k, i: i + 1 }, s.gmres_iterations, s.gmres_time, s.gmres_converged));
        }
        records.push(row(StepLabel::Total { k }, state.gmres_total(), wall, state.converged));
        summaries.push(StepSummary {
            k,
            outer_iterations: state.i,
            gmres_total: state.gmres_total(),
            converged: state.converged,
            mass: mass(&solver.sys, &state.u),
            energy: gl_energy(&solver.sys, &state.u),
            max_abs_u: state.u.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            wall_time: wall,
            outer: state.steps.clone(),
            residuals: state.history.clone(),
        });
        on_step(&state)?;
    }
    Ok(RunOutcome { records, summaries, initial_mass, initial_energy, state })
}

/// Parameter ranges of a sweep. Every other setting comes from `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableConfig {
    pub shapes: Vec<Shape>,
    pub levels: Vec<u32>,
    pub epsilons: Vec<f64>,
    pub precs: Vec<PrecondKind>,
    pub base: RunConfig,
}

/// One time step for every combination; rows are streamed to `out` as CSV.
/// A failing run contributes a single non-converged total row.
pub fn run_table(cfg: &TableConfig, out: &mut dyn Write) -> Result<Vec<ExperimentRecord>> {
    writeln!(out, "{CSV_HEADER}")?;
    let mut all = Vec::new();
    for &p in &cfg.levels {
        for &epsilon in &cfg.epsilons {
            for &shape in &cfg.shapes {
                for &prec in &cfg.precs {
                    let mut solver = TimeStepConfig { epsilon, tau: epsilon, prec, ..cfg.base.solver };
                    solver.precond.inner = InnerConfig { rtol: InnerConfig::for_level(p).rtol, ..solver.precond.inner };
                    let run = RunConfig { shape, p, steps: 1, solver, ..cfg.base.clone() };
                    let rows = match run_experiment(&run, |_| Ok(())) {
                        Ok(o) => o.records,
                        Err(_) => vec![ExperimentRecord {
                            shape,
                            p,
                            epsilon,
                            tau: epsilon,
                            prec,
                            step: StepLabel::Total { k: 1 },
                            gmres_iterations: 0,
                            wall_time_seconds: 0.0,
                            converged: false,
                        }],
                    };
                    for r in &rows {
                        writeln!(out, "{}", r.csv_row())?;
                    }
                    out.flush()?;
                    all.extend(rows);
                }
            }
        }
    }
    Ok(all)
}
