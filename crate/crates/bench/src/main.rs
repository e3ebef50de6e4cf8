use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use chsolver_bench::experiment::{run_experiment, run_table, RunConfig, CSV_HEADER};
use chsolver_bench::initial::{gen_initial, Shape};
use chsolver_bench::manifest::Manifest;
use chsolver_bench::plot::emit_plot_data;
use chsolver_bench::snapshot::{write_snapshot, Snapshot};
use chsolver_bench::spectrum::{random_mask, spectrum_report, MAX_LEVEL};
use chsolver_core::mesh::build_uniform_mesh;
use chsolver_core::precond::PrecondKind;
use chsolver_core::reduce::compute_truncation;
use clap::{Args, Parser, Subcommand};

/// Cahn-Hilliard obstacle-potential solver: single runs, sweeps and
/// diagnostics.
#[derive(Debug, Parser)]
#[command(version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep the ranges of a TOML manifest, one time step per combination.
    Table {
        #[arg(long)]
        manifest: PathBuf,
        /// Output CSV (default: stdout).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Convert snapshots and a sweep CSV to gnuplot columns.
    Plot {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Mesh level; the grid has 2^p cells per side.
    #[arg(long, default_value_t = 5)]
    p: u32,
    #[arg(long, default_value_t = 1e-2)]
    epsilon: f64,
    /// Time step (default: epsilon).
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value = "1", value_parser = ["1", "2"])]
    prec: String,
    #[arg(long, default_value = "square", value_parser = ["square", "circle"])]
    shape: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[arg(long, default_value_t = 1e-7)]
    outer_tol: f64,
    #[arg(long, default_value_t = 200)]
    gmres_restart: usize,
    #[arg(long, default_value_t = 300)]
    gmres_maxit: usize,
    #[arg(long, default_value_t = 1e-7)]
    gmres_rtol: f64,
    /// Output CSV (default: stdout).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Directory for `u` after every time step.
    #[arg(long)]
    snapshots: Option<PathBuf>,
    /// Print the dense spectrum report for the initial active set and five
    /// random active sets instead of time stepping.
    #[arg(long)]
    spectrum: bool,
    /// Print every outer iteration to stderr.
    #[arg(long, short)]
    verbose: bool,
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_config(a: &RunArgs) -> anyhow::Result<RunConfig> {
    let shape: Shape = a.shape.parse()?;
    let prec: PrecondKind = a.prec.parse()?;
    let mut cfg = RunConfig::new(shape, a.p, a.epsilon, prec);
    cfg.seed = a.seed;
    cfg.steps = a.steps;
    cfg.solver.tau = a.tau.unwrap_or(a.epsilon);
    cfg.solver.outer_tol = a.outer_tol;
    cfg.solver.krylov.restart_dim = a.gmres_restart;
    cfg.solver.krylov.max_iters = a.gmres_maxit;
    cfg.solver.krylov.rtol = a.gmres_rtol;
    cfg.solver.validate()?;
    Ok(cfg)
}

fn spectrum(cfg: &RunConfig) -> anyhow::Result<bool> {
    if cfg.p > MAX_LEVEL {
        bail!("--spectrum needs --p {MAX_LEVEL} or less");
    }
    let mesh = build_uniform_mesh(cfg.p)?;
    let u0 = gen_initial(cfg.shape, &mesh, cfg.seed);
    let mut masks = vec![compute_truncation(&u0)?];
    masks.extend((0..5).map(|i| random_mask(mesh.n_nodes(), 0.3, cfg.seed.wrapping_add(i))));
    let report = spectrum_report(cfg.p, cfg.solver.epsilon, cfg.solver.tau, &masks)?;
    print!("{report}");
    Ok(true)
}

fn single_run(cfg: &RunConfig, a: &RunArgs) -> anyhow::Result<bool> {
    let snapshots = a.snapshots.as_deref();
    let outcome = run_experiment(cfg, |state| {
        if let Some(dir) = snapshots {
            write_snapshot(dir, &Snapshot { k: state.k, time: state.time, u: state.u.clone() })?;
        }
        Ok(())
    })?;
    let mut out = output(a.csv.as_deref())?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in &outcome.records {
        writeln!(out, "{}", r.csv_row())?;
    }
    out.flush()?;
    for s in &outcome.summaries {
        if a.verbose {
            for (i, o) in s.outer.iter().enumerate() {
                eprintln!(
                    "  {}:{} residual {:.3e} active {} gmres {} rho {:.4}{} obstacle cycles {}",
                    s.k,
                    i + 1,
                    o.residual,
                    o.n_active,
                    o.gmres_iterations,
                    o.rho,
                    if o.rho_flag { " (flagged)" } else { "" },
                    o.obstacle_cycles
                );
            }
            if let Some(r) = s.residuals.last() {
                eprintln!("  {}:end residual {r:.3e}", s.k);
            }
        }
        eprintln!(
            "step {}: {} outer, {} gmres, mass {:.12e}, energy {:.8e}, max|u| {:.3}{}",
            s.k,
            s.outer_iterations,
            s.gmres_total,
            s.mass,
            s.energy,
            s.max_abs_u,
            if s.converged { "" } else { " (not converged)" }
        );
    }
    Ok(outcome.converged())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Some(Command::Table { manifest, csv }) => {
            let cfg = Manifest::load(&manifest)?.table_config()?;
            let mut out = output(csv.as_deref())?;
            let rows = run_table(&cfg, &mut out)?;
            Ok(rows.iter().all(|r| r.converged))
        }
        Some(Command::Plot { snapshots, table, out }) => {
            let res = emit_plot_data(&snapshots, table.as_deref(), &out)?;
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("wrote {} files to {}", res.files.len(), out.display());
            Ok(true)
        }
        None => {
            let cfg = run_config(&cli.run)?;
            if cli.run.spectrum {
                spectrum(&cfg)
            } else {
                single_run(&cfg, &cli.run)
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
