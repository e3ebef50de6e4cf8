//! Experiment driver for the solver suite: initial conditions, table
//! sweeps, the dense spectrum report and plot data.

pub mod experiment;
pub mod initial;
pub mod manifest;
pub mod plot;
pub mod snapshot;
pub mod spectrum;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Solver(#[from] chsolver_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
