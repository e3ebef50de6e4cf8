//! Finite element Cahn-Hilliard solver with an obstacle potential: mesh and
//! assembly, monotone multigrid for the box-constrained subproblems, and a
//! preconditioned nonsmooth Newton / Uzawa outer iteration.

pub mod amg;
pub mod dense;
pub mod error;
pub mod fem;
pub mod ic;
pub mod inner;
pub mod krylov;
pub mod linalg;
pub mod mesh;
pub mod mtx;
pub mod obstacle;
pub mod precond;
pub mod rank_one;
pub mod reduce;
pub mod sparse;
pub mod uzawa;

pub use error::{Error, Result};
