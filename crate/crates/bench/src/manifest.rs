//! TOML manifests describing a sweep.
//!
//! ```toml
//! shapes = ["square", "circle"]
//! levels = [5, 6]
//! epsilons = [1e-2, 1e-3]
//! precs = [1, 2]
//! seed = 1
//!
//! [gmres]
//! restart = 200
//! maxit = 300
//! rtol = 1e-7
//! ```

use std::path::Path;

use chsolver_core::precond::PrecondKind;
use serde::Deserialize;

use crate::experiment::{RunConfig, TableConfig};
use crate::initial::Shape;
use crate::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub shapes: Vec<String>,
    pub levels: Vec<u32>,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_precs")]
    pub precs: Vec<u8>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub outer_tol: Option<f64>,
    #[serde(default)]
    pub gmres: GmresSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmresSection {
    pub restart: Option<usize>,
    pub maxit: Option<usize>,
    pub rtol: Option<f64>,
}

fn default_precs() -> Vec<u8> {
    vec![1, 2]
}

fn default_seed() -> u64 {
    1
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BenchError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn table_config(&self) -> Result<TableConfig> {
        let empty = |name: &str| BenchError::Invalid(format!("manifest needs at least one entry in '{name}'"));
        let first_level = *self.levels.first().ok_or_else(|| empty("levels"))?;
        let first_eps = *self.epsilons.first().ok_or_else(|| empty("epsilons"))?;
        let shapes = self.shapes.iter().map(|s| s.parse()).collect::<Result<Vec<Shape>>>()?;
        let precs = self
            .precs
            .iter()
            .map(|p| p.to_string().parse().map_err(BenchError::from))
            .collect::<Result<Vec<PrecondKind>>>()?;
        let first_shape = *shapes.first().ok_or_else(|| empty("shapes"))?;
        let first_prec = *precs.first().ok_or_else(|| empty("precs"))?;
        let mut base = RunConfig::new(first_shape, first_level, first_eps, first_prec);
        base.seed = self.seed;
        if let Some(t) = self.outer_tol {
            base.solver.outer_tol = t;
        }
        let k = &mut base.solver.krylov;
        k.restart_dim = self.gmres.restart.unwrap_or(k.restart_dim);
        k.max_iters = self.gmres.maxit.unwrap_or(k.max_iters);
        k.rtol = self.gmres.rtol.unwrap_or(k.rtol);
        base.solver.validate()?;
        Ok(TableConfig { shapes, levels: self.levels.clone(), epsilons: self.epsilons.clone(), precs, base })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_example() {
        let m = Manifest::parse(
            "shapes = [\"square\", \"circle\"]\nlevels = [3, 4]\nepsilons = [1e-2]\nseed = 9\n[gmres]\nmaxit = 50\n",
        )
        .unwrap();
        let t = m.table_config().unwrap();
        assert_eq!(t.shapes, vec![Shape::Square, Shape::Circle]);
        assert_eq!(t.precs, vec![PrecondKind::I, PrecondKind::II]);
        assert_eq!(t.base.seed, 9);
        assert_eq!(t.base.solver.krylov.max_iters, 50);
        assert_eq!(t.base.solver.krylov.restart_dim, 200);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Manifest::parse("levels = [3]\n").is_err());
        assert!(Manifest::parse("shapes=[\"square\"]\nlevels=[3]\nepsilons=[0.1]\ncolour=1\n").is_err());
        let m = Manifest::parse("shapes=[\"hexagon\"]\nlevels=[3]\nepsilons=[0.1]\n").unwrap();
        assert!(m.table_config().is_err());
        let m = Manifest::parse("shapes=[\"square\"]\nlevels=[]\nepsilons=[0.1]\n").unwrap();
        assert!(m.table_config().is_err());
    }
}
