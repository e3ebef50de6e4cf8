//! Unsmoothed aggregation algebraic multigrid.
//!
//! Aggregates are grown greedily around seed nodes over the strong
//! connections of the matrix graph; the prolongation is piecewise constant
//! over aggregates and coarse operators are Galerkin products. Applying the
//! hierarchy performs one symmetric V-cycle from a zero initial guess, so it
//! can serve as a CG preconditioner.

use nalgebra::{DMatrix, DVector};

use crate::dense::{symmetric_pseudo_inverse, to_dense};
use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::sparse::{CsrMatrix, UNAGGREGATED};

/// Coarsest levels up to this size are solved with a dense pseudo-inverse.
const DENSE_COARSE_LIMIT: usize = 1500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmgConfig {
    pub max_levels: usize,
    pub min_coarse: usize,
    pub strength: f64,
    pub omega: f64,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
}

impl Default for AmgConfig {
    fn default() -> Self {
        Self { max_levels: 10, min_coarse: 50, strength: 0.08, omega: 2.0 / 3.0, pre_sweeps: 2, post_sweeps: 2 }
    }
}

/// Aggregate index per fine node; [`UNAGGREGATED`] for nodes without strong
/// neighbours, which the smoother alone takes care of.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    pub map: Vec<usize>,
    pub n_coarse: usize,
}

impl Aggregation {
    /// Piecewise-constant prolongation `P` (fine × coarse).
    pub fn prolongation(&self) -> CsrMatrix {
        let t: Vec<_> = self
            .map
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != UNAGGREGATED)
            .map(|(i, &a)| (i, a, 1.0))
            .collect();
        CsrMatrix::from_triplets(self.map.len(), self.n_coarse, &t)
    }

    /// `x_c = Pᵀ x`
    pub fn restrict(&self, x: &[f64], xc: &mut [f64]) {
        xc.iter_mut().for_each(|v| *v = 0.0);
        for (&a, &v) in self.map.iter().zip(x) {
            if a != UNAGGREGATED {
                xc[a] += v;
            }
        }
    }

    /// `x += P x_c`
    pub fn prolongate_add(&self, xc: &[f64], x: &mut [f64]) {
        for (&a, v) in self.map.iter().zip(x.iter_mut()) {
            if a != UNAGGREGATED {
                *v += xc[a];
            }
        }
    }
}

fn strong_neighbours(a: &CsrMatrix, theta: f64) -> Vec<Vec<(usize, f64)>> {
    let d = a.diagonal();
    (0..a.n_rows())
        .map(|i| {
            let (c, v) = a.row(i);
            c.iter()
                .zip(v)
                .filter(|&(&j, &x)| j != i && x != 0.0 && x.abs() >= theta * (d[i] * d[j]).abs().sqrt())
                .map(|(&j, &x)| (j, x.abs()))
                .collect()
        })
        .collect()
}

/// Greedy aggregation over strong connections
/// `|a_ij| ≥ θ √|a_ii a_jj|`.
pub fn aggregate(a: &CsrMatrix, theta: f64) -> Aggregation {
    let n = a.n_rows();
    let strong = strong_neighbours(a, theta);
    let mut map = vec![UNAGGREGATED; n];
    let mut n_coarse = 0;

    // seeds whose whole neighbourhood is still free
    for i in 0..n {
        if map[i] != UNAGGREGATED || strong[i].is_empty() {
            continue;
        }
        if strong[i].iter().all(|&(j, _)| map[j] == UNAGGREGATED) {
            map[i] = n_coarse;
            for &(j, _) in &strong[i] {
                map[j] = n_coarse;
            }
            n_coarse += 1;
        }
    }

    // attach leftovers to the strongest neighbouring seed aggregate
    let seeded = map.clone();
    for i in 0..n {
        if map[i] != UNAGGREGATED {
            continue;
        }
        let best = strong[i]
            .iter()
            .filter(|&&(j, _)| seeded[j] != UNAGGREGATED)
            .max_by(|x, y| x.1.total_cmp(&y.1));
        if let Some(&(j, _)) = best {
            map[i] = seeded[j];
        }
    }

    // whatever remains forms new aggregates with its free neighbours
    for i in 0..n {
        if map[i] != UNAGGREGATED || strong[i].is_empty() {
            continue;
        }
        map[i] = n_coarse;
        for &(j, _) in &strong[i] {
            if map[j] == UNAGGREGATED {
                map[j] = n_coarse;
            }
        }
        n_coarse += 1;
    }
    Aggregation { map, n_coarse }
}

#[derive(Debug, Clone)]
struct Level {
    a: CsrMatrix,
    /// Jacobi weights, `ω / a_ii`, or `1 / a_ii` on decoupled rows.
    weights: Vec<f64>,
    agg: Option<Aggregation>,
}

#[derive(Debug, Clone)]
enum Coarse {
    Dense(DMatrix<f64>),
    Smooth,
}

#[derive(Debug, Clone)]
pub struct Amg {
    levels: Vec<Level>,
    coarse: Coarse,
    cfg: AmgConfig,
}

pub fn amg_hierarchy(a: &CsrMatrix, max_levels: usize, min_coarse: usize) -> Result<Amg> {
    amg_with_config(a, AmgConfig { max_levels, min_coarse, ..AmgConfig::default() })
}

pub fn amg_with_config(a: &CsrMatrix, cfg: AmgConfig) -> Result<Amg> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::Contract("AMG needs a square matrix".into()));
    }
    if cfg.max_levels == 0 {
        return Err(Error::Config("AMG needs at least one level".into()));
    }
    let mut levels = Vec::new();
    let mut current = a.clone();
    loop {
        let weights = jacobi_weights(&current, cfg.omega)?;
        let n = current.n_rows();
        if levels.len() + 1 >= cfg.max_levels || n <= cfg.min_coarse {
            levels.push(Level { a: current, weights, agg: None });
            break;
        }
        let agg = aggregate(&current, cfg.strength);
        if agg.n_coarse == 0 || agg.n_coarse as f64 > 0.9 * n as f64 {
            levels.push(Level { a: current, weights, agg: None });
            break;
        }
        let coarse = current.galerkin_aggregates(&agg.map, agg.n_coarse);
        levels.push(Level { a: current, weights, agg: Some(agg) });
        current = coarse;
    }
    let last = levels.last().expect("at least one level");
    let coarse = if levels.len() > 1 && last.a.n_rows() <= DENSE_COARSE_LIMIT {
        Coarse::Dense(symmetric_pseudo_inverse(&to_dense(&last.a), 1e-12))
    } else {
        Coarse::Smooth
    };
    Ok(Amg { levels, coarse, cfg })
}

fn jacobi_weights(a: &CsrMatrix, omega: f64) -> Result<Vec<f64>> {
    (0..a.n_rows())
        .map(|i| {
            let (c, v) = a.row(i);
            let d = a.get(i, i);
            if d <= 0.0 {
                return Err(Error::Contract(format!("AMG: diagonal entry {i} is not positive")));
            }
            let decoupled = c.iter().zip(v).all(|(&j, &x)| j == i || x == 0.0);
            Ok(if decoupled { 1.0 / d } else { omega / d })
        })
        .collect()
}

impl Amg {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Unknowns per level, finest first.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.a.n_rows()).collect()
    }

    fn smooth(&self, l: usize, b: &[f64], x: &mut [f64], r: &mut [f64], sweeps: usize) {
        let lev = &self.levels[l];
        for _ in 0..sweeps {
            lev.a.spmv(x, r);
            for i in 0..x.len() {
                x[i] += lev.weights[i] * (b[i] - r[i]);
            }
        }
    }

    fn cycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        let lev = &self.levels[l];
        let n = b.len();
        x.iter_mut().for_each(|v| *v = 0.0);
        let mut r = vec![0.0; n];
        let Some(agg) = &lev.agg else {
            match &self.coarse {
                Coarse::Dense(pinv) if l > 0 => {
                    let y = pinv * DVector::from_column_slice(b);
                    x.copy_from_slice(y.as_slice());
                }
                _ => {
                    self.smooth(l, b, x, &mut r, self.cfg.pre_sweeps + self.cfg.post_sweeps);
                }
            }
            return;
        };
        self.smooth(l, b, x, &mut r, self.cfg.pre_sweeps);
        lev.a.spmv(x, &mut r);
        r.iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
        let mut bc = vec![0.0; agg.n_coarse];
        agg.restrict(&r, &mut bc);
        let mut xc = vec![0.0; agg.n_coarse];
        self.cycle(l + 1, &bc, &mut xc);
        agg.prolongate_add(&xc, x);
        self.smooth(l, b, x, &mut r, self.cfg.post_sweeps);
    }
}

impl LinearOperator for Amg {
    fn dim(&self) -> usize {
        self.levels[0].a.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.cycle(0, x, y);
    }
}
