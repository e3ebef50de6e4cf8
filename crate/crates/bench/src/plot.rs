//! Gnuplot-ready text output: `x y u` grid dumps of snapshots and
//! iteration-versus-ε tables from a sweep CSV.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chsolver_core::mesh::build_uniform_mesh;
use serde::Deserialize;

use crate::snapshot::{list_snapshots, read_snapshot};
use crate::{BenchError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotOutput {
    pub files: Vec<PathBuf>,
    /// Problems that were skipped over.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct CsvRow {
    shape: String,
    p: u32,
    epsilon: f64,
    #[allow(dead_code)]
    tau: f64,
    prec: String,
    step: String,
    its: usize,
    #[allow(dead_code)]
    time: f64,
    converged: bool,
}

/// Level `p` of a uniform mesh with `n` nodes.
pub fn level_of(n: usize) -> Option<u32> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n || side < 2 {
        return None;
    }
    let cells = side - 1;
    cells.is_power_of_two().then(|| cells.trailing_zeros())
}

fn write_grid(path: &Path, coords: &[[f64; 2]], u: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for ([x, y], v) in coords.iter().zip(u) {
        writeln!(w, "{x} {y} {v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Iteration tables per `(shape, prec)`: one row per `(p, ε)` with the
/// first-step and total GMRES counts of time step 1.
pub fn iteration_tables(csv_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut rdr = csv::Reader::from_path(csv_path).map_err(|e| BenchError::Parse(e.to_string()))?;
    type Key = (String, String);
    type Row = (Option<usize>, Option<usize>, bool);
    let mut tables: BTreeMap<Key, BTreeMap<(u32, u64), Row>> = BTreeMap::new();
    for row in rdr.deserialize::<CsvRow>() {
        let r = row.map_err(|e| BenchError::Parse(e.to_string()))?;
        // larger ε first, as in the usual table layout
        let eps_key = u64::MAX - r.epsilon.to_bits();
        let entry = tables
            .entry((r.shape.clone(), r.prec.clone()))
            .or_default()
            .entry((r.p, eps_key))
            .or_insert((None, None, true));
        match r.step.as_str() {
            "1:1" => entry.0 = Some(r.its),
            "1:total" => entry.1 = Some(r.its),
            _ => {}
        }
        entry.2 &= r.converged;
    }
    let mut files = Vec::new();
    for ((shape, prec), rows) in tables {
        let path = out_dir.join(format!("iterations_{shape}_prec{prec}.dat"));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        writeln!(w, "# p epsilon first total converged")?;
        for ((p, eps_key), (first, total, ok)) in rows {
            let eps = f64::from_bits(u64::MAX - eps_key);
            let show = |v: Option<usize>| v.map_or("nan".to_string(), |v| v.to_string());
            writeln!(w, "{p} {eps:e} {} {} {}", show(first), show(total), u8::from(ok))?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

/// Writes `x y u` files for every snapshot in `snapshot_dir` and, when
/// `table_csv` is given, the iteration tables, all into `out_dir`.
pub fn emit_plot_data(snapshot_dir: &Path, table_csv: Option<&Path>, out_dir: &Path) -> Result<PlotOutput> {
    fs::create_dir_all(out_dir)?;
    let mut out = PlotOutput::default();
    let snaps = match list_snapshots(snapshot_dir) {
        Ok(s) => s,
        Err(e) => {
            out.warnings.push(format!("cannot list {}: {e}", snapshot_dir.display()));
            Vec::new()
        }
    };
    if snaps.is_empty() {
        out.warnings.push(format!("no snapshots in {}", snapshot_dir.display()));
    }
    let mut meshes = BTreeMap::new();
    for path in snaps {
        let snap = match read_snapshot(&path) {
            Ok(s) => s,
            Err(e) => {
                out.warnings.push(format!("skipping {}: {e}", path.display()));
                continue;
            }
        };
        let Some(p) = level_of(snap.u.len()) else {
            out.warnings.push(format!("skipping {}: {} nodes is not a uniform grid", path.display(), snap.u.len()));
            continue;
        };
        let coords = match meshes.entry(p) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => e.insert(build_uniform_mesh(p)?.coords),
        };
        let target = out_dir.join(format!("grid_{:05}.dat", snap.k));
        write_grid(&target, coords, &snap.u)?;
        out.files.push(target);
    }
    if let Some(csv) = table_csv {
        if csv.exists() {
            out.files.extend(iteration_tables(csv, out_dir)?);
        } else {
            out.warnings.push(format!("missing table {}", csv.display()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_from_node_counts() {
        assert_eq!(level_of(9), Some(1));
        assert_eq!(level_of(81), Some(3));
        assert_eq!(level_of(16), None);
        assert_eq!(level_of(10), None);
    }
}
