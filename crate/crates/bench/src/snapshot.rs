//! Plain-text dumps of `u` after each time step.
//!
//! A snapshot has three header lines `n=…`, `k=…`, `time=…` followed by one
//! value per line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::{BenchError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub k: usize,
    pub time: f64,
    pub u: Vec<f64>,
}

pub fn snapshot_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("u_{k:05}.txt"))
}

pub fn write_snapshot(dir: &Path, s: &Snapshot) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = snapshot_path(dir, s.k);
    let mut w = BufWriter::new(fs::File::create(&path)?);
    writeln!(w, "n={}", s.u.len())?;
    writeln!(w, "k={}", s.k)?;
    writeln!(w, "time={:.17e}", s.time)?;
    for v in &s.u {
        writeln!(w, "{v:.17e}")?;
    }
    w.flush()?;
    Ok(path)
}

fn header<T: std::str::FromStr>(line: Option<std::io::Result<String>>, key: &str) -> Result<T> {
    let line = line.ok_or_else(|| BenchError::Parse(format!("missing '{key}=' line")))??;
    line.trim()
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| BenchError::Parse(format!("expected '{key}=<value>', got '{line}'")))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut lines = BufReader::new(fs::File::open(path)?).lines();
    let n: usize = header(lines.next(), "n")?;
    let k = header(lines.next(), "k")?;
    let time = header(lines.next(), "time")?;
    let mut u = Vec::with_capacity(n);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        u.push(line.trim().parse().map_err(|_| BenchError::Parse(format!("bad value '{line}'")))?);
    }
    if u.len() != n {
        return Err(BenchError::Parse(format!("{}: expected {n} values, found {}", path.display(), u.len())));
    }
    Ok(Snapshot { k, time, u })
}

/// Snapshot files in `dir`, ordered by step.
pub fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("u_") && n.ends_with(".txt"))
        })
        .collect();
    files.sort();
    Ok(files)
}
