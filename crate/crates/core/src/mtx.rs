//! Matrix Market coordinate files for exchanging `K`, `M` and `m` with
//! external tools. Values are written with 17 significant digits, which is
//! enough for an exact `f64` round trip.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn write_matrix<W: Write>(mut w: W, a: &CsrMatrix) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
        }
    }
    Ok(())
}

/// A vector is written as an `n x 1` coordinate matrix, zeros included.
pub fn write_vector<W: Write>(mut w: W, v: &[f64]) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{} 1 {}", v.len(), v.len())?;
    for (i, x) in v.iter().enumerate() {
        writeln!(w, "{} 1 {:.16e}", i + 1, x)?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

type Entries = (usize, usize, Vec<(usize, usize, f64)>);

fn read_entries<R: BufRead>(r: R) -> Result<Entries> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?;
    let lower = header.to_ascii_lowercase();
    if !lower.starts_with("%%matrixmarket matrix coordinate real") {
        return Err(parse_err(1, "expected a real coordinate Matrix Market header"));
    }
    let symmetric = lower.contains("symmetric");
    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries = Vec::new();
    for (no, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(no + 1, "size line needs three fields"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|e| parse_err(no + 1, e));
                size = Some((p(fields[0])?, p(fields[1])?, p(fields[2])?));
            }
            Some((nr, nc, _)) => {
                if fields.len() != 3 {
                    return Err(parse_err(no + 1, "entry needs three fields"));
                }
                let i: usize = fields[0].parse().map_err(|e| parse_err(no + 1, e))?;
                let j: usize = fields[1].parse().map_err(|e| parse_err(no + 1, e))?;
                let v: f64 = fields[2].parse().map_err(|e| parse_err(no + 1, e))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(parse_err(no + 1, "index out of range"));
                }
                entries.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    entries.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| parse_err(2, "missing size line"))?;
    let stored = if symmetric { entries.iter().filter(|e| e.0 <= e.1).count() } else { entries.len() };
    if stored != nnz && !symmetric {
        return Err(Error::Parse(format!("expected {nnz} entries, found {stored}")));
    }
    Ok((nr, nc, entries))
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<CsrMatrix> {
    let (nr, nc, entries) = read_entries(r)?;
    Ok(CsrMatrix::from_triplets(nr, nc, &entries))
}

pub fn read_vector<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let (nr, nc, entries) = read_entries(r)?;
    if nc != 1 {
        return Err(Error::Parse(format!("vector file has {nc} columns")));
    }
    let mut v = vec![0.0; nr];
    for (i, _, x) in entries {
        v[i] += x;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, assemble_mean_vector, assemble_stiffness};
    use crate::mesh::build_uniform_mesh;

    #[test]
    fn exact_round_trip() {
        let mesh = build_uniform_mesh(3).unwrap();
        for a in [assemble_stiffness(&mesh).unwrap(), assemble_mass(&mesh).unwrap()] {
            let mut buf = Vec::new();
            write_matrix(&mut buf, &a).unwrap();
            let back = read_matrix(buf.as_slice()).unwrap();
            assert_eq!(back, a);
        }
        let m = assemble_mean_vector(&assemble_mass(&mesh).unwrap());
        let mut buf = Vec::new();
        write_vector(&mut buf, &m).unwrap();
        assert_eq!(read_vector(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_matrix("hello\n1 1 1\n".as_bytes()).is_err());
        let bad = format!("{HEADER}\n2 2 1\n3 1 1.0\n");
        assert!(read_matrix(bad.as_bytes()).is_err());
    }

    #[test]
    fn symmetric_files_are_expanded() {
        let s = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 2.0\n2 1 -1.0\n";
        let a = read_matrix(s.as_bytes()).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
    }
}
