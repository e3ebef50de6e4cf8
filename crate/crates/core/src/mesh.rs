//! Structured P1 triangulation of the unit square.
//!
//! Nodes are numbered lexicographically, `index = j * n_side + i` for the
//! node at `(i h, j h)`. Every cell is split along its `(i,j)-(i+1,j+1)`
//! diagonal into two counterclockwise right triangles, so the right angles
//! sit at the `(i+1,j)` and `(i,j+1)` corners.

use crate::error::{Error, Result};

pub const MIN_LEVEL: u32 = 2;
pub const MAX_LEVEL: u32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub n_side: usize,
    pub h: f64,
    pub coords: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 3]>,
}

/// Uniform mesh with `2^p` cells per side.
pub fn build_uniform_mesh(p: u32) -> Result<TriangleMesh> {
    if !(MIN_LEVEL..=MAX_LEVEL).contains(&p) {
        return Err(Error::Config(format!(
            "mesh level p = {p} outside [{MIN_LEVEL}, {MAX_LEVEL}]"
        )));
    }
    let cells = 1usize << p;
    let n_side = cells + 1;
    let h = 1.0 / cells as f64;
    let mut coords = Vec::with_capacity(n_side * n_side);
    for j in 0..n_side {
        for i in 0..n_side {
            coords.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut elements = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let a = j * n_side + i;
            let b = a + 1;
            let c = a + n_side + 1;
            let d = a + n_side;
            elements.push([a, b, c]);
            elements.push([a, c, d]);
        }
    }
    Ok(TriangleMesh { n_side, h, coords, elements })
}

impl TriangleMesh {
    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Level `p` with `h = 2^-p`.
    pub fn level(&self) -> u32 {
        (self.n_side - 1).trailing_zeros()
    }

    /// Signed area of element `e`; positive for counterclockwise ordering.
    pub fn signed_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.elements[e];
        let (pa, pb, pc) = (self.coords[a], self.coords[b], self.coords[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.signed_area(e)).sum()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.n_side + i
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_and_element_counts() {
        let m = build_uniform_mesh(2).unwrap();
        assert_eq!(m.n_nodes(), 25);
        assert_eq!(m.n_elements(), 32);
        let m = build_uniform_mesh(3).unwrap();
        assert_eq!(m.n_nodes(), 81);
        assert_eq!(m.n_elements(), 128);
        assert_eq!(m.level(), 3);
        assert_eq!(m.h, 0.125);
    }

    #[test]
    fn areas_positive_and_sum_to_one() {
        for p in 2..=6 {
            let m = build_uniform_mesh(p).unwrap();
            assert!((0..m.n_elements()).all(|e| m.signed_area(e) > 0.0));
            assert!((m.total_area() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn lexicographic_by_y_then_x() {
        let m = build_uniform_mesh(2).unwrap();
        assert_eq!(m.coords[1], [0.25, 0.0]);
        assert_eq!(m.coords[5], [0.0, 0.25]);
        assert_eq!(m.coords[m.node_index(3, 2)], [0.75, 0.5]);
    }

    #[test]
    fn level_out_of_range_is_config_error() {
        assert!(matches!(build_uniform_mesh(1), Err(Error::Config(_))));
        assert!(matches!(build_uniform_mesh(13), Err(Error::Config(_))));
    }
}
