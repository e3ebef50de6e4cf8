//! Initial phase fields: a square or circular droplet of `+1` in a `−1`
//! matrix, with a randomly seeded interface band.

use std::fmt;
use std::str::FromStr;

use chsolver_core::mesh::TriangleMesh;
use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::BenchError;

pub const CENTER: [f64; 2] = [0.5, 0.5];
/// Half-width of the square and radius of the circle.
pub const SIZE: f64 = 0.25;
/// The band extends this many mesh widths to each side of the boundary.
pub const BAND_HALF_WIDTH: f64 = 5.0;
pub const BAND_RANGE: (f64, f64) = (-0.3, 0.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Square,
    Circle,
}

impl Shape {
    /// Signed distance to the boundary, negative inside. Chebyshev for the
    /// square, Euclidean for the circle.
    pub fn signed_distance(self, [x, y]: [f64; 2]) -> f64 {
        let (dx, dy) = (x - CENTER[0], y - CENTER[1]);
        match self {
            Shape::Square => dx.abs().max(dy.abs()) - SIZE,
            Shape::Circle => dx.hypot(dy) - SIZE,
        }
    }
}

impl FromStr for Shape {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "square" => Ok(Shape::Square),
            "circle" => Ok(Shape::Circle),
            other => Err(BenchError::Invalid(format!("unknown shape '{other}'"))),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Square => "square",
            Shape::Circle => "circle",
        })
    }
}

/// Uniform sample in `[0, 1)` from the top 53 bits.
pub fn unit_uniform(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn in_band(shape: Shape, h: f64, x: [f64; 2]) -> bool {
    shape.signed_distance(x).abs() <= BAND_HALF_WIDTH * h * (1.0 + 1e-12)
}

/// `u⁰` on `mesh`. Band nodes draw their values in node order.
pub fn gen_initial(shape: Shape, mesh: &TriangleMesh, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let (lo, hi) = BAND_RANGE;
    mesh.coords
        .iter()
        .map(|&x| {
            if in_band(shape, mesh.h, x) {
                lo + (hi - lo) * unit_uniform(&mut rng)
            } else if shape.signed_distance(x) < 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}
