//! P1 finite element matrices and the blocks of the discrete saddle system.

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::sparse::{CsrMatrix, SparsePlusRankOne};

/// Gradient coefficients `(b_i, c_i)` of the three hat functions, so that
/// `∇λ_i = (b_i, c_i)` on the element, together with the element area.
fn gradients(p: [[f64; 2]; 3]) -> Result<([f64; 3], [f64; 3], f64)> {
    let two_area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    if two_area <= 0.0 {
        return Err(Error::Assembly(format!("degenerate or clockwise triangle (2|K| = {two_area})")));
    }
    let mut b = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        b[i] = (p[j][1] - p[k][1]) / two_area;
        c[i] = (p[k][0] - p[j][0]) / two_area;
    }
    Ok((b, c, 0.5 * two_area))
}

/// Element stiffness `(b_i b_j + c_i c_j) |K|`.
pub fn element_stiffness(p: [[f64; 2]; 3]) -> Result<[[f64; 3]; 3]> {
    let (b, c, area) = gradients(p)?;
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) * area;
        }
    }
    Ok(k)
}

/// Element mass `(|K| / 12) (1 + δ_ij)`.
pub fn element_mass(p: [[f64; 2]; 3]) -> Result<[[f64; 3]; 3]> {
    let (_, _, area) = gradients(p)?;
    let s = area / 12.0;
    let mut m = [[s; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 2.0 * s;
    }
    Ok(m)
}

fn assemble(
    mesh: &TriangleMesh,
    local: impl Fn([[f64; 2]; 3]) -> Result<[[f64; 3]; 3]>,
) -> Result<CsrMatrix> {
    let n = mesh.n_nodes();
    let mut t = Vec::with_capacity(9 * mesh.n_elements());
    for (e, el) in mesh.elements.iter().enumerate() {
        let p = [mesh.coords[el[0]], mesh.coords[el[1]], mesh.coords[el[2]]];
        let ke = local(p).map_err(|err| match err {
            Error::Assembly(msg) => Error::Assembly(format!("element {e}: {msg}")),
            other => other,
        })?;
        for a in 0..3 {
            for b in 0..3 {
                t.push((el[a], el[b], ke[a][b]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &t))
}

/// Stiffness matrix `K_pq = (∇λ_p, ∇λ_q)`.
pub fn assemble_stiffness(mesh: &TriangleMesh) -> Result<CsrMatrix> {
    assemble(mesh, element_stiffness)
}

/// Mass matrix `M_pq = ⟨λ_p, λ_q⟩`.
pub fn assemble_mass(mesh: &TriangleMesh) -> Result<CsrMatrix> {
    assemble(mesh, element_mass)
}

/// `m_p = ⟨λ_p, 1⟩`, the row sums of the mass matrix.
pub fn assemble_mean_vector(mass: &CsrMatrix) -> Vec<f64> {
    mass.row_sums()
}

/// Blocks of the saddle system
///
/// ```text
/// [ A + ∂I   Bᵀ ] [u]   [f]
/// [ B       -C  ] [w] ∋ [g]
/// ```
///
/// with `A = ε(K + m mᵀ)`, `B = M`, `C = τK`. `A` keeps the rank-one term
/// factored as `εK + (√ε m)(√ε m)ᵀ`.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub mean: Vec<f64>,
    pub a: SparsePlusRankOne,
    pub c: CsrMatrix,
    pub epsilon: f64,
    pub tau: f64,
    /// `τ ε`, the single parameter left after rescaling `w` by `1/ε`.
    pub eta: f64,
}

impl SaddleSystem {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `B = M`
    pub fn b(&self) -> &CsrMatrix {
        &self.mass
    }
}

pub fn assemble_system(mesh: &TriangleMesh, epsilon: f64, tau: f64) -> Result<SaddleSystem> {
    let stiffness = assemble_stiffness(mesh)?;
    let mass = assemble_mass(mesh)?;
    system_from_matrices(stiffness, mass, epsilon, tau)
}

/// Builds the blocks from already assembled `K` and `M`.
pub fn system_from_matrices(
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    epsilon: f64,
    tau: f64,
) -> Result<SaddleSystem> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    let mean = assemble_mean_vector(&mass);
    let se = epsilon.sqrt();
    let a = SparsePlusRankOne::new(stiffness.scaled(epsilon), mean.iter().map(|v| se * v).collect());
    let c = stiffness.scaled(tau);
    Ok(SaddleSystem { stiffness, mass, mean, a, c, epsilon, tau, eta: tau * epsilon })
}
