//! Plain floating-point linear FEM for 2D bar trusses. This is the reference
//! the symbolic pipeline is checked against.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{TrussError, TrussProblem};

/// Pivots below this fraction of the largest diagonal entry are treated as a
/// mechanism.
const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FemSolution {
    /// Displacement (mm) of every free DoF, in `free_dofs()` order.
    pub displacements: Vec<f64>,
    /// Displacement (mm) of every node, fixed ones included.
    pub nodal_displacements: Vec<[f64; 2]>,
    /// Green-Lagrange strain `½(L²/L₀² − 1)` per element.
    pub gl_strains: Vec<f64>,
    /// Engineering strain `(L − L₀)/L₀` per element.
    pub eng_strains: Vec<f64>,
    /// Small-strain axial stress `E (Δu·e)/L₀` per element (MPa).
    pub linear_stresses: Vec<f64>,
    /// `E ε_GL` per element (MPa).
    pub stresses: Vec<f64>,
}

/// Reduced stiffness matrix and load vector over the free DoFs.
pub fn assemble_numeric(p: &TrussProblem, areas: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let free = p.free_dofs();
    let mut slot = vec![None; 2 * p.nodes.len()];
    for (i, &d) in free.iter().enumerate() {
        slot[d] = Some(i);
    }
    let e_mod = p.material.youngs_modulus;
    let mut k = DMatrix::zeros(free.len(), free.len());
    for (e, &area) in areas.iter().enumerate() {
        let (s, t) = p.element_nodes(e);
        let (dx, dy) = p.element_vector(e);
        let len = dx.hypot(dy);
        let (c, sn) = (dx / len, dy / len);
        let axis = [-c, -sn, c, sn];
        let dofs = [2 * s, 2 * s + 1, 2 * t, 2 * t + 1];
        let stiffness = e_mod * area / len;
        for a in 0..4 {
            for b in 0..4 {
                if let (Some(i), Some(j)) = (slot[dofs[a]], slot[dofs[b]]) {
                    k[(i, j)] += stiffness * (axis[a] * axis[b]);
                }
            }
        }
    }
    let f = DVector::from_vec(p.free_load_vector());
    (k, f)
}

/// Solves `K u = f` for the given element areas (mm²) and derives strains and
/// stresses on the deformed geometry.
pub fn numeric_fem_solve(p: &TrussProblem, areas: &[f64]) -> Result<FemSolution, TrussError> {
    if areas.len() != p.elements.len() {
        return Err(TrussError::LengthMismatch { expected: p.elements.len(), got: areas.len() });
    }
    if areas.iter().any(|&a| !(a > 0.0)) {
        return Err(TrussError::SingularStiffness);
    }
    let (k, f) = assemble_numeric(p, areas);
    let max_diag = k.diagonal().amax();
    let chol = Cholesky::new(k).ok_or(TrussError::SingularStiffness)?;
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, &v| m.min(v * v));
    if min_pivot < SINGULAR_PIVOT_RATIO * max_diag {
        return Err(TrussError::SingularStiffness);
    }
    let u = chol.solve(&f);

    let mut nodal = vec![[0.0; 2]; p.nodes.len()];
    for (i, &d) in p.free_dofs().iter().enumerate() {
        nodal[d / 2][d % 2] = u[i];
    }

    let e_mod = p.material.youngs_modulus;
    let count = p.elements.len();
    let (mut gl, mut eng, mut lin) = (Vec::with_capacity(count), Vec::with_capacity(count), Vec::with_capacity(count));
    for e in 0..count {
        let (s, t) = p.element_nodes(e);
        let (dx, dy) = p.element_vector(e);
        let du = [nodal[t][0] - nodal[s][0], nodal[t][1] - nodal[s][1]];
        let l0_sq = dx * dx + dy * dy;
        let l0 = l0_sq.sqrt();
        let (ddx, ddy) = (dx + du[0], dy + du[1]);
        let l_sq = ddx * ddx + ddy * ddy;
        gl.push(0.5 * (l_sq / l0_sq - 1.0));
        eng.push((l_sq.sqrt() - l0) / l0);
        lin.push(e_mod * (dx * du[0] + dy * du[1]) / l0_sq);
    }
    let stresses = gl.iter().map(|&s| e_mod * s).collect();
    Ok(FemSolution {
        displacements: u.iter().copied().collect(),
        nodal_displacements: nodal,
        gl_strains: gl,
        eng_strains: eng,
        linear_stresses: lin,
        stresses,
    })
}
