//! Quasi-static plane-strain elasticity loaded by the pore fluid.

use super::{add_elasticity, assert_symmetric, check_rigid_modes, Problem, SolidLoading};
use crate::linalg::{SparseSystem, TripletBuilder};
use crate::Result;

/// Constrained displacement dofs `2 node + component` at time `t`.
pub fn solid_dirichlet_dofs(problem: &Problem, t: f64) -> Vec<(usize, f64)> {
    problem.bcs.displacement_values(t)
}

/// Assembles `K u = f` for interleaved displacement dofs with Dirichlet
/// conditions eliminated symmetrically.
///
/// With a stress split the load contains `∫ p div w`; the drag variant adds
/// `∫ (ρ_f b_f - ∇p)·w`, which is `α (v_f - v_s)` by Darcy's law.
pub fn assemble_solid(problem: &Problem, p: &[f64], time: f64) -> Result<SparseSystem> {
    let ndof = 2 * problem.mesh.node_count();
    let constraints = solid_dirichlet_dofs(problem, time);
    let constrained: Vec<usize> = constraints.iter().map(|&(d, _)| d).collect();
    check_rigid_modes(&problem.mesh, &constrained)?;

    let mut b = TripletBuilder::with_capacity(ndof, 64 * problem.mesh.element_count());
    add_elasticity(&mut b, problem, 0);
    let mut rhs = solid_load(problem, p, time);
    let mut matrix = b.build()?;
    matrix.apply_dirichlet(&mut rhs, &constraints)?;
    assert_symmetric(&matrix, "solid");
    Ok(SparseSystem { matrix, rhs })
}

/// Solid load vector: body force, fluid loading and tractions.
pub(crate) fn solid_load(problem: &Problem, p: &[f64], time: f64) -> Vec<f64> {
    let mut rhs = pressure_independent_load(problem, time);
    let loading = problem.materials.solid_loading;
    if loading == SolidLoading::None {
        return rhs;
    }
    for (e, geo) in problem.geometry.elements.iter().enumerate() {
        let nodes = problem.element_nodes(e);
        let pe = problem.gather(e, p);
        for q in &geo.points {
            let pq = q.shape.interpolate(pe);
            let grad = q.shape.gradient(pe);
            for a in 0..4 {
                for c in 0..2 {
                    let mut f = pq * q.shape.grads[a][c];
                    if loading == SolidLoading::StressSplitWithDrag {
                        f -= grad[c] * q.shape.values[a];
                    }
                    rhs[2 * nodes[a] + c] += f * q.jxw;
                }
            }
        }
    }
    rhs
}

/// Body force, drag body-force share and tractions.
pub(crate) fn pressure_independent_load(problem: &Problem, time: f64) -> Vec<f64> {
    let mut rhs = vec![0.0; 2 * problem.mesh.node_count()];
    let rho_s = problem.materials.solid.rho;
    let rho_f = problem.materials.fluid.rho;
    let drag_body = problem.materials.solid_loading == SolidLoading::StressSplitWithDrag;
    if problem.sources.solid_body.is_some() || (drag_body && problem.sources.fluid_body.is_some()) {
        for (e, geo) in problem.geometry.elements.iter().enumerate() {
            let nodes = problem.element_nodes(e);
            let coords = problem.mesh.element_coords(e);
            for q in &geo.points {
                let x = q.shape.point(&coords);
                let mut f = [0.0; 2];
                if let Some(bs) = &problem.sources.solid_body {
                    let v = bs(x, time);
                    f = [rho_s * v[0], rho_s * v[1]];
                }
                if drag_body {
                    if let Some(bf) = &problem.sources.fluid_body {
                        let v = bf(x, time);
                        f[0] += rho_f * v[0];
                        f[1] += rho_f * v[1];
                    }
                }
                for a in 0..4 {
                    for c in 0..2 {
                        rhs[2 * nodes[a] + c] += f[c] * q.shape.values[a] * q.jxw;
                    }
                }
            }
        }
    }
    for (edge, traction) in problem.bcs.tractions() {
        let [n0, n1] = edge.nodes;
        let (x0, x1) = (problem.mesh.nodes[n0], problem.mesh.nodes[n1]);
        let half = 0.5 * ((x1[0] - x0[0]).powi(2) + (x1[1] - x0[1]).powi(2)).sqrt();
        for c in 0..2 {
            let t = traction[c].eval(time);
            rhs[2 * n0 + c] += t * half;
            rhs[2 * n1 + c] += t * half;
        }
    }
    rhs
}

/// Nodal drag interaction loads `(fluid, solid)` for element-wise drag
/// coefficients and velocities. The fluid receives `-α (v_f - v_s)` and the
/// solid `+α (v_f - v_s)`.
pub fn drag_loads(
    problem: &Problem,
    alpha: &[f64],
    v_f: &[[f64; 2]],
    v_s: &[[f64; 2]],
) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let n = problem.mesh.node_count();
    let mut fluid = vec![[0.0; 2]; n];
    let mut solid = vec![[0.0; 2]; n];
    for (e, geo) in problem.geometry.elements.iter().enumerate() {
        let w = geo.lumped_weights();
        let rel = [v_f[e][0] - v_s[e][0], v_f[e][1] - v_s[e][1]];
        for (a, &node) in problem.element_nodes(e).iter().enumerate() {
            for c in 0..2 {
                let f = alpha[e] * rel[c] * w[a];
                solid[node][c] += f;
                fluid[node][c] -= f;
            }
        }
    }
    (fluid, solid)
}
