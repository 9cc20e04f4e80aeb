//! Pressure-primal Darcy flow with deformation-dependent porosity.
//!
//! Substituting the Darcy velocity into the fluid mass balance gives, for a
//! test function `q`,
//!
//! ```text
//! ∫ ∂φ/∂t q + ∫ (φ/α) ∇p·∇q = ∫ (φ/α) ρ_f b_f·∇q + ∫ φ v_s·∇q + Σ rates
//! ```
//!
//! The porosity rate is backward Euler with lumped (row-sum) weights, and the
//! solid velocity is the backward difference of the displacement.

use super::{add_diffusion, assert_symmetric, FlowRegime, Problem};
use crate::linalg::{SparseSystem, TripletBuilder};
use crate::{Error, Result};

/// Everything the flow subsystem reads from the coupled state.
#[derive(Debug, Clone, Copy)]
pub struct FlowInputs<'a> {
    /// Displacement at the end of the flow step.
    pub u: &'a [[f64; 2]],
    /// Displacement at the start of the flow step.
    pub u_old: &'a [[f64; 2]],
    /// Pressure iterate for the viscosity and damage factors.
    pub p_iter: &'a [f64],
    /// Porosity at the start of the flow step.
    pub phi_old: &'a [f64],
    /// Per-element reference pressure of the pressure-dependent porosity law.
    pub p_ref: &'a [f64],
    pub s_n: &'a [f64],
    /// `None` for a steady solve.
    pub dt: Option<f64>,
    /// Time at the end of the step, for boundary values.
    pub time: f64,
}

/// Coefficients used while assembling, reused for velocity recovery and
/// the porosity update.
#[derive(Debug, Clone)]
pub struct FlowCoefficients {
    pub conductance: Vec<f64>,
    pub drag: Vec<f64>,
    /// Porosity at the reference pressure for the supplied displacement.
    pub phi_star: Vec<f64>,
    /// `∂φ/∂p` at the reference pressure.
    pub dphi_dp: Vec<f64>,
}

fn transient_dt(problem: &Problem, dt: Option<f64>) -> Option<f64> {
    match problem.materials.flow_regime {
        FlowRegime::Transient => dt.filter(|d| d.is_finite()),
        FlowRegime::QuasiSteady => None,
    }
}

/// Assembles the flow system before pressure Dirichlet conditions.
pub fn assemble_flow_unconstrained(problem: &Problem, inp: &FlowInputs) -> Result<(SparseSystem, FlowCoefficients)> {
    let n = problem.mesh.node_count();
    let (phi_star, dphi_dp) = problem.porosity_at_reference(inp.u, inp.p_ref)?;
    let drag = problem.element_drag(inp.u, inp.p_iter)?;
    let conductance = problem.conductance(&phi_star, &drag, inp.s_n)?;

    let mut b = TripletBuilder::with_capacity(n, 16 * problem.mesh.element_count() + n);
    add_diffusion(&mut b, problem, &conductance, 0);
    let mut rhs = vec![0.0; n];

    if let Some(body) = &problem.sources.fluid_body {
        let rho = problem.materials.fluid.rho;
        for (e, geo) in problem.geometry.elements.iter().enumerate() {
            let nodes = problem.element_nodes(e);
            let coords = problem.mesh.element_coords(e);
            for q in &geo.points {
                let f = body(q.shape.point(&coords), inp.time);
                for (a, g) in q.shape.grads.iter().enumerate() {
                    rhs[nodes[a]] += conductance[e] * rho * (f[0] * g[0] + f[1] * g[1]) * q.jxw;
                }
            }
        }
    }

    if let Some(dt) = transient_dt(problem, inp.dt) {
        for (e, geo) in problem.geometry.elements.iter().enumerate() {
            let nodes = problem.element_nodes(e);
            let w = geo.lumped_weights();
            let c = dphi_dp[e];
            let known = phi_star[e] - c * inp.p_ref[e] - inp.phi_old[e];
            for a in 0..4 {
                rhs[nodes[a]] -= w[a] * known / dt;
                if c != 0.0 {
                    for &nb in &nodes {
                        b.add(nodes[a], nb, w[a] * c / (4.0 * dt));
                    }
                }
            }
            let du = problem.gather(e, inp.u);
            let du_old = problem.gather(e, inp.u_old);
            for q in &geo.points {
                let mut vs = [0.0; 2];
                for k in 0..4 {
                    vs[0] += q.shape.values[k] * (du[k][0] - du_old[k][0]) / dt;
                    vs[1] += q.shape.values[k] * (du[k][1] - du_old[k][1]) / dt;
                }
                for (a, g) in q.shape.grads.iter().enumerate() {
                    rhs[nodes[a]] += phi_star[e] * (vs[0] * g[0] + vs[1] * g[1]) * q.jxw;
                }
            }
        }
    }

    for (node, rate) in &problem.sources.rates {
        rhs[*node] += rate.eval(inp.time);
    }

    let matrix = b.build()?;
    Ok((SparseSystem { matrix, rhs }, FlowCoefficients { conductance, drag, phi_star, dphi_dp }))
}

/// Assembles the flow system with pressure Dirichlet rows eliminated
/// symmetrically.
pub fn assemble_flow(problem: &Problem, inp: &FlowInputs) -> Result<(SparseSystem, FlowCoefficients)> {
    let (mut system, coefs) = assemble_flow_unconstrained(problem, inp)?;
    let has_storage = transient_dt(problem, inp.dt).is_some() && coefs.dphi_dp.iter().any(|&c| c != 0.0);
    if !problem.bcs.has_pressure_dirichlet() && !has_storage {
        return Err(Error::MissingPressureDirichlet);
    }
    system.matrix.apply_dirichlet(&mut system.rhs, &problem.bcs.pressure_values(inp.time))?;
    assert_symmetric(&system.matrix, "flow");
    Ok((system, coefs))
}

/// Element-centre fluid velocity `v_s + (ρ_f b_f - ∇p) / α`, or the total
/// Darcy flux `λ_t (ρ_f b_f - ∇p) / α` in two-phase runs.
pub fn recover_velocity(problem: &Problem, inp: &FlowInputs, p: &[f64]) -> Result<Vec<[f64; 2]>> {
    let drag = problem.element_drag(inp.u, p)?;
    let rho = problem.materials.fluid.rho;
    let dt = transient_dt(problem, inp.dt);
    (0..problem.mesh.element_count())
        .map(|e| {
            let center = &problem.geometry.elements[e].center;
            let grad = center.gradient(problem.gather(e, p));
            let body = problem
                .sources
                .fluid_body
                .as_ref()
                .map_or([0.0; 2], |f| f(problem.mesh.element_center(e), inp.time));
            let mobility = match &problem.materials.two_phase {
                None => 1.0 / drag[e],
                Some(tp) => tp.total_mobility(problem.element_mean(e, inp.s_n))? / drag[e],
            };
            let mut v = [mobility * (rho * body[0] - grad[0]), mobility * (rho * body[1] - grad[1])];
            if let (Some(dt), None) = (dt, &problem.materials.two_phase) {
                let u = problem.gather(e, inp.u);
                let u_old = problem.gather(e, inp.u_old);
                for k in 0..4 {
                    v[0] += center.values[k] * (u[k][0] - u_old[k][0]) / dt;
                    v[1] += center.values[k] * (u[k][1] - u_old[k][1]) / dt;
                }
            }
            Ok(v)
        })
        .collect()
}

/// Consistent outward boundary flux at every pressure-Dirichlet node,
/// `-(K p - f)_i` of the unconstrained system.
pub fn flow_boundary_fluxes(problem: &Problem, inp: &FlowInputs, p: &[f64]) -> Result<Vec<(usize, f64)>> {
    let (system, _) = assemble_flow_unconstrained(problem, inp)?;
    let kp = system.matrix.spmv(p)?;
    Ok(problem.bcs.pressure_nodes().map(|i| (i, system.rhs[i] - kp[i])).collect())
}
