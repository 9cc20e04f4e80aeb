//! Fully coupled iteration on the block system in `(u, p, φ)`.
//!
//! Unknowns are ordered as interleaved displacements (`2N`), nodal
//! pressures (`N`) and element porosities (`E`). The porosity rows are the
//! porosity law linearised in the displacement gradient about the current
//! iterate; the flow conductance and viscosity are lagged (Picard), or the
//! conductance additionally differentiated in φ (Newton).

use super::{iterate_to_convergence, CouplingConfig, Counts, Linearization, StepStatus};
use crate::assembly::{
    add_diffusion, add_elasticity, check_rigid_modes, pressure_independent_load, recover_velocity, FieldState,
    FlowInputs, FlowRegime, Problem, SolidLoading,
};
use crate::linalg::{relative_residual, solve, SparseSystem, TripletBuilder};
use crate::{Error, Result};

pub(super) fn step(
    problem: &Problem,
    old: &FieldState,
    time: f64,
    dt: Option<f64>,
    config: &CouplingConfig,
    counts: &mut Counts,
) -> Result<(FieldState, Vec<f64>, StepStatus)> {
    let linear = problem.is_linear();
    let mut start = old.clone();
    start.time = time;
    let n = problem.mesh.node_count();
    iterate_to_convergence(start, config, |cur, _| {
        let system = assemble(problem, old, cur, time, dt, config.linearization)?;
        let lin = &config.linear;
        let (x, report) = solve(&system.matrix, &system.rhs, lin.method, lin.tol, lin.max_iter)?;
        if !report.converged {
            log::warn!("monolithic {} solve stopped at residual {:e}", report.method, report.final_residual);
        }
        counts.flow += 1;
        counts.solid += 1;
        let u: Vec<[f64; 2]> = x[..2 * n].chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let p = x[2 * n..3 * n].to_vec();
        let phi = x[3 * n..].to_vec();
        let p_ref = problem.element_means(&p);
        let inputs = FlowInputs {
            u: &u,
            u_old: &old.u,
            p_iter: &p,
            phi_old: &old.phi,
            p_ref: &p_ref,
            s_n: &cur.s_n,
            dt,
            time,
        };
        let v = recover_velocity(problem, &inputs, &p)?;
        let exact = if linear { Some(relative_residual(&system.matrix, &x, &system.rhs)?) } else { None };
        Ok((FieldState { u, p, phi, v, s_n: cur.s_n.clone(), time }, exact))
    })
}

fn assemble(
    problem: &Problem,
    old: &FieldState,
    cur: &FieldState,
    time: f64,
    dt: Option<f64>,
    linearization: Linearization,
) -> Result<SparseSystem> {
    let mesh = &problem.mesh;
    let (n, ne) = (mesh.node_count(), mesh.element_count());
    let (off_p, off_phi) = (2 * n, 3 * n);
    let dim = 3 * n + ne;
    let dt = match problem.materials.flow_regime {
        FlowRegime::Transient => dt.filter(|d| d.is_finite()),
        FlowRegime::QuasiSteady => None,
    };
    let frozen = problem.materials.porosity.law == crate::constitutive::PorosityLaw::Frozen;
    if !problem.bcs.has_pressure_dirichlet() && (dt.is_none() || frozen) {
        return Err(Error::MissingPressureDirichlet);
    }

    let drag = problem.element_drag(&cur.u, &cur.p)?;
    let conductance = problem.conductance(&cur.phi, &drag, &cur.s_n)?;
    let mut b = TripletBuilder::with_capacity(dim, 150 * ne + dim);
    let mut rhs = vec![0.0; dim];

    add_elasticity(&mut b, problem, 0);
    add_diffusion(&mut b, problem, &conductance, off_p);
    rhs[..2 * n].copy_from_slice(&pressure_independent_load(problem, time));

    let loading = problem.materials.solid_loading;
    let rho_f = problem.materials.fluid.rho;
    let newton = linearization == Linearization::Newton && problem.materials.two_phase.is_none();
    for (e, geo) in problem.geometry.elements.iter().enumerate() {
        let nodes = problem.element_nodes(e);
        let coords = mesh.element_coords(e);
        let u_k = problem.gather(e, &cur.u);
        let u_n = problem.gather(e, &old.u);
        let p_k = problem.gather(e, &cur.p);
        let mut newton_col = [0.0; 4];
        for q in &geo.points {
            let (nv, g) = (&q.shape.values, &q.shape.grads);
            if loading != SolidLoading::None {
                for a in 0..4 {
                    for c in 0..2 {
                        for j in 0..4 {
                            let mut k = -nv[j] * g[a][c];
                            if loading == SolidLoading::StressSplitWithDrag {
                                k += nv[a] * g[j][c];
                            }
                            b.add(2 * nodes[a] + c, off_p + nodes[j], k * q.jxw);
                        }
                    }
                }
            }
            let body = problem.sources.fluid_body.as_ref().map(|f| f(q.shape.point(&coords), time));
            if let Some(f) = body {
                for i in 0..4 {
                    rhs[off_p + nodes[i]] += conductance[e] * rho_f * (f[0] * g[i][0] + f[1] * g[i][1]) * q.jxw;
                }
            }
            if let Some(dt) = dt {
                // -(1/dt) ∫ φ_k (u - u_n)·∇N_i
                for i in 0..4 {
                    for a in 0..4 {
                        for c in 0..2 {
                            let k = -cur.phi[e] * nv[a] * g[i][c] / dt * q.jxw;
                            b.add(off_p + nodes[i], 2 * nodes[a] + c, k);
                            rhs[off_p + nodes[i]] += k * u_n[a][c];
                        }
                    }
                }
            }
            if newton {
                let grad_p = q.shape.gradient(p_k);
                let f = body.unwrap_or([0.0; 2]);
                let mut w = [(grad_p[0] - rho_f * f[0]) / drag[e], (grad_p[1] - rho_f * f[1]) / drag[e]];
                if let Some(dt) = dt {
                    for a in 0..4 {
                        for c in 0..2 {
                            w[c] -= nv[a] * (u_k[a][c] - u_n[a][c]) / dt;
                        }
                    }
                }
                for i in 0..4 {
                    newton_col[i] += (w[0] * g[i][0] + w[1] * g[i][1]) * q.jxw;
                }
            }
        }
        if newton {
            for i in 0..4 {
                b.add(off_p + nodes[i], off_phi + e, newton_col[i]);
                rhs[off_p + nodes[i]] += cur.phi[e] * newton_col[i];
            }
        }
        if let Some(dt) = dt {
            let w = geo.lumped_weights();
            for i in 0..4 {
                b.add(off_p + nodes[i], off_phi + e, w[i] / dt);
                rhs[off_p + nodes[i]] += w[i] * old.phi[e] / dt;
            }
        }

        // φ - Φ_G : G(u) = Φ(G_k) - Φ_G : G_k, evaluated at C_φ = 1
        let grad_k = problem.element_grad_u(e, &cur.u);
        let p_ref = problem.element_mean(e, &cur.p);
        let model = &problem.materials.porosity;
        let collapse = |source| Error::PoreCollapse { element: e, source };
        let phi_k = model.porosity(&grad_k, p_ref, p_ref).map_err(collapse)?;
        let (d_grad, _) = model.derivatives(&grad_k, p_ref, p_ref).map_err(collapse)?;
        b.add(off_phi + e, off_phi + e, 1.0);
        let center = &geo.center;
        for a in 0..4 {
            for c in 0..2 {
                let k: f64 = (0..2).map(|d| d_grad.get(c, d) * center.grads[a][d]).sum();
                if k != 0.0 {
                    b.add(off_phi + e, 2 * nodes[a] + c, -k);
                }
            }
        }
        rhs[off_phi + e] = phi_k - d_grad.ddot(&grad_k);
    }

    for (node, rate) in &problem.sources.rates {
        rhs[off_p + node] += rate.eval(time);
    }

    let mut constraints = problem.bcs.displacement_values(time);
    let constrained: Vec<usize> = constraints.iter().map(|&(d, _)| d).collect();
    check_rigid_modes(mesh, &constrained)?;
    constraints.extend(problem.bcs.pressure_values(time).into_iter().map(|(i, v)| (off_p + i, v)));
    let mut matrix = b.build()?;
    matrix.apply_dirichlet(&mut rhs, &constraints)?;
    Ok(SparseSystem { matrix, rhs })
}
