//! Lockstep, subcycle and Jacobi iterations.

use std::thread;

use super::{iterate_to_convergence, linear_solve, CouplingConfig, Counts, Scheme, StepStatus};
use crate::assembly::{assemble_flow, assemble_solid, recover_velocity, FieldState, FlowInputs, Problem};
use crate::constitutive::PermeabilityModel;
use crate::Result;

const MAX_FLOW_PICARD: usize = 100;

type FlowResult = (Vec<f64>, Vec<f64>, Vec<[f64; 2]>);

pub(super) fn step(
    problem: &Problem,
    old: &FieldState,
    time: f64,
    dt: Option<f64>,
    config: &CouplingConfig,
    counts: &mut Counts,
) -> Result<(FieldState, Vec<f64>, StepStatus)> {
    let substeps = if config.scheme == Scheme::Subcycle { config.n_subcycles } else { 1 };
    let mut start = old.clone();
    start.time = time;
    iterate_to_convergence(start, config, |cur, _| {
        // reference pressure for the pressure-dependent porosity: the last
        // synchronised pressure
        let p_ref = problem.element_means(&cur.p);
        let next = if config.scheme == Scheme::Jacobi {
            jacobi(problem, old, cur, &p_ref, time, dt, config, counts)?
        } else {
            gauss_seidel(problem, old, cur, &p_ref, substeps, time, dt, config, counts)?
        };
        Ok((next, None))
    })
}

#[allow(clippy::too_many_arguments)]
fn gauss_seidel(
    problem: &Problem,
    old: &FieldState,
    cur: &FieldState,
    p_ref: &[f64],
    substeps: usize,
    time: f64,
    dt: Option<f64>,
    config: &CouplingConfig,
    counts: &mut Counts,
) -> Result<FieldState> {
    let (p, phi, v) = flow_advance(problem, old, cur, p_ref, substeps, time, dt, config, counts)?;
    let u = solid_solve(problem, &p, time, config, counts)?;
    Ok(FieldState { u, p, phi, v, s_n: cur.s_n.clone(), time })
}

#[allow(clippy::too_many_arguments)]
fn jacobi(
    problem: &Problem,
    old: &FieldState,
    cur: &FieldState,
    p_ref: &[f64],
    time: f64,
    dt: Option<f64>,
    config: &CouplingConfig,
    counts: &mut Counts,
) -> Result<FieldState> {
    let (flow, solid) = thread::scope(|scope| {
        let flow = scope.spawn(|| {
            let mut c = Counts::default();
            flow_advance(problem, old, cur, p_ref, 1, time, dt, config, &mut c).map(|r| (r, c))
        });
        let mut c = Counts::default();
        let solid = solid_solve(problem, &cur.p, time, config, &mut c).map(|u| (u, c));
        (flow.join().expect("flow solve thread panicked"), solid)
    });
    let ((p, phi, v), cf) = flow?;
    let (u, cs) = solid?;
    counts.flow += cf.flow;
    counts.solid += cs.solid;
    Ok(FieldState { u, p, phi, v, s_n: cur.s_n.clone(), time })
}

/// Advances the flow over one solid step in `substeps` substeps, with the
/// displacement interpolated linearly between the start of the step and the
/// current iterate. Returns pressure, porosity and velocity at the end.
#[allow(clippy::too_many_arguments)]
fn flow_advance(
    problem: &Problem,
    old: &FieldState,
    cur: &FieldState,
    p_ref: &[f64],
    substeps: usize,
    time: f64,
    dt: Option<f64>,
    config: &CouplingConfig,
    counts: &mut Counts,
) -> Result<FlowResult> {
    let sub_dt = dt.map(|d| d / substeps as f64);
    let mut u_prev = old.u.clone();
    let mut phi_prev = old.phi.clone();
    let mut p = cur.p.clone();
    let mut v = Vec::new();
    for j in 1..=substeps {
        let u_j: Vec<[f64; 2]> = if j == substeps {
            cur.u.clone()
        } else {
            let w = j as f64 / substeps as f64;
            old.u
                .iter()
                .zip(&cur.u)
                .map(|(a, b)| [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])])
                .collect()
        };
        let t_j = match dt {
            Some(d) if j < substeps => old.time + d * j as f64 / substeps as f64,
            _ => time,
        };
        let inputs = FlowInputs {
            u: &u_j,
            u_old: &u_prev,
            p_iter: &p,
            phi_old: &phi_prev,
            p_ref,
            s_n: &cur.s_n,
            dt: sub_dt,
            time: t_j,
        };
        let p_new = flow_solve(problem, inputs, config, counts)?;
        let phi = problem.porosity_field(&u_j, &p_new, p_ref)?;
        if j == substeps {
            v = recover_velocity(problem, &FlowInputs { p_iter: &p_new, ..inputs }, &p_new)?;
        }
        p = p_new;
        phi_prev = phi;
        u_prev = u_j;
    }
    Ok((p, phi_prev, v))
}

/// Solves the flow system, iterating on the pressure-dependent viscosity
/// and damage factor when they are active.
fn flow_solve(problem: &Problem, inputs: FlowInputs, config: &CouplingConfig, counts: &mut Counts) -> Result<Vec<f64>> {
    let nonlinear = problem.materials.fluid.beta != 0.0
        || !matches!(problem.materials.permeability, PermeabilityModel::Constant);
    let inner_tol = 0.1 * config.tol;
    let mut p_iter = inputs.p_iter.to_vec();
    for _ in 0..MAX_FLOW_PICARD {
        let (system, _) = assemble_flow(problem, &FlowInputs { p_iter: &p_iter, ..inputs })?;
        let p = linear_solve(&system, &config.linear)?;
        counts.flow += 1;
        if !nonlinear {
            return Ok(p);
        }
        let (mut d, mut n) = (0.0, 0.0);
        for (a, b) in p_iter.iter().zip(&p) {
            d += (b - a) * (b - a);
            n += b * b;
        }
        p_iter = p;
        if d.sqrt() <= inner_tol * (n.sqrt() + 1e-14) {
            return Ok(p_iter);
        }
    }
    log::warn!("flow Picard iteration did not reach {inner_tol:e} in {MAX_FLOW_PICARD} passes");
    Ok(p_iter)
}

fn solid_solve(
    problem: &Problem,
    p: &[f64],
    time: f64,
    config: &CouplingConfig,
    counts: &mut Counts,
) -> Result<Vec<[f64; 2]>> {
    let system = assemble_solid(problem, p, time)?;
    let x = linear_solve(&system, &config.linear)?;
    counts.solid += 1;
    Ok(x.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
}
