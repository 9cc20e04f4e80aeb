//! Coupling algorithms for the flow, porosity and solid subsystems.
//!
//! * fully coupled: one block system in `(u, p, φ)` per nonlinear iteration;
//! * lockstep: flow, porosity update, solid, in sequence, repeated to `tol`;
//! * subcycle: lockstep with the flow advanced in `n_subcycles` substeps per
//!   solid step (one substep is lockstep);
//! * Jacobi: flow and solid solved concurrently against the previous
//!   iteration's partner fields.

mod monolithic;
mod segregated;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{
    advance_saturation, assemble_flow, recover_velocity, FieldState, FlowInputs, Problem, SaturationReport,
};
use crate::linalg::{solve, SolveMethod, SparseSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    FullyCoupled,
    Lockstep,
    Subcycle,
    Jacobi,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::FullyCoupled, Scheme::Lockstep, Scheme::Subcycle, Scheme::Jacobi];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::FullyCoupled => "fully_coupled",
            Scheme::Lockstep => "lockstep",
            Scheme::Subcycle => "subcycle",
            Scheme::Jacobi => "jacobi",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}` (fully_coupled, lockstep, subcycle, jacobi)")))
    }
}

/// Linearisation of the monolithic system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linearization {
    /// Conductance porosity and viscosity lagged one iteration.
    #[default]
    Picard,
    /// Adds the porosity derivative of the flow conductance.
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearSolverConfig {
    pub method: SolveMethod,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LinearSolverConfig {
    fn default() -> Self {
        LinearSolverConfig { method: SolveMethod::Auto, tol: 1e-13, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    pub scheme: Scheme,
    /// Relative tolerance on successive outer iterates.
    pub tol: f64,
    pub max_outer_iters: usize,
    /// Flow substeps per solid step (subcycle scheme).
    pub n_subcycles: usize,
    /// Time step; `None` for a single steady solve.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub linearization: Linearization,
    pub linear: LinearSolverConfig,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig {
            scheme: Scheme::Lockstep,
            tol: 1e-9,
            max_outer_iters: 200,
            n_subcycles: 1,
            dt: None,
            t_end: 0.0,
            linearization: Linearization::Picard,
            linear: LinearSolverConfig::default(),
        }
    }
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("coupling tolerance must be positive, got {}", self.tol)));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::Config("max_outer_iters must be at least 1".into()));
        }
        if self.n_subcycles == 0 {
            return Err(Error::Config("n_subcycles must be at least 1".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("dt must be positive and finite, got {dt}")));
            }
            if !(self.t_end > 0.0) {
                return Err(Error::Config("t_end must be positive for a transient run".into()));
            }
        }
        Ok(())
    }

    /// Number of time steps; a steady run has one.
    pub fn step_count(&self) -> usize {
        match self.dt {
            Some(dt) => ((self.t_end / dt) - 1e-9).ceil().max(1.0) as usize,
            None => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Converged,
    MaxIterations,
    Stagnated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub time: f64,
    pub outer_iterations: usize,
    /// Convergence residual after each outer iteration.
    pub residual_history: Vec<f64>,
    pub status: StepStatus,
    pub flow_solves: usize,
    pub solid_solves: usize,
    pub saturation: Option<SaturationReport>,
}

impl StepReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub scheme: Scheme,
    pub steps: Vec<StepReport>,
    pub flow_solves: usize,
    pub solid_solves: usize,
    pub wall_time: f64,
}

impl ConvergenceReport {
    pub fn outer_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.outer_iterations).sum()
    }

    pub fn converged(&self) -> bool {
        self.steps.iter().all(|s| s.status == StepStatus::Converged)
    }

    pub fn max_residual(&self) -> f64 {
        self.steps.iter().map(StepReport::final_residual).fold(0.0, f64::max)
    }
}

/// Subsystem solve counters shared by the schemes.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Counts {
    pub flow: usize,
    pub solid: usize,
}

/// Relative change between two states: the largest of
/// `||next - prev|| / (||next|| + 1e-14)` over displacement, pressure and
/// porosity.
pub fn converged(prev: &FieldState, next: &FieldState, tol: f64) -> (bool, f64) {
    fn rel<'a>(a: impl Iterator<Item = (&'a f64, &'a f64)>) -> f64 {
        let (mut d, mut n) = (0.0, 0.0);
        for (x, y) in a {
            d += (y - x) * (y - x);
            n += y * y;
        }
        d.sqrt() / (n.sqrt() + 1e-14)
    }
    let u = rel(prev.u.iter().flatten().zip(next.u.iter().flatten()));
    let p = rel(prev.p.iter().zip(&next.p));
    let phi = rel(prev.phi.iter().zip(&next.phi));
    let r = u.max(p).max(phi);
    (r <= tol, r)
}

const STAGNATION_WINDOW: usize = 10;
const STAGNATION_REDUCTION: f64 = 1e-3;

fn stagnated(history: &[f64]) -> bool {
    let n = history.len();
    if n <= STAGNATION_WINDOW {
        return false;
    }
    let (old, new) = (history[n - 1 - STAGNATION_WINDOW], history[n - 1]);
    old > 0.0 && (old - new) / old < STAGNATION_REDUCTION
}

pub(crate) fn linear_solve(system: &SparseSystem, cfg: &LinearSolverConfig) -> Result<Vec<f64>> {
    let (x, report) = solve(&system.matrix, &system.rhs, cfg.method, cfg.tol, cfg.max_iter)?;
    if !report.converged {
        log::warn!(
            "{} stopped after {} iterations at relative residual {:e}",
            report.method,
            report.iterations,
            report.final_residual
        );
    }
    Ok(x)
}

/// Runs the configured scheme from `initial` to `config.t_end`, calling
/// `observer` after every step.
pub fn run(
    problem: &Problem,
    initial: &FieldState,
    config: &CouplingConfig,
    mut observer: impl FnMut(&FieldState, &StepReport),
) -> Result<(FieldState, ConvergenceReport)> {
    config.validate()?;
    initial.validate(&problem.mesh)?;
    if problem.materials.two_phase.is_some() && config.dt.is_none() {
        return Err(Error::Config("two-phase transport needs a time step".into()));
    }
    let start = Instant::now();
    let mut state = initial.clone();
    let mut report = ConvergenceReport {
        scheme: config.scheme,
        steps: Vec::new(),
        flow_solves: 0,
        solid_solves: 0,
        wall_time: 0.0,
    };
    for step in 0..config.step_count() {
        let time = match config.dt {
            Some(dt) => ((step + 1) as f64 * dt).min(config.t_end),
            None => config.t_end,
        };
        let dt = config.dt.map(|_| time - state.time);
        let mut counts = Counts::default();
        let (mut next, history, status) = match config.scheme {
            Scheme::FullyCoupled => monolithic::step(problem, &state, time, dt, config, &mut counts)?,
            _ => segregated::step(problem, &state, time, dt, config, &mut counts)?,
        };
        let saturation = match (problem.materials.two_phase.is_some(), dt) {
            (true, Some(dt)) => Some(transport_step(problem, &state, &mut next, dt, config, &mut counts)?),
            _ => None,
        };
        let step_report = StepReport {
            time,
            outer_iterations: history.len(),
            residual_history: history,
            status,
            flow_solves: counts.flow,
            solid_solves: counts.solid,
            saturation,
        };
        if status != StepStatus::Converged {
            log::warn!(
                "{} step at t = {time} ended {:?} after {} iterations (residual {:e})",
                config.scheme,
                status,
                step_report.outer_iterations,
                step_report.final_residual()
            );
        }
        report.flow_solves += counts.flow;
        report.solid_solves += counts.solid;
        observer(&next, &step_report);
        report.steps.push(step_report);
        state = next;
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((state, report))
}

/// Pressure solve consistent with the converged state followed by the
/// explicit saturation update.
fn transport_step(
    problem: &Problem,
    old: &FieldState,
    next: &mut FieldState,
    dt: f64,
    config: &CouplingConfig,
    counts: &mut Counts,
) -> Result<SaturationReport> {
    let p_ref = problem.element_means(&next.p);
    let p_iter = next.p.clone();
    let inputs = FlowInputs {
        u: &next.u,
        u_old: &old.u,
        p_iter: &p_iter,
        phi_old: &old.phi,
        p_ref: &p_ref,
        s_n: &old.s_n,
        dt: Some(dt),
        time: next.time,
    };
    let (system, _) = assemble_flow(problem, &inputs)?;
    let p = linear_solve(&system, &config.linear)?;
    counts.flow += 1;
    let v = recover_velocity(problem, &inputs, &p)?;
    let mut s_n = old.s_n.clone();
    let report = advance_saturation(problem, &inputs, &p, &mut s_n, dt)?;
    next.p = p;
    next.v = v;
    next.s_n = s_n;
    Ok(report)
}

/// Runs `problem` with `config.scheme` forced to `scheme`.
fn run_with(
    scheme: Scheme,
    problem: &Problem,
    initial: &FieldState,
    config: &CouplingConfig,
) -> Result<(FieldState, ConvergenceReport)> {
    let config = CouplingConfig { scheme, ..*config };
    run(problem, initial, &config, |_, _| {})
}

pub fn solve_fully_coupled(
    problem: &Problem,
    initial: &FieldState,
    config: &CouplingConfig,
) -> Result<(FieldState, ConvergenceReport)> {
    run_with(Scheme::FullyCoupled, problem, initial, config)
}

pub fn solve_lockstep(
    problem: &Problem,
    initial: &FieldState,
    config: &CouplingConfig,
) -> Result<(FieldState, ConvergenceReport)> {
    run_with(Scheme::Lockstep, problem, initial, config)
}

pub fn solve_subcycle(
    problem: &Problem,
    initial: &FieldState,
    config: &CouplingConfig,
) -> Result<(FieldState, ConvergenceReport)> {
    run_with(Scheme::Subcycle, problem, initial, config)
}

pub fn solve_jacobi(
    problem: &Problem,
    initial: &FieldState,
    config: &CouplingConfig,
) -> Result<(FieldState, ConvergenceReport)> {
    run_with(Scheme::Jacobi, problem, initial, config)
}

/// Outer iteration driver shared by all schemes: applies `iterate` until the
/// change between successive states drops below `tol`, stagnates, or the
/// iteration cap is reached.
pub(crate) fn iterate_to_convergence(
    start: FieldState,
    config: &CouplingConfig,
    mut iterate: impl FnMut(&FieldState, usize) -> Result<(FieldState, Option<f64>)>,
) -> Result<(FieldState, Vec<f64>, StepStatus)> {
    let mut current = start;
    let mut history = Vec::new();
    for k in 1..=config.max_outer_iters {
        let (next, exact_residual) = iterate(&current, k)?;
        let (mut done, mut residual) = converged(&current, &next, config.tol);
        if let Some(r) = exact_residual {
            // linear problem solved exactly in one pass
            residual = r;
            done = true;
        }
        history.push(residual);
        current = next;
        if done {
            return Ok((current, history, StepStatus::Converged));
        }
        if stagnated(&history) {
            return Ok((current, history, StepStatus::Stagnated));
        }
    }
    Ok((current, history, StepStatus::MaxIterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_grid;

    fn state() -> FieldState {
        let mesh = build_structured_grid(2, 1, 1.0, 1.0).unwrap();
        let mut s = FieldState::new(&mesh, 0.2);
        s.p = (0..6).map(|i| 1.0 + i as f64).collect();
        s.u = (0..6).map(|i| [0.1 * i as f64, -0.2]).collect();
        s
    }

    #[test]
    fn identical_states_converge() {
        let s = state();
        assert_eq!(converged(&s, &s, 1e-300), (true, 0.0));
    }

    #[test]
    fn perturbation_sets_residual() {
        let prev = state();
        let mut next = prev.clone();
        for p in next.p.iter_mut() {
            *p *= 1.0 + 1e-6;
        }
        let (_, r) = converged(&prev, &next, 1.0);
        assert!((r - 1e-6).abs() < 1e-9);
        assert!(converged(&prev, &next, 2e-6).0);
        assert!(!converged(&prev, &next, 5e-7).0);
    }

    #[test]
    fn max_over_fields() {
        let prev = state();
        let mut next = prev.clone();
        next.phi[0] = 0.3;
        let (ok, r) = converged(&prev, &next, 1e-3);
        assert!(!ok && r > 0.1);
    }

    #[test]
    fn stagnation_window() {
        let flat = vec![1e-3; 11];
        assert!(stagnated(&flat));
        let falling: Vec<f64> = (0..11).map(|k| 0.5f64.powi(k)).collect();
        assert!(!stagnated(&falling));
        assert!(!stagnated(&flat[..10]));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("gauss".parse::<Scheme>().is_err());
    }
}
