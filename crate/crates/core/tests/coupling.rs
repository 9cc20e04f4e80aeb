mod common;

use porocouple_core::assembly::{BoundaryConditions, FieldState, FlowRegime, Materials, Problem, SolidLoading, Sources};
use porocouple_core::constitutive::{FluidParams, PorosityLaw, PorosityModel, SolidParams};
use porocouple_core::coupling::{converged, run, CouplingConfig, Linearization, Scheme};
use porocouple_core::mesh::{build_structured_grid, Side};

use common::{manufactured, steady, terzaghi, top_uy};

fn transient(scheme: Scheme, n_subcycles: usize) -> CouplingConfig {
    CouplingConfig { scheme, tol: 1e-8, n_subcycles, dt: Some(2e-3), t_end: 0.04, ..CouplingConfig::default() }
}

fn settlement(problem: &Problem, config: &CouplingConfig) -> Vec<f64> {
    let mut series = Vec::new();
    run(problem, &problem.initial_state(), config, |s, _| series.push(top_uy(problem, &s.u))).unwrap();
    series
}

#[test]
fn one_subcycle_is_lockstep() {
    let problem = terzaghi(40, 1.5);
    let mut lock_counts = Vec::new();
    let (lock, _) = run(&problem, &problem.initial_state(), &transient(Scheme::Lockstep, 1), |_, r| {
        lock_counts.push(r.outer_iterations)
    })
    .unwrap();
    let mut sub_counts = Vec::new();
    let (sub, _) = run(&problem, &problem.initial_state(), &transient(Scheme::Subcycle, 1), |_, r| {
        sub_counts.push(r.outer_iterations)
    })
    .unwrap();
    assert_eq!(lock_counts, sub_counts);
    assert!(converged(&lock, &sub, 1e-12).0);
}

#[test]
fn ten_subcycles_track_lockstep() {
    let problem = terzaghi(40, 1.5);
    let lock = settlement(&problem, &transient(Scheme::Lockstep, 1));
    let sub = settlement(&problem, &transient(Scheme::Subcycle, 10));
    let scale = lock.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let worst = lock.iter().zip(&sub).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(worst <= 0.01 * scale, "{worst:e} of {scale:e}");
}

#[test]
fn jacobi_needs_at_least_as_many_iterations() {
    let problem = manufactured(50, SolidLoading::StressSplit);
    for k in 3..=9 {
        let tol = 10f64.powi(-k);
        let (_, lock) = run(&problem, &problem.initial_state(), &steady(Scheme::Lockstep, tol), |_, _| {}).unwrap();
        let (_, jac) = run(&problem, &problem.initial_state(), &steady(Scheme::Jacobi, tol), |_, _| {}).unwrap();
        assert!(jac.outer_iterations() >= lock.outer_iterations(), "tol {tol:e}");
    }
}

#[test]
fn schemes_agree_within_a_hundred_tolerances() {
    let problem = manufactured(50, SolidLoading::StressSplitWithDrag);
    let tol = 1e-9;
    let reference = run(&problem, &problem.initial_state(), &steady(Scheme::FullyCoupled, tol), |_, _| {}).unwrap().0;
    for scheme in [Scheme::Lockstep, Scheme::Subcycle, Scheme::Jacobi] {
        let (state, report) = run(&problem, &problem.initial_state(), &steady(scheme, tol), |_, _| {}).unwrap();
        assert!(report.converged());
        let (ok, diff) = converged(&reference, &state, 100.0 * tol);
        assert!(ok, "{scheme}: {diff:e}");
    }
}

#[test]
fn newton_contracts_faster_than_picard() {
    let problem = manufactured(50, SolidLoading::StressSplit);
    let iterations = |linearization| {
        let config = CouplingConfig { linearization, ..steady(Scheme::FullyCoupled, 1e-10) };
        let mut history = Vec::new();
        run(&problem, &problem.initial_state(), &config, |_, r| history = r.residual_history.clone()).unwrap();
        history
    };
    let picard = iterations(Linearization::Picard);
    let newton = iterations(Linearization::Newton);
    assert!(newton.len() < picard.len(), "newton {newton:?} picard {picard:?}");
    // successive contraction factors shrink
    let ratios: Vec<f64> = newton.windows(2).map(|w| w[1] / w[0]).collect();
    assert!(ratios.windows(2).take(2).all(|r| r[1] < r[0]), "{newton:?}");
}

/// Frozen porosity, no fluid load on the solid and a steady flow field.
fn decoupled() -> Problem {
    let mesh = build_structured_grid(4, 4, 1.0, 1.0).unwrap();
    let solid = SolidParams { lambda: 1.0, mu: 1.0, rho: 1.0 };
    let fluid = FluidParams { mu0: 1.0, beta: 0.0, rho: 1.0, permeability: 1.0 };
    let mut materials = Materials::new(solid, fluid, PorosityModel::new(PorosityLaw::Frozen, 0.3));
    materials.solid_loading = SolidLoading::None;
    let mut bcs = BoundaryConditions::new();
    for &n in mesh.boundary.nodes(Side::Left) {
        bcs.set_pressure(n, 1.0).unwrap();
    }
    for &n in mesh.boundary.nodes(Side::Right) {
        bcs.set_pressure(n, 0.0).unwrap();
    }
    bcs.roller(&mesh, Side::Bottom).unwrap();
    bcs.roller(&mesh, Side::Left).unwrap();
    bcs.traction_on(&mesh, Side::Top, [0.0.into(), (-1.0).into()]);
    Problem::new(mesh, materials, bcs, Sources::default()).unwrap()
}

#[test]
fn decoupled_limit_converges_at_once() {
    let problem = decoupled();
    let mut states: Vec<FieldState> = Vec::new();
    for (scheme, limit) in [(Scheme::FullyCoupled, 1), (Scheme::Lockstep, 2), (Scheme::Jacobi, 2), (Scheme::Subcycle, 2)] {
        let (state, report) = run(&problem, &problem.initial_state(), &steady(scheme, 1e-10), |_, _| {}).unwrap();
        assert!(report.converged());
        assert!(report.outer_iterations() <= limit, "{scheme}: {}", report.outer_iterations());
        states.push(state);
    }
    for s in &states[1..] {
        assert!(converged(&states[0], s, 1e-10).0);
    }
}

#[test]
fn subcycling_without_flow_is_a_solid_solve() {
    let mut problem = terzaghi(10, 1.5);
    problem.materials.porosity = PorosityModel::new(PorosityLaw::Frozen, 0.3);
    problem.materials.solid_loading = SolidLoading::None;
    problem.materials.flow_regime = FlowRegime::QuasiSteady;
    let lock = run(&problem, &problem.initial_state(), &transient(Scheme::Lockstep, 1), |_, _| {}).unwrap().0;
    let sub = run(&problem, &problem.initial_state(), &transient(Scheme::Subcycle, 5), |_, _| {}).unwrap().0;
    assert!(sub.p.iter().all(|p| p.abs() < 1e-12));
    assert!(converged(&lock, &sub, 1e-12).0);
}
