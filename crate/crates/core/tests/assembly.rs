use porocouple_core::assembly::{
    advance_saturation, assemble_flow, assemble_solid, drag_loads, flow_boundary_fluxes, BoundaryConditions,
    FieldState, FlowInputs, FlowRegime, Materials, Problem, Sources, TwoPhaseParams,
};
use porocouple_core::constitutive::{FluidParams, PermeabilityModel, PorosityLaw, PorosityModel, SolidParams};
use porocouple_core::linalg::{cg, SparseMatrix};
use porocouple_core::mesh::{build_structured_grid, Side};
use porocouple_core::Tensor2;
use proptest::prelude::*;

const N: usize = 6;

/// Unit square with damage permeability and a checkerboard modulus.
fn materials(mesh_elements: usize, law: PorosityLaw) -> Materials {
    let solid = SolidParams { lambda: 2.0, mu: 1.0, rho: 1.0 };
    let fluid = FluidParams { mu0: 1.0, beta: 0.1, rho: 1.0, permeability: 1.0 };
    let mut m = Materials::new(solid, fluid, PorosityModel::new(law, 0.2));
    let in_situ = Tensor2::diag(-1.0, -1.0);
    m.in_situ_stress = in_situ;
    m.permeability = PermeabilityModel::Damage { zeta: 1.0, in_situ };
    m.lambda_field = Some((0..mesh_elements).map(|e| if e % 2 == 0 { 1.0 } else { 3.0 }).collect());
    m
}

fn pressure_driven(law: PorosityLaw) -> Problem {
    let mesh = build_structured_grid(N, N, 1.0, 1.0).unwrap();
    let mut materials = materials(mesh.element_count(), law);
    materials.flow_regime = FlowRegime::QuasiSteady;
    let mut bcs = BoundaryConditions::new();
    for &n in mesh.boundary.nodes(Side::Left) {
        bcs.set_pressure(n, 1.0).unwrap();
    }
    for &n in mesh.boundary.nodes(Side::Right) {
        bcs.set_pressure(n, 0.0).unwrap();
    }
    for side in [Side::Bottom, Side::Top, Side::Left] {
        bcs.roller(&mesh, side).unwrap();
    }
    Problem::new(mesh, materials, bcs, Sources::default()).unwrap()
}

/// Deformed state with a smooth displacement so the damage factors vary.
fn deformed(problem: &Problem) -> FieldState {
    let mut s = problem.initial_state();
    for (n, x) in problem.mesh.nodes.iter().enumerate() {
        s.u[n] = [0.01 * x[0] * x[1], -0.02 * x[0] * x[0]];
        s.p[n] = 1.0 - x[0];
    }
    s
}

fn inputs<'a>(s: &'a FieldState, p_ref: &'a [f64]) -> FlowInputs<'a> {
    FlowInputs { u: &s.u, u_old: &s.u, p_iter: &s.p, phi_old: &s.phi, p_ref, s_n: &s.s_n, dt: None, time: 1.0 }
}

fn quadratic_form(a: &SparseMatrix, x: &[f64]) -> f64 {
    a.spmv(x).unwrap().iter().zip(x).map(|(ax, xi)| ax * xi).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flow_matrix_is_positive_definite(x in prop::collection::vec(-1.0..1.0f64, (N + 1) * (N + 1))) {
        let problem = pressure_driven(PorosityLaw::Rational);
        let s = deformed(&problem);
        let p_ref = vec![0.0; problem.mesh.element_count()];
        let (system, _) = assemble_flow(&problem, &inputs(&s, &p_ref)).unwrap();
        prop_assume!(x.iter().any(|v| *v != 0.0));
        prop_assert!(quadratic_form(&system.matrix, &x) > 0.0);
    }

    #[test]
    fn drag_obeys_the_third_law(
        alpha in prop::collection::vec(0.1..10.0f64, N * N),
        vf in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), N * N),
        vs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), N * N),
    ) {
        let problem = pressure_driven(PorosityLaw::Frozen);
        let vf: Vec<[f64; 2]> = vf.into_iter().map(|(a, b)| [a, b]).collect();
        let vs: Vec<[f64; 2]> = vs.into_iter().map(|(a, b)| [a, b]).collect();
        let (fluid, solid) = drag_loads(&problem, &alpha, &vf, &vs);
        for (f, s) in fluid.iter().zip(&solid) {
            prop_assert!((f[0] + s[0]).abs() <= 1e-12 && (f[1] + s[1]).abs() <= 1e-12);
        }
    }
}

#[test]
fn flow_matrix_is_symmetric_and_cg_converges() {
    let problem = pressure_driven(PorosityLaw::Rational);
    let s = deformed(&problem);
    let p_ref = vec![0.0; problem.mesh.element_count()];
    let (system, _) = assemble_flow(&problem, &inputs(&s, &p_ref)).unwrap();
    assert!(system.matrix.asymmetry() <= 1e-12);
    let (_, report) = cg(&system.matrix, &system.rhs, 1e-12, 1000).unwrap();
    assert!(report.converged);
}

#[test]
fn elasticity_is_symmetric_and_positive_definite() {
    let problem = pressure_driven(PorosityLaw::Frozen);
    let p: Vec<f64> = problem.mesh.nodes.iter().map(|x| x[0] * x[1]).collect();
    let system = assemble_solid(&problem, &p, 0.0).unwrap();
    let a = &system.matrix;
    let scale = a.diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    assert!(a.asymmetry() <= 1e-12 * scale);
    let (_, report) = cg(a, &system.rhs, 1e-12, 5000).unwrap();
    assert!(report.converged);
    let x: Vec<f64> = (0..a.dim()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
    assert!(quadratic_form(a, &x) > 0.0);
}

#[test]
fn steady_flow_has_zero_net_boundary_flux() {
    let problem = pressure_driven(PorosityLaw::Rational);
    let s = deformed(&problem);
    let p_ref = vec![0.0; problem.mesh.element_count()];
    let inp = inputs(&s, &p_ref);
    let (system, _) = assemble_flow(&problem, &inp).unwrap();
    let (p, _) = cg(&system.matrix, &system.rhs, 1e-14, 1000).unwrap();
    let fluxes = flow_boundary_fluxes(&problem, &inp, &p).unwrap();
    let net: f64 = fluxes.iter().map(|(_, q)| q).sum();
    let gross: f64 = fluxes.iter().map(|(_, q)| q.abs()).sum();
    assert!(gross > 0.0);
    assert!(net.abs() <= 1e-10 * gross, "net {net:e} of {gross:e}");
}

fn flooding() -> Problem {
    let mesh = build_structured_grid(N, N, 1.0, 1.0).unwrap();
    let mut materials = materials(mesh.element_count(), PorosityLaw::Frozen);
    materials.flow_regime = FlowRegime::QuasiSteady;
    materials.two_phase = Some(TwoPhaseParams::default());
    let mut bcs = BoundaryConditions::new();
    bcs.set_pressure(mesh.node_index(0, 0), 1.0).unwrap();
    bcs.set_pressure(mesh.node_index(N, N), 0.0).unwrap();
    Problem::new(mesh, materials, bcs, Sources::default()).unwrap()
}

#[test]
fn saturation_conserves_each_phase() {
    let problem = flooding();
    let mut s = problem.initial_state();
    s.s_n.iter_mut().for_each(|v| *v = 1.0);
    let p_ref = vec![0.0; problem.mesh.element_count()];
    for _ in 0..5 {
        let frozen = s.clone();
        let inp = inputs(&frozen, &p_ref);
        let (system, _) = assemble_flow(&problem, &inp).unwrap();
        let (p, _) = cg(&system.matrix, &system.rhs, 1e-14, 1000).unwrap();
        let report = advance_saturation(&problem, &inp, &p, &mut s.s_n, 0.02).unwrap();
        assert!(report.oil_imbalance() <= 1e-10, "{report:?}");
        assert!(report.water_imbalance() <= 1e-10, "{report:?}");
        assert!(s.s_n.iter().all(|v| (-1e-10..=1.0 + 1e-10).contains(v)));
    }
    assert!(s.s_n.iter().any(|v| *v < 1.0), "water never entered");
}

#[test]
fn no_flow_leaves_saturation_unchanged() {
    let problem = flooding();
    let mut s = problem.initial_state();
    let initial: Vec<f64> = (0..s.s_n.len()).map(|i| (i % 5) as f64 / 4.0).collect();
    s.s_n = initial.clone();
    let frozen = s.clone();
    let p_ref = vec![0.0; problem.mesh.element_count()];
    let p = vec![0.5; problem.mesh.node_count()];
    advance_saturation(&problem, &inputs(&frozen, &p_ref), &p, &mut s.s_n, 0.1).unwrap();
    assert_eq!(s.s_n, initial);
}
