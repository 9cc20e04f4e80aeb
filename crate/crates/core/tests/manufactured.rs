mod common;

use porocouple_core::assembly::{FieldState, SolidLoading};
use porocouple_core::coupling::{run, Scheme};
use porocouple_core::verification::{convergence_rates, l2_error, ms_exact, ManufacturedConstants, MeshField};

struct Errors {
    u: f64,
    p: f64,
    v: f64,
    phi: f64,
}

fn errors(problem: &porocouple_core::assembly::Problem, s: &FieldState) -> Errors {
    let c = ManufacturedConstants::default();
    let mesh = &problem.mesh;
    let ux: Vec<f64> = s.u.iter().map(|u| u[0]).collect();
    let vx: Vec<f64> = s.v.iter().map(|v| v[0]).collect();
    let e = |f: MeshField, g: fn(&porocouple_core::verification::MsFields) -> f64| {
        l2_error(mesh, f, |x| g(&ms_exact(x[0], &c))).unwrap().value()
    };
    Errors {
        u: e(MeshField::Nodal(&ux), |f| f.u),
        p: e(MeshField::Nodal(&s.p), |f| f.p),
        v: e(MeshField::Elemental(&vx), |f| f.v),
        phi: e(MeshField::Elemental(&s.phi), |f| f.phi),
    }
}

#[test]
fn every_scheme_meets_the_accuracy_target() {
    for loading in [SolidLoading::StressSplit, SolidLoading::StressSplitWithDrag] {
        let problem = common::manufactured(200, loading);
        let mut finals = Vec::new();
        for scheme in Scheme::ALL {
            let (state, report) = run(&problem, &problem.initial_state(), &common::steady(scheme, 1e-9), |_, _| {})
                .unwrap();
            assert!(report.converged(), "{scheme} did not converge");
            let err = errors(&problem, &state);
            for (name, value) in [("u", err.u), ("p", err.p), ("v", err.v), ("phi", err.phi)] {
                assert!(value < 1e-3, "{scheme} {name} error {value:e}");
            }
            finals.push(state);
        }
        for a in &finals {
            for b in &finals {
                let (_, r) = porocouple_core::coupling::converged(a, b, 1.0);
                assert!(r < 1e-7, "schemes disagree by {r:e}");
            }
        }
    }
}

#[test]
fn second_order_in_u_and_p() {
    let (mut eu, mut ep) = (Vec::new(), Vec::new());
    for nx in [50, 100, 200, 400] {
        let problem = common::manufactured(nx, SolidLoading::StressSplit);
        let (state, _) = run(&problem, &problem.initial_state(), &common::steady(Scheme::FullyCoupled, 1e-11), |_, _| {})
            .unwrap();
        let err = errors(&problem, &state);
        eu.push(err.u);
        ep.push(err.p);
    }
    for r in convergence_rates(&eu).into_iter().chain(convergence_rates(&ep)) {
        assert!(r >= 1.9, "rate {r}");
    }
}
