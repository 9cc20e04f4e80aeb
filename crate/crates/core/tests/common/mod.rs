#![allow(dead_code)]

use std::sync::Arc;

use porocouple_core::assembly::{BoundaryConditions, Materials, Problem, SolidLoading, Sources};
use porocouple_core::constitutive::{FluidParams, PorosityLaw, PorosityModel, SolidParams};
use porocouple_core::coupling::{CouplingConfig, Scheme};
use porocouple_core::mesh::{build_structured_grid, Side};
use porocouple_core::verification::{ms_exact, ms_solid_body_force, ManufacturedConstants};

/// Steady manufactured-solution problem on an `nx × 1` strip of the unit
/// square with the exact fields imposed at `x = 0` and `x = 1`.
pub fn manufactured(nx: usize, loading: SolidLoading) -> Problem {
    let c = ManufacturedConstants::default();
    let mesh = build_structured_grid(nx, 1, 1.0, 1.0).unwrap();
    let solid = SolidParams { lambda: c.lambda, mu: c.mu, rho: c.rho_s };
    let fluid = FluidParams { mu0: c.alpha, beta: 0.0, rho: c.rho_f, permeability: 1.0 };
    let mut materials = Materials::new(solid, fluid, PorosityModel::new(PorosityLaw::Rational, c.phi0));
    materials.solid_loading = loading;
    let mut bcs = BoundaryConditions::new();
    for n in 0..mesh.node_count() {
        bcs.fix_displacement(n, 1, 0.0).unwrap();
    }
    for side in [Side::Left, Side::Right] {
        for &n in mesh.boundary.nodes(side) {
            let x = mesh.nodes[n][0];
            let f = ms_exact(x, &c);
            bcs.fix_displacement(n, 0, f.u).unwrap();
            bcs.set_pressure(n, f.p).unwrap();
        }
    }
    let sources = Sources {
        solid_body: Some(Arc::new(move |x: [f64; 2], _| [ms_solid_body_force(x[0], &c, loading), 0.0])),
        ..Sources::default()
    };
    Problem::new(mesh, materials, bcs, sources).unwrap()
}

pub fn steady(scheme: Scheme, tol: f64) -> CouplingConfig {
    CouplingConfig { scheme, tol, ..CouplingConfig::default() }
}

/// Drained column of height `height` under the Terzaghi surface load, with
/// `ny` elements over the height.
pub fn terzaghi(ny: usize, height: f64) -> Problem {
    use porocouple_core::assembly::Schedule;
    use porocouple_core::verification::TerzaghiParams;
    let t = TerzaghiParams::default();
    let mesh = build_structured_grid(1, ny, height / ny as f64, height).unwrap();
    let solid = SolidParams { lambda: t.lambda, mu: t.mu, rho: t.rho_s };
    let fluid = FluidParams { mu0: t.k_c * t.n_f, beta: 0.0, rho: t.rho_f, permeability: 1.0 };
    let porosity =
        PorosityModel::new(PorosityLaw::LargeDeformation, t.n_f).with_compressibility(1.0 / (t.n_f * t.modulus()));
    let materials = Materials::new(solid, fluid, porosity);
    let mut bcs = BoundaryConditions::new();
    for side in [Side::Left, Side::Right, Side::Bottom] {
        bcs.roller(&mesh, side).unwrap();
    }
    bcs.drain(&mesh, Side::Top).unwrap();
    let load = Schedule::OneMinusCos { amplitude: -100.0, omega: 75.0 };
    bcs.traction_on(&mesh, Side::Top, [Schedule::ZERO, load]);
    Problem::new(mesh, materials, bcs, Sources::default()).unwrap()
}

pub fn top_uy(problem: &Problem, u: &[[f64; 2]]) -> f64 {
    let top = problem.mesh.boundary.nodes(Side::Top);
    top.iter().map(|&n| u[n][1]).sum::<f64>() / top.len() as f64
}
