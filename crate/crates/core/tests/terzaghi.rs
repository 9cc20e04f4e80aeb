mod common;

use porocouple_core::coupling::{run, CouplingConfig, Scheme};
use porocouple_core::verification::{terzaghi_analytic, TerzaghiParams};

fn max_error(scheme: Scheme, ny: usize, height: f64, dt: f64, t_end: f64) -> f64 {
    let problem = common::terzaghi(ny, height);
    let config = CouplingConfig { scheme, tol: 1e-10, dt: Some(dt), t_end, ..CouplingConfig::default() };
    let params = TerzaghiParams::default();
    let (mut num, mut times) = (Vec::new(), Vec::new());
    run(&problem, &problem.initial_state(), &config, |s, _| {
        num.push(common::top_uy(&problem, &s.u));
        times.push(s.time);
    })
    .unwrap();
    let exact: Vec<f64> = times.iter().map(|&t| terzaghi_analytic(t, &params, 2000).unwrap()).collect();
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    num.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn surface_settlement_matches_the_convolution() {
    for scheme in [Scheme::FullyCoupled, Scheme::Lockstep] {
        let coarse = max_error(scheme, 50, 1.5, 4e-3, 0.2);
        let fine = max_error(scheme, 100, 1.5, 2e-3, 0.2);
        assert!(fine < 0.03, "{scheme}: {fine:e}");
        assert!(fine < 0.6 * coarse, "{scheme}: no refinement gain {coarse:e} -> {fine:e}");
    }
}
