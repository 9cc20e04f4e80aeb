use std::f64::consts::PI;

use porocouple_core::mesh::build_structured_grid;
use porocouple_core::verification::{
    bessel_i0, bessel_i0_scaled, bessel_i0_series, convergence_rates, l2_error, ms_exact, terzaghi_analytic,
    terzaghi_analytic_with, ManufacturedConstants, MeshField, TerzaghiParams,
};
use proptest::prelude::*;

/// `I₁` from its power series, independent of the library's expansions.
fn bessel_i1(z: f64) -> f64 {
    let q = z * z / 4.0;
    let (mut term, mut sum) = (z / 2.0, z / 2.0);
    for k in 1..400 {
        term *= q / (k * (k + 1)) as f64;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Slow-draining column where `b t / 2a` stays moderate.
fn slow_column() -> TerzaghiParams {
    TerzaghiParams { k_c: 1e-4, ..TerzaghiParams::default() }
}

proptest! {
    #[test]
    fn bessel_matches_its_series(z in 0.0..20.0f64) {
        let series = bessel_i0_series(z);
        prop_assert!((bessel_i0(z) - series).abs() <= 1e-8 * series);
        prop_assert!((bessel_i0_scaled(z) - (-z).exp() * series).abs() <= 1e-8 * (-z).exp() * series);
    }

    #[test]
    fn manufactured_fields_satisfy_the_flow_equations(x in 0.0..1.0f64) {
        let c = ManufacturedConstants::default();
        let f = ms_exact(x, &c);
        let h = 1e-5;
        let dp = (ms_exact(x + h, &c).p - ms_exact(x - h, &c).p) / (2.0 * h);
        prop_assert!((c.alpha * f.v + dp).abs() <= 1e-8);
        prop_assert!((f.phi * f.v - c.phi0 * c.v0).abs() <= 1e-14);
    }

    #[test]
    fn step_load_settlement_has_a_closed_form(t in 0.01..2.0f64) {
        let params = slow_column();
        let (a, b) = (params.a(), params.b());
        let x = b * t / (2.0 * a);
        // ∫₀ᵗ e^{-kτ} I₀(kτ) dτ = t e^{-kt} (I₀(kt) + I₁(kt))
        let integral = t * (-x).exp() * (bessel_i0_series(x) + bessel_i1(x));
        let exact = -integral / (a.sqrt() * params.modulus());
        let computed = terzaghi_analytic_with(t, &params, 2000, |_| 1.0).unwrap();
        prop_assert!((computed - exact).abs() <= 1e-6 * exact.abs(), "{computed} vs {exact}");
    }

    #[test]
    fn settlement_is_linear_in_the_load(t in 0.01..0.3f64, s in -3.0..3.0f64) {
        let params = TerzaghiParams::default();
        let base = terzaghi_analytic(t, &params, 2000).unwrap();
        let scaled = terzaghi_analytic_with(t, &params, 2000, |tau| s * 100.0 * (1.0 - (75.0 * tau).cos())).unwrap();
        prop_assert!((scaled - s * base).abs() <= 1e-12 * base.abs().max(1e-30));
    }
}

#[test]
fn quadrature_is_converged_at_the_default_panels() {
    let params = TerzaghiParams::default();
    for t in [0.005, 0.05, 0.1, 0.2] {
        let n = terzaghi_analytic(t, &params, 2000).unwrap();
        let n2 = terzaghi_analytic(t, &params, 4000).unwrap();
        assert!((n2 - n).abs() <= 1e-6 * n2.abs(), "t = {t}");
    }
    assert_eq!(terzaghi_analytic(0.0, &params, 2000).unwrap(), 0.0);
}

#[test]
fn interpolation_error_is_second_order() {
    let errors: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| {
            let mesh = build_structured_grid(n, n, 1.0, 1.0).unwrap();
            let f = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1]).cos();
            let nodal: Vec<f64> = mesh.nodes.iter().map(|&x| f(x)).collect();
            l2_error(&mesh, MeshField::Nodal(&nodal), f).unwrap().value()
        })
        .collect();
    for rate in convergence_rates(&errors) {
        assert!((rate - 2.0).abs() < 0.1, "{errors:?}");
    }
}
