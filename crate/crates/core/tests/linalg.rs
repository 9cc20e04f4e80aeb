use porocouple_core::linalg::{bicgstab, cg, relative_residual, solve, BandedLu, SolveMethod, SparseMatrix, TripletBuilder};
use proptest::prelude::*;

/// `B Bᵀ + n I` from a dense random `B`, stored sparsely with roughly the
/// given fill.
fn spd(n: usize, entries: &[(usize, usize, f64)]) -> SparseMatrix {
    let mut b = vec![vec![0.0; n]; n];
    for &(i, j, v) in entries {
        b[i % n][j % n] += v;
    }
    let mut t = TripletBuilder::new(n);
    for i in 0..n {
        for j in 0..n {
            let v: f64 = (0..n).map(|k| b[i][k] * b[j][k]).sum();
            let v = if i == j { v + n as f64 } else { v };
            if v != 0.0 {
                t.add(i, j, v);
            }
        }
    }
    t.build().unwrap()
}

fn relative_difference(x: &[f64], y: &[f64]) -> f64 {
    let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    d / y.iter().map(|a| a * a).sum::<f64>().sqrt().max(f64::MIN_POSITIVE)
}

fn system() -> impl Strategy<Value = (SparseMatrix, Vec<f64>)> {
    (2usize..=50).prop_flat_map(|n| {
        (
            prop::collection::vec((0..n, 0..n, -1.0..1.0f64), n..4 * n),
            prop::collection::vec(-1.0..1.0f64, n),
        )
            .prop_map(move |(entries, b)| (spd(n, &entries), b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cg_agrees_with_direct((a, b) in system()) {
        let exact = BandedLu::factor(&a).unwrap().solve(&b).unwrap();
        let (x, report) = cg(&a, &b, 1e-12, 10_000).unwrap();
        prop_assert!(report.converged);
        prop_assert!(relative_difference(&x, &exact) < 1e-8);
    }

    #[test]
    fn cg_energy_never_increases((a, b) in system()) {
        let (_, report) = cg(&a, &b, 1e-12, 10_000).unwrap();
        for w in report.energy_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
        prop_assert_eq!(report.preconditioned_history.len(), report.iterations);
    }

    #[test]
    fn direct_solves_nonsymmetric_shifts((a, b) in system(), skew in -2.0..2.0f64) {
        let n = a.dim();
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            for (j, v) in a.row(i) {
                t.add(i, j, v);
            }
            if i + 1 < n {
                t.add(i, i + 1, skew);
                t.add(i + 1, i, -skew);
            }
        }
        let a = t.build().unwrap();
        let (x, _) = solve(&a, &b, SolveMethod::Direct, 0.0, 0).unwrap();
        prop_assert!(relative_residual(&a, &x, &b).unwrap() < 1e-12);
        let (y, report) = bicgstab(&a, &b, 1e-12, 10_000).unwrap();
        prop_assert!(report.converged);
        prop_assert!(relative_difference(&y, &x) < 1e-8);
    }
}

#[test]
fn auto_picks_a_method_that_solves_the_system() {
    let n = 30;
    let mut t = TripletBuilder::new(n);
    for i in 0..n {
        t.add(i, i, 2.0);
        if i > 0 {
            t.add(i, i - 1, -1.0);
            t.add(i - 1, i, -1.0);
        }
    }
    let a = t.build().unwrap();
    let b = vec![1.0; n];
    let (x, _) = solve(&a, &b, SolveMethod::Auto, 1e-12, 1000).unwrap();
    assert!(relative_residual(&a, &x, &b).unwrap() < 1e-10);
}
