//! Element-wise first Lamé parameter fields.

use std::f64::consts::PI;

use porocouple_core::mesh::Mesh;

use crate::config::{ConfigError, HeterogeneityMode};

/// `λ` per element evaluated at element centres.
///
/// * `Layered`: `λ̄ (1 + a sign(sin(6π y / ly)))`
/// * `Harmonic`: `λ̄ (1 + a sin(2π x / lx) sin(2π y / ly))`
pub fn gen_heterogeneous_field(
    mesh: &Mesh,
    mode: HeterogeneityMode,
    lambda_mean: f64,
    amplitude: f64,
) -> Result<Vec<f64>, ConfigError> {
    if !(0.0..1.0).contains(&amplitude) {
        return Err(ConfigError::Invalid {
            key: "heterogeneity.amplitude".into(),
            message: format!("{amplitude} is outside [0, 1); the modulus could become nonpositive"),
        });
    }
    let (lx, ly) = (mesh.lx, mesh.ly);
    let field = (0..mesh.element_count())
        .map(|e| {
            let [x, y] = mesh.element_center(e);
            let shape = match mode {
                HeterogeneityMode::None => 0.0,
                HeterogeneityMode::Layered => sign((2.0 * PI * y / ly * 3.0).sin()),
                HeterogeneityMode::Harmonic => (2.0 * PI * x / lx).sin() * (2.0 * PI * y / ly).sin(),
            };
            lambda_mean * (1.0 + amplitude * shape)
        })
        .collect();
    Ok(field)
}

// sign with sign(0) = 0, unlike f64::signum
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use porocouple_core::mesh::build_structured_grid;

    use super::*;

    #[test]
    fn uniform_cases() {
        let mesh = build_structured_grid(8, 8, 1.0, 1.0).unwrap();
        for mode in [HeterogeneityMode::None, HeterogeneityMode::Layered, HeterogeneityMode::Harmonic] {
            let f = gen_heterogeneous_field(&mesh, mode, 2.0, 0.0).unwrap();
            assert!(f.iter().all(|&v| v == 2.0));
        }
        let f = gen_heterogeneous_field(&mesh, HeterogeneityMode::None, 2.0, 0.7).unwrap();
        assert!(f.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn harmonic_extremes() {
        // centres of a 2x2 grid sit at the extremes of both sines
        let mesh = build_structured_grid(2, 2, 1.0, 1.0).unwrap();
        let f = gen_heterogeneous_field(&mesh, HeterogeneityMode::Harmonic, 1.0, 0.5).unwrap();
        let min = f.iter().copied().fold(f64::INFINITY, f64::min);
        let max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((min - 0.5).abs() < 1e-12 && (max - 1.5).abs() < 1e-12);
    }

    #[test]
    fn layered_takes_two_values() {
        let mesh = build_structured_grid(3, 12, 1.0, 1.0).unwrap();
        let f = gen_heterogeneous_field(&mesh, HeterogeneityMode::Layered, 1.0, 0.25).unwrap();
        assert!(f.iter().all(|&v| v == 0.75 || v == 1.25));
        assert!(f.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn rejects_unit_amplitude() {
        let mesh = build_structured_grid(2, 2, 1.0, 1.0).unwrap();
        assert!(gen_heterogeneous_field(&mesh, HeterogeneityMode::Harmonic, 1.0, 1.0).is_err());
    }
}
