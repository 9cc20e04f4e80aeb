//! Analytic oracles: the one-dimensional manufactured solution, the
//! Terzaghi surface-settlement convolution, and L² error norms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembly::SolidLoading;
use crate::mesh::{shape_eval, Mesh, QuadratureRule};
use crate::{Error, Result};

/// Constants of the manufactured solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManufacturedConstants {
    pub u0: f64,
    pub v0: f64,
    pub p0: f64,
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub phi0: f64,
    pub rho_f: f64,
    pub rho_s: f64,
}

impl Default for ManufacturedConstants {
    fn default() -> Self {
        ManufacturedConstants {
            u0: 0.01,
            v0: 1.0,
            p0: 1.0,
            lambda: 1.0,
            mu: 0.5,
            alpha: 1.0,
            phi0: 0.1,
            rho_f: 1.0,
            rho_s: 1.0,
        }
    }
}

/// Exact manufactured fields at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsFields {
    pub u: f64,
    /// Axial strain `du/dx`.
    pub eps: f64,
    /// Axial effective stress `(λ + 2μ) du/dx`.
    pub t: f64,
    pub v: f64,
    pub p: f64,
    pub phi: f64,
}

pub fn ms_exact(x: f64, c: &ManufacturedConstants) -> MsFields {
    let (s, co) = ((PI * x).sin(), (PI * x).cos());
    let stretch = 1.0 + (1.0 - c.phi0) * c.u0 * PI * co;
    let eps = c.u0 * PI * co;
    MsFields {
        u: c.u0 * s,
        eps,
        t: (c.lambda + 2.0 * c.mu) * eps,
        v: c.v0 * stretch,
        p: -c.alpha * c.v0 * (x + (1.0 - c.phi0) * c.u0 * s) + c.p0,
        phi: c.phi0 / stretch,
    }
}

/// Body forces `(b_f, b_s)` per unit mass that balance the effective
/// stress of the manufactured displacement.
pub fn ms_body_forces(x: f64, c: &ManufacturedConstants) -> (f64, f64) {
    let b_s = c.u0 * PI * PI / c.rho_s * (c.lambda + 2.0 * c.mu) * (PI * x).sin();
    (0.0, b_s)
}

/// Solid body force that makes the manufactured displacement exact for the
/// given fluid loading of the solid.
///
/// [`ms_body_forces`] balances `div T_e` alone. The stress split adds
/// `-dp/dx = α v` and the drag variant adds it twice, so those shares are
/// removed here.
pub fn ms_solid_body_force(x: f64, c: &ManufacturedConstants, loading: SolidLoading) -> f64 {
    let (_, b_s) = ms_body_forces(x, c);
    let fluid_share = match loading {
        SolidLoading::None => 0.0,
        SolidLoading::StressSplit => 1.0,
        SolidLoading::StressSplitWithDrag => 2.0,
    };
    b_s - fluid_share * c.alpha * ms_exact(x, c).v / c.rho_s
}

/// Load amplitude of the Terzaghi test, `100 (1 - cos 75 t)`.
pub fn terzaghi_forcing(t: f64) -> f64 {
    100.0 * (1.0 - (75.0 * t).cos())
}

/// Material data of the Terzaghi convolution solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TerzaghiParams {
    pub n_f: f64,
    pub n_s: f64,
    pub rho_f: f64,
    pub rho_s: f64,
    pub lambda: f64,
    pub mu: f64,
    pub k_c: f64,
}

impl Default for TerzaghiParams {
    fn default() -> Self {
        TerzaghiParams { n_f: 0.3, n_s: 0.7, rho_f: 1.0, rho_s: 1.0, lambda: 5e5, mu: 2.5e5, k_c: 1e6 }
    }
}

impl TerzaghiParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_f > 0.0 && self.n_s > 0.0 && (self.n_f + self.n_s - 1.0).abs() < 1e-12) {
            return Err(Error::Config("volume fractions n_f and n_s must be positive and sum to 1".into()));
        }
        if !(self.c() > 0.0 && self.a() > 0.0 && self.b() >= 0.0) {
            return Err(Error::Config("Terzaghi parameters give c <= 0, a <= 0 or b < 0".into()));
        }
        Ok(())
    }

    pub fn modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }

    pub fn c(&self) -> f64 {
        self.modulus() * self.n_f * self.n_f
    }

    pub fn a(&self) -> f64 {
        (self.n_s * self.n_s * self.rho_f + self.n_f * self.n_f * self.rho_s) / self.c()
    }

    pub fn b(&self) -> f64 {
        self.n_f * self.n_f * self.k_c / self.c()
    }
}

/// Top-surface vertical displacement for the default forcing.
pub fn terzaghi_analytic(t: f64, params: &TerzaghiParams, quad_n: usize) -> Result<f64> {
    terzaghi_analytic_with(t, params, quad_n, terzaghi_forcing)
}

/// Top-surface vertical displacement
///
/// ```text
/// u_y(t) = -1 / (√a (λ+2μ)) ∫₀ᵗ F(t-τ) e^{-bτ/2a} I₀(bτ/2a) dτ
/// ```
///
/// by composite Simpson in `s = √τ`, which removes the `τ^{-1/2}` behaviour
/// of the kernel for large `b/a`. The result at `quad_n` panels is checked
/// against `2 quad_n` panels.
pub fn terzaghi_analytic_with(
    t: f64,
    params: &TerzaghiParams,
    quad_n: usize,
    forcing: impl Fn(f64) -> f64,
) -> Result<f64> {
    params.validate()?;
    if quad_n < 100 {
        return Err(Error::Config(format!("quad_n must be at least 100, got {quad_n}")));
    }
    if !(t > 0.0) {
        return Ok(0.0);
    }
    let (a, b) = (params.a(), params.b());
    let prefactor = -1.0 / (a.sqrt() * params.modulus());
    let integral = |n: usize| {
        let s_end = t.sqrt();
        let h = s_end / (2 * n) as f64;
        let f = |s: f64| {
            let x = b * s * s / (2.0 * a);
            forcing(t - s * s) * bessel_i0_scaled(x) * 2.0 * s
        };
        let mut sum = f(0.0) + f(s_end);
        for k in 1..2 * n {
            sum += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        prefactor * sum * h / 3.0
    };
    let coarse = integral(quad_n);
    let fine = integral(2 * quad_n);
    let scale = fine.abs().max(coarse.abs());
    if scale > 0.0 {
        let relative_change = (fine - coarse).abs() / scale;
        if relative_change > 1e-6 {
            return Err(Error::QuadratureNotConverged { relative_change });
        }
    }
    Ok(coarse)
}

const BESSI0_COEFFS_A: [f64; 30] = [
    -4.415_341_646_479_339_5E-18,
    3.330_794_518_822_238_4E-17,
    -2.431_279_846_547_955E-16,
    1.715_391_285_555_133E-15,
    -1.168_533_287_799_345_1E-14,
    7.676_185_498_604_936E-14,
    -4.856_446_783_111_929E-13,
    2.955_052_663_129_64E-12,
    -1.726_826_291_441_556E-11,
    9.675_809_035_373_237E-11,
    -5.189_795_601_635_263E-10,
    2.659_823_724_682_386_6E-9,
    -1.300_025_009_986_248E-8,
    6.046_995_022_541_919E-8,
    -2.670_793_853_940_612E-7,
    1.117_387_539_120_103_7E-6,
    -4.416_738_358_458_750_5E-6,
    1.644_844_807_072_889_6E-5,
    -5.754_195_010_082_104E-5,
    1.885_028_850_958_416_5E-4,
    -5.763_755_745_385_824E-4,
    1.639_475_616_941_335_7E-3,
    -4.324_309_995_050_576E-3,
    1.054_646_039_459_499_8E-2,
    -2.373_741_480_589_947E-2,
    4.930_528_423_967_071E-2,
    -9.490_109_704_804_764E-2,
    1.716_209_015_222_087_7E-1,
    -3.046_826_723_431_984E-1,
    6.767_952_744_094_761E-1,
];

const BESSI0_COEFFS_B: [f64; 25] = [
    -7.233_180_487_874_754E-18,
    -4.830_504_485_944_182E-18,
    4.465_621_420_296_76E-17,
    3.461_222_867_697_461E-17,
    -2.827_623_980_516_583_6E-16,
    -3.425_485_619_677_219E-16,
    1.772_560_133_056_526_3E-15,
    3.811_680_669_352_622_4E-15,
    -9.554_846_698_828_307E-15,
    -4.150_569_347_287_222E-14,
    1.540_086_217_521_41E-14,
    3.852_778_382_742_142_6E-13,
    7.180_124_451_383_666E-13,
    -1.794_178_531_506_806_2E-12,
    -1.321_581_184_044_771_3E-11,
    -3.149_916_527_963_241_6E-11,
    1.188_914_710_784_643_9E-11,
    4.940_602_388_224_97E-10,
    3.396_232_025_708_386_5E-9,
    2.266_668_990_498_178E-8,
    2.048_918_589_469_063_8E-7,
    2.891_370_520_834_756_7E-6,
    6.889_758_346_916_825E-5,
    3.369_116_478_255_694_3E-3,
    8.044_904_110_141_088E-1,
];

fn chbevl(x: f64, coeffs: &[f64]) -> f64 {
    let (mut b0, mut b1, mut b2) = (coeffs[0], 0.0, 0.0);
    for c in &coeffs[1..] {
        b2 = b1;
        b1 = b0;
        b0 = x * b1 - b2 + c;
    }
    0.5 * (b0 - b2)
}

/// Boundary between the power series and the Chebyshev expansions.
pub const BESSEL_SERIES_LIMIT: f64 = 3.75;

/// `Σ (z²/4)^k / (k!)²`, summed until the terms stop changing the result.
pub fn bessel_i0_series(z: f64) -> f64 {
    let q = z * z / 4.0;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..500 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Chebyshev expansion of `e^{-z} I₀(z)` for `z >= 0`.
fn bessel_i0_scaled_chebyshev(z: f64) -> f64 {
    if z <= 8.0 {
        chbevl(z / 2.0 - 2.0, &BESSI0_COEFFS_A)
    } else {
        chbevl(32.0 / z - 2.0, &BESSI0_COEFFS_B) / z.sqrt()
    }
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(z: f64) -> f64 {
    let z = z.abs();
    if z <= BESSEL_SERIES_LIMIT {
        bessel_i0_series(z)
    } else {
        z.exp() * bessel_i0_scaled_chebyshev(z)
    }
}

/// `e^{-|z|} I₀(z)`, finite for all arguments.
pub fn bessel_i0_scaled(z: f64) -> f64 {
    let z = z.abs();
    if z <= BESSEL_SERIES_LIMIT {
        (-z).exp() * bessel_i0_series(z)
    } else {
        bessel_i0_scaled_chebyshev(z)
    }
}

/// Large-argument branch evaluated at any `z`, for continuity checks.
pub fn bessel_i0_large_branch(z: f64) -> f64 {
    z.abs().exp() * bessel_i0_scaled_chebyshev(z.abs())
}

/// A numeric field on the mesh.
#[derive(Debug, Clone, Copy)]
pub enum MeshField<'a> {
    /// Bilinear interpolant of nodal values.
    Nodal(&'a [f64]),
    /// Constant per element.
    Elemental(&'a [f64]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Error {
    /// `||numeric - exact||`
    pub absolute: f64,
    /// `||exact||`
    pub exact_norm: f64,
    /// False when the exact field has zero norm and only the absolute error
    /// is meaningful.
    pub is_relative: bool,
}

impl L2Error {
    /// Relative error, or the absolute error for a zero exact field.
    pub fn value(&self) -> f64 {
        if self.is_relative {
            self.absolute / self.exact_norm
        } else {
            self.absolute
        }
    }
}

/// L² error of `numeric` against `exact` with a 3×3 Gauss rule per element.
pub fn l2_error(mesh: &Mesh, numeric: MeshField, exact: impl Fn([f64; 2]) -> f64) -> Result<L2Error> {
    let expected = match numeric {
        MeshField::Nodal(v) => (mesh.node_count(), v.len()),
        MeshField::Elemental(v) => (mesh.element_count(), v.len()),
    };
    if expected.0 != expected.1 {
        return Err(Error::LengthMismatch { field: "numeric", expected: expected.0, found: expected.1 });
    }
    let rule = QuadratureRule::gauss(3)?;
    let (mut err2, mut norm2) = (0.0, 0.0);
    for e in 0..mesh.element_count() {
        let coords = mesh.element_coords(e);
        let nodes = mesh.elements[e];
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let shape = shape_eval(&coords, *xi)
                .map_err(|det| crate::mesh::MeshError::DegenerateElement { element: e, det })?;
            let value = match numeric {
                MeshField::Nodal(v) => shape.interpolate(nodes.map(|n| v[n])),
                MeshField::Elemental(v) => v[e],
            };
            let exact_value = exact(shape.point(&coords));
            let jxw = shape.det * w;
            err2 += (value - exact_value).powi(2) * jxw;
            norm2 += exact_value * exact_value * jxw;
        }
    }
    Ok(L2Error { absolute: err2.sqrt(), exact_norm: norm2.sqrt(), is_relative: norm2 > 0.0 })
}

/// Observed convergence orders `log2(e_k / e_{k+1})` for errors on meshes
/// refined by a factor of two.
pub fn convergence_rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
