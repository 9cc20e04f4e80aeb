//! Pointwise material laws.
//!
//! Everything here is a pure function of its arguments. Sign convention:
//! tension positive, so a pore pressure `p` contributes `-p I` to the solid
//! stress.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Tensor2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Barus exponent {exponent} exceeds the representable range (limit 700)")]
    ViscosityOverflow { exponent: f64 },

    #[error("porosity denominator {denominator:e} is not positive")]
    NonPositiveDenominator { denominator: f64 },

    #[error("deformation gradient determinant {det:e} is not positive")]
    NonPositiveJacobian { det: f64 },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ConstitutiveError {
    ConstitutiveError::InvalidParameter { name, reason: reason.into() }
}

/// Largest admissible `β p` in the Barus law.
pub const BARUS_EXPONENT_LIMIT: f64 = 700.0;

/// Default threshold for the small-strain warning on `||grad u||_*`.
pub const SMALL_STRAIN_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolidParams {
    /// First Lamé parameter (Pa).
    pub lambda: f64,
    /// Shear modulus (Pa).
    pub mu: f64,
    /// Bulk density (kg/m³).
    pub rho: f64,
}

impl SolidParams {
    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        if !(self.mu > 0.0) {
            return Err(invalid("mu_s", format!("shear modulus must be positive, got {}", self.mu)));
        }
        if !(self.lambda + 2.0 * self.mu / 3.0 >= 0.0) {
            return Err(invalid("lambda_s", "bulk modulus lambda + 2 mu / 3 must be nonnegative"));
        }
        if !(self.rho > 0.0) {
            return Err(invalid("rho_s", "density must be positive"));
        }
        Ok(())
    }

    /// Constrained (P-wave) modulus `λ + 2μ`.
    pub fn constrained_modulus(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    /// Reference viscosity (Pa·s).
    pub mu0: f64,
    /// Barus pressure exponent (1/Pa).
    pub beta: f64,
    /// Bulk density (kg/m³).
    pub rho: f64,
    /// Intrinsic permeability (m²).
    pub permeability: f64,
}

impl FluidParams {
    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        if !(self.mu0 > 0.0) {
            return Err(invalid("mu0_f", "reference viscosity must be positive"));
        }
        if !(self.beta >= 0.0) {
            return Err(invalid("beta_f", "Barus exponent must be nonnegative"));
        }
        if !(self.permeability > 0.0) {
            return Err(invalid("k", "permeability must be positive"));
        }
        if !(self.rho > 0.0) {
            return Err(invalid("rho_f", "density must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PorosityLaw {
    /// `φ = φ0 / (1 + (1 - φ0) tr ε)`
    Rational,
    /// `φ = 1 - (1 - φ0) / exp(tr ε)`
    Exponential,
    /// `φ = C_φ (1 - (1 - φ0) / det F)`, `C_φ = 1 + C_r (p - p_ref)`
    LargeDeformation,
    /// `φ ≡ φ0`
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PorosityModel {
    pub law: PorosityLaw,
    pub phi0: f64,
    /// Rock compressibility constant (1/Pa); used by the large-deformation law.
    pub c_r: f64,
}

impl PorosityModel {
    pub fn new(law: PorosityLaw, phi0: f64) -> Self {
        PorosityModel { law, phi0, c_r: 0.0 }
    }

    pub fn with_compressibility(mut self, c_r: f64) -> Self {
        self.c_r = c_r;
        self
    }

    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        if !(self.phi0 > 0.0 && self.phi0 < 1.0) {
            return Err(invalid("phi0", format!("reference porosity must lie in (0, 1), got {}", self.phi0)));
        }
        if !self.c_r.is_finite() {
            return Err(invalid("c_r", "rock compressibility must be finite"));
        }
        Ok(())
    }

    /// Porosity for displacement gradient `grad_u` at pressure `p`.
    ///
    /// `p_ref` is the pressure at the last synchronisation with the solid and
    /// only enters the large-deformation law.
    pub fn porosity(&self, grad_u: &Tensor2, p: f64, p_ref: f64) -> Result<f64, ConstitutiveError> {
        let phi0 = self.phi0;
        match self.law {
            PorosityLaw::Frozen => Ok(phi0),
            PorosityLaw::Rational => {
                let denominator = 1.0 + (1.0 - phi0) * grad_u.trace();
                if !(denominator > 0.0) {
                    return Err(ConstitutiveError::NonPositiveDenominator { denominator });
                }
                Ok(phi0 / denominator)
            }
            PorosityLaw::Exponential => Ok(1.0 - (1.0 - phi0) / grad_u.trace().exp()),
            PorosityLaw::LargeDeformation => {
                let det = (Tensor2::IDENTITY + *grad_u).det();
                if !(det > 0.0) {
                    return Err(ConstitutiveError::NonPositiveJacobian { det });
                }
                let c_phi = 1.0 + self.c_r * (p - p_ref);
                Ok(c_phi * (1.0 - (1.0 - phi0) / det))
            }
        }
    }

    /// Partial derivatives `(∂φ/∂(grad u), ∂φ/∂p)` at the given state.
    pub fn derivatives(&self, grad_u: &Tensor2, p: f64, p_ref: f64) -> Result<(Tensor2, f64), ConstitutiveError> {
        let phi0 = self.phi0;
        match self.law {
            PorosityLaw::Frozen => Ok((Tensor2::ZERO, 0.0)),
            PorosityLaw::Rational => {
                let denominator = 1.0 + (1.0 - phi0) * grad_u.trace();
                if !(denominator > 0.0) {
                    return Err(ConstitutiveError::NonPositiveDenominator { denominator });
                }
                let slope = -phi0 * (1.0 - phi0) / (denominator * denominator);
                Ok((Tensor2::IDENTITY * slope, 0.0))
            }
            PorosityLaw::Exponential => {
                let slope = (1.0 - phi0) * (-grad_u.trace()).exp();
                Ok((Tensor2::IDENTITY * slope, 0.0))
            }
            PorosityLaw::LargeDeformation => {
                let f = Tensor2::IDENTITY + *grad_u;
                let det = f.det();
                if !(det > 0.0) {
                    return Err(ConstitutiveError::NonPositiveJacobian { det });
                }
                let c_phi = 1.0 + self.c_r * (p - p_ref);
                let d_grad = f.cofactor() * (c_phi * (1.0 - phi0) / (det * det));
                Ok((d_grad, self.c_r * (1.0 - (1.0 - phi0) / det)))
            }
        }
    }
}

/// Pointwise porosity update; see [`PorosityModel::porosity`].
pub fn porosity_update(model: &PorosityModel, grad_u: &Tensor2, p: f64, p_ref: f64) -> Result<f64, ConstitutiveError> {
    model.porosity(grad_u, p, p_ref)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PermeabilityModel {
    Constant,
    /// Mobility scaled by `1 + ζ ||T - T0|| / ||T0||` (Frobenius norms).
    Damage { zeta: f64, in_situ: Tensor2 },
}

impl PermeabilityModel {
    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        match self {
            PermeabilityModel::Constant => Ok(()),
            PermeabilityModel::Damage { zeta, in_situ } => {
                if !(*zeta >= 0.0) {
                    return Err(invalid("zeta", "damage scaling must be nonnegative"));
                }
                if !(in_situ.frobenius() > 0.0) {
                    return Err(invalid("in_situ_stress", "damage model needs a nonzero in-situ stress"));
                }
                Ok(())
            }
        }
    }

    /// Multiplier applied to the reference mobility for solid stress `stress`.
    pub fn factor(&self, stress: &Tensor2) -> f64 {
        match self {
            PermeabilityModel::Constant => 1.0,
            PermeabilityModel::Damage { zeta, in_situ } => {
                1.0 + zeta * (*stress - *in_situ).frobenius() / in_situ.frobenius()
            }
        }
    }
}

/// Damage-modified mobility `α0 (1 + ζ ||T - T0|| / ||T0||)`.
pub fn damage_permeability(model: &PermeabilityModel, alpha0: f64, stress: &Tensor2) -> f64 {
    alpha0 * model.factor(stress)
}

pub fn linearized_strain(grad_u: &Tensor2) -> Tensor2 {
    grad_u.sym()
}

/// `λ tr(ε) I + 2 μ ε`
pub fn solid_effective_stress(strain: &Tensor2, params: &SolidParams) -> Tensor2 {
    Tensor2::IDENTITY * (params.lambda * strain.trace()) + *strain * (2.0 * params.mu)
}

/// Stress split `T = T_e - p I`.
pub fn total_solid_stress(effective: &Tensor2, pressure: f64) -> Tensor2 {
    *effective - Tensor2::IDENTITY * pressure
}

/// Barus law `μ0 exp(β p)`.
pub fn barus_viscosity(p: f64, params: &FluidParams) -> Result<f64, ConstitutiveError> {
    let exponent = params.beta * p;
    if exponent > BARUS_EXPONENT_LIMIT {
        return Err(ConstitutiveError::ViscosityOverflow { exponent });
    }
    Ok(params.mu0 * exponent.exp())
}

/// Drag coefficient `μ / k`. The same coefficient multiplies `v_f - v_s` in
/// the fluid equation and `v_s - v_f` in the solid equation.
pub fn drag_coefficient(viscosity: f64, permeability: f64) -> Result<f64, ConstitutiveError> {
    if !(permeability > 0.0) {
        return Err(invalid("k", format!("permeability must be positive, got {permeability}")));
    }
    Ok(viscosity / permeability)
}

/// Trace (nuclear) norm `tr sqrt(AᵀA)`, the sum of singular values.
pub fn trace_norm(a: &Tensor2) -> f64 {
    // σ1 + σ2 = sqrt(||A||_F² + 2 |det A|)
    let f2 = a.ddot(a);
    (f2 + 2.0 * a.det().abs()).max(0.0).sqrt()
}

/// Whether `||grad u||_*` stays below the small-strain threshold.
pub fn is_small_strain(grad_u: &Tensor2, threshold: f64) -> bool {
    trace_norm(grad_u) <= threshold
}
