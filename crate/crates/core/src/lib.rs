//! Coupled flow and deformation of an incompressible fluid moving through a
//! deformable porous solid.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: structured quadrilateral grids, bilinear shape functions and
//!   Gauss quadrature.
//! * [`constitutive`]: pointwise material laws (elasticity, pore-pressure
//!   stress split, Barus viscosity, drag, porosity and damage models).
//! * [`linalg`]: compressed-row matrices and the linear solvers behind every
//!   assembled system.
//! * [`assembly`]: Galerkin discretisation of the Darcy pressure equation, the
//!   quasi-static solid, velocity recovery and two-phase saturation transport.
//! * [`coupling`]: the fully coupled, lockstep, subcycle and Jacobi schemes.
//! * [`verification`]: manufactured and Terzaghi oracles plus error norms.

pub mod assembly;
pub mod constitutive;
pub mod coupling;
mod error;
pub mod linalg;
pub mod mesh;
pub mod tensor;
pub mod verification;

pub use error::{Error, Result};
pub use tensor::Tensor2;
