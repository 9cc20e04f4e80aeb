use thiserror::Error;

use crate::constitutive::ConstitutiveError;
use crate::linalg::LinalgError;
use crate::mesh::MeshError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),

    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error("pore collapse in element {element}: {source}")]
    PoreCollapse {
        element: usize,
        source: ConstitutiveError,
    },

    #[error("flow system is singular: no pressure Dirichlet condition and no storage term")]
    MissingPressureDirichlet,

    #[error("solid system is singular: displacement constraints leave a rigid-body mode free")]
    RigidBodyMode,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("array length mismatch for {field}: expected {expected}, found {found}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("saturation transport exceeded {max_substeps} CFL substeps in one step")]
    CflViolation { max_substeps: usize },

    #[error("quadrature not converged: doubling panels changed result by {relative_change:e}")]
    QuadratureNotConverged { relative_change: f64 },

    #[error("saturation {value} outside [0, 1]")]
    SaturationOutOfRange { value: f64 },

    #[error("unsupported combination: {0}")]
    Unsupported(String),
}
