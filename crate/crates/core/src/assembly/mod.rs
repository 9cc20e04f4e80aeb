//! Finite element discretisation of the flow, solid and saturation
//! subsystems on a structured quadrilateral mesh.
//!
//! Displacement and pressure are nodal bilinear fields. Porosity, fluid
//! velocity and stress are element-wise constants evaluated at element
//! centres. Saturation lives on the nodes (one control volume per node).

mod flow;
mod solid;
mod transport;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constitutive::{
    barus_viscosity, drag_coefficient, linearized_strain, solid_effective_stress, FluidParams,
    PermeabilityModel, PorosityLaw, PorosityModel, SolidParams,
};
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::{Edge, Mesh, MeshGeometry, QuadratureRule, Side};
use crate::{Error, Result, Tensor2};

pub use flow::{assemble_flow, assemble_flow_unconstrained, flow_boundary_fluxes, recover_velocity, FlowInputs};
pub(crate) use solid::pressure_independent_load;
pub use solid::{assemble_solid, drag_loads, solid_dirichlet_dofs};
pub use transport::{
    advance_saturation, fractional_flow, phase_mobility, Phase, RelPerm, SaturationReport, TwoPhaseParams,
};

/// Nodal and element fields of one coupled state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    /// Solid displacement per node.
    pub u: Vec<[f64; 2]>,
    /// Fluid pressure per node.
    pub p: Vec<f64>,
    /// Porosity per element.
    pub phi: Vec<f64>,
    /// Fluid velocity per element (total Darcy flux in two-phase runs).
    pub v: Vec<[f64; 2]>,
    /// Non-wetting saturation per node.
    pub s_n: Vec<f64>,
    pub time: f64,
}

impl FieldState {
    pub fn new(mesh: &Mesh, phi0: f64) -> Self {
        FieldState {
            u: vec![[0.0; 2]; mesh.node_count()],
            p: vec![0.0; mesh.node_count()],
            phi: vec![phi0; mesh.element_count()],
            v: vec![[0.0; 2]; mesh.element_count()],
            s_n: vec![0.0; mesh.node_count()],
            time: 0.0,
        }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        let checks = [
            ("u", self.u.len(), mesh.node_count()),
            ("p", self.p.len(), mesh.node_count()),
            ("phi", self.phi.len(), mesh.element_count()),
            ("v", self.v.len(), mesh.element_count()),
            ("s_n", self.s_n.len(), mesh.node_count()),
        ];
        for (field, found, expected) in checks {
            if found != expected {
                return Err(Error::LengthMismatch { field, expected, found });
            }
        }
        if let Some(e) = self.phi.iter().position(|&f| !(f > 0.0 && f < 1.0)) {
            return Err(Error::Config(format!("porosity {} in element {e} is outside (0, 1)", self.phi[e])));
        }
        if let Some(i) = self.s_n.iter().position(|&s| !(-1e-10..=1.0 + 1e-10).contains(&s)) {
            return Err(Error::Config(format!("saturation {} at node {i} is outside [0, 1]", self.s_n[i])));
        }
        Ok(())
    }
}

/// Time dependence of a boundary value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Constant { value: f64 },
    /// Linear ramp from 0 to `value` over `ramp_time`, constant afterwards.
    Ramp { value: f64, ramp_time: f64 },
    /// `amplitude (1 - cos(omega t))`
    OneMinusCos { amplitude: f64, omega: f64 },
}

impl Schedule {
    pub const ZERO: Schedule = Schedule::Constant { value: 0.0 };

    pub fn constant(value: f64) -> Self {
        Schedule::Constant { value }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { value } => value,
            Schedule::Ramp { value, ramp_time } => {
                if ramp_time > 0.0 {
                    value * (t / ramp_time).clamp(0.0, 1.0)
                } else {
                    value
                }
            }
            Schedule::OneMinusCos { amplitude, omega } => amplitude * (1.0 - (omega * t).cos()),
        }
    }
}

impl From<f64> for Schedule {
    fn from(value: f64) -> Self {
        Schedule::constant(value)
    }
}

/// Dirichlet and Neumann data for both subsystems.
///
/// Edges without a traction entry are traction-free; nodes without a
/// pressure entry see zero normal flux.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryConditions {
    pressure: BTreeMap<usize, Schedule>,
    displacement: BTreeMap<(usize, usize), Schedule>,
    tractions: Vec<(Edge, [Schedule; 2])>,
    drained: Vec<Side>,
}

impl BoundaryConditions {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fixes the pressure at `node`. Setting the same value twice is allowed;
    /// a different value is a conflict.
    pub fn set_pressure(&mut self, node: usize, value: impl Into<Schedule>) -> Result<()> {
        let value = value.into();
        match self.pressure.insert(node, value) {
            Some(old) if old != value => Err(Error::Config(format!(
                "conflicting pressure conditions at node {node}: {old:?} and {value:?}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn fix_displacement(&mut self, node: usize, component: usize, value: impl Into<Schedule>) -> Result<()> {
        if component > 1 {
            return Err(Error::Config(format!("displacement component {component} does not exist in 2D")));
        }
        let value = value.into();
        match self.displacement.insert((node, component), value) {
            Some(old) if old != value => Err(Error::Config(format!(
                "conflicting displacement conditions at node {node}, component {component}"
            ))),
            _ => Ok(()),
        }
    }

    /// Zero normal displacement on `side`.
    pub fn roller(&mut self, mesh: &Mesh, side: Side) -> Result<()> {
        let component = match side {
            Side::Left | Side::Right => 0,
            Side::Bottom | Side::Top => 1,
        };
        for &n in mesh.boundary.nodes(side) {
            self.fix_displacement(n, component, Schedule::ZERO)?;
        }
        Ok(())
    }

    /// Perfectly drained side: ambient (zero) pressure on all its nodes.
    pub fn drain(&mut self, mesh: &Mesh, side: Side) -> Result<()> {
        for &n in mesh.boundary.nodes(side) {
            self.set_pressure(n, Schedule::ZERO)?;
        }
        if !self.drained.contains(&side) {
            self.drained.push(side);
        }
        Ok(())
    }

    pub fn add_traction(&mut self, edge: Edge, traction: [Schedule; 2]) {
        self.tractions.push((edge, traction));
    }

    pub fn traction_on(&mut self, mesh: &Mesh, side: Side, traction: [Schedule; 2]) {
        for &edge in mesh.boundary.edges(side) {
            self.add_traction(edge, traction);
        }
    }

    pub fn drained(&self) -> &[Side] {
        &self.drained
    }

    pub fn has_pressure_dirichlet(&self) -> bool {
        !self.pressure.is_empty()
    }

    pub fn pressure_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.pressure.keys().copied()
    }

    pub fn pressure_values(&self, t: f64) -> Vec<(usize, f64)> {
        self.pressure.iter().map(|(&n, s)| (n, s.eval(t))).collect()
    }

    /// Constrained displacement dofs (`2 node + component`) and their values.
    pub fn displacement_values(&self, t: f64) -> Vec<(usize, f64)> {
        self.displacement.iter().map(|(&(n, c), s)| (2 * n + c, s.eval(t))).collect()
    }

    pub fn tractions(&self) -> &[(Edge, [Schedule; 2])] {
        &self.tractions
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        let n = mesh.node_count();
        if let Some(&node) = self.pressure.keys().find(|&&k| k >= n) {
            return Err(Error::Config(format!("pressure condition on node {node}, mesh has {n} nodes")));
        }
        if let Some(&(node, _)) = self.displacement.keys().find(|(k, _)| *k >= n) {
            return Err(Error::Config(format!("displacement condition on node {node}, mesh has {n} nodes")));
        }
        Ok(())
    }
}

/// Vector field of position and time, used for body forces.
pub type VectorField = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;

/// Volume loads and point sources.
#[derive(Clone, Default)]
pub struct Sources {
    /// Fluid body force per unit mass.
    pub fluid_body: Option<VectorField>,
    /// Solid body force per unit mass.
    pub solid_body: Option<VectorField>,
    /// Volumetric injection rate at nodes (negative for extraction).
    pub rates: Vec<(usize, Schedule)>,
}

impl fmt::Debug for Sources {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sources")
            .field("fluid_body", &self.fluid_body.as_ref().map(|_| "<fn>"))
            .field("solid_body", &self.solid_body.as_ref().map(|_| "<fn>"))
            .field("rates", &self.rates)
            .finish()
    }
}

/// How the fluid loads the solid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolidLoading {
    /// Total-stress equilibrium `div(T_e - p I) + ρ_s b_s = 0`. The drag on
    /// the solid and the fluid pressure gradient cancel through Darcy's law.
    #[default]
    StressSplit,
    /// `div(T_e - p I) + α (v_f - v_s) + ρ_s b_s = 0`, with the drag evaluated
    /// from the pressure field through Darcy's law.
    StressSplitWithDrag,
    /// The fluid does not load the solid.
    None,
}

/// Whether the flow equation keeps its time derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowRegime {
    /// Backward-Euler porosity rate and solid-velocity transport.
    #[default]
    Transient,
    /// Steady flow at every coupling step.
    QuasiSteady,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Materials {
    pub solid: SolidParams,
    pub fluid: FluidParams,
    pub porosity: PorosityModel,
    pub permeability: PermeabilityModel,
    /// Initial (in-situ) solid stress added to the elastic stress.
    pub in_situ_stress: Tensor2,
    /// Element-wise first Lamé parameter overriding `solid.lambda`.
    pub lambda_field: Option<Vec<f64>>,
    pub solid_loading: SolidLoading,
    pub flow_regime: FlowRegime,
    pub two_phase: Option<TwoPhaseParams>,
}

impl Materials {
    pub fn new(solid: SolidParams, fluid: FluidParams, porosity: PorosityModel) -> Self {
        Materials {
            solid,
            fluid,
            porosity,
            permeability: PermeabilityModel::Constant,
            in_situ_stress: Tensor2::ZERO,
            lambda_field: None,
            solid_loading: SolidLoading::default(),
            flow_regime: FlowRegime::default(),
            two_phase: None,
        }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        self.solid.validate()?;
        self.fluid.validate()?;
        self.porosity.validate()?;
        self.permeability.validate()?;
        if let Some(field) = &self.lambda_field {
            if field.len() != mesh.element_count() {
                return Err(Error::LengthMismatch {
                    field: "lambda_field",
                    expected: mesh.element_count(),
                    found: field.len(),
                });
            }
            for &lambda in field {
                SolidParams { lambda, ..self.solid }.validate()?;
            }
        }
        if let Some(tp) = &self.two_phase {
            tp.validate()?;
            if self.porosity.law != PorosityLaw::Frozen {
                return Err(Error::Unsupported(
                    "two-phase transport needs frozen porosity (pore volume must stay fixed within a step)".into(),
                ));
            }
            if self.flow_regime != FlowRegime::QuasiSteady {
                return Err(Error::Unsupported("two-phase transport needs the quasi-steady flow regime".into()));
            }
        }
        Ok(())
    }

    pub fn lambda(&self, element: usize) -> f64 {
        self.lambda_field.as_ref().map_or(self.solid.lambda, |f| f[element])
    }

    pub fn solid_at(&self, element: usize) -> SolidParams {
        SolidParams { lambda: self.lambda(element), ..self.solid }
    }
}

/// Mesh, precomputed geometry, materials, boundary data and sources.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: Mesh,
    pub geometry: MeshGeometry,
    pub materials: Materials,
    pub bcs: BoundaryConditions,
    pub sources: Sources,
}

impl Problem {
    pub fn new(mesh: Mesh, materials: Materials, bcs: BoundaryConditions, sources: Sources) -> Result<Self> {
        materials.validate(&mesh)?;
        bcs.validate(&mesh)?;
        if let Some((node, _)) = sources.rates.iter().find(|(n, _)| *n >= mesh.node_count()) {
            return Err(Error::Config(format!("rate source on node {node} outside the mesh")));
        }
        let geometry = mesh.geometry(&QuadratureRule::gauss2())?;
        Ok(Problem { mesh, geometry, materials, bcs, sources })
    }

    pub fn initial_state(&self) -> FieldState {
        let mut state = FieldState::new(&self.mesh, self.materials.porosity.phi0);
        if self.materials.two_phase.is_some() {
            state.s_n.fill(1.0);
        }
        state
    }

    /// True when the coupled equations are linear in `(u, p, φ)`.
    pub fn is_linear(&self) -> bool {
        self.materials.porosity.law == PorosityLaw::Frozen
            && self.materials.fluid.beta == 0.0
            && self.materials.permeability == PermeabilityModel::Constant
            && self.materials.two_phase.is_none()
    }

    pub(crate) fn element_nodes(&self, e: usize) -> [usize; 4] {
        self.mesh.elements[e]
    }

    pub(crate) fn gather<T: Copy>(&self, e: usize, field: &[T]) -> [T; 4] {
        self.element_nodes(e).map(|n| field[n])
    }

    /// Displacement gradient at the centre of element `e`.
    pub fn element_grad_u(&self, e: usize, u: &[[f64; 2]]) -> Tensor2 {
        self.geometry.elements[e].center.vector_gradient(self.gather(e, u))
    }

    pub fn element_mean(&self, e: usize, nodal: &[f64]) -> f64 {
        self.gather(e, nodal).iter().sum::<f64>() / 4.0
    }

    /// Total solid stress `T0 + T_e(ε) - p̄ I` at the centre of element `e`.
    pub fn element_stress(&self, e: usize, u: &[[f64; 2]], p: &[f64]) -> Tensor2 {
        let strain = linearized_strain(&self.element_grad_u(e, u));
        let effective = solid_effective_stress(&strain, &self.materials.solid_at(e));
        self.materials.in_situ_stress + effective - Tensor2::IDENTITY * self.element_mean(e, p)
    }

    /// Drag coefficient `μ(p̄) / (k f_damage)` per element.
    pub fn element_drag(&self, u: &[[f64; 2]], p: &[f64]) -> Result<Vec<f64>> {
        let fluid = &self.materials.fluid;
        (0..self.mesh.element_count())
            .map(|e| {
                let viscosity = barus_viscosity(self.element_mean(e, p), fluid)?;
                let factor = match self.materials.permeability {
                    PermeabilityModel::Constant => 1.0,
                    ref model => model.factor(&self.element_stress(e, u, p)),
                };
                Ok(drag_coefficient(viscosity, fluid.permeability * factor)?)
            })
            .collect()
    }

    /// Porosity per element from the centre displacement gradient, the mean
    /// element pressure and the per-element reference pressure.
    pub fn porosity_field(&self, u: &[[f64; 2]], p: &[f64], p_ref: &[f64]) -> Result<Vec<f64>> {
        let model: &PorosityModel = &self.materials.porosity;
        (0..self.mesh.element_count())
            .map(|e| {
                model
                    .porosity(&self.element_grad_u(e, u), self.element_mean(e, p), p_ref[e])
                    .map_err(|source| Error::PoreCollapse { element: e, source })
            })
            .collect()
    }

    /// Porosity at `p = p_ref` and its pressure slope, per element.
    pub(crate) fn porosity_at_reference(&self, u: &[[f64; 2]], p_ref: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let model = &self.materials.porosity;
        let mut phi = Vec::with_capacity(self.mesh.element_count());
        let mut slope = Vec::with_capacity(self.mesh.element_count());
        for (e, &pr) in p_ref.iter().enumerate() {
            let g = self.element_grad_u(e, u);
            let collapse = |source| Error::PoreCollapse { element: e, source };
            phi.push(model.porosity(&g, pr, pr).map_err(collapse)?);
            slope.push(model.derivatives(&g, pr, pr).map_err(collapse)?.1);
        }
        Ok((phi, slope))
    }

    /// Element pressure means, the reference pressure used by the
    /// pressure-dependent porosity law.
    pub fn element_means(&self, p: &[f64]) -> Vec<f64> {
        (0..self.mesh.element_count()).map(|e| self.element_mean(e, p)).collect()
    }

    /// Flow conductance per element: `φ / α` for single-phase flow and
    /// `λ_t(S̄) / α` for two-phase flow.
    pub(crate) fn conductance(&self, phi: &[f64], drag: &[f64], s_n: &[f64]) -> Result<Vec<f64>> {
        match &self.materials.two_phase {
            None => Ok(phi.iter().zip(drag).map(|(f, a)| f / a).collect()),
            Some(tp) => (0..self.mesh.element_count())
                .map(|e| Ok(tp.total_mobility(self.element_mean(e, s_n))? / drag[e]))
                .collect(),
        }
    }
}

/// Adds `∫ c_e ∇N_i · ∇N_j` to rows/columns starting at `offset`.
pub(crate) fn add_diffusion(b: &mut TripletBuilder, problem: &Problem, coef: &[f64], offset: usize) {
    for (e, geo) in problem.geometry.elements.iter().enumerate() {
        let nodes = problem.element_nodes(e);
        let mut ke = [[0.0; 4]; 4];
        for q in &geo.points {
            let g = &q.shape.grads;
            for i in 0..4 {
                for j in 0..4 {
                    ke[i][j] += coef[e] * (g[i][0] * g[j][0] + g[i][1] * g[j][1]) * q.jxw;
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                b.add(offset + nodes[i], offset + nodes[j], ke[i][j]);
            }
        }
    }
}

/// Adds the plane-strain elastic stiffness for interleaved displacement dofs.
pub(crate) fn add_elasticity(b: &mut TripletBuilder, problem: &Problem, offset: usize) {
    let mu = problem.materials.solid.mu;
    for (e, geo) in problem.geometry.elements.iter().enumerate() {
        let lambda = problem.materials.lambda(e);
        let nodes = problem.element_nodes(e);
        let mut ke = [[0.0; 8]; 8];
        for q in &geo.points {
            let g = &q.shape.grads;
            for a in 0..4 {
                for c in 0..2 {
                    for bn in 0..4 {
                        for d in 0..2 {
                            // ∫ [λ ∂_c N_a ∂_d N_b + μ (δ_cd ∇N_a·∇N_b + ∂_d N_a ∂_c N_b)]
                            let mut k = lambda * g[a][c] * g[bn][d] + mu * g[a][d] * g[bn][c];
                            if c == d {
                                k += mu * (g[a][0] * g[bn][0] + g[a][1] * g[bn][1]);
                            }
                            ke[2 * a + c][2 * bn + d] += k * q.jxw;
                        }
                    }
                }
            }
        }
        for a in 0..4 {
            for c in 0..2 {
                for bn in 0..4 {
                    for d in 0..2 {
                        b.add(
                            offset + 2 * nodes[a] + c,
                            offset + 2 * nodes[bn] + d,
                            ke[2 * a + c][2 * bn + d],
                        );
                    }
                }
            }
        }
    }
}

/// Rigid-body check: the translations and the rotation must not all vanish
/// on the constrained dofs in some combination.
pub(crate) fn check_rigid_modes(mesh: &Mesh, constrained: &[usize]) -> Result<()> {
    let (cx, cy) = (mesh.lx / 2.0, mesh.ly / 2.0);
    let scale = mesh.lx.max(mesh.ly);
    let mut gram = [[0.0; 3]; 3];
    for &dof in constrained {
        let x = mesh.nodes[dof / 2];
        let c = dof % 2;
        let rot = if c == 0 { -(x[1] - cy) / scale } else { (x[0] - cx) / scale };
        let m = [if c == 0 { 1.0 } else { 0.0 }, if c == 1 { 1.0 } else { 0.0 }, rot];
        for i in 0..3 {
            for j in 0..3 {
                gram[i][j] += m[i] * m[j];
            }
        }
    }
    let det = gram[0][0] * (gram[1][1] * gram[2][2] - gram[1][2] * gram[2][1])
        - gram[0][1] * (gram[1][0] * gram[2][2] - gram[1][2] * gram[2][0])
        + gram[0][2] * (gram[1][0] * gram[2][1] - gram[1][1] * gram[2][0]);
    let trace = gram[0][0] + gram[1][1] + gram[2][2];
    if !(det > 1e-12 * trace.powi(3).max(f64::MIN_POSITIVE)) {
        return Err(Error::RigidBodyMode);
    }
    Ok(())
}

pub(crate) fn assert_symmetric(matrix: &SparseMatrix, what: &str) {
    debug_assert!(matrix.is_symmetric(1e-10), "{what} matrix lost symmetry: {:e}", matrix.asymmetry());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_grid;

    #[test]
    fn schedules() {
        assert_eq!(Schedule::constant(3.0).eval(10.0), 3.0);
        let ramp = Schedule::Ramp { value: 2.0, ramp_time: 4.0 };
        assert_eq!(ramp.eval(1.0), 0.5);
        assert_eq!(ramp.eval(9.0), 2.0);
        let f = Schedule::OneMinusCos { amplitude: 100.0, omega: 75.0 };
        assert!((f.eval(std::f64::consts::PI / 75.0) - 200.0).abs() < 1e-12);
    }

    #[test]
    fn conflicting_dirichlet_rejected() {
        let mesh = build_structured_grid(2, 2, 1.0, 1.0).unwrap();
        let mut bcs = BoundaryConditions::new();
        bcs.set_pressure(0, 1.0).unwrap();
        bcs.set_pressure(0, 1.0).unwrap();
        assert!(bcs.set_pressure(0, 2.0).is_err());
        bcs.roller(&mesh, Side::Left).unwrap();
        bcs.roller(&mesh, Side::Bottom).unwrap();
        assert!(bcs.fix_displacement(0, 0, 0.5).is_err());
        bcs.drain(&mesh, Side::Top).unwrap();
        assert_eq!(bcs.drained(), &[Side::Top]);
        assert_eq!(bcs.pressure_values(0.0).len(), 1 + 3);
    }

    #[test]
    fn rigid_modes_detected() {
        let mesh = build_structured_grid(2, 2, 1.0, 1.0).unwrap();
        assert!(matches!(check_rigid_modes(&mesh, &[]), Err(Error::RigidBodyMode)));
        // x fixed on the left side only: y translation free
        let left_x: Vec<usize> = mesh.boundary.nodes(Side::Left).iter().map(|n| 2 * n).collect();
        assert!(check_rigid_modes(&mesh, &left_x).is_err());
        // plus one y constraint removes the remaining modes
        let mut dofs = left_x;
        dofs.push(1);
        assert!(check_rigid_modes(&mesh, &dofs).is_ok());
        // both components at a single node still allow rotation
        assert!(check_rigid_modes(&mesh, &[0, 1]).is_err());
    }
}
