//! Explicit upwind transport of the non-wetting saturation.
//!
//! Every node owns a control volume with pore volume `Σ_e φ_e ∫_e N_i`.
//! The total flux between nodes `i` and `j` is the algebraic flux
//! `Q_ij = K_ij (p_j - p_i)` of the Galerkin total-mobility matrix, so the
//! fluxes out of every node sum to that node's source and the update is
//! conservative to rounding. Each link carries the fractional flow of its
//! upstream node.

use serde::{Deserialize, Serialize};

use super::{assemble_flow_unconstrained, FlowInputs, Problem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Wetting,
    NonWetting,
}

/// Relative-permeability curve shared by both phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelPerm {
    /// `k_r = S²`
    #[default]
    Quadratic,
    /// `k_r = S`
    Linear,
}

impl RelPerm {
    fn eval(self, s: f64) -> f64 {
        match self {
            RelPerm::Quadratic => s * s,
            RelPerm::Linear => s,
        }
    }
}

const SATURATION_TOLERANCE: f64 = 1e-10;

/// Relative mobility of `phase` at its own saturation `s`.
pub fn phase_mobility(s: f64, phase: Phase, curve: RelPerm) -> Result<f64> {
    if !(-SATURATION_TOLERANCE..=1.0 + SATURATION_TOLERANCE).contains(&s) {
        return Err(Error::SaturationOutOfRange { value: s });
    }
    // both phases share the curve; `phase` only names which saturation is passed
    let _ = phase;
    Ok(curve.eval(s.clamp(0.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoPhaseParams {
    pub relperm: RelPerm,
    /// `μ_n / μ_w`
    pub viscosity_ratio: f64,
    /// Fraction of the stable explicit step used per substep.
    pub cfl: f64,
    pub max_substeps: usize,
}

impl Default for TwoPhaseParams {
    fn default() -> Self {
        TwoPhaseParams { relperm: RelPerm::Quadratic, viscosity_ratio: 1.0, cfl: 0.9, max_substeps: 100_000 }
    }
}

impl TwoPhaseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.viscosity_ratio > 0.0 && self.viscosity_ratio.is_finite()) {
            return Err(Error::Config("viscosity_ratio must be positive".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config("cfl must lie in (0, 1]".into()));
        }
        if self.max_substeps == 0 {
            return Err(Error::Config("max_substeps must be at least 1".into()));
        }
        Ok(())
    }

    /// Total relative mobility in units of the wetting viscosity.
    pub fn total_mobility(&self, s_n: f64) -> Result<f64> {
        Ok(phase_mobility(1.0 - s_n, Phase::Wetting, self.relperm)?
            + phase_mobility(s_n, Phase::NonWetting, self.relperm)? / self.viscosity_ratio)
    }

    fn frac_n(&self, s_n: f64) -> f64 {
        let s = s_n.clamp(0.0, 1.0);
        let ln = self.relperm.eval(s) / self.viscosity_ratio;
        ln / (self.relperm.eval(1.0 - s) + ln)
    }

    /// Upper bound of `|d f_n / d S_n|`.
    fn frac_slope_bound(&self) -> f64 {
        let m = 2000;
        let mut slope: f64 = 0.0;
        for k in 0..m {
            let (a, b) = (k as f64 / m as f64, (k + 1) as f64 / m as f64);
            slope = slope.max((self.frac_n(b) - self.frac_n(a)).abs() * m as f64);
        }
        slope * 1.05
    }
}

/// Fractional flow of the non-wetting phase.
pub fn fractional_flow(s_n: f64, params: &TwoPhaseParams) -> f64 {
    params.frac_n(s_n)
}

/// Per-step bookkeeping of the saturation update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SaturationReport {
    pub substeps: usize,
    pub oil_before: f64,
    pub oil_after: f64,
    pub oil_produced: f64,
    pub water_before: f64,
    pub water_after: f64,
    pub water_injected: f64,
    pub water_produced: f64,
    /// Nodes pushed back into `[0, 1]` after leaving it by more than 1e-10.
    pub clamped: usize,
}

impl SaturationReport {
    /// `|ΔM + produced| / M` for the non-wetting phase.
    pub fn oil_imbalance(&self) -> f64 {
        let scale = self.oil_before.max(self.oil_after).max(f64::MIN_POSITIVE);
        (self.oil_after - self.oil_before + self.oil_produced).abs() / scale
    }

    /// `|ΔM - injected + produced| / M` for the wetting phase.
    pub fn water_imbalance(&self) -> f64 {
        let scale = self.water_before.max(self.water_after).max(self.water_injected).max(f64::MIN_POSITIVE);
        (self.water_after - self.water_before - self.water_injected + self.water_produced).abs() / scale
    }
}

/// Advances `s_n` by `dt` with the pressure `p`, which must solve the flow
/// system assembled from `inp`. Nodes with net inflow from outside (wells,
/// pressure boundaries) inject pure wetting phase; nodes with net outflow
/// produce at their local fractional flow.
pub fn advance_saturation(
    problem: &Problem,
    inp: &FlowInputs,
    p: &[f64],
    s_n: &mut [f64],
    dt: f64,
) -> Result<SaturationReport> {
    let tp = problem
        .materials
        .two_phase
        .as_ref()
        .ok_or_else(|| Error::Unsupported("saturation transport without two-phase parameters".into()))?;
    if problem.sources.fluid_body.is_some() {
        return Err(Error::Unsupported("two-phase transport with fluid body forces".into()));
    }
    let n = problem.mesh.node_count();
    if s_n.len() != n {
        return Err(Error::LengthMismatch { field: "s_n", expected: n, found: s_n.len() });
    }
    let (system, _) = assemble_flow_unconstrained(problem, inp)?;

    // links i < j with the flux from i to j
    let mut links = Vec::new();
    let mut outflow = vec![0.0; n];
    let mut inflow = vec![0.0; n];
    for i in 0..n {
        for (j, kij) in system.matrix.row(i) {
            if j > i && kij != 0.0 {
                let q = kij * (p[j] - p[i]);
                links.push((i, j, q));
                outflow[i] += q;
                outflow[j] -= q;
                if q > 0.0 {
                    inflow[j] += q;
                } else {
                    inflow[i] -= q;
                }
            }
        }
    }
    let mut pore_volume = vec![0.0; n];
    for (e, geo) in problem.geometry.elements.iter().enumerate() {
        let w = geo.lumped_weights();
        for (a, &node) in problem.element_nodes(e).iter().enumerate() {
            pore_volume[node] += inp.phi_old[e] * w[a];
        }
    }

    let slope = tp.frac_slope_bound();
    let mut stable = f64::INFINITY;
    for i in 0..n {
        let inc = inflow[i] + outflow[i].max(0.0);
        if inc > 0.0 {
            stable = stable.min(pore_volume[i] / (slope * inc));
        }
    }
    let substeps = if stable.is_finite() { (dt / (tp.cfl * stable)).ceil().max(1.0) } else { 1.0 };
    if substeps > tp.max_substeps as f64 {
        return Err(Error::CflViolation { max_substeps: tp.max_substeps });
    }
    let substeps = substeps as usize;
    let h = dt / substeps as f64;

    let mass = |s: &[f64]| -> (f64, f64) {
        s.iter().zip(&pore_volume).fold((0.0, 0.0), |(o, w), (si, pv)| (o + pv * si, w + pv * (1.0 - si)))
    };
    let (oil_before, water_before) = mass(s_n);
    let mut report = SaturationReport { substeps, oil_before, water_before, ..Default::default() };
    let mut delta = vec![0.0; n];
    for _ in 0..substeps {
        delta.fill(0.0);
        for &(i, j, q) in &links {
            let up = if q > 0.0 { i } else { j };
            let f = tp.frac_n(s_n[up]) * q;
            delta[i] -= f;
            delta[j] += f;
        }
        for i in 0..n {
            let q = outflow[i];
            if q > 0.0 {
                report.water_injected += q * h;
            } else if q < 0.0 {
                let fo = tp.frac_n(s_n[i]);
                delta[i] += fo * q;
                report.oil_produced -= fo * q * h;
                report.water_produced -= (1.0 - fo) * q * h;
            }
        }
        for i in 0..n {
            if pore_volume[i] > 0.0 {
                let s = s_n[i] + h * delta[i] / pore_volume[i];
                if !(-SATURATION_TOLERANCE..=1.0 + SATURATION_TOLERANCE).contains(&s) {
                    report.clamped += 1;
                }
                s_n[i] = s.clamp(0.0, 1.0);
            }
        }
    }
    if report.clamped > 0 {
        log::warn!("saturation left [0, 1] at {} node updates and was clamped", report.clamped);
    }
    let (oil_after, water_after) = mass(s_n);
    report.oil_after = oil_after;
    report.water_after = water_after;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mobility_examples() {
        for phase in [Phase::Wetting, Phase::NonWetting] {
            assert_eq!(phase_mobility(0.0, phase, RelPerm::Quadratic).unwrap(), 0.0);
            assert_eq!(phase_mobility(1.0, phase, RelPerm::Quadratic).unwrap(), 1.0);
            assert_eq!(phase_mobility(0.5, phase, RelPerm::Quadratic).unwrap(), 0.25);
        }
        assert_eq!(phase_mobility(0.5, Phase::Wetting, RelPerm::Linear).unwrap(), 0.5);
        assert!(phase_mobility(1.1, Phase::Wetting, RelPerm::Quadratic).is_err());
        assert!(phase_mobility(-0.01, Phase::NonWetting, RelPerm::Quadratic).is_err());
    }

    #[test]
    fn fractional_flow_is_monotone_with_endpoints() {
        let tp = TwoPhaseParams::default();
        assert_eq!(fractional_flow(0.0, &tp), 0.0);
        assert_eq!(fractional_flow(1.0, &tp), 1.0);
        assert!((fractional_flow(0.5, &tp) - 0.5).abs() < 1e-15);
        let mut last = 0.0;
        for k in 1..=100 {
            let f = fractional_flow(k as f64 / 100.0, &tp);
            assert!(f >= last);
            last = f;
        }
        // S² / (S² + (1-S)²) has maximal slope 2 at S = 1/2
        assert!((tp.frac_slope_bound() / 1.05 - 2.0).abs() < 1e-3);
    }
}
