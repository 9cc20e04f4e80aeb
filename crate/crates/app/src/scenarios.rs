//! The four built-in scenarios: problem construction, execution and
//! scenario-specific post-processing.

use std::path::Path;
use std::sync::Arc;

use porocouple_core::assembly::{
    fractional_flow, BoundaryConditions, FieldState, Materials, Problem, SaturationReport, Schedule, Sources,
};
use porocouple_core::constitutive::{FluidParams, PermeabilityModel, PorosityLaw, PorosityModel, SolidParams};
use porocouple_core::coupling::{run, ConvergenceReport, Scheme, StepReport};
use porocouple_core::mesh::{build_structured_grid, Side};
use porocouple_core::verification::{
    l2_error, ms_exact, ms_solid_body_force, terzaghi_analytic_with, ManufacturedConstants, MeshField, MsFields,
    TerzaghiParams,
};
use porocouple_core::Tensor2;
use thiserror::Error;

use crate::config::{ConfigError, HeterogeneityMode, PermeabilityKind, ScenarioConfig, ScenarioKind, WellKind};
use crate::heterogeneity::gen_heterogeneous_field;
use crate::output::{write_table, write_timeseries, write_vtk, Manifest, OutputError, TimeseriesRow};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] porocouple_core::Error),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl ScenarioError {
    /// Process exit code: 2 configuration, 3 solver, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        use porocouple_core::Error as E;
        match self {
            ScenarioError::Config(ConfigError::Io { .. }) | ScenarioError::Output(_) => 4,
            ScenarioError::Config(_) => 2,
            ScenarioError::Solver(
                E::Config(_)
                | E::Unsupported(_)
                | E::Constitutive(_)
                | E::Mesh(_)
                | E::MissingPressureDirichlet
                | E::RigidBodyMode
                | E::LengthMismatch { .. },
            ) => 2,
            ScenarioError::Solver(_) => 3,
        }
    }
}

pub fn manufactured_constants(cfg: &ScenarioConfig) -> ManufacturedConstants {
    let m = &cfg.materials;
    ManufacturedConstants {
        u0: cfg.manufactured.u0,
        v0: cfg.manufactured.v0,
        p0: cfg.manufactured.p0,
        lambda: m.lambda,
        mu: m.mu,
        alpha: m.viscosity / m.permeability,
        phi0: cfg.porosity.phi0,
        rho_f: m.rho_f,
        rho_s: m.rho_s,
    }
}

/// Oracle parameters matching the Terzaghi scenario: volume fractions from
/// the reference porosity and `k_c = α / n_f`.
pub fn terzaghi_params(cfg: &ScenarioConfig) -> TerzaghiParams {
    let m = &cfg.materials;
    let n_f = cfg.porosity.phi0;
    TerzaghiParams {
        n_f,
        n_s: 1.0 - n_f,
        rho_f: m.rho_f,
        rho_s: m.rho_s,
        lambda: m.lambda,
        mu: m.mu,
        k_c: m.viscosity / m.permeability / n_f,
    }
}

fn in_situ(cfg: &ScenarioConfig) -> Tensor2 {
    let [xx, xy, yy] = cfg.permeability.in_situ_stress;
    Tensor2::new(xx, xy, xy, yy)
}

pub fn build_problem(cfg: &ScenarioConfig) -> Result<Problem, ScenarioError> {
    let m = &cfg.mesh;
    let mesh = build_structured_grid(m.nx, m.ny, m.lx, m.ly).map_err(porocouple_core::Error::from)?;
    let mat = &cfg.materials;
    let solid = SolidParams { lambda: mat.lambda, mu: mat.mu, rho: mat.rho_s };
    let fluid = FluidParams { mu0: mat.viscosity, beta: mat.beta, rho: mat.rho_f, permeability: mat.permeability };
    let porosity = PorosityModel::new(cfg.porosity.law, cfg.porosity.phi0).with_compressibility(cfg.c_r());
    let mut materials = Materials::new(solid, fluid, porosity);
    materials.in_situ_stress = in_situ(cfg);
    materials.permeability = match cfg.permeability.model {
        PermeabilityKind::Constant => PermeabilityModel::Constant,
        PermeabilityKind::Damage => PermeabilityModel::Damage { zeta: cfg.permeability.zeta, in_situ: in_situ(cfg) },
    };
    if cfg.heterogeneity.mode != HeterogeneityMode::None {
        materials.lambda_field =
            Some(gen_heterogeneous_field(&mesh, cfg.heterogeneity.mode, mat.lambda, cfg.heterogeneity.amplitude)?);
    }
    materials.solid_loading = cfg.physics.solid_loading;
    materials.flow_regime = cfg.physics.flow_regime;
    materials.two_phase = cfg.two_phase;

    let mut bcs = BoundaryConditions::new();
    let mut sources = Sources::default();
    match cfg.scenario {
        ScenarioKind::Manufactured => {
            let c = manufactured_constants(cfg);
            for n in 0..mesh.node_count() {
                bcs.fix_displacement(n, 1, 0.0)?;
            }
            for side in [Side::Left, Side::Right] {
                for &n in mesh.boundary.nodes(side) {
                    let f = ms_exact(mesh.nodes[n][0], &c);
                    bcs.fix_displacement(n, 0, f.u)?;
                    bcs.set_pressure(n, f.p)?;
                }
            }
            let loading = cfg.physics.solid_loading;
            sources.solid_body = Some(Arc::new(move |x: [f64; 2], _| [ms_solid_body_force(x[0], &c, loading), 0.0]));
        }
        ScenarioKind::Terzaghi => {
            for side in [Side::Left, Side::Right, Side::Bottom] {
                bcs.roller(&mesh, side)?;
            }
            bcs.drain(&mesh, Side::Top)?;
            let load = Schedule::OneMinusCos { amplitude: -cfg.terzaghi.load_amplitude, omega: cfg.terzaghi.omega };
            bcs.traction_on(&mesh, Side::Top, [Schedule::ZERO, load]);
        }
        ScenarioKind::Subsidence => {
            for side in [Side::Left, Side::Right, Side::Bottom] {
                bcs.roller(&mesh, side)?;
            }
            bcs.drain(&mesh, Side::Top)?;
        }
        ScenarioKind::FiveSpot => {
            for side in Side::ALL {
                bcs.roller(&mesh, side)?;
            }
        }
    }
    for w in &cfg.wells {
        let node = mesh.nearest_node([w.x, w.y]);
        let schedule = match w.ramp_time {
            Some(ramp_time) => Schedule::Ramp { value: w.value, ramp_time },
            None => Schedule::constant(w.value),
        };
        match w.kind {
            WellKind::Pressure => bcs.set_pressure(node, schedule)?,
            WellKind::Rate => sources.rates.push((node, schedule)),
        }
    }
    Ok(Problem::new(mesh, materials, bcs, sources)?)
}

/// Relative L² errors of the manufactured fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldErrors {
    pub u: f64,
    pub p: f64,
    pub v: f64,
    pub phi: f64,
}

pub fn manufactured_errors(problem: &Problem, c: &ManufacturedConstants, s: &FieldState) -> Result<FieldErrors, ScenarioError> {
    let mesh = &problem.mesh;
    let ux: Vec<f64> = s.u.iter().map(|u| u[0]).collect();
    let vx: Vec<f64> = s.v.iter().map(|v| v[0]).collect();
    let err = |f: MeshField, g: fn(&MsFields) -> f64| -> Result<f64, ScenarioError> {
        Ok(l2_error(mesh, f, |x| g(&ms_exact(x[0], c)))?.value())
    };
    Ok(FieldErrors {
        u: err(MeshField::Nodal(&ux), |f| f.u)?,
        p: err(MeshField::Nodal(&s.p), |f| f.p)?,
        v: err(MeshField::Elemental(&vx), |f| f.v)?,
        phi: err(MeshField::Elemental(&s.phi), |f| f.phi)?,
    })
}

/// Vertical displacement of the node nearest the top centre.
pub fn top_center_uy(problem: &Problem, u: &[[f64; 2]]) -> f64 {
    let mesh = &problem.mesh;
    u[mesh.nearest_node([0.5 * mesh.lx, mesh.ly])][1]
}

/// Result of one coupled run.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub problem: Problem,
    pub final_state: FieldState,
    pub report: ConvergenceReport,
    pub rows: Vec<TimeseriesRow>,
    /// `(step, state)` pairs selected by the VTK interval, final state last.
    pub snapshots: Vec<(usize, FieldState)>,
    pub errors: Option<FieldErrors>,
    /// Top-centre vertical displacement after every step.
    pub top_uy: Vec<f64>,
    pub saturation: Vec<SaturationStep>,
}

/// Per-step saturation diagnostics of a two-phase run.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationStep {
    pub time: f64,
    pub report: SaturationReport,
    pub min_s: f64,
    pub max_s: f64,
    /// Produced water fraction, maximum over producing wells.
    pub water_cut: f64,
}

impl Simulation {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time).collect()
    }

    pub fn converged(&self) -> bool {
        self.report.converged()
    }

    /// First time the water cut reaches `cut`, interpolated linearly between
    /// steps.
    pub fn breakthrough_time(&self, cut: f64) -> Option<f64> {
        let mut prev = (0.0, 0.0);
        for s in &self.saturation {
            if s.water_cut >= cut {
                let (t0, w0) = prev;
                let frac = if s.water_cut > w0 { (cut - w0) / (s.water_cut - w0) } else { 1.0 };
                return Some(t0 + frac * (s.time - t0));
            }
            prev = (s.time, s.water_cut);
        }
        None
    }
}

/// Producing wells: pressure wells below the maximum well pressure.
fn producers(cfg: &ScenarioConfig, problem: &Problem) -> Vec<usize> {
    let max = cfg.wells.iter().filter(|w| w.kind == WellKind::Pressure).map(|w| w.value).fold(f64::MIN, f64::max);
    cfg.wells
        .iter()
        .filter(|w| (w.kind == WellKind::Pressure && w.value < max) || (w.kind == WellKind::Rate && w.value < 0.0))
        .map(|w| problem.mesh.nearest_node([w.x, w.y]))
        .collect()
}

/// Builds and runs `cfg` without touching the file system.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Simulation, ScenarioError> {
    let problem = build_problem(cfg)?;
    let initial = problem.initial_state();
    let constants = manufactured_constants(cfg);
    let wells = producers(cfg, &problem);
    let interval = cfg.output.vtk_interval;
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut top_uy = Vec::new();
    let mut saturation = Vec::new();
    let mut errors = None;
    let mut step = 0;
    let mut failure = None;
    let (final_state, report) = run(&problem, &initial, &cfg.coupling, |state: &FieldState, r: &StepReport| {
        step += 1;
        let mut row = TimeseriesRow {
            time: r.time,
            scheme: cfg.coupling.scheme.name().to_string(),
            tol: cfg.coupling.tol,
            outer_iters: r.outer_iterations,
            flow_solves: r.flow_solves,
            solid_solves: r.solid_solves,
            residual: r.final_residual(),
            error_u: None,
            error_p: None,
        };
        if cfg.scenario == ScenarioKind::Manufactured {
            match manufactured_errors(&problem, &constants, state) {
                Ok(e) => {
                    row.error_u = Some(e.u);
                    row.error_p = Some(e.p);
                    errors = Some(e);
                }
                Err(e) => failure = Some(e),
            }
        }
        rows.push(row);
        top_uy.push(top_center_uy(&problem, &state.u));
        if let (Some(rep), Some(tp)) = (&r.saturation, &problem.materials.two_phase) {
            let water_cut = wells.iter().map(|&n| 1.0 - fractional_flow(state.s_n[n], tp)).fold(0.0, f64::max);
            saturation.push(SaturationStep {
                time: r.time,
                report: rep.clone(),
                min_s: state.s_n.iter().copied().fold(f64::INFINITY, f64::min),
                max_s: state.s_n.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                water_cut,
            });
        }
        if interval > 0 && step % interval == 0 {
            snapshots.push((step, state.clone()));
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if snapshots.last().map(|s| s.0) != Some(step) {
        snapshots.push((step, final_state.clone()));
    }
    Ok(Simulation { problem, final_state, report, rows, snapshots, errors, top_uy, saturation })
}

/// Terzaghi oracle at the simulation's output times.
pub fn terzaghi_oracle(cfg: &ScenarioConfig, times: &[f64]) -> Result<Vec<f64>, ScenarioError> {
    let params = terzaghi_params(cfg);
    let (amp, omega) = (cfg.terzaghi.load_amplitude, cfg.terzaghi.omega);
    let forcing = |t: f64| amp * (1.0 - (omega * t).cos());
    times
        .iter()
        .map(|&t| Ok(terzaghi_analytic_with(t, &params, cfg.terzaghi.quad_n, forcing)?))
        .collect()
}

/// Maximum over time of `|numeric - exact|`, relative to `max |exact|`.
pub fn relative_linf(numeric: &[f64], exact: &[f64]) -> f64 {
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = numeric.iter().zip(exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    err / scale
}

/// Outcome of [`run_scenario`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub converged: bool,
    pub files: Vec<String>,
    pub summary: Vec<(String, String)>,
}

/// Runs `cfg`, writing snapshots, tables and the manifest into `out`.
/// Partial outputs and an error manifest are kept when the run fails.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<RunOutcome, ScenarioError> {
    std::fs::create_dir_all(out).map_err(|source| OutputError { path: out.to_path_buf(), source })?;
    let mut manifest = Manifest { seed: cfg.heterogeneity.seed, config: cfg.to_toml(), ..Manifest::default() };
    let manifest_path = out.join("manifest.txt");
    match execute(cfg, out, &mut manifest) {
        Ok(converged) => {
            manifest.status = if converged { "converged".into() } else { "not converged".into() };
            manifest.write(&manifest_path)?;
            Ok(RunOutcome { converged, files: manifest.files, summary: manifest.summary })
        }
        Err(e) => {
            manifest.status = "failed".into();
            manifest.error = Some(e.to_string());
            // the original error is more useful than a failure to record it
            let _ = manifest.write(&manifest_path);
            Err(e)
        }
    }
}

fn execute(cfg: &ScenarioConfig, out: &Path, manifest: &mut Manifest) -> Result<bool, ScenarioError> {
    let name = cfg.scenario.name();
    let sim = simulate(cfg)?;
    let file = |manifest: &mut Manifest, f: &str| {
        manifest.files.push(f.to_string());
        out.join(f)
    };
    for (step, state) in &sim.snapshots {
        let f = format!("{name}_{step:05}.vtk");
        let title = format!("porocouple {name} t={:.8e}", state.time);
        write_vtk(&sim.problem, state, &title, &file(manifest, &f))?;
    }
    if cfg.output.csv {
        write_timeseries(&sim.rows, &file(manifest, "timeseries.csv"))?;
    }
    let summary = &mut manifest.summary;
    summary.push(("scheme".into(), cfg.coupling.scheme.name().into()));
    summary.push(("steps".into(), sim.report.steps.len().to_string()));
    summary.push(("outer_iterations".into(), sim.report.outer_iterations().to_string()));
    summary.push(("flow_solves".into(), sim.report.flow_solves.to_string()));
    summary.push(("solid_solves".into(), sim.report.solid_solves.to_string()));
    let mut converged = sim.converged();

    match cfg.scenario {
        ScenarioKind::Manufactured => {
            if let Some(e) = sim.errors {
                let rows = vec![vec![e.u], vec![e.p], vec![e.v], vec![e.phi]];
                for (field, v) in ["u", "p", "v", "phi"].iter().zip(&rows) {
                    manifest.summary.push((format!("l2_error_{field}"), format!("{:.6e}", v[0])));
                }
                if cfg.output.csv {
                    let path = file(manifest, "errors.csv");
                    let body: Vec<String> =
                        ["u", "p", "v", "phi"].iter().zip(&rows).map(|(f, v)| format!("{f},{}", v[0])).collect();
                    std::fs::write(&path, format!("field,l2_relative\n{}\n", body.join("\n")))
                        .map_err(|source| OutputError { path: path.clone(), source })?;
                }
            }
        }
        ScenarioKind::Terzaghi => {
            let times = sim.times();
            let exact = terzaghi_oracle(cfg, &times)?;
            let err = relative_linf(&sim.top_uy, &exact);
            manifest.summary.push(("settlement_relative_linf".into(), format!("{err:.6e}")));
            if cfg.output.csv {
                let rows: Vec<Vec<f64>> =
                    times.iter().zip(&sim.top_uy).zip(&exact).map(|((t, u), e)| vec![*t, *u, *e]).collect();
                write_table(&["time", "u_y", "u_y_analytic"], &rows, &file(manifest, "settlement.csv"))?;
            }
        }
        ScenarioKind::Subsidence => {
            let coupled: Vec<f64> = sim.top_uy.iter().map(|u| -u).collect();
            let mut header = vec!["time", "subsidence"];
            let mut rows: Vec<Vec<f64>> = sim.times().iter().zip(&coupled).map(|(t, s)| vec![*t, *s]).collect();
            manifest.summary.push(("subsidence".into(), format!("{:.6e}", coupled.last().copied().unwrap_or(0.0))));
            if cfg.subsidence.compare_frozen && cfg.porosity.law != PorosityLaw::Frozen {
                let mut frozen_cfg = cfg.clone();
                frozen_cfg.porosity.law = PorosityLaw::Frozen;
                frozen_cfg.output.vtk_interval = 0;
                let frozen = simulate(&frozen_cfg)?;
                converged &= frozen.converged();
                header.extend(["subsidence_frozen", "ratio"]);
                for (row, u) in rows.iter_mut().zip(&frozen.top_uy) {
                    let f = -u;
                    let ratio = if f != 0.0 { row[1] / f } else { f64::NAN };
                    row.extend([f, ratio]);
                }
                let (c, f) = (coupled.last().copied().unwrap_or(0.0), -frozen.top_uy.last().copied().unwrap_or(0.0));
                manifest.summary.push(("subsidence_frozen".into(), format!("{f:.6e}")));
                manifest.summary.push(("frozen_underprediction".into(), format!("{:.3}%", 100.0 * (c - f) / c)));
            }
            if cfg.output.csv {
                write_table(&header, &rows, &file(manifest, "subsidence.csv"))?;
            }
        }
        ScenarioKind::FiveSpot => {
            let bt = sim.breakthrough_time(cfg.five_spot.breakthrough_cut);
            manifest.summary.push((
                "breakthrough_time".into(),
                bt.map_or_else(|| "none".to_string(), |t| format!("{t:.6e}")),
            ));
            if cfg.output.csv {
                let rows: Vec<Vec<f64>> = sim
                    .saturation
                    .iter()
                    .map(|s| {
                        vec![
                            s.time,
                            s.water_cut,
                            s.report.oil_produced,
                            s.report.water_produced,
                            s.report.water_injected,
                            s.report.oil_imbalance(),
                            s.report.water_imbalance(),
                            s.min_s,
                            s.max_s,
                            s.report.clamped as f64,
                        ]
                    })
                    .collect();
                let header = [
                    "time",
                    "water_cut",
                    "oil_produced",
                    "water_produced",
                    "water_injected",
                    "oil_imbalance",
                    "water_imbalance",
                    "min_s_n",
                    "max_s_n",
                    "clamped",
                ];
                write_table(&header, &rows, &file(manifest, "production.csv"))?;
            }
        }
    }
    Ok(converged)
}

/// Tolerance study: one row per `(scheme, tol)` with iteration and solve
/// totals, the final residual and the minimum-over-time errors.
pub fn sweep(cfg: &ScenarioConfig, schemes: &[Scheme], tols: &[f64]) -> Result<Vec<TimeseriesRow>, ScenarioError> {
    let mut rows = Vec::new();
    for &scheme in schemes {
        for &tol in tols {
            let mut c = cfg.clone();
            c.coupling.scheme = scheme;
            c.coupling.tol = tol;
            c.output.vtk_interval = 0;
            c.validate()?;
            let sim = simulate(&c)?;
            let min_err = |f: fn(&TimeseriesRow) -> Option<f64>| sim.rows.iter().filter_map(f).reduce(f64::min);
            rows.push(TimeseriesRow {
                time: sim.final_state.time,
                scheme: scheme.name().to_string(),
                tol,
                outer_iters: sim.report.outer_iterations(),
                flow_solves: sim.report.flow_solves,
                solid_solves: sim.report.solid_solves,
                residual: sim.report.max_residual(),
                error_u: min_err(|r| r.error_u),
                error_p: min_err(|r| r.error_p),
            });
        }
    }
    Ok(rows)
}
