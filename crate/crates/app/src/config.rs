//! Scenario configuration: a TOML document merged over per-scenario
//! defaults and checked strictly.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use porocouple_core::assembly::{FlowRegime, SolidLoading, TwoPhaseParams};
use porocouple_core::constitutive::PorosityLaw;
use porocouple_core::coupling::{CouplingConfig, Scheme};
use porocouple_core::linalg::SolveMethod;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}", unknown_key_message(.key, .line, .suggestion))]
    UnknownKey { key: String, line: Option<usize>, suggestion: Option<String> },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn unknown_key_message(key: &str, line: &Option<usize>, suggestion: &Option<String>) -> String {
    let mut msg = format!("unknown key `{key}`");
    if let Some(l) = line {
        msg = format!("line {l}: {msg}");
    }
    if let Some(s) = suggestion {
        msg.push_str(&format!(" (did you mean `{s}`?)"));
    }
    msg
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Manufactured,
    Terzaghi,
    Subsidence,
    FiveSpot,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Manufactured => "manufactured",
            ScenarioKind::Terzaghi => "terzaghi",
            ScenarioKind::Subsidence => "subsidence",
            ScenarioKind::FiveSpot => "five_spot",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Value::String(s.to_string())
            .try_into()
            .map_err(|_| invalid("scenario", format!("unknown scenario `{s}` (manufactured, terzaghi, subsidence, five_spot)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsConfig {
    pub lambda: f64,
    pub mu: f64,
    pub rho_s: f64,
    pub rho_f: f64,
    /// Reference viscosity.
    pub viscosity: f64,
    /// Barus exponent.
    pub beta: f64,
    pub permeability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PorosityConfig {
    pub law: PorosityLaw,
    pub phi0: f64,
    /// Rock compressibility of the large-deformation law; defaults to
    /// `1 / (phi0 (lambda + 2 mu))` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermeabilityKind {
    Constant,
    Damage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermeabilityConfig {
    pub model: PermeabilityKind,
    pub zeta: f64,
    /// In-situ stress `[xx, xy, yy]`.
    pub in_situ_stress: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub solid_loading: SolidLoading,
    pub flow_regime: FlowRegime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WellKind {
    /// Prescribed pressure.
    Pressure,
    /// Prescribed volumetric rate (positive injects).
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellConfig {
    pub x: f64,
    pub y: f64,
    pub kind: WellKind,
    pub value: f64,
    /// Linear ramp-up time; the value is applied at once when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeterogeneityMode {
    None,
    Layered,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeterogeneityConfig {
    pub mode: HeterogeneityMode,
    pub amplitude: f64,
    /// Recorded in the run manifest; the built-in modes are deterministic.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Write a VTK snapshot every this many steps; 0 writes the final state only.
    pub vtk_interval: usize,
    pub csv: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedConfig {
    pub u0: f64,
    pub v0: f64,
    pub p0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerzaghiConfig {
    /// Amplitude `A` of the surface load `A (1 - cos(omega t))`.
    pub load_amplitude: f64,
    pub omega: f64,
    pub quad_n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsidenceConfig {
    /// Also run with frozen porosity and report both curves.
    pub compare_frozen: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiveSpotConfig {
    /// Produced water fraction that marks breakthrough at a producer.
    pub breakthrough_cut: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub mesh: MeshConfig,
    pub materials: MaterialsConfig,
    pub porosity: PorosityConfig,
    pub permeability: PermeabilityConfig,
    pub physics: PhysicsConfig,
    pub coupling: CouplingConfig,
    pub wells: Vec<WellConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_phase: Option<TwoPhaseParams>,
    pub heterogeneity: HeterogeneityConfig,
    pub output: OutputConfig,
    pub manufactured: ManufacturedConfig,
    pub terzaghi: TerzaghiConfig,
    pub subsidence: SubsidenceConfig,
    pub five_spot: FiveSpotConfig,
}

impl ScenarioConfig {
    /// Complete configuration of `kind` with every default filled in.
    pub fn defaults(kind: ScenarioKind) -> Self {
        let mut cfg = ScenarioConfig {
            scenario: kind,
            mesh: MeshConfig { nx: 200, ny: 1, lx: 1.0, ly: 1.0 },
            materials: MaterialsConfig {
                lambda: 1.0,
                mu: 0.5,
                rho_s: 1.0,
                rho_f: 1.0,
                viscosity: 1.0,
                beta: 0.0,
                permeability: 1.0,
            },
            porosity: PorosityConfig { law: PorosityLaw::Rational, phi0: 0.1, c_r: None },
            permeability: PermeabilityConfig {
                model: PermeabilityKind::Constant,
                zeta: 0.0,
                in_situ_stress: [-1.0, 0.0, -1.0],
            },
            physics: PhysicsConfig { solid_loading: SolidLoading::StressSplit, flow_regime: FlowRegime::Transient },
            coupling: CouplingConfig { scheme: Scheme::Lockstep, tol: 1e-9, ..CouplingConfig::default() },
            wells: Vec::new(),
            two_phase: None,
            heterogeneity: HeterogeneityConfig { mode: HeterogeneityMode::None, amplitude: 0.0, seed: 0 },
            output: OutputConfig { directory: PathBuf::from("out").join(kind.name()), vtk_interval: 0, csv: true },
            manufactured: ManufacturedConfig { u0: 0.01, v0: 1.0, p0: 1.0 },
            terzaghi: TerzaghiConfig { load_amplitude: 100.0, omega: 75.0, quad_n: 2000 },
            subsidence: SubsidenceConfig { compare_frozen: true },
            five_spot: FiveSpotConfig { breakthrough_cut: 0.1 },
        };
        match kind {
            ScenarioKind::Manufactured => {}
            ScenarioKind::Terzaghi => {
                cfg.mesh = MeshConfig { nx: 1, ny: 100, lx: 0.015, ly: 1.5 };
                cfg.materials = MaterialsConfig {
                    lambda: 5e5,
                    mu: 2.5e5,
                    rho_s: 1.0,
                    rho_f: 1.0,
                    viscosity: 3e5,
                    beta: 0.0,
                    permeability: 1.0,
                };
                cfg.porosity = PorosityConfig { law: PorosityLaw::LargeDeformation, phi0: 0.3, c_r: None };
                cfg.coupling.tol = 1e-8;
                cfg.coupling.dt = Some(2e-3);
                cfg.coupling.t_end = 0.2;
                cfg.output.vtk_interval = 25;
            }
            ScenarioKind::Subsidence => {
                cfg.mesh = MeshConfig { nx: 10, ny: 10, lx: 1.0, ly: 1.0 };
                cfg.materials.mu = 1.0;
                cfg.porosity.phi0 = 0.2;
                cfg.physics.flow_regime = FlowRegime::QuasiSteady;
                cfg.coupling.dt = Some(0.1);
                cfg.coupling.t_end = 1.0;
                cfg.wells =
                    vec![WellConfig { x: 0.5, y: 0.5, kind: WellKind::Pressure, value: -0.1, ramp_time: Some(0.5) }];
                cfg.output.vtk_interval = 5;
            }
            ScenarioKind::FiveSpot => {
                cfg.mesh = MeshConfig { nx: 20, ny: 20, lx: 1.0, ly: 1.0 };
                cfg.materials.mu = 1.0;
                cfg.porosity = PorosityConfig { law: PorosityLaw::Frozen, phi0: 0.2, c_r: None };
                cfg.permeability.model = PermeabilityKind::Damage;
                cfg.permeability.zeta = 1.0;
                cfg.physics.flow_regime = FlowRegime::QuasiSteady;
                cfg.coupling.tol = 1e-8;
                cfg.coupling.dt = Some(0.005);
                cfg.coupling.t_end = 0.4;
                let well = |x, y, value| WellConfig { x, y, kind: WellKind::Pressure, value, ramp_time: None };
                cfg.wells = vec![well(0.0, 0.0, 1.0), well(1.0, 1.0, 1.0), well(1.0, 0.0, 0.0), well(0.0, 1.0, 0.0)];
                cfg.two_phase = Some(TwoPhaseParams::default());
                cfg.output.vtk_interval = 10;
            }
        }
        cfg
    }

    /// Rock compressibility used by the large-deformation porosity law.
    pub fn c_r(&self) -> f64 {
        match self.porosity.c_r {
            Some(c) => c,
            None if self.porosity.law == PorosityLaw::LargeDeformation => {
                1.0 / (self.porosity.phi0 * (self.materials.lambda + 2.0 * self.materials.mu))
            }
            None => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.mesh;
        if m.nx == 0 || m.ny == 0 {
            return Err(invalid(if m.nx == 0 { "mesh.nx" } else { "mesh.ny" }, "need at least one element"));
        }
        for (key, v) in [("mesh.lx", m.lx), ("mesh.ly", m.ly)] {
            positive(key, v)?;
        }
        let mat = &self.materials;
        positive("materials.mu", mat.mu)?;
        if !(mat.lambda + 2.0 * mat.mu / 3.0 >= 0.0) {
            return Err(invalid("materials.lambda", "bulk modulus lambda + 2 mu / 3 must be nonnegative"));
        }
        for (key, v) in [
            ("materials.rho_s", mat.rho_s),
            ("materials.rho_f", mat.rho_f),
            ("materials.viscosity", mat.viscosity),
            ("materials.permeability", mat.permeability),
        ] {
            positive(key, v)?;
        }
        if !(mat.beta >= 0.0 && mat.beta.is_finite()) {
            return Err(invalid("materials.beta", "Barus exponent must be finite and nonnegative"));
        }
        if !(self.porosity.phi0 > 0.0 && self.porosity.phi0 < 1.0) {
            return Err(invalid("porosity.phi0", "reference porosity must lie in (0, 1)"));
        }
        if let Some(c) = self.porosity.c_r {
            if !c.is_finite() {
                return Err(invalid("porosity.c_r", "must be finite"));
            }
        }
        if self.permeability.model == PermeabilityKind::Damage {
            if !(self.permeability.zeta >= 0.0 && self.permeability.zeta.is_finite()) {
                return Err(invalid("permeability.zeta", "damage scaling must be finite and nonnegative"));
            }
            let [a, b, c] = self.permeability.in_situ_stress;
            if a * a + 2.0 * b * b + c * c == 0.0 {
                return Err(invalid("permeability.in_situ_stress", "damage model needs a nonzero in-situ stress"));
            }
        }
        self.validate_coupling()?;
        for (i, w) in self.wells.iter().enumerate() {
            let inside = |v: f64, l: f64| (-1e-12..=l + 1e-12).contains(&v);
            if !inside(w.x, m.lx) {
                return Err(invalid(&format!("wells[{i}].x"), format!("{} lies outside [0, {}]", w.x, m.lx)));
            }
            if !inside(w.y, m.ly) {
                return Err(invalid(&format!("wells[{i}].y"), format!("{} lies outside [0, {}]", w.y, m.ly)));
            }
            if !w.value.is_finite() {
                return Err(invalid(&format!("wells[{i}].value"), "must be finite"));
            }
            if let Some(r) = w.ramp_time {
                if !(r >= 0.0) {
                    return Err(invalid(&format!("wells[{i}].ramp_time"), "must be nonnegative"));
                }
            }
        }
        let h = &self.heterogeneity;
        if !(0.0..1.0).contains(&h.amplitude) {
            return Err(invalid("heterogeneity.amplitude", "must lie in [0, 1) to keep the modulus positive"));
        }
        self.validate_scenario()
    }

    fn validate_coupling(&self) -> Result<(), ConfigError> {
        let c = &self.coupling;
        positive("coupling.tol", c.tol)?;
        if c.max_outer_iters == 0 {
            return Err(invalid("coupling.max_outer_iters", "must be at least 1"));
        }
        if c.n_subcycles == 0 {
            return Err(invalid("coupling.n_subcycles", "must be at least 1"));
        }
        if let Some(dt) = c.dt {
            positive("coupling.dt", dt)?;
            positive("coupling.t_end", c.t_end)?;
        }
        positive("coupling.linear.tol", c.linear.tol)?;
        if c.linear.max_iter == 0 {
            return Err(invalid("coupling.linear.max_iter", "must be at least 1"));
        }
        if c.linear.method == SolveMethod::Cg && c.scheme == Scheme::FullyCoupled {
            return Err(invalid("coupling.linear.method", "the fully coupled system is nonsymmetric; use direct or bicgstab"));
        }
        Ok(())
    }

    fn validate_scenario(&self) -> Result<(), ConfigError> {
        match self.scenario {
            ScenarioKind::Manufactured => {
                if self.mesh.lx != 1.0 {
                    return Err(invalid("mesh.lx", "the manufactured solution lives on x in [0, 1]"));
                }
                if self.coupling.dt.is_some() {
                    return Err(invalid("coupling.dt", "the manufactured solution is steady; remove dt"));
                }
            }
            ScenarioKind::Terzaghi => {
                if self.coupling.dt.is_none() {
                    return Err(invalid("coupling.dt", "the Terzaghi scenario is transient"));
                }
                if self.terzaghi.quad_n < 100 {
                    return Err(invalid("terzaghi.quad_n", "need at least 100 quadrature panels"));
                }
                positive("terzaghi.omega", self.terzaghi.omega)?;
            }
            ScenarioKind::Subsidence => {
                if self.wells.is_empty() {
                    return Err(invalid("wells", "the subsidence scenario needs an extraction well"));
                }
            }
            ScenarioKind::FiveSpot => {
                let Some(tp) = &self.two_phase else {
                    return Err(invalid("two_phase", "the five-spot scenario needs a [two_phase] block"));
                };
                tp.validate().map_err(|e| invalid("two_phase", e.to_string()))?;
                if self.porosity.law != PorosityLaw::Frozen {
                    return Err(invalid("porosity.law", "two-phase transport needs frozen porosity"));
                }
                if self.physics.flow_regime != FlowRegime::QuasiSteady {
                    return Err(invalid("physics.flow_regime", "two-phase transport needs quasi_steady flow"));
                }
                if self.coupling.dt.is_none() {
                    return Err(invalid("coupling.dt", "two-phase transport needs a time step"));
                }
                if !self.wells.iter().any(|w| w.kind == WellKind::Pressure) {
                    return Err(invalid("wells", "the five-spot scenario needs pressure wells"));
                }
                if !(self.five_spot.breakthrough_cut > 0.0 && self.five_spot.breakthrough_cut < 1.0) {
                    return Err(invalid("five_spot.breakthrough_cut", "must lie in (0, 1)"));
                }
            }
        }
        Ok(())
    }

    /// The configuration as a TOML document.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises to TOML")
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite, got {v}")))
    }
}

/// Parses a configuration document: the `scenario` key selects the defaults
/// and every other key overrides them.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let user: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let kind = match user.get("scenario") {
        Some(Value::String(s)) => s.parse::<ScenarioKind>()?,
        Some(_) => return Err(invalid("scenario", "must be a string")),
        None => return Err(invalid("scenario", "missing (manufactured, terzaghi, subsidence, five_spot)")),
    };
    let defaults = ScenarioConfig::defaults(kind);
    let mut merged = Value::try_from(&defaults).expect("defaults serialise").as_table().cloned().unwrap_or_default();
    merge(&mut merged, user.clone());
    let cfg: ScenarioConfig = Value::Table(merged).try_into().map_err(|e: toml::de::Error| classify(text, &user, e))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Turns a deserialisation error of the merged document into an unknown-key
/// or invalid-value error pointing back into the user's text.
fn classify(text: &str, user: &Table, e: toml::de::Error) -> ConfigError {
    let msg = e.message().to_string();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        let key = rest.split('`').next().unwrap_or_default().to_string();
        let expected: Vec<&str> = rest.split('`').skip(2).step_by(2).collect();
        let suggestion = expected
            .iter()
            .map(|c| (strsim::jaro_winkler(&key, c), *c))
            .filter(|(score, _)| *score > 0.8)
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, c)| c.to_string());
        let line = find_key_line(text, &key);
        let key = key_path(user, &key).unwrap_or(key);
        return ConfigError::UnknownKey { key, line, suggestion };
    }
    ConfigError::Invalid { key: "(document)".into(), message: msg.trim().to_string() }
}

/// Dotted path of the first occurrence of `key` in the user's document.
fn key_path(table: &Table, key: &str) -> Option<String> {
    if table.contains_key(key) {
        return Some(key.to_string());
    }
    table.iter().find_map(|(k, v)| {
        let inner = match v {
            Value::Table(t) => key_path(t, key),
            Value::Array(items) => items.iter().find_map(|i| i.as_table().and_then(|t| key_path(t, key))),
            _ => None,
        };
        inner.map(|p| format!("{k}.{p}"))
    })
}

fn find_key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
            || l.trim_start_matches('[').trim_end_matches(']').rsplit('.').next() == Some(key)
    })
    .map(|i| i + 1)
}
