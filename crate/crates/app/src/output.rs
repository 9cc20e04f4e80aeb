//! Legacy ASCII VTK snapshots, CSV tables and the plain-text run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use porocouple_core::assembly::{FieldState, Problem};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("cannot write {path}: {source}")]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError { path: path.to_path_buf(), source }
}

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

const VTK_QUAD: u8 = 9;

/// Legacy ASCII VTK unstructured grid with point data `u`, `p`, `s_n` and
/// cell data `phi`, `s_n`, `v` and the total stress magnitude `stress_norm`.
pub fn vtk_string(problem: &Problem, state: &FieldState, title: &str) -> String {
    let mesh = &problem.mesh;
    let (n, ne) = (mesh.node_count(), mesh.element_count());
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {n} double");
    for x in &mesh.nodes {
        let _ = writeln!(s, "{} {} {}", num(x[0]), num(x[1]), num(0.0));
    }
    let _ = writeln!(s, "CELLS {ne} {}", 5 * ne);
    for el in &mesh.elements {
        let _ = writeln!(s, "4 {} {} {} {}", el[0], el[1], el[2], el[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(s, "{VTK_QUAD}");
    }

    let _ = writeln!(s, "POINT_DATA {n}");
    let _ = writeln!(s, "VECTORS u double");
    for u in &state.u {
        let _ = writeln!(s, "{} {} {}", num(u[0]), num(u[1]), num(0.0));
    }
    scalars(&mut s, "p", &state.p);
    scalars(&mut s, "s_n", &state.s_n);

    let _ = writeln!(s, "CELL_DATA {ne}");
    scalars(&mut s, "phi", &state.phi);
    let s_cell = problem.element_means(&state.s_n);
    scalars(&mut s, "s_n", &s_cell);
    let stress: Vec<f64> = (0..ne).map(|e| problem.element_stress(e, &state.u, &state.p).frobenius()).collect();
    scalars(&mut s, "stress_norm", &stress);
    let _ = writeln!(s, "VECTORS v double");
    for e in 0..ne {
        let v = state.v.get(e).copied().unwrap_or([0.0; 2]);
        let _ = writeln!(s, "{} {} {}", num(v[0]), num(v[1]), num(0.0));
    }
    s
}

fn scalars(s: &mut String, name: &str, values: &[f64]) {
    let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
    for v in values {
        let _ = writeln!(s, "{}", num(*v));
    }
}

pub fn write_vtk(problem: &Problem, state: &FieldState, title: &str, path: &Path) -> Result<(), OutputError> {
    fs::write(path, vtk_string(problem, state, title)).map_err(io_error(path))
}

/// One row of the run time series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeseriesRow {
    pub time: f64,
    pub scheme: String,
    pub tol: f64,
    pub outer_iters: usize,
    pub flow_solves: usize,
    pub solid_solves: usize,
    pub residual: f64,
    pub error_u: Option<f64>,
    pub error_p: Option<f64>,
}

pub const TIMESERIES_HEADER: [&str; 9] =
    ["time", "scheme", "tol", "outer_iters", "flow_solves", "solid_solves", "residual", "error_u", "error_p"];

pub fn write_timeseries(rows: &[TimeseriesRow], path: &Path) -> Result<(), OutputError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let finish = |w: csv::Writer<Vec<u8>>| -> Result<(), OutputError> {
        let bytes = w.into_inner().map_err(|e| OutputError { path: path.to_path_buf(), source: e.into_error() })?;
        fs::write(path, bytes).map_err(io_error(path))
    };
    w.write_record(TIMESERIES_HEADER).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    finish(w)
}

/// Numeric table with a header row.
pub fn write_table(header: &[&str], rows: &[Vec<f64>], path: &Path) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| OutputError { path: path.to_path_buf(), source: e.into_error() })?;
    fs::write(path, bytes).map_err(io_error(path))
}

fn csv_error(path: &Path, e: csv::Error) -> OutputError {
    OutputError { path: path.to_path_buf(), source: std::io::Error::other(e.to_string()) }
}

/// Plain-text run manifest: versions, seed, status, outputs and the full
/// configuration.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub status: String,
    pub seed: u64,
    pub summary: Vec<(String, String)>,
    pub files: Vec<String>,
    pub error: Option<String>,
    pub config: String,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "porocouple {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "status: {}", self.status);
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error: {e}");
        }
        let _ = writeln!(s, "seed: {}", self.seed);
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k}: {v}");
        }
        let _ = writeln!(s, "files:");
        for f in &self.files {
            let _ = writeln!(s, "  {f}");
        }
        let _ = writeln!(s, "\n[config]\n{}", self.config);
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), OutputError> {
        fs::write(path, self.render()).map_err(io_error(path))
    }
}

#[cfg(test)]
mod tests {
    use porocouple_core::assembly::{BoundaryConditions, Materials, Sources};
    use porocouple_core::constitutive::{FluidParams, PorosityLaw, PorosityModel, SolidParams};
    use porocouple_core::mesh::build_structured_grid;

    use super::*;

    fn unit_problem() -> Problem {
        let mesh = build_structured_grid(1, 1, 1.0, 1.0).unwrap();
        let materials = Materials::new(
            SolidParams { lambda: 1.0, mu: 1.0, rho: 1.0 },
            FluidParams { mu0: 1.0, beta: 0.0, rho: 1.0, permeability: 1.0 },
            PorosityModel::new(PorosityLaw::Frozen, 0.2),
        );
        Problem::new(mesh, materials, BoundaryConditions::new(), Sources::default()).unwrap()
    }

    #[test]
    fn single_element_zero_state() {
        let problem = unit_problem();
        let mut state = FieldState::new(&problem.mesh, 0.2);
        state.phi = vec![0.0];
        state.s_n = vec![0.0; 4];
        let text = vtk_string(&problem, &state, "zero");
        assert!(text.contains("POINTS 4 double"));
        assert!(text.contains("CELLS 1 5"));
        let p_block: Vec<&str> = text.split("SCALARS p double 1\nLOOKUP_TABLE default\n").nth(1).unwrap().lines().take(4).collect();
        assert!(p_block.iter().all(|l| *l == "0.00000000e0"));
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(num(std::f64::consts::PI), "3.14159265e0");
        assert_eq!(num(-1.0e-7), "-1.00000000e-7");
    }
}
