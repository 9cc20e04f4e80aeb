use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use porocouple::config::{load_config, ConfigError};
use porocouple::output::write_timeseries;
use porocouple::scenarios::{run_scenario, sweep, ScenarioError};
use porocouple::suite;
use porocouple_core::coupling::Scheme;

#[derive(Parser)]
#[command(name = "porocouple", version, about = "Coupled Darcy flow and porous-solid deformation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a configuration file.
    Run {
        config: PathBuf,
        /// Override the coupling scheme.
        #[arg(long)]
        scheme: Option<Scheme>,
        /// Override the outer-iteration tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Output directory (default: `output.directory` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the oracle and property suite.
    Verify,
    /// Tolerance study over decades of the outer tolerance.
    Sweep {
        config: PathBuf,
        /// Decade range such as `1e-3..1e-9`, or a comma-separated list.
        #[arg(long, default_value = "1e-3..1e-9")]
        tols: String,
        /// Comma-separated schemes.
        #[arg(long, default_value = "lockstep,jacobi", value_delimiter = ',')]
        schemes: Vec<Scheme>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_NOT_CONVERGED: u8 = 3;

fn parse_tols(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = || ConfigError::Invalid { key: "--tols".into(), message: format!("cannot parse `{spec}`") };
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if !(a > 0.0 && b > 0.0) {
            return Err(bad());
        }
        let (hi, lo) = (a.log10().round() as i32, b.log10().round() as i32);
        let step = if lo <= hi { -1 } else { 1 };
        let mut out = Vec::new();
        let mut k = hi;
        loop {
            out.push(10f64.powi(k));
            if k == lo {
                break;
            }
            k += step;
        }
        Ok(out)
    } else {
        spec.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, ScenarioError> {
    match command {
        Command::Run { config, scheme, tol, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = scheme {
                cfg.coupling.scheme = s;
            }
            if let Some(t) = tol {
                cfg.coupling.tol = t;
            }
            cfg.validate()?;
            let out = out.unwrap_or_else(|| cfg.output.directory.clone());
            let outcome = run_scenario(&cfg, &out)?;
            for (k, v) in &outcome.summary {
                println!("{k}: {v}");
            }
            println!("outputs in {}", out.display());
            if outcome.converged {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("error: coupling iteration did not converge at every step");
                Ok(ExitCode::from(EXIT_NOT_CONVERGED))
            }
        }
        Command::Verify => {
            let results = suite::run_all();
            for r in &results {
                println!("{}", r.line());
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} of {} checks passed", results.len() - failed, results.len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(EXIT_NOT_CONVERGED) })
        }
        Command::Sweep { config, tols, schemes, out } => {
            let cfg = load_config(&config)?;
            let tols = parse_tols(&tols)?;
            let rows = sweep(&cfg, &schemes, &tols)?;
            let out = out.unwrap_or_else(|| cfg.output.directory.clone());
            std::fs::create_dir_all(&out)
                .map_err(|source| porocouple::output::OutputError { path: out.clone(), source })?;
            let path = out.join("sweep.csv");
            write_timeseries(&rows, &path)?;
            for r in &rows {
                println!("{:<14} tol {:.0e}: {} iterations, residual {:.2e}", r.scheme, r.tol, r.outer_iters, r.residual);
            }
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decade_ranges() {
        assert_eq!(parse_tols("1e-3..1e-9").unwrap().len(), 7);
        assert_eq!(parse_tols("1e-6..1e-4").unwrap(), vec![1e-6, 1e-5, 1e-4]);
        assert_eq!(parse_tols("1e-3, 1e-5").unwrap(), vec![1e-3, 1e-5]);
        assert!(parse_tols("abc").is_err());
    }
}
