use std::fs;
use std::path::{Path, PathBuf};

use porocouple::config::{load_config, parse_config, ConfigError, PermeabilityKind, ScenarioConfig, ScenarioKind};
use porocouple::scenarios::build_problem;
use porocouple_core::constitutive::{PermeabilityModel, PorosityLaw};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn shipped_configs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    files
}

#[test]
fn minimal_manufactured_gets_the_table_constants() {
    let cfg = parse_config("scenario = \"manufactured\"\n").unwrap();
    assert_eq!(cfg, ScenarioConfig::defaults(ScenarioKind::Manufactured));
    assert_eq!((cfg.mesh.nx, cfg.mesh.ny), (200, 1));
    assert_eq!((cfg.materials.lambda, cfg.materials.mu), (1.0, 0.5));
    assert_eq!(cfg.porosity.law, PorosityLaw::Rational);
    assert_eq!(cfg.porosity.phi0, 0.1);
    assert_eq!(cfg.coupling.tol, 1e-9);
    assert_eq!(cfg.coupling.dt, None);
}

#[test]
fn user_values_override_only_their_keys() {
    let cfg = parse_config("scenario = \"terzaghi\"\n[mesh]\nny = 50\n[coupling]\nscheme = \"jacobi\"\n").unwrap();
    let base = ScenarioConfig::defaults(ScenarioKind::Terzaghi);
    assert_eq!(cfg.mesh.ny, 50);
    assert_eq!(cfg.mesh.lx, base.mesh.lx);
    assert_eq!(cfg.coupling.dt, base.coupling.dt);
    assert_eq!(cfg.materials, base.materials);
}

#[test]
fn misspelled_key_is_rejected_with_a_suggestion() {
    let err = load_config(&fixture("misspelled_key.toml")).unwrap_err();
    match &err {
        ConfigError::UnknownKey { key, line, suggestion } => {
            assert_eq!(key, "materials.viscocity");
            assert_eq!(*line, Some(4));
            assert_eq!(suggestion.as_deref(), Some("viscosity"));
        }
        other => panic!("expected UnknownKey, got {other:?}"),
    }
    assert!(err.to_string().contains("did you mean `viscosity`"));
}

#[test]
fn broken_fixtures_fail_with_their_error_class() {
    let parse = load_config(&fixture("bad_syntax.toml")).unwrap_err();
    assert!(matches!(parse, ConfigError::Parse { line: 3, .. }), "{parse:?}");

    let dt = load_config(&fixture("negative_dt.toml")).unwrap_err();
    assert!(matches!(&dt, ConfigError::Invalid { key, .. } if key == "coupling.dt"), "{dt:?}");

    let scenario = load_config(&fixture("unknown_scenario.toml")).unwrap_err();
    assert!(matches!(&scenario, ConfigError::Invalid { key, .. } if key == "scenario"), "{scenario:?}");

    let typed = load_config(&fixture("wrong_type.toml")).unwrap_err();
    assert!(matches!(typed, ConfigError::Parse { .. } | ConfigError::Invalid { .. }), "{typed:?}");

    let missing = load_config(&fixture("does_not_exist.toml")).unwrap_err();
    assert!(matches!(missing, ConfigError::Io { .. }));
}

#[test]
fn damage_scaling_reaches_the_permeability_model() {
    let cfg = parse_config("scenario = \"five_spot\"\n[permeability]\nzeta = 2.5\n").unwrap();
    assert_eq!(cfg.permeability.model, PermeabilityKind::Damage);
    let problem = build_problem(&cfg).unwrap();
    match problem.materials.permeability {
        PermeabilityModel::Damage { zeta, .. } => assert_eq!(zeta, 2.5),
        other => panic!("expected the damage model, got {other:?}"),
    }
}

#[test]
fn shipped_configs_parse_and_build() {
    let files = shipped_configs();
    assert_eq!(files.len(), 4);
    for path in files {
        let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        build_problem(&cfg).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn echoed_config_parses_back_to_itself() {
    for kind in [ScenarioKind::Manufactured, ScenarioKind::Terzaghi, ScenarioKind::Subsidence, ScenarioKind::FiveSpot] {
        let cfg = ScenarioConfig::defaults(kind);
        assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg);
    }
}

#[test]
fn linear_solver_names() {
    use porocouple_core::linalg::SolveMethod;
    for (name, method) in [("direct", SolveMethod::Direct), ("cg", SolveMethod::Cg), ("bicgstab", SolveMethod::BiCgStab)] {
        let cfg = parse_config(&format!("scenario = \"manufactured\"\n[coupling.linear]\nmethod = \"{name}\"\n")).unwrap();
        assert_eq!(cfg.coupling.linear.method, method);
    }
}
