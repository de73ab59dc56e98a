use std::fs;

use phasefield::config::{load_config, parse_config, RunConfig};
use phasefield::run::{execute, write_error, Command};
use phasefield::snapshot;
use phasefield::{Error, Exec, SpectralBasis};

const FAST: &str = r#"
output_dir = "ignored"

[basis]
n_modes = [8]

[params]
t_final = 0.2

[solver]
dt = 0.01

[sweep_beta]
ladder = [0.1, 0.05, 0.025]

[sweep_eps]
ladder = [0.1, 0.05, 0.025]

[mms]
refinement = { kind = "dt", ladder = [0.02, 0.01, 0.005] }

[check]
samples = 200
"#;

fn fast() -> RunConfig {
    parse_config(FAST).unwrap()
}

#[test]
fn config_file_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    let cfg = fast();
    fs::write(&path, cfg.to_toml()).unwrap();
    assert_eq!(load_config(&path).unwrap(), cfg);
    assert_eq!(load_config(&dir.path().join("missing.toml")).unwrap_err().code(), "E_IO");
}

#[test]
fn nested_field_tables_parse() {
    let cfg = parse_config(
        r#"
[domain]
lengths = [2.0, 1.0]

[basis]
n_modes = [4, 3]

[graph]
kind = "power"
exponent = 3

[initial.u0]
kind = "sum"
terms = [
  { kind = "constant", value = 0.2 },
  { kind = "cosine", amplitude = 0.5, wavenumbers = [1, 1] },
]

[forcing.f]
kind = "separable"
space = { kind = "mode", amplitude = 1.0, wavenumbers = [0, 1] }
time = { kind = "exp", amplitude = 1.0, rate = -2.0 }
"#,
    )
    .unwrap();
    let pd = cfg.problem().unwrap();
    assert_eq!(pd.domain.dim(), 2);
    assert_eq!(pd.graph.name(), "power");
}

#[test]
fn mismatched_mode_counts_are_reported_with_lines() {
    let src = "[domain]\nlengths = [1.0, 1.0]\n\n[basis]\nn_modes = [8]\n";
    let Err(Error::Config(e)) = parse_config(src) else {
        panic!("expected a config error")
    };
    assert_eq!(e.0[0].code, "E_INVALID_VALUE");
    assert_eq!(e.0[0].line, Some(5));
}

#[test]
fn snapshot_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fast();
    let summary = execute(Command::Solve, &cfg, dir.path(), Exec::default()).unwrap();
    assert!(summary.passed);
    let (header, traj) = snapshot::load(&dir.path().join("snapshot.bin")).unwrap();
    assert_eq!(header.n_states, 21);
    assert_eq!(header.n_coeffs, 8);
    assert_eq!(traj.meta.graph, "double_obstacle");
    let basis = SpectralBasis::interval(1.0, 8).unwrap();
    assert_eq!(header.modes, basis.modes());
}

#[test]
fn every_command_writes_its_artifacts() {
    let cfg = fast();
    let expected: [(Command, &[&str]); 5] = [
        (Command::Solve, &["snapshot.bin", "monitor.csv", "monitor.json"]),
        (Command::SweepBeta, &["sweep_beta.json", "sweep_beta_levels.csv"]),
        (Command::SweepEps, &["sweep_eps.json", "sweep_eps_levels.csv"]),
        (Command::Mms, &["mms.json", "mms_levels.csv"]),
        (Command::Check, &["check.json"]),
    ];
    for (command, files) in expected {
        let dir = tempfile::tempdir().unwrap();
        let summary = execute(command, &cfg, dir.path(), Exec::Sequential).unwrap();
        for f in files.iter().chain(&["summary.json"]) {
            assert!(dir.path().join(f).is_file(), "{command}: missing {f}");
        }
        let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(doc["command"], command.name());
        assert_eq!(doc["passed"], summary.passed);
    }
}

#[test]
fn csv_values_carry_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    execute(Command::SweepBeta, &fast(), dir.path(), Exec::default()).unwrap();
    let csv = fs::read_to_string(dir.path().join("sweep_beta_levels.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[..2], ["beta", "status"]);
    assert!(header.contains(&"stimaerr1"));
    assert!(header.contains(&"monitor.u_sup_l2"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), header.len());
    assert_eq!(row[1], "ok");
    let mantissa = row[2].split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{}", row[2]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sweep_beta.json")).unwrap()).unwrap();
    assert_eq!(json["parameter"], "beta");
    assert_eq!(json["levels"].as_array().unwrap().len(), 3);
}

#[test]
fn sequential_and_parallel_artifacts_agree() {
    let cfg = fast();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    execute(Command::SweepEps, &cfg, a.path(), Exec::Sequential).unwrap();
    execute(Command::SweepEps, &cfg, b.path(), Exec::default()).unwrap();
    for f in ["sweep_eps.json", "sweep_eps_levels.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn failing_gate_is_reported_in_the_summary() {
    let mut cfg = fast();
    cfg.sweep_beta.gate.slope_min = 3.0;
    cfg.sweep_beta.gate.slope_max = 4.0;
    let dir = tempfile::tempdir().unwrap();
    let summary = execute(Command::SweepBeta, &cfg, dir.path(), Exec::default()).unwrap();
    assert!(!summary.passed);
    assert!(summary.gates.iter().any(|g| g.name == "rate_stimaerr1" && !g.passed));
}

#[test]
fn error_report_carries_the_code() {
    let dir = tempfile::tempdir().unwrap();
    let err = parse_config("[graph]\nkind = \"cubic\"\n").unwrap_err();
    let path = write_error(dir.path(), Command::Solve, &err).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(doc["code"], "E_UNKNOWN_GRAPH");
    assert_eq!(doc["details"][0]["line"], 2);
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.problem().unwrap();
            n += 1;
        }
    }
    assert!(n >= 4);
    assert_eq!(load_config(&dir.join("default.toml")).unwrap(), RunConfig::default());
}
