//! Subcommand execution and on-disk artifacts.
//!
//! | command      | artifacts                                    |
//! |--------------|----------------------------------------------|
//! | `solve`      | `snapshot.bin`, `monitor.csv`, `monitor.json` |
//! | `sweep-beta` | `sweep_beta.json`, `sweep_beta_levels.csv`    |
//! | `sweep-eps`  | `sweep_eps.json`, `sweep_eps_levels.csv`      |
//! | `mms`        | `mms.json`, `mms_levels.csv`                  |
//! | `check`      | `check.json`                                  |
//!
//! Every command also writes `summary.json` with its gate outcomes. A failed
//! command writes `error.json` instead.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::asymptotics::{beta_sweep_with, eps_sweep_with, mms_verify_with, RateReport};
use crate::basis::SpectralBasis;
use crate::checks::run_checks;
use crate::config::RunConfig;
use crate::diagnostics::monitor;
use crate::error::{Error, Result};
use crate::graph::MonotoneGraph;
use crate::par::Exec;
use crate::snapshot;
use crate::solver::solve_with_basis;

/// Environment variable that overrides `output_dir` (but not `--out`).
pub const OUT_DIR_ENV: &str = "PHASEFIELD_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    SweepBeta,
    SweepEps,
    Mms,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::SweepBeta => "sweep-beta",
            Command::SweepEps => "sweep-eps",
            Command::Mms => "mms",
            Command::Check => "check",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Command::Solve, Command::SweepBeta, Command::SweepEps, Command::Mms, Command::Check]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown command '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub command: Command,
    pub passed: bool,
    pub gates: Vec<Gate>,
    pub artifacts: Vec<PathBuf>,
}

/// `--out` if given, else the environment override, else `output_dir`.
pub fn resolve_out_dir(cli: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => cfg.output_dir.clone(),
    }
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn report(&mut self, stem: &str, report: &RateReport) -> Result<()> {
        self.text(&format!("{stem}.json"), &report.to_json())?;
        self.text(&format!("{stem}_levels.csv"), &report.to_csv())
    }
}

fn levels_gate(report: &RateReport) -> Gate {
    let failed: Vec<String> = report
        .levels
        .iter()
        .chain(report.reference.iter())
        .filter(|l| !l.is_ok())
        .map(|l| format!("{}", l.value))
        .collect();
    Gate::new("all_levels_completed", failed.is_empty(), format!("failed levels: [{}]", failed.join(", ")))
}

fn beta_gates(cfg: &RunConfig, report: &RateReport) -> Vec<Gate> {
    let mut gates = vec![levels_gate(report)];
    let g = &cfg.sweep_beta.gate;
    if g.enabled {
        let (passed, detail) = match report.fit(&g.channel) {
            Some(f) => (
                f.slope >= g.slope_min && f.slope <= g.slope_max && f.residual < g.max_residual,
                format!(
                    "slope {:.4} in [{}, {}], residual {:.3e} < {}",
                    f.slope, g.slope_min, g.slope_max, f.residual, g.max_residual
                ),
            ),
            None => (false, format!("no fit for channel {}", g.channel)),
        };
        gates.push(Gate::new(&format!("rate_{}", g.channel), passed, detail));
    }
    gates
}

fn eps_gates(cfg: &RunConfig, report: &RateReport, graph: &MonotoneGraph) -> Vec<Gate> {
    let mut gates = vec![levels_gate(report)];
    let ok: Vec<_> = report.levels.iter().filter(|l| l.is_ok()).collect();
    let s = &cfg.sweep_eps;
    for ch in &s.channels {
        let values: Vec<f64> = ok.iter().map(|l| l.monitors.get(ch).copied().unwrap_or(f64::NAN)).collect();
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let ratio = if hi == 0.0 { 1.0 } else { hi / lo };
        gates.push(Gate::new(
            &format!("uniform_{ch}"),
            values.iter().all(|v| v.is_finite()) && ratio <= s.max_ratio,
            format!("max/min = {ratio:.4} <= {}", s.max_ratio),
        ));
    }
    if s.overshoot_decreasing && matches!(graph, MonotoneGraph::DoubleObstacle { .. }) {
        let o: Vec<f64> = ok.iter().map(|l| l.monitors.get("overshoot_sup_q").copied().unwrap_or(f64::NAN)).collect();
        let decreasing = o.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0));
        gates.push(Gate::new("overshoot_decreasing", decreasing, format!("{o:?}")));
    }
    gates
}

fn mms_gates(cfg: &RunConfig, report: &RateReport) -> Vec<Gate> {
    let mut gates = vec![levels_gate(report)];
    let m = &cfg.mms;
    let (passed, detail) = match report.fit(&m.channel) {
        Some(f) => (f.slope >= m.min_order, format!("order {:.4} >= {}", f.slope, m.min_order)),
        None => (false, format!("no fit for channel {}", m.channel)),
    };
    gates.push(Gate::new(&format!("order_{}", m.channel), passed, detail));
    gates
}

/// Runs `command`, writes its artifacts into `out_dir` (created if needed)
/// and returns the summary. Errors are returned, not written; see
/// [`write_error`].
pub fn execute(command: Command, cfg: &RunConfig, out_dir: &Path, exec: Exec) -> Result<Summary> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut w = Writer {
        dir: out_dir,
        written: Vec::new(),
    };
    let gates = match command {
        Command::Solve => {
            let pd = cfg.problem()?;
            let solver = cfg.solver_config();
            let basis = SpectralBasis::new(pd.domain.clone(), solver.n_modes.clone())?;
            let traj = solve_with_basis(&pd, &solver, &basis)?;
            let path = out_dir.join("snapshot.bin");
            snapshot::save(&path, &traj, &basis)?;
            w.written.push(path);
            let m = monitor(&traj, &pd, &basis)?;
            w.text("monitor.csv", &m.to_csv())?;
            w.text("monitor.json", &serde_json::to_string_pretty(&m).expect("monitor serializes"))?;
            vec![Gate::new(
                "finite_monitors",
                m.non_finite.is_empty(),
                format!("non-finite: {:?}", m.non_finite),
            )]
        }
        Command::SweepBeta => {
            let report = beta_sweep_with(&cfg.beta_plan()?, exec)?;
            w.report("sweep_beta", &report)?;
            beta_gates(cfg, &report)
        }
        Command::SweepEps => {
            let plan = cfg.eps_plan()?;
            let report = eps_sweep_with(&plan, exec)?;
            w.report("sweep_eps", &report)?;
            eps_gates(cfg, &report, &plan.base.graph)
        }
        Command::Mms => {
            let (pd, solver) = cfg.mms_setup()?;
            let report = mms_verify_with(&cfg.mms.manufactured, &pd, &solver, &cfg.mms.refinement, exec)?;
            w.report("mms", &report)?;
            mms_gates(cfg, &report)
        }
        Command::Check => {
            let report = run_checks(cfg, exec)?;
            w.text("check.json", &report.to_json())?;
            report
                .outcomes
                .iter()
                .map(|o| Gate::new(&o.name, o.passed, format!("{:e} <= {:e}", o.value, o.threshold)))
                .collect()
        }
    };
    let mut summary = Summary {
        command,
        passed: gates.iter().all(|g| g.passed),
        gates,
        artifacts: Vec::new(),
    };
    let summary_path = out_dir.join("summary.json");
    summary.artifacts = w.written.clone();
    summary.artifacts.push(summary_path);
    w.text("summary.json", &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(summary)
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    command: Command,
    code: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    details: Option<&'a crate::config::ConfigErrors>,
}

/// Writes `error.json` describing `err` into `out_dir`, best effort.
pub fn write_error(out_dir: &Path, command: Command, err: &Error) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let doc = ErrorDoc {
        command,
        code: err.code(),
        message: err.to_string(),
        details: match err {
            Error::Config(e) => Some(e),
            _ => None,
        },
    };
    let path = out_dir.join("error.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc).expect("error serializes"))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        for c in [Command::Solve, Command::SweepBeta, Command::SweepEps, Command::Mms, Command::Check] {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("sweep".parse::<Command>().is_err());
    }

    #[test]
    fn cli_flag_wins_over_config() {
        let cfg = RunConfig::default();
        assert_eq!(resolve_out_dir(Some(Path::new("x")), &cfg), PathBuf::from("x"));
    }
}
