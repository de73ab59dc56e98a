//! TOML run configuration.
//!
//! Every key has a default, so an empty file is a valid configuration. Unknown
//! keys are rejected. Problems are reported as [`ConfigErrors`], a list of
//! entries carrying a stable code and, where it can be found, the 1-based
//! line of the offending key:
//!
//! | code               | meaning                                   |
//! |--------------------|-------------------------------------------|
//! | `E_SYNTAX`         | the file is not valid TOML                |
//! | `E_UNKNOWN_KEY`    | a key that no section accepts             |
//! | `E_MISSING_KEY`    | a key required by the chosen `kind`       |
//! | `E_UNKNOWN_GRAPH`  | `graph.kind` outside the catalog          |
//! | `E_NEGATIVE_BETA`  | `params.beta < 0`                         |
//! | `E_INVALID_VALUE`  | any other type or range violation         |

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::{Manufactured, PerturbationRule, Refinement, SweepParameter, SweepPlan};
use crate::basis::BoxDomain;
use crate::error::{Error, Result};
use crate::graph::{MonotoneGraph, SmoothGraph};
use crate::problem::{
    Field, Forcing, ForcingTerm, InitialData, ProblemData, ProblemParams, SmoothNonlinearity, TimeProfile,
};
use crate::solver::{Scheme, SolverConfig};

/// Graph kinds accepted in `[graph]` and `[mms.graph]`.
pub const GRAPH_CATALOG: &[&str] = &["double_obstacle", "power", "linear", "sinh", "zero"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigError {
    pub code: &'static str,
    pub message: String,
    pub line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl ConfigErrors {
    fn single(code: &'static str, message: impl Into<String>, line: Option<usize>) -> Self {
        ConfigErrors(vec![ConfigError {
            code,
            message: message.into(),
            line,
        }])
    }

    pub fn codes(&self) -> Vec<&'static str> {
        self.0.iter().map(|e| e.code).collect()
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match e.line {
                Some(l) => write!(f, "{} (line {l}): {}", e.code, e.message)?,
                None => write!(f, "{}: {}", e.code, e.message)?,
            }
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    DoubleObstacle {
        #[serde(default = "minus_one")]
        lower: f64,
        #[serde(default = "plus_one")]
        upper: f64,
    },
    Power {
        exponent: u32,
    },
    Linear {
        slope: f64,
    },
    Sinh,
    Zero,
}

fn minus_one() -> f64 {
    -1.0
}

fn plus_one() -> f64 {
    1.0
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec::DoubleObstacle {
            lower: -1.0,
            upper: 1.0,
        }
    }
}

impl GraphSpec {
    pub fn build(&self) -> Result<MonotoneGraph> {
        match *self {
            GraphSpec::DoubleObstacle { lower, upper } => MonotoneGraph::double_obstacle(lower, upper),
            GraphSpec::Power { exponent } => MonotoneGraph::power(exponent),
            GraphSpec::Linear { slope } => MonotoneGraph::linear(slope),
            GraphSpec::Sinh => Ok(MonotoneGraph::Smooth(SmoothGraph::sinh())),
            GraphSpec::Zero => Ok(MonotoneGraph::Zero),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Zero,
    Linear {
        slope: f64,
    },
    #[default]
    QuadraticWell,
}

impl NonlinearitySpec {
    pub fn build(&self) -> SmoothNonlinearity {
        match *self {
            NonlinearitySpec::Zero => SmoothNonlinearity::zero(),
            NonlinearitySpec::Linear { slope } => SmoothNonlinearity::linear(slope),
            NonlinearitySpec::QuadraticWell => SmoothNonlinearity::quadratic_well(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainSection {
    pub lengths: Vec<f64>,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self { lengths: vec![1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSection {
    pub n_modes: Vec<usize>,
}

impl Default for BasisSection {
    fn default() -> Self {
        Self { n_modes: vec![16] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub scheme: Scheme,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub phase_only: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            dt: s.dt,
            scheme: s.scheme,
            newton_tol: s.newton_tol,
            newton_max_iter: s.newton_max_iter,
            phase_only: s.phase_only,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingSection {
    pub f: Forcing,
}

impl Default for ForcingSection {
    fn default() -> Self {
        Self {
            f: Forcing::Separable {
                space: Field::Cosine {
                    amplitude: 1.0,
                    wavenumbers: vec![1],
                },
                time: TimeProfile::Constant { value: 1.0 },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub w0: Field,
    pub v0: Field,
    pub u0: Field,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            w0: Field::Cosine {
                amplitude: 0.5,
                wavenumbers: vec![1],
            },
            v0: Field::zero(),
            u0: Field::TanhFront {
                offset: 0.0,
                amplitude: 0.9,
                center: 0.5,
                width: 0.15,
            },
        }
    }
}

/// Pass/fail rule on the fitted slope of one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateGate {
    pub enabled: bool,
    pub channel: String,
    pub slope_min: f64,
    pub slope_max: f64,
    pub max_residual: f64,
}

impl Default for RateGate {
    fn default() -> Self {
        Self {
            enabled: true,
            channel: "stimaerr1".into(),
            slope_min: 0.9,
            slope_max: 1.1,
            max_residual: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaSweepSection {
    pub ladder: Vec<f64>,
    pub perturbation: PerturbationRule,
    pub gate: RateGate,
}

impl Default for BetaSweepSection {
    fn default() -> Self {
        Self {
            ladder: vec![0.1, 0.025, 0.00625, 0.0015625],
            perturbation: PerturbationRule::default(),
            gate: RateGate::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsSweepSection {
    pub ladder: Vec<f64>,
    /// Monitor channels whose max/min over the ladder must stay below `max_ratio`.
    pub channels: Vec<String>,
    pub max_ratio: f64,
    /// Require `overshoot_sup_q` to decrease along the ladder (obstacle graphs).
    pub overshoot_decreasing: bool,
}

impl Default for EpsSweepSection {
    fn default() -> Self {
        Self {
            ladder: vec![1e-1, 1e-2, 1e-3, 1e-4],
            channels: vec!["sixth_estimate".into(), "xi_sup_q".into()],
            max_ratio: 10.0,
            overshoot_decreasing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsSection {
    /// Replaces `[graph]`; manufactured solutions need a single-valued graph.
    pub graph: GraphSpec,
    pub nonlinearity: NonlinearitySpec,
    pub scheme: Scheme,
    pub manufactured: Manufactured,
    pub refinement: Refinement,
    pub channel: String,
    pub min_order: f64,
}

impl Default for MmsSection {
    fn default() -> Self {
        Self {
            graph: GraphSpec::Power { exponent: 3 },
            nonlinearity: NonlinearitySpec::Linear { slope: 1.0 },
            scheme: Scheme::ImexCn,
            manufactured: Manufactured::default(),
            refinement: Refinement::Dt(vec![1.0 / 40.0, 1.0 / 80.0, 1.0 / 160.0, 1.0 / 320.0, 1.0 / 640.0]),
            channel: "total_error".into(),
            min_order: 1.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub domain: DomainSection,
    pub basis: BasisSection,
    pub graph: GraphSpec,
    pub nonlinearity: NonlinearitySpec,
    pub params: ProblemParams,
    pub solver: SolverSection,
    pub forcing: ForcingSection,
    pub initial: InitialSection,
    pub sweep_beta: BetaSweepSection,
    pub sweep_eps: EpsSweepSection,
    pub mms: MmsSection,
    pub check: CheckSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            domain: DomainSection::default(),
            basis: BasisSection::default(),
            graph: GraphSpec::default(),
            nonlinearity: NonlinearitySpec::default(),
            params: ProblemParams::default(),
            solver: SolverSection::default(),
            forcing: ForcingSection::default(),
            initial: InitialSection::default(),
            sweep_beta: BetaSweepSection::default(),
            sweep_eps: EpsSweepSection::default(),
            mms: MmsSection::default(),
            check: CheckSection::default(),
        }
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn domain(&self) -> Result<BoxDomain> {
        BoxDomain::new(self.domain.lengths.clone())
    }

    pub fn problem(&self) -> Result<ProblemData> {
        Ok(ProblemData {
            params: self.params,
            graph: self.graph.build()?,
            nl: self.nonlinearity.build(),
            forcing: ForcingTerm {
                f: self.forcing.f.clone(),
                phase_source: Forcing::Zero,
            },
            init: InitialData {
                w0: self.initial.w0.clone(),
                v0: self.initial.v0.clone(),
                u0: self.initial.u0.clone(),
            },
            domain: self.domain()?,
        })
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            n_modes: self.basis.n_modes.clone(),
            dt: s.dt,
            scheme: s.scheme,
            newton_tol: s.newton_tol,
            newton_max_iter: s.newton_max_iter,
            phase_only: s.phase_only,
        }
    }

    pub fn beta_plan(&self) -> Result<SweepPlan> {
        Ok(SweepPlan {
            parameter: SweepParameter::Beta,
            ladder: self.sweep_beta.ladder.clone(),
            base: self.problem()?,
            solver: self.solver_config(),
            perturbation: self.sweep_beta.perturbation.clone(),
        })
    }

    pub fn eps_plan(&self) -> Result<SweepPlan> {
        Ok(SweepPlan {
            parameter: SweepParameter::Eps,
            ladder: self.sweep_eps.ladder.clone(),
            base: self.problem()?,
            solver: self.solver_config(),
            perturbation: PerturbationRule::default(),
        })
    }

    /// Problem template and solver settings of the manufactured-solution run.
    pub fn mms_setup(&self) -> Result<(ProblemData, SolverConfig)> {
        let mut pd = self.problem()?;
        pd.graph = self.mms.graph.build()?;
        pd.nl = self.mms.nonlinearity.build();
        let cfg = SolverConfig {
            scheme: self.mms.scheme,
            ..self.solver_config()
        };
        Ok((pd, cfg))
    }

    fn semantic_errors(&self, src: &str) -> Vec<ConfigError> {
        let mut out = Vec::new();
        let mut push = |code, message: String, section: &str, key: &str| {
            out.push(ConfigError {
                code,
                message,
                line: locate_key(src, section, key),
            });
        };
        let lengths = &self.domain.lengths;
        if lengths.is_empty() || lengths.len() > 2 {
            push("E_INVALID_VALUE", format!("domain.lengths must have 1 or 2 entries, got {}", lengths.len()), "domain", "lengths");
        } else if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            push("E_INVALID_VALUE", "domain.lengths must be positive".into(), "domain", "lengths");
        }
        let n = &self.basis.n_modes;
        if n.len() != lengths.len() {
            push(
                "E_INVALID_VALUE",
                format!("basis.n_modes has {} entries but the domain has {} axes", n.len(), lengths.len()),
                "basis",
                "n_modes",
            );
        } else if n.contains(&0) {
            push("E_INVALID_VALUE", "basis.n_modes must be >= 1".into(), "basis", "n_modes");
        }
        let p = &self.params;
        if p.beta < 0.0 {
            push("E_NEGATIVE_BETA", format!("beta must be >= 0, got {}", p.beta), "params", "beta");
        }
        if !(p.alpha > 0.0 && p.alpha.is_finite()) {
            push("E_INVALID_VALUE", format!("alpha must be > 0, got {}", p.alpha), "params", "alpha");
        }
        if !(p.eps > 0.0 && p.eps <= 1.0) {
            push("E_INVALID_VALUE", format!("eps must lie in (0, 1], got {}", p.eps), "params", "eps");
        }
        if !(p.t_final > 0.0 && p.t_final.is_finite()) {
            push("E_INVALID_VALUE", format!("t_final must be > 0, got {}", p.t_final), "params", "t_final");
        }
        let s = &self.solver;
        if !(s.dt > 0.0 && s.dt <= p.t_final) {
            push("E_INVALID_VALUE", format!("dt must lie in (0, t_final], got {}", s.dt), "solver", "dt");
        }
        if !(s.newton_tol > 0.0) {
            push("E_INVALID_VALUE", "newton_tol must be > 0".into(), "solver", "newton_tol");
        }
        if s.newton_max_iter == 0 {
            push("E_INVALID_VALUE", "newton_max_iter must be >= 1".into(), "solver", "newton_max_iter");
        }
        if let Err(e) = self.graph.build() {
            push("E_INVALID_VALUE", e.to_string(), "graph", "kind");
        }
        match self.mms.graph.build() {
            Err(e) => push("E_INVALID_VALUE", e.to_string(), "mms.graph", "kind"),
            Ok(g) if !g.is_smooth() => push(
                "E_INVALID_VALUE",
                "mms.graph must be single-valued".into(),
                "mms.graph",
                "kind",
            ),
            Ok(_) => {}
        }
        let mut ladder = |values: &[f64], section: &str, increasing: bool| {
            let ordered = values.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
            if values.len() < 3 || !ordered || values.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                push(
                    "E_INVALID_VALUE",
                    format!(
                        "{section}.ladder needs at least 3 positive, strictly {} values",
                        if increasing { "increasing" } else { "decreasing" }
                    ),
                    section,
                    "ladder",
                );
            }
        };
        ladder(&self.sweep_beta.ladder, "sweep_beta", false);
        ladder(&self.sweep_eps.ladder, "sweep_eps", false);
        match &self.mms.refinement {
            Refinement::Dt(l) => ladder(l, "mms.refinement", false),
            Refinement::NModes(l) => ladder(&l.iter().map(|&k| k as f64).collect::<Vec<_>>(), "mms.refinement", true),
        }
        if self.sweep_eps.ladder.iter().any(|&e| e > 1.0) {
            push("E_INVALID_VALUE", "sweep_eps.ladder values must be <= 1".into(), "sweep_eps", "ladder");
        }
        let gate = &self.sweep_beta.gate;
        if !(gate.slope_min <= gate.slope_max) {
            push("E_INVALID_VALUE", "slope_min must be <= slope_max".into(), "sweep_beta.gate", "slope_min");
        }
        if self.check.samples == 0 {
            push("E_INVALID_VALUE", "check.samples must be >= 1".into(), "check", "samples");
        }
        out
    }
}

/// 1-based line of `key = ...` inside `[section]`, if present.
fn locate_key(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix('[') {
            current = h.trim_start_matches('[').split(']').next().unwrap_or("").trim().to_string();
            continue;
        }
        if current == section {
            if let Some(rest) = t.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn classify(message: &str) -> &'static str {
    if message.contains("unknown field") {
        "E_UNKNOWN_KEY"
    } else if message.contains("missing field") {
        "E_MISSING_KEY"
    } else {
        "E_INVALID_VALUE"
    }
}

fn check_graph_kind(table: &toml::Table, src: &str, path: &[&str]) -> Option<ConfigError> {
    let mut t = table;
    for p in path {
        t = t.get(*p)?.as_table()?;
    }
    let kind = t.get("kind")?;
    let section = path.join(".");
    let name = match kind.as_str() {
        Some(s) => s,
        None => {
            return Some(ConfigError {
                code: "E_INVALID_VALUE",
                message: format!("{section}.kind must be a string"),
                line: locate_key(src, &section, "kind"),
            })
        }
    };
    if GRAPH_CATALOG.contains(&name) {
        return None;
    }
    Some(ConfigError {
        code: "E_UNKNOWN_GRAPH",
        message: format!("unknown graph '{name}', expected one of {}", GRAPH_CATALOG.join(", ")),
        line: locate_key(src, &section, "kind"),
    })
}

pub fn parse_config(src: &str) -> Result<RunConfig> {
    let table: toml::Table = toml::from_str(src).map_err(|e| {
        ConfigErrors::single("E_SYNTAX", e.message().to_string(), e.span().map(|s| line_of(src, s.start)))
    })?;
    let unknown: Vec<ConfigError> = [&["graph"][..], &["mms", "graph"][..]]
        .iter()
        .filter_map(|p| check_graph_kind(&table, src, p))
        .collect();
    if !unknown.is_empty() {
        return Err(ConfigErrors(unknown).into());
    }
    let cfg: RunConfig = toml::from_str(src).map_err(|e| {
        let message = e.message().to_string();
        ConfigErrors::single(classify(&message), message, e.span().map(|s| line_of(src, s.start)))
    })?;
    let errors = cfg.semantic_errors(src);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors).into())
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&src)
}
