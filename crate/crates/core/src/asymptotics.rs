//! Parameter sweeps, log–log rate fits and manufactured-solution checks.
//!
//! Every level of a sweep shares one discretization `(n, dt, ε)`, so the
//! discretization error cancels in differences against the reference run.
//! Levels are independent and run through [`Exec`]; the report is assembled
//! in ladder order and is byte-for-byte reproducible.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::SpectralBasis;
use crate::diagnostics::{difference_norms, difference_norms_across, fmt_f64, monitor, MONITOR_CHANNELS};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::problem::{Field, Forcing, ProblemData, SpaceFn, SpaceTimeFn, TimeProfile};
use crate::solver::{solve_with_basis, SolverConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Beta,
    Eps,
    NModes,
    Dt,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Beta => "beta",
            SweepParameter::Eps => "eps",
            SweepParameter::NModes => "n_modes",
            SweepParameter::Dt => "dt",
        }
    }
}

/// `start, start·ratio, …` (`count` values).
pub fn geometric_ladder(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start * ratio.powi(k as i32)).collect()
}

/// How data vary with β: `f_β = f + β s δf`, `w_{0,β} = w₀ + β s δw`, and the
/// same for `v₀`, `u₀`, where every `δ` is the unit-L² eigenfunction with the
/// given wavenumbers and `s = scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationRule {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "one")]
    pub scale: f64,
    /// Defaults to the first non-constant mode along the first axis.
    #[serde(default)]
    pub wavenumbers: Option<Vec<usize>>,
    /// Adds the burst `β^{-1/2} e^{-t/β²} δf` to `f_β`: its rate norms are
    /// `O(β^{3/2})` but its `L∞(0,T;L²)` norm is unbounded as β ↘ 0. The
    /// burst is only resolved while `β² ≳ dt`.
    #[serde(default)]
    pub violate_uniform_bound: bool,
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

impl Default for PerturbationRule {
    fn default() -> Self {
        Self {
            enabled: true,
            scale: 1.0,
            wavenumbers: None,
            violate_uniform_bound: false,
        }
    }
}

impl PerturbationRule {
    fn profile(&self, dim: usize, amplitude: f64) -> Field {
        let wavenumbers = self.wavenumbers.clone().unwrap_or_else(|| {
            let mut k = vec![0; dim];
            k[0] = 1;
            k
        });
        Field::Mode { amplitude, wavenumbers }
    }

    /// The data of level `beta`; `beta` itself is written into the parameters.
    pub fn apply(&self, base: &ProblemData, beta: f64) -> ProblemData {
        let mut pd = base.clone();
        pd.params.beta = beta;
        if !self.enabled || beta == 0.0 {
            return pd;
        }
        let dim = base.domain.dim();
        let delta = self.profile(dim, beta * self.scale);
        pd.init.w0 = pd.init.w0.plus(delta.clone());
        pd.init.v0 = pd.init.v0.plus(delta.clone());
        pd.init.u0 = pd.init.u0.plus(delta.clone());
        let mut f = pd.forcing.f.clone().plus(Forcing::Separable {
            space: delta,
            time: TimeProfile::Constant { value: 1.0 },
        });
        if self.violate_uniform_bound {
            f = f.plus(Forcing::Separable {
                space: self.profile(dim, self.scale / beta.sqrt()),
                time: TimeProfile::Exp {
                    amplitude: 1.0,
                    rate: -1.0 / (beta * beta),
                },
            });
        }
        pd.forcing.f = f;
        pd
    }
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub parameter: SweepParameter,
    pub ladder: Vec<f64>,
    pub base: ProblemData,
    pub solver: SolverConfig,
    pub perturbation: PerturbationRule,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.ladder.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "a sweep needs at least 3 levels, got {}",
                self.ladder.len()
            )));
        }
        let increasing = self.parameter == SweepParameter::NModes;
        let ordered = self.ladder.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
        if !ordered {
            return Err(Error::InvalidParameter(format!(
                "{} ladder must be strictly {}",
                self.parameter.name(),
                if increasing { "increasing" } else { "decreasing" }
            )));
        }
        if self.ladder.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidParameter("ladder values must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LevelStatus {
    Ok,
    Failed { code: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub value: f64,
    pub status: LevelStatus,
    pub errors: BTreeMap<String, f64>,
    pub monitors: BTreeMap<String, f64>,
}

impl LevelReport {
    fn failed(value: f64, e: &Error) -> Self {
        Self {
            value,
            status: LevelStatus::Failed {
                code: e.code().into(),
                message: e.to_string(),
            },
            errors: BTreeMap::new(),
            monitors: BTreeMap::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == LevelStatus::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in natural-log space.
    pub residual: f64,
    pub n_points: usize,
}

/// Least squares fit of `log y = slope·log x + intercept` over the points with
/// finite positive `x` and `y`; `None` when fewer than 3 remain.
pub fn fit_rate(x: &[f64], y: &[f64]) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite() && **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Some(RateFit {
        slope,
        intercept,
        residual,
        n_points: pts.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub parameter: String,
    pub levels: Vec<LevelReport>,
    /// Reference run (β = 0, smallest ε, finest level, ...), if separate.
    pub reference: Option<LevelReport>,
    pub fits: BTreeMap<String, Option<RateFit>>,
}

impl RateReport {
    fn assemble(parameter: SweepParameter, levels: Vec<LevelReport>, reference: Option<LevelReport>) -> Self {
        let mut names: Vec<String> = Vec::new();
        for l in &levels {
            for k in l.errors.keys() {
                if !names.contains(k) {
                    names.push(k.clone());
                }
            }
        }
        let ok: Vec<&LevelReport> = levels.iter().filter(|l| l.is_ok()).collect();
        let x: Vec<f64> = ok.iter().map(|l| l.value).collect();
        let fits = names
            .into_iter()
            .map(|name| {
                let y: Vec<f64> = ok.iter().map(|l| l.errors.get(&name).copied().unwrap_or(f64::NAN)).collect();
                let fit = fit_rate(&x, &y);
                (name, fit)
            })
            .collect();
        Self {
            parameter: parameter.name().into(),
            levels,
            reference,
            fits,
        }
    }

    pub fn slope(&self, channel: &str) -> Option<f64> {
        self.fits.get(channel).copied().flatten().map(|f| f.slope)
    }

    pub fn fit(&self, channel: &str) -> Option<RateFit> {
        self.fits.get(channel).copied().flatten()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per level, one column per channel; monitor columns carry a
    /// `monitor.` prefix.
    pub fn to_csv(&self) -> String {
        let mut err_names: Vec<&String> = Vec::new();
        let mut mon_names: Vec<&String> = Vec::new();
        for l in &self.levels {
            for k in l.errors.keys() {
                if !err_names.contains(&k) {
                    err_names.push(k);
                }
            }
            for k in l.monitors.keys() {
                if !mon_names.contains(&k) {
                    mon_names.push(k);
                }
            }
        }
        let mut s = format!("{},status", self.parameter);
        for n in &err_names {
            s.push_str(&format!(",{n}"));
        }
        for n in &mon_names {
            s.push_str(&format!(",monitor.{n}"));
        }
        s.push('\n');
        for l in &self.levels {
            s.push_str(&fmt_f64(l.value));
            s.push_str(if l.is_ok() { ",ok" } else { ",failed" });
            for n in &err_names {
                s.push(',');
                s.push_str(&fmt_f64(l.errors.get(*n).copied().unwrap_or(f64::NAN)));
            }
            for n in &mon_names {
                s.push(',');
                s.push_str(&fmt_f64(l.monitors.get(*n).copied().unwrap_or(f64::NAN)));
            }
            s.push('\n');
        }
        s
    }

    pub fn any_failed(&self) -> bool {
        self.levels.iter().chain(self.reference.iter()).any(|l| !l.is_ok())
    }
}

fn monitors_of(traj: &Trajectory, pd: &ProblemData, basis: &SpectralBasis) -> Result<BTreeMap<String, f64>> {
    let m = monitor(traj, pd, basis)?;
    Ok(MONITOR_CHANNELS
        .iter()
        .map(|(n, _)| (n.to_string(), m.get(n)))
        .collect())
}

struct Run {
    traj: Trajectory,
    monitors: BTreeMap<String, f64>,
}

fn run_level(pd: &ProblemData, cfg: &SolverConfig, basis: &SpectralBasis) -> Result<Run> {
    let traj = solve_with_basis(pd, cfg, basis)?;
    let monitors = monitors_of(&traj, pd, basis)?;
    Ok(Run { traj, monitors })
}

pub fn beta_sweep(plan: &SweepPlan) -> Result<RateReport> {
    beta_sweep_with(plan, Exec::default())
}

/// Solves at `β = 0` with the unperturbed data and at every ladder value with
/// β-scaled perturbations, then fits the difference norms against β.
pub fn beta_sweep_with(plan: &SweepPlan, exec: Exec) -> Result<RateReport> {
    if plan.parameter != SweepParameter::Beta {
        return Err(Error::InvalidParameter("beta_sweep needs a beta ladder".into()));
    }
    plan.validate()?;
    let basis = SpectralBasis::new(plan.base.domain.clone(), plan.solver.n_modes.clone())?;
    let reference_pd = plan.perturbation.apply(&plan.base, 0.0);
    // index 0 is the reference
    let values: Vec<f64> = std::iter::once(0.0).chain(plan.ladder.iter().copied()).collect();
    let runs = exec.map(&values, |&beta| {
        let pd = plan.perturbation.apply(&plan.base, beta);
        run_level(&pd, &plan.solver, &basis)
    });
    let mut runs = runs.into_iter();
    let reference = runs.next().unwrap()?;
    let levels = plan
        .ladder
        .iter()
        .zip(runs)
        .map(|(&beta, run)| match run.and_then(|r| {
            let d = difference_norms(&r.traj, &reference.traj, &basis)?;
            Ok((d, r.monitors))
        }) {
            Ok((d, monitors)) => LevelReport {
                value: beta,
                status: LevelStatus::Ok,
                errors: d.channels,
                monitors,
            },
            Err(e) => LevelReport::failed(beta, &e),
        })
        .collect();
    let _ = reference_pd;
    Ok(RateReport::assemble(
        SweepParameter::Beta,
        levels,
        Some(LevelReport {
            value: 0.0,
            status: LevelStatus::Ok,
            errors: BTreeMap::new(),
            monitors: reference.monitors,
        }),
    ))
}

pub fn eps_sweep(plan: &SweepPlan) -> Result<RateReport> {
    eps_sweep_with(plan, Exec::default())
}

/// Time step shared by every level of an ε-sweep: the configured step, capped
/// at `ε_min/2` for non-smooth graphs.
pub fn eps_sweep_dt(plan: &SweepPlan) -> f64 {
    let eps_min = plan.ladder.iter().copied().fold(f64::INFINITY, f64::min);
    if plan.base.graph.is_smooth() {
        plan.solver.dt
    } else {
        plan.solver.dt.min(0.5 * eps_min)
    }
}

/// Differences are taken against the smallest-ε level, which is also reported
/// as a level (with zero differences).
pub fn eps_sweep_with(plan: &SweepPlan, exec: Exec) -> Result<RateReport> {
    if plan.parameter != SweepParameter::Eps {
        return Err(Error::InvalidParameter("eps_sweep needs an eps ladder".into()));
    }
    plan.validate()?;
    let basis = SpectralBasis::new(plan.base.domain.clone(), plan.solver.n_modes.clone())?;
    let cfg = SolverConfig {
        dt: eps_sweep_dt(plan),
        ..plan.solver.clone()
    };
    let runs = exec.map(&plan.ladder, |&eps| {
        let mut pd = plan.base.clone();
        pd.params.eps = eps;
        run_level(&pd, &cfg, &basis)
    });
    let reference = match runs.last().unwrap() {
        Ok(r) => Some(&r.traj),
        Err(_) => None,
    };
    let levels = plan
        .ladder
        .iter()
        .zip(&runs)
        .map(|(&eps, run)| {
            let res = match (run, reference) {
                (Ok(r), Some(reference)) => difference_norms(&r.traj, reference, &basis).map(|d| (d, r.monitors.clone())),
                (Err(e), _) => Err(e.clone()),
                (Ok(_), None) => Err(runs.last().unwrap().as_ref().err().unwrap().clone()),
            };
            match res {
                Ok((d, monitors)) => LevelReport {
                    value: eps,
                    status: LevelStatus::Ok,
                    errors: d.channels,
                    monitors,
                },
                Err(e) => LevelReport::failed(eps, &e),
            }
        })
        .collect();
    Ok(RateReport::assemble(SweepParameter::Eps, levels, None))
}

/// Self-referencing refinement in `dt` or `n_modes`: each level is compared
/// with the finest one, at shared time nodes and shared modes.
pub fn refinement_sweep_with(plan: &SweepPlan, exec: Exec) -> Result<RateReport> {
    plan.validate()?;
    let configs: Vec<SolverConfig> = match plan.parameter {
        SweepParameter::Dt => plan
            .ladder
            .iter()
            .map(|&dt| SolverConfig { dt, ..plan.solver.clone() })
            .collect(),
        SweepParameter::NModes => plan
            .ladder
            .iter()
            .map(|&n| SolverConfig {
                n_modes: vec![n.round() as usize; plan.base.domain.dim()],
                ..plan.solver.clone()
            })
            .collect(),
        _ => return Err(Error::InvalidParameter("refinement sweeps vary dt or n_modes".into())),
    };
    let runs = exec.map(&configs, |cfg| -> Result<(SpectralBasis, Run)> {
        let basis = SpectralBasis::new(plan.base.domain.clone(), cfg.n_modes.clone())?;
        let run = run_level(&plan.base, cfg, &basis)?;
        Ok((basis, run))
    });
    let finest = runs.last().unwrap().as_ref().map_err(Clone::clone)?;
    let levels = plan
        .ladder
        .iter()
        .zip(&runs)
        .map(|(&value, run)| {
            let res = run.as_ref().map_err(Clone::clone).and_then(|(basis, r)| {
                let fine = subsample_to(&finest.1.traj, &r.traj)?;
                let d = difference_norms_across(&r.traj, basis, &fine, &finest.0)?;
                Ok((d, r.monitors.clone()))
            });
            match res {
                Ok((d, monitors)) => LevelReport {
                    value,
                    status: LevelStatus::Ok,
                    errors: d.channels,
                    monitors,
                },
                Err(e) => LevelReport::failed(value, &e),
            }
        })
        .collect();
    Ok(RateReport::assemble(plan.parameter, levels, None))
}

/// The states of `fine` at the time nodes of `coarse`.
fn subsample_to(fine: &Trajectory, coarse: &Trajectory) -> Result<Trajectory> {
    let ratio = coarse.dt / fine.dt;
    let stride = ratio.round() as usize;
    if stride == 0 || (ratio - stride as f64).abs() > 1e-9 * ratio {
        return Err(Error::IncompatibleGrids(format!(
            "dt {} is not an integer multiple of {}",
            coarse.dt, fine.dt
        )));
    }
    let states: Vec<_> = fine.states.iter().step_by(stride).cloned().collect();
    if states.len() != coarse.states.len() {
        return Err(Error::IncompatibleGrids("time horizons differ".into()));
    }
    Ok(Trajectory {
        states,
        dt: coarse.dt,
        meta: fine.meta.clone(),
    })
}

pub fn run_sweep(plan: &SweepPlan) -> Result<RateReport> {
    run_sweep_with(plan, Exec::default())
}

pub fn run_sweep_with(plan: &SweepPlan, exec: Exec) -> Result<RateReport> {
    match plan.parameter {
        SweepParameter::Beta => beta_sweep_with(plan, exec),
        SweepParameter::Eps => eps_sweep_with(plan, exec),
        SweepParameter::Dt | SweepParameter::NModes => refinement_sweep_with(plan, exec),
    }
}

/// Spatial factor `X` of a separable manufactured solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpatialProfile {
    /// Product of `cos(kπx/L)` over the axes.
    Cosine { wavenumbers: Vec<usize> },
    /// `exp(κ cos(πx/L))` along the first axis; not in any `V_n`.
    ExpCos { kappa: f64 },
}

impl SpatialProfile {
    fn value_and_laplacian(&self, x: &[f64], lengths: &[f64]) -> (f64, f64) {
        match self {
            SpatialProfile::Cosine { wavenumbers } => {
                let mut value = 1.0;
                let mut lam = 0.0;
                for ((&k, &xi), &l) in wavenumbers.iter().zip(x).zip(lengths) {
                    let kappa = k as f64 * std::f64::consts::PI / l;
                    value *= (kappa * xi).cos();
                    lam += kappa * kappa;
                }
                (value, -lam * value)
            }
            SpatialProfile::ExpCos { kappa } => {
                let a = std::f64::consts::PI / lengths[0];
                let (s, c) = (a * x[0]).sin_cos();
                let value = (kappa * c).exp();
                (value, value * (kappa * kappa * a * a * s * s - kappa * a * a * c))
            }
        }
    }
}

/// `w* = X(x)·a(t)`, `u* = X(x)·b(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manufactured {
    pub spatial: SpatialProfile,
    pub w_time: TimeProfile,
    pub u_time: TimeProfile,
}

impl Default for Manufactured {
    fn default() -> Self {
        Self {
            spatial: SpatialProfile::Cosine { wavenumbers: vec![1] },
            w_time: TimeProfile::Exp { amplitude: 1.0, rate: -1.0 },
            u_time: TimeProfile::Affine { c0: 1.0, c1: 1.0 },
        }
    }
}

impl Manufactured {
    /// Copy of `template` whose sources and initial data make `(w*, u*)` the
    /// exact solution of the regularized system (`ξ = γ_ε(u*)`).
    pub fn problem(&self, template: &ProblemData) -> Result<ProblemData> {
        if !template.graph.is_smooth() {
            return Err(Error::Unsupported(format!(
                "manufactured solutions need a single-valued graph, got {}",
                template.graph.name()
            )));
        }
        let mut pd = template.clone();
        let lengths: Arc<Vec<f64>> = Arc::new(pd.domain.lengths().to_vec());
        let (alpha, beta, eps) = (pd.params.alpha, pd.params.beta, pd.params.eps);
        let (a, b) = (self.w_time, self.u_time);

        let sp = self.spatial.clone();
        let l = lengths.clone();
        pd.forcing.f = Forcing::Custom(SpaceTimeFn(Arc::new(move |x, t| {
            let (xv, lap) = sp.value_and_laplacian(x, &l);
            xv * a.d2(t) - alpha * lap * a.d1(t) - beta * lap * a.value(t) + xv * b.d1(t)
        })));
        let sp = self.spatial.clone();
        let l = lengths.clone();
        let graph = pd.graph.clone();
        let nl = pd.nl.clone();
        pd.forcing.phase_source = Forcing::Custom(SpaceTimeFn(Arc::new(move |x, t| {
            let (xv, lap) = sp.value_and_laplacian(x, &l);
            let u = xv * b.value(t);
            xv * b.d1(t) - lap * b.value(t) + graph.yosida(eps, u) + nl.g(u) - xv * a.d1(t)
        })));
        let field = |scale: f64| {
            let sp = self.spatial.clone();
            let l = lengths.clone();
            Field::Custom(SpaceFn(Arc::new(move |x| scale * sp.value_and_laplacian(x, &l).0)))
        };
        pd.init.w0 = field(a.value(0.0));
        pd.init.v0 = field(a.d1(0.0));
        pd.init.u0 = field(b.value(0.0));
        Ok(pd)
    }

    /// Quadrature-L² errors of `(w, w_t, u)` at the final state.
    pub fn errors(&self, traj: &Trajectory, basis: &SpectralBasis) -> Result<BTreeMap<String, f64>> {
        let last = traj.last();
        let t = last.t;
        let l = basis.domain().lengths().to_vec();
        let x = basis.sample(|p| self.spatial.value_and_laplacian(p, &l).0);
        let err = |c, scale: f64| -> Result<f64> {
            let g = basis.to_grid(c)?;
            let diff = g.zip_with(&x, |a, b| a - scale * b)?;
            basis.grid_l2(&diff)
        };
        let ew = err(&last.w, self.w_time.value(t))?;
        let ev = err(&last.v, self.w_time.d1(t))?;
        let eu = err(&last.u, self.u_time.value(t))?;
        let mut m = BTreeMap::new();
        m.insert("w_error".to_string(), ew);
        m.insert("v_error".to_string(), ev);
        m.insert("u_error".to_string(), eu);
        m.insert("total_error".to_string(), ew + ev + eu);
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "ladder", rename_all = "snake_case")]
pub enum Refinement {
    Dt(Vec<f64>),
    NModes(Vec<usize>),
}

pub fn mms_verify(m: &Manufactured, template: &ProblemData, cfg: &SolverConfig, refinement: &Refinement) -> Result<RateReport> {
    mms_verify_with(m, template, cfg, refinement, Exec::default())
}

/// Errors against the manufactured solution at `t_final` under the given
/// refinement. Fits are against `dt` or the per-axis mode count.
pub fn mms_verify_with(
    m: &Manufactured,
    template: &ProblemData,
    cfg: &SolverConfig,
    refinement: &Refinement,
    exec: Exec,
) -> Result<RateReport> {
    let pd = m.problem(template)?;
    let (parameter, levels): (SweepParameter, Vec<(f64, SolverConfig)>) = match refinement {
        Refinement::Dt(ladder) => (
            SweepParameter::Dt,
            ladder.iter().map(|&dt| (dt, SolverConfig { dt, ..cfg.clone() })).collect(),
        ),
        Refinement::NModes(ladder) => (
            SweepParameter::NModes,
            ladder
                .iter()
                .map(|&n| {
                    (
                        n as f64,
                        SolverConfig {
                            n_modes: vec![n; pd.domain.dim()],
                            ..cfg.clone()
                        },
                    )
                })
                .collect(),
        ),
    };
    if levels.len() < 3 {
        return Err(Error::InvalidParameter("refinement needs at least 3 levels".into()));
    }
    let reports = exec.map(&levels, |(value, cfg)| {
        let res = (|| -> Result<LevelReport> {
            let basis = SpectralBasis::new(pd.domain.clone(), cfg.n_modes.clone())?;
            let traj = solve_with_basis(&pd, cfg, &basis)?;
            Ok(LevelReport {
                value: *value,
                status: LevelStatus::Ok,
                errors: m.errors(&traj, &basis)?,
                monitors: BTreeMap::new(),
            })
        })();
        res.unwrap_or_else(|e| LevelReport::failed(*value, &e))
    });
    Ok(RateReport::assemble(parameter, reports, None))
}
