//! Invariant checks run by the `check` subcommand.
//!
//! Every check returns a measured value and a threshold; the suite passes when
//! every value is within its threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::fit_rate;
use crate::basis::{BoxDomain, CoeffVector, SpectralBasis};
use crate::config::RunConfig;
use crate::diagnostics::monitor;
use crate::error::Result;
use crate::graph::{MonotoneGraph, SmoothGraph};
use crate::par::Exec;
use crate::problem::{
    heat_flux, Field, FluxLaw, ForcingTerm, InitialData, ProblemData, ProblemParams, SmoothNonlinearity,
};
use crate::solver::{solve_with_basis, Scheme, SolverConfig, State, Trajectory};

/// Graphs exercised by the Yosida property suite.
pub fn graph_catalog() -> Vec<MonotoneGraph> {
    vec![
        MonotoneGraph::DoubleObstacle { lower: -1.0, upper: 1.0 },
        MonotoneGraph::Power { exponent: 3 },
        MonotoneGraph::Linear { slope: 2.0 },
        MonotoneGraph::Smooth(SmoothGraph::sinh()),
        MonotoneGraph::Zero,
    ]
}

pub const YOSIDA_TOLERANCE: f64 = 1e-12;

/// Violation counts of the Yosida properties over a batch of random samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YosidaProperties {
    pub graph: String,
    pub eps: f64,
    pub samples: usize,
    pub monotone: usize,
    pub lipschitz: usize,
    pub zero: usize,
    pub below_minimal_section: usize,
    pub envelope_bounds: usize,
}

impl YosidaProperties {
    pub fn violations(&self) -> usize {
        self.monotone + self.lipschitz + self.zero + self.below_minimal_section + self.envelope_bounds
    }
}

/// Checks monotonicity and the `1/ε` Lipschitz bound on consecutive sample
/// pairs, and `γ_ε(0) = 0`, `|γ_ε| ≤ |γ⁰|` on `D(γ)`, `0 ≤ φ_ε ≤ φ` pointwise.
/// Samples are uniform on `[-3, 3]`. Tolerances are relative to the size of
/// the values compared, with an absolute floor of [`YOSIDA_TOLERANCE`].
pub fn yosida_properties(graph: &MonotoneGraph, eps: f64, samples: usize, seed: u64) -> YosidaProperties {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s: Vec<f64> = (0..samples + 1).map(|_| rng.random_range(-3.0..=3.0)).collect();
    let g: Vec<f64> = s.iter().map(|&x| graph.yosida(eps, x)).collect();
    let tol = |scale: f64| YOSIDA_TOLERANCE * scale.abs().max(1.0);
    let mut out = YosidaProperties {
        graph: graph.name().to_string(),
        eps,
        samples,
        monotone: 0,
        lipschitz: 0,
        zero: 0,
        below_minimal_section: 0,
        envelope_bounds: 0,
    };
    if graph.yosida(eps, 0.0).abs() > YOSIDA_TOLERANCE {
        out.zero += 1;
    }
    for k in 0..samples {
        let (a, b) = (s[k], s[k + 1]);
        let (ga, gb) = (g[k], g[k + 1]);
        let scale = ga.abs().max(gb.abs());
        if (ga - gb) * (a - b) < -tol(scale) * (a - b).abs() {
            out.monotone += 1;
        }
        if (ga - gb).abs() > (a - b).abs() / eps + tol(scale) {
            out.lipschitz += 1;
        }
        if let Ok(g0) = graph.minimal_section(a) {
            if ga.abs() > g0.abs() + tol(g0) {
                out.below_minimal_section += 1;
            }
        }
        let env = graph.moreau(eps, a);
        let phi = graph.potential(a);
        if env < -tol(0.0) || env > phi + tol(phi) {
            out.envelope_bounds += 1;
        }
    }
    out
}

/// The property suite for every catalog graph and every `ε`, one seed per
/// (graph, ε) pair derived from `seed`.
pub fn yosida_suite(eps_values: &[f64], samples: usize, seed: u64, exec: Exec) -> Vec<YosidaProperties> {
    let graphs = graph_catalog();
    let jobs: Vec<(usize, usize)> = (0..graphs.len())
        .flat_map(|g| (0..eps_values.len()).map(move |e| (g, e)))
        .collect();
    exec.map(&jobs, |&(g, e)| {
        yosida_properties(&graphs[g], eps_values[e], samples, seed.wrapping_add((g * 1000 + e) as u64))
    })
}

/// Constant data `(w₀, v₀, u₀)` with `γ = g = f = 0`: only mode 0 moves and
/// `v = v₀e^{-t}`, `u = u₀ + v₀(1 - e^{-t})`, `w = w₀ + v₀(1 - e^{-t})`.
/// Returns the largest pointwise error of `(w, v, u)` at `t_final`.
pub fn mode_zero_error(scheme: Scheme, dt: f64, data: [f64; 3], t_final: f64) -> Result<f64> {
    let [w0, v0, u0] = data;
    let pd = ProblemData {
        params: ProblemParams {
            alpha: 1.0,
            beta: 0.5,
            eps: 0.1,
            t_final,
        },
        graph: MonotoneGraph::Zero,
        nl: SmoothNonlinearity::zero(),
        forcing: ForcingTerm::default(),
        init: InitialData {
            w0: Field::Constant { value: w0 },
            v0: Field::Constant { value: v0 },
            u0: Field::Constant { value: u0 },
        },
        domain: BoxDomain::interval(1.0)?,
    };
    let cfg = SolverConfig {
        n_modes: vec![4],
        dt,
        scheme,
        ..SolverConfig::default()
    };
    let basis = SpectralBasis::new(pd.domain.clone(), cfg.n_modes.clone())?;
    let traj = solve_with_basis(&pd, &cfg, &basis)?;
    let last = traj.last();
    let decay = 1.0 - (-last.t).exp();
    let exact = [w0 + v0 * decay, v0 * (-last.t).exp(), u0 + v0 * decay];
    let scale = pd.domain.volume().sqrt();
    let err = [&last.w, &last.v, &last.u]
        .iter()
        .zip(exact)
        .map(|(c, e)| {
            let tail: f64 = c.0[1..].iter().map(|x| x.abs()).sum();
            (c.0[0] / scale - e).abs() + tail
        })
        .fold(0.0, f64::max);
    Ok(err)
}

/// `‖u‖_H + ‖∇w‖_H + ‖w_t‖_{V'}`, the norm of the stability estimate.
pub fn stability_norm(a: &State, b: &State, basis: &SpectralBasis) -> f64 {
    let du = a.u.sub(&b.u);
    let dw = a.w.sub(&b.w);
    let dv = a.v.sub(&b.v);
    basis.l2_norm(&du) + basis.weighted_norm(&dw, |l| l) + basis.dual_norm(&dv)
}

/// Output-to-input ratio `max_t N(Δ(t)) / N(Δ(0))` for initial data shifted by
/// `δ` along the first non-constant mode, for each `δ`.
pub fn gronwall_ratios(pd: &ProblemData, cfg: &SolverConfig, deltas: &[f64], exec: Exec) -> Result<Vec<f64>> {
    let basis = SpectralBasis::new(pd.domain.clone(), cfg.n_modes.clone())?;
    let reference = solve_with_basis(pd, cfg, &basis)?;
    let mut k = vec![0; pd.domain.dim()];
    k[0] = 1;
    let runs = exec.map(deltas, |&delta| -> Result<f64> {
        let mut p = pd.clone();
        let bump = Field::Mode {
            amplitude: delta,
            wavenumbers: k.clone(),
        };
        p.init.w0 = p.init.w0.plus(bump.clone());
        p.init.v0 = p.init.v0.plus(bump.clone());
        p.init.u0 = p.init.u0.plus(bump);
        let traj = solve_with_basis(&p, cfg, &basis)?;
        let input = stability_norm(&traj.states[0], &reference.states[0], &basis);
        let output = traj
            .states
            .iter()
            .zip(&reference.states)
            .map(|(a, b)| stability_norm(a, b, &basis))
            .fold(0.0, f64::max);
        Ok(output / input)
    });
    runs.into_iter().collect()
}

/// `true` when both trajectories hold the same bits in every stored value.
pub fn bitwise_identical(a: &Trajectory, b: &Trajectory) -> bool {
    let bits = |c: &CoeffVector| c.0.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    a.states.len() == b.states.len()
        && a.dt.to_bits() == b.dt.to_bits()
        && a.states.iter().zip(&b.states).all(|(x, y)| {
            x.t.to_bits() == y.t.to_bits() && bits(&x.w) == bits(&y.w) && bits(&x.v) == bits(&y.v) && bits(&x.u) == bits(&y.u)
        })
}

/// Largest one-step increase of the free energy in the gradient-flow
/// reduction (`w_t ≡ 0`), over `steps` steps of `cfg.dt`.
pub fn gradient_flow_max_increase(pd: &ProblemData, cfg: &SolverConfig, steps: usize) -> Result<f64> {
    let mut p = pd.clone();
    p.params.t_final = steps as f64 * cfg.dt;
    let cfg = SolverConfig {
        phase_only: true,
        ..cfg.clone()
    };
    let basis = SpectralBasis::new(p.domain.clone(), cfg.n_modes.clone())?;
    let traj = solve_with_basis(&p, &cfg, &basis)?;
    let m = monitor(&traj, &p, &basis)?;
    Ok(m.get("energy_max_increase"))
}

/// `max |G - I|` for the quadrature Gram matrix of the basis.
pub fn orthonormality_defect(basis: &SpectralBasis) -> f64 {
    let n = basis.len();
    let w = basis.weights();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let g: f64 = (0..basis.n_points())
                .map(|p| w[p] * basis.basis_value(p, i) * basis.basis_value(p, j))
                .sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

/// `max |q_III - q_I - q_II|` over the grid for random coefficient vectors.
pub fn flux_additivity_defect(basis: &SpectralBasis, alpha: f64, beta: f64, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random = || CoeffVector((0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
    let w = random();
    let wt = random();
    let q1 = heat_flux(FluxLaw::TypeI, &w, &wt, alpha, beta, basis)?;
    let q2 = heat_flux(FluxLaw::TypeII, &w, &wt, alpha, beta, basis)?;
    let q3 = heat_flux(FluxLaw::TypeIII, &w, &wt, alpha, beta, basis)?;
    let mut worst: f64 = 0.0;
    for axis in 0..q3.len() {
        for p in 0..q3[axis].values.len() {
            worst = worst.max((q3[axis].values[p] - q1[axis].values[p] - q2[axis].values[p]).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub outcomes: Vec<CheckOutcome>,
    pub yosida: Vec<YosidaProperties>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn at_most(name: &str, value: f64, threshold: f64) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed: value <= threshold,
        value,
        threshold,
    }
}

/// The full invariant suite on the problem described by `cfg`.
pub fn run_checks(cfg: &RunConfig, exec: Exec) -> Result<CheckReport> {
    let mut outcomes = Vec::new();
    let yosida = yosida_suite(&[1e-1, 1e-2, 1e-3], cfg.check.samples, cfg.check.seed, exec);
    let violations: usize = yosida.iter().map(YosidaProperties::violations).sum();
    outcomes.push(at_most("yosida_violations", violations as f64, 0.0));

    for (scheme, dt) in [(Scheme::ImexEuler, 1e-2), (Scheme::ImexEuler, 1e-3), (Scheme::ImexCn, 1e-2), (Scheme::ImexCn, 1e-3)] {
        let err = mode_zero_error(scheme, dt, [0.2, 0.7, -0.3], 1.0)?;
        let bound = 5.0 * dt.powf(scheme.order());
        outcomes.push(at_most(&format!("mode_zero_{}_dt{dt:e}", scheme.name()), err, bound));
    }

    let pd = cfg.problem()?;
    let solver = cfg.solver_config();
    let basis = SpectralBasis::new(pd.domain.clone(), solver.n_modes.clone())?;
    outcomes.push(at_most("orthonormality", orthonormality_defect(&basis), 1e-12));
    outcomes.push(at_most(
        "flux_additivity",
        flux_additivity_defect(&basis, pd.params.alpha, pd.params.beta, cfg.check.seed)?,
        1e-12,
    ));

    let x = [1.0, 0.5, 0.25, 0.125];
    let y: Vec<f64> = x.iter().map(|v: &f64| 2.0 * v.powi(2)).collect();
    let slope = fit_rate(&x, &y).map_or(f64::NAN, |f| f.slope);
    outcomes.push(at_most("rate_fit_exact_power", (slope - 2.0).abs(), 1e-12));

    let a = solve_with_basis(&pd, &solver, &basis)?;
    let b = solve_with_basis(&pd, &solver, &basis)?;
    outcomes.push(at_most("determinism", if bitwise_identical(&a, &b) { 0.0 } else { 1.0 }, 0.0));

    let ratios = gronwall_ratios(&pd, &solver, &[1e-3, 1e-6, 1e-9], exec)?;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    outcomes.push(at_most("gronwall_ratio_spread", hi / lo - 1.0, 0.1));

    let increase = gradient_flow_max_increase(&pd, &solver, 100)?;
    outcomes.push(at_most("gradient_flow_energy_increase", increase, 1e-10));

    Ok(CheckReport { outcomes, yosida })
}
