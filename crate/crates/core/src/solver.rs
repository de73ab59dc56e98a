//! Time integration of the Galerkin system in the eigenbasis.
//!
//! With `Λ = diag(λ_i)` and `Π` the quadrature projection, the coefficients
//! of `(w, v = w_t, u)` obey
//!
//! ```text
//! w' = v
//! v' = -αΛv - βΛw - u' + f̂
//! u' = -Λu - Π[γ_ε(u) + g(u)] + v + ĥ
//! ```
//!
//! Each step solves the `u` equation first (Newton, dense Jacobian), then the
//! `v` equation with the fresh `u` increment substituted, then updates `w`.
//!
//! * `imex_euler`: backward Euler in `u` with `v` lagged; `v` and `w` implicit.
//! * `imex_cn`: trapezoidal weights throughout. The `v` update is affine in the
//!   new `u`, so it is eliminated from the `u` equation before the Newton solve
//!   and the coupled step stays second order.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{CoeffVector, GridFunction, SpectralBasis};
use crate::error::{check_len, Error, Result};
use crate::graph::YosidaOperator;
use crate::problem::ProblemData;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub w: CoeffVector,
    pub v: CoeffVector,
    pub u: CoeffVector,
    pub t: f64,
}

impl State {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.w.is_finite() && self.v.is_finite() && self.u.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ImexEuler,
    ImexCn,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ImexEuler => "imex_euler",
            Scheme::ImexCn => "imex_cn",
        }
    }

    pub fn order(self) -> f64 {
        match self {
            Scheme::ImexEuler => 1.0,
            Scheme::ImexCn => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub n_modes: Vec<usize>,
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    /// Freeze `w_t = 0` and integrate the phase equation alone (gradient flow).
    #[serde(default)]
    pub phase_only: bool,
}

fn default_newton_tol() -> f64 {
    1e-12
}

fn default_newton_max_iter() -> usize {
    50
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_modes: vec![16],
            dt: 1e-3,
            scheme: Scheme::ImexEuler,
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
            phase_only: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::InvalidParameter("newton tolerances must be positive".into()));
        }
        if self.n_modes.is_empty() || self.n_modes.contains(&0) {
            return Err(Error::InvalidParameter("mode counts must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps to reach `t_final`, rounded to the nearest integer.
    pub fn n_steps(&self, t_final: f64) -> usize {
        (t_final / self.dt).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub lengths: Vec<f64>,
    pub n_modes: Vec<usize>,
    pub scheme: Scheme,
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub t_final: f64,
    pub graph: String,
    pub nonlinearity: String,
    pub phase_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub dt: f64,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory is never empty")
    }

    /// The first `n` states.
    pub fn truncated(&self, n: usize) -> Trajectory {
        Trajectory {
            states: self.states[..n.min(self.states.len())].to_vec(),
            dt: self.dt,
            meta: self.meta.clone(),
        }
    }
}

/// `P_n` of the initial data at `t = 0`.
pub fn project_initial_data(pd: &ProblemData, basis: &SpectralBasis) -> State {
    let d = basis.domain();
    State {
        w: basis.project_fn(|x| pd.init.w0.eval(x, d)),
        v: basis.project_fn(|x| pd.init.v0.eval(x, d)),
        u: basis.project_fn(|x| pd.init.u0.eval(x, d)),
        t: 0.0,
    }
}

pub struct GalerkinSolver<'a> {
    pd: &'a ProblemData,
    cfg: &'a SolverConfig,
    basis: &'a SpectralBasis,
    yosida: YosidaOperator,
}

impl<'a> GalerkinSolver<'a> {
    pub fn new(pd: &'a ProblemData, cfg: &'a SolverConfig, basis: &'a SpectralBasis) -> Result<Self> {
        pd.validate()?;
        cfg.validate()?;
        if basis.domain() != &pd.domain {
            return Err(Error::IncompatibleGrids("basis and problem domains differ".into()));
        }
        let yosida = YosidaOperator::new(pd.graph.clone(), pd.params.eps)?;
        Ok(Self {
            pd,
            cfg,
            basis,
            yosida,
        })
    }

    pub fn basis(&self) -> &SpectralBasis {
        self.basis
    }

    /// `Π[γ_ε(u) + g(u)]` and the grid values of `γ_ε'(u) + g'(u)`.
    fn nonlinear(&self, u: &CoeffVector, with_derivative: bool) -> Result<(CoeffVector, Vec<f64>)> {
        let grid = self.basis.to_grid(u)?;
        let nl = &self.pd.nl;
        let values = grid.map(|s| self.yosida.value(s) + nl.g(s));
        let deriv = if with_derivative {
            grid.values
                .iter()
                .map(|&s| self.yosida.derivative(s) + nl.dg(s))
                .collect()
        } else {
            Vec::new()
        };
        Ok((self.basis.project(&values)?, deriv))
    }

    /// Π-projected nonlinearity evaluated on a coefficient vector.
    pub fn nonlinear_term(&self, u: &CoeffVector) -> Result<CoeffVector> {
        Ok(self.nonlinear(u, false)?.0)
    }

    fn phase_source(&self, t: f64) -> CoeffVector {
        self.pd.forcing.phase_source.project(self.basis, t)
    }

    fn balance_source(&self, t: f64) -> CoeffVector {
        self.pd.forcing.f.project(self.basis, t)
    }

    /// Solves `(1+κ)⊙(u - uⁿ) + a·dt·(Λu + ΠN(u)) + r0 = 0` for `u`.
    fn newton(&self, un: &CoeffVector, kappa: &[f64], a: f64, r0: &CoeffVector, t: f64) -> Result<CoeffVector> {
        let n = self.basis.len();
        let dt = self.cfg.dt;
        let lam = self.basis.eigenvalues();
        let residual = |u: &CoeffVector, nu: &CoeffVector| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    (1.0 + kappa[i]) * (u.0[i] - un.0[i])
                        + a * dt * (lam[i] * u.0[i] + nu.0[i])
                        + r0.0[i]
                })
                .collect()
        };
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let scale = 1.0 + sup(&un.0);
        let tol = self.cfg.newton_tol * scale;

        let mut u = un.clone();
        let (nu, mut deriv) = self.nonlinear(&u, true)?;
        let mut f = residual(&u, &nu);
        let mut fnorm = sup(&f);
        let mut iterations = 0;
        while iterations < self.cfg.newton_max_iter {
            if fnorm <= tol && iterations > 0 {
                return Ok(u);
            }
            if fnorm == 0.0 {
                return Ok(u);
            }
            iterations += 1;
            let jac = self.jacobian(&deriv, kappa, a);
            let rhs = DVector::from_iterator(n, f.iter().map(|x| -x));
            let delta = jac
                .lu()
                .solve(&rhs)
                .ok_or(Error::NewtonFailure {
                    time: t,
                    iterations,
                    residual: fnorm,
                })?;
            // backtracking on the sup norm of the residual
            let mut step = 1.0;
            loop {
                let trial = CoeffVector((0..n).map(|i| u.0[i] + step * delta[i]).collect());
                let (tn, td) = self.nonlinear(&trial, true)?;
                let tf = residual(&trial, &tn);
                let tnorm = sup(&tf);
                if tnorm < fnorm || step < 1e-4 || tnorm <= tol {
                    u = trial;
                    deriv = td;
                    f = tf;
                    fnorm = tnorm;
                    break;
                }
                step *= 0.5;
            }
            if !fnorm.is_finite() {
                return Err(Error::Diverged { time: t });
            }
        }
        if fnorm <= tol {
            return Ok(u);
        }
        Err(Error::NewtonFailure {
            time: t,
            iterations,
            residual: fnorm,
        })
    }

    fn jacobian(&self, deriv: &[f64], kappa: &[f64], a: f64) -> DMatrix<f64> {
        let n = self.basis.len();
        let dt = self.cfg.dt;
        let lam = self.basis.eigenvalues();
        let mut jac = DMatrix::<f64>::zeros(n, n);
        let weights = self.basis.weights();
        let mut row = vec![0.0; n];
        for (p, (&d, &w)) in deriv.iter().zip(weights).enumerate() {
            let c = a * dt * w * d;
            if c == 0.0 {
                continue;
            }
            for (i, r) in row.iter_mut().enumerate() {
                *r = self.basis.basis_value(p, i);
            }
            for j in 0..n {
                let cj = c * row[j];
                if cj == 0.0 {
                    continue;
                }
                for i in 0..n {
                    jac[(i, j)] += cj * row[i];
                }
            }
        }
        for i in 0..n {
            jac[(i, i)] += 1.0 + kappa[i] + a * dt * lam[i];
        }
        jac
    }

    pub fn step(&self, s: &State) -> Result<State> {
        let n = self.basis.len();
        check_len(n, s.u.len())?;
        check_len(n, s.v.len())?;
        check_len(n, s.w.len())?;
        if !s.is_finite() {
            return Err(Error::Diverged { time: s.t });
        }
        let dt = self.cfg.dt;
        let t1 = s.t + dt;
        let lam = self.basis.eigenvalues();
        let (alpha, beta) = (self.pd.params.alpha, self.pd.params.beta);
        let phase_only = self.cfg.phase_only;
        let zero = vec![0.0; n];

        let next = match self.cfg.scheme {
            Scheme::ImexEuler => {
                let h1 = self.phase_source(t1);
                let coupling = if phase_only { &zero } else { &s.v.0 };
                let r0 = CoeffVector((0..n).map(|i| -dt * (coupling[i] + h1.0[i])).collect());
                let u = self.newton(&s.u, &zero, 1.0, &r0, t1)?;
                if phase_only {
                    State { w: s.w.clone(), v: s.v.clone(), u, t: t1 }
                } else {
                    let f1 = self.balance_source(t1);
                    let v = CoeffVector(
                        (0..n)
                            .map(|i| {
                                let d = 1.0 + dt * alpha * lam[i] + dt * dt * beta * lam[i];
                                (s.v.0[i] - dt * beta * lam[i] * s.w.0[i] - (u.0[i] - s.u.0[i])
                                    + dt * f1.0[i])
                                    / d
                            })
                            .collect(),
                    );
                    let w = s.w.axpy(dt, &v);
                    State { w, v, u, t: t1 }
                }
            }
            Scheme::ImexCn => {
                let h = self.phase_source(s.t).axpy(1.0, &self.phase_source(t1));
                let nu0 = self.nonlinear_term(&s.u)?;
                if phase_only {
                    let r0 = CoeffVector(
                        (0..n)
                            .map(|i| 0.5 * dt * (lam[i] * s.u.0[i] + nu0.0[i]) - 0.5 * dt * h.0[i])
                            .collect(),
                    );
                    let u = self.newton(&s.u, &zero, 0.5, &r0, t1)?;
                    State { w: s.w.clone(), v: s.v.clone(), u, t: t1 }
                } else {
                    let f = self.balance_source(s.t).axpy(1.0, &self.balance_source(t1));
                    let d: Vec<f64> = (0..n)
                        .map(|i| 1.0 + 0.5 * dt * alpha * lam[i] + 0.25 * dt * dt * beta * lam[i])
                        .collect();
                    let rv: Vec<f64> = (0..n)
                        .map(|i| {
                            s.v.0[i] * (2.0 - d[i]) - dt * beta * lam[i] * s.w.0[i] + 0.5 * dt * f.0[i]
                        })
                        .collect();
                    // v¹ = (rv - (u¹ - uⁿ))/d
                    let kappa: Vec<f64> = d.iter().map(|di| 0.5 * dt / di).collect();
                    let r0 = CoeffVector(
                        (0..n)
                            .map(|i| {
                                0.5 * dt * (lam[i] * s.u.0[i] + nu0.0[i])
                                    - 0.5 * dt * (s.v.0[i] + rv[i] / d[i])
                                    - 0.5 * dt * h.0[i]
                            })
                            .collect(),
                    );
                    let u = self.newton(&s.u, &kappa, 0.5, &r0, t1)?;
                    let v = CoeffVector((0..n).map(|i| (rv[i] - (u.0[i] - s.u.0[i])) / d[i]).collect());
                    let w = CoeffVector(
                        (0..n)
                            .map(|i| s.w.0[i] + 0.5 * dt * (s.v.0[i] + v.0[i]))
                            .collect(),
                    );
                    State { w, v, u, t: t1 }
                }
            }
        };
        if !next.is_finite() {
            return Err(Error::Diverged { time: t1 });
        }
        Ok(next)
    }

    pub fn meta(&self) -> TrajectoryMeta {
        let p = &self.pd.params;
        TrajectoryMeta {
            lengths: self.pd.domain.lengths().to_vec(),
            n_modes: self.basis.n_modes().to_vec(),
            scheme: self.cfg.scheme,
            alpha: p.alpha,
            beta: p.beta,
            eps: p.eps,
            t_final: p.t_final,
            graph: self.pd.graph.name().to_string(),
            nonlinearity: self.pd.nl.name.clone(),
            phase_only: self.cfg.phase_only,
        }
    }

    pub fn run_from(&self, initial: State) -> Result<Trajectory> {
        let steps = self.cfg.n_steps(self.pd.params.t_final);
        let mut states = Vec::with_capacity(steps + 1);
        states.push(initial);
        for k in 0..steps {
            let mut next = self.step(&states[k])?;
            // times on the exact grid, no accumulated rounding
            next.t = (k + 1) as f64 * self.cfg.dt;
            states.push(next);
        }
        Ok(Trajectory {
            states,
            dt: self.cfg.dt,
            meta: self.meta(),
        })
    }

    pub fn run(&self) -> Result<Trajectory> {
        let mut init = project_initial_data(self.pd, self.basis);
        if self.cfg.phase_only {
            init.v = self.basis.zeros();
        }
        self.run_from(init)
    }
}

pub fn build_basis(pd: &ProblemData, cfg: &SolverConfig) -> Result<SpectralBasis> {
    SpectralBasis::new(pd.domain.clone(), cfg.n_modes.clone())
}

/// Integrates from `t = 0` to `t_final`.
pub fn solve(pd: &ProblemData, cfg: &SolverConfig) -> Result<Trajectory> {
    let basis = build_basis(pd, cfg)?;
    solve_with_basis(pd, cfg, &basis)
}

pub fn solve_with_basis(pd: &ProblemData, cfg: &SolverConfig, basis: &SpectralBasis) -> Result<Trajectory> {
    GalerkinSolver::new(pd, cfg, basis)?.run()
}

pub fn step(state: &State, pd: &ProblemData, cfg: &SolverConfig, basis: &SpectralBasis) -> Result<State> {
    GalerkinSolver::new(pd, cfg, basis)?.step(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepResidual {
    pub t: f64,
    /// `‖w_tt - αΔw_t - βΔw + u_t - f‖_H`
    pub balance: f64,
    /// `‖u_t - Δu + γ_ε(u) + g(u) - w_t - h‖_H`
    pub phase: f64,
}

/// Strong-form residuals at interior nodes, central differences in time.
pub fn residuals(traj: &Trajectory, pd: &ProblemData, basis: &SpectralBasis) -> Result<Vec<StepResidual>> {
    let n_states = traj.states.len();
    if n_states < 3 {
        return Err(Error::TooFewStates {
            needed: 3,
            found: n_states,
        });
    }
    let cfg = SolverConfig {
        n_modes: basis.n_modes().to_vec(),
        dt: traj.dt,
        ..Default::default()
    };
    let solver = GalerkinSolver::new(pd, &cfg, basis)?;
    let lam = basis.eigenvalues();
    let (alpha, beta) = (pd.params.alpha, pd.params.beta);
    let dt = traj.dt;
    let mut out = Vec::with_capacity(n_states - 2);
    for k in 1..n_states - 1 {
        let (prev, cur, next) = (&traj.states[k - 1], &traj.states[k], &traj.states[k + 1]);
        let t = cur.t;
        let f = pd.forcing.f.project(basis, t);
        let h = pd.forcing.phase_source.project(basis, t);
        let nu = solver.nonlinear_term(&cur.u)?;
        let mut ra = 0.0;
        let mut rb = 0.0;
        for i in 0..basis.len() {
            let wtt = (next.v.0[i] - prev.v.0[i]) / (2.0 * dt);
            let ut = (next.u.0[i] - prev.u.0[i]) / (2.0 * dt);
            let a = wtt + alpha * lam[i] * cur.v.0[i] + beta * lam[i] * cur.w.0[i] + ut - f.0[i];
            let b = ut + lam[i] * cur.u.0[i] + nu.0[i] - cur.v.0[i] - h.0[i];
            ra += a * a;
            rb += b * b;
        }
        out.push(StepResidual {
            t,
            balance: ra.sqrt(),
            phase: rb.sqrt(),
        });
    }
    Ok(out)
}

/// Grid values of the regularized selection `ξ_ε = γ_ε(u)` at a state.
pub fn xi_on_grid(state: &State, pd: &ProblemData, basis: &SpectralBasis) -> Result<GridFunction> {
    let u = basis.to_grid(&state.u)?;
    let eps = pd.params.eps;
    Ok(u.map(|s| pd.graph.yosida(eps, s)))
}
