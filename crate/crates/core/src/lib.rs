//! Spectral Faedo–Galerkin solver for a Caginalp-type phase field system with
//! type III (Green–Naghdi) heat conduction,
//!
//! ```text
//! w_tt - αΔw_t - βΔw + u_t = f
//! u_t - Δu + γ(u) + g(u) ∋ w_t
//! ```
//!
//! with homogeneous Neumann conditions on a 1D or 2D box. `γ` is a maximal
//! monotone graph handled through its Yosida regularization `γ_ε`; `β = 0`
//! gives the type I limit problem. Around the solver sit diagnostics for the
//! standard a priori bounds, parameter sweeps with log–log rate fits, and a
//! manufactured-solution harness.

pub mod asymptotics;
pub mod basis;
pub mod checks;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod par;
pub mod problem;
pub mod quadrature;
pub mod run;
pub mod snapshot;
pub mod solver;

pub use basis::{BoxDomain, CoeffVector, GridFunction, Norms, SpectralBasis};
pub use error::{Error, Result};
pub use graph::{MonotoneGraph, SmoothGraph, YosidaOperator};
pub use par::Exec;
pub use problem::{
    Field, Forcing, ForcingTerm, InitialData, ProblemData, ProblemParams, SmoothNonlinearity, TimeProfile,
};
pub use solver::{solve, Scheme, SolverConfig, State, Trajectory};
