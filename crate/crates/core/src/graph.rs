//! Maximal monotone graphs `γ = ∂φ` on the real line and their Yosida
//! regularizations.
//!
//! For `ε > 0` the resolvent `J_ε = (I + εγ)⁻¹` is single valued on all of ℝ,
//! `γ_ε = (I - J_ε)/ε` is monotone and `1/ε`-Lipschitz, and the Moreau
//! envelope `φ_ε(s) = min_τ |τ - s|²/(2ε) + φ(τ)` is attained at `τ = J_ε(s)`
//! with `φ_ε' = γ_ε`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A single-valued, increasing, locally Lipschitz graph supplied as closures.
///
/// `local_lipschitz(r)` must bound `|γ'|` on `[-r, r]`.
#[derive(Clone)]
pub struct SmoothGraph {
    pub name: String,
    pub gamma: ScalarFn,
    pub derivative: ScalarFn,
    pub potential: ScalarFn,
    pub local_lipschitz: ScalarFn,
}

impl SmoothGraph {
    /// `γ(s) = sinh(s)`, `φ(s) = cosh(s) - 1`.
    pub fn sinh() -> Self {
        Self {
            name: "sinh".into(),
            gamma: Arc::new(f64::sinh),
            derivative: Arc::new(f64::cosh),
            potential: Arc::new(|s| s.cosh() - 1.0),
            local_lipschitz: Arc::new(|r: f64| r.abs().cosh()),
        }
    }
}

impl fmt::Debug for SmoothGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothGraph").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum MonotoneGraph {
    /// Subdifferential of the indicator of `[lower, upper]`.
    DoubleObstacle { lower: f64, upper: f64 },
    /// `γ(s) = s^p` for odd `p`, `φ(s) = |s|^{p+1}/(p+1)`.
    Power { exponent: u32 },
    /// `γ(s) = m s`, `φ(s) = m s²/2`.
    Linear { slope: f64 },
    Smooth(SmoothGraph),
    Zero,
}

impl MonotoneGraph {
    pub fn double_obstacle(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= 0.0 && 0.0 <= upper && lower < upper) {
            return Err(Error::InvalidParameter(format!(
                "double obstacle bounds must satisfy lower <= 0 <= upper and lower < upper, got ({lower}, {upper})"
            )));
        }
        Ok(MonotoneGraph::DoubleObstacle { lower, upper })
    }

    pub fn power(exponent: u32) -> Result<Self> {
        if exponent.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "power graph needs an odd exponent, got {exponent}"
            )));
        }
        Ok(MonotoneGraph::Power { exponent })
    }

    pub fn linear(slope: f64) -> Result<Self> {
        if !(slope >= 0.0 && slope.is_finite()) {
            return Err(Error::InvalidParameter(format!("slope must be >= 0, got {slope}")));
        }
        Ok(MonotoneGraph::Linear { slope })
    }

    pub fn name(&self) -> &str {
        match self {
            MonotoneGraph::DoubleObstacle { .. } => "double_obstacle",
            MonotoneGraph::Power { .. } => "power",
            MonotoneGraph::Linear { .. } => "linear",
            MonotoneGraph::Smooth(g) => &g.name,
            MonotoneGraph::Zero => "zero",
        }
    }

    /// Single-valued with `D(γ) = ℝ`.
    pub fn is_smooth(&self) -> bool {
        !matches!(self, MonotoneGraph::DoubleObstacle { .. })
    }

    /// Closed effective domain `D(γ)` as an interval.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            MonotoneGraph::DoubleObstacle { lower, upper } => (*lower, *upper),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn in_domain(&self, s: f64) -> bool {
        let (a, b) = self.domain();
        a <= s && s <= b
    }

    /// Distance from `s` to `D(γ)`.
    pub fn domain_distance(&self, s: f64) -> f64 {
        let (a, b) = self.domain();
        (a - s).max(s - b).max(0.0)
    }

    /// The convex potential `φ`, `+∞` outside `D(φ)`.
    pub fn potential(&self, s: f64) -> f64 {
        match self {
            MonotoneGraph::DoubleObstacle { .. } => {
                if self.in_domain(s) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            MonotoneGraph::Power { exponent } => {
                let q = *exponent as i32 + 1;
                s.abs().powi(q) / q as f64
            }
            MonotoneGraph::Linear { slope } => 0.5 * slope * s * s,
            MonotoneGraph::Smooth(g) => (g.potential)(s),
            MonotoneGraph::Zero => 0.0,
        }
    }

    /// Value of a single-valued graph; `None` for the double obstacle.
    fn smooth_value(&self, s: f64) -> Option<f64> {
        match self {
            MonotoneGraph::DoubleObstacle { .. } => None,
            MonotoneGraph::Power { exponent } => Some(s.powi(*exponent as i32)),
            MonotoneGraph::Linear { slope } => Some(slope * s),
            MonotoneGraph::Smooth(g) => Some((g.gamma)(s)),
            MonotoneGraph::Zero => Some(0.0),
        }
    }

    fn smooth_derivative(&self, s: f64) -> Option<f64> {
        match self {
            MonotoneGraph::DoubleObstacle { .. } => None,
            MonotoneGraph::Power { exponent } => {
                let p = *exponent as i32;
                Some(p as f64 * s.powi(p - 1))
            }
            MonotoneGraph::Linear { slope } => Some(*slope),
            MonotoneGraph::Smooth(g) => Some((g.derivative)(s)),
            MonotoneGraph::Zero => Some(0.0),
        }
    }

    /// Element of least modulus in `γ(s)`.
    pub fn minimal_section(&self, s: f64) -> Result<f64> {
        if !self.in_domain(s) {
            return Err(Error::OutsideDomain { value: s });
        }
        // both endpoint rays of the obstacle contain 0
        Ok(self.smooth_value(s).unwrap_or(0.0))
    }

    /// `J_ε(s) = (I + εγ)⁻¹(s)`.
    pub fn resolvent(&self, eps: f64, s: f64) -> f64 {
        debug_assert!(eps > 0.0);
        match self {
            MonotoneGraph::DoubleObstacle { lower, upper } => s.clamp(*lower, *upper),
            MonotoneGraph::Linear { slope } => s / (1.0 + eps * slope),
            MonotoneGraph::Zero => s,
            _ => self.solve_resolvent(eps, s),
        }
    }

    /// Safeguarded Newton on `r + εγ(r) = s`, bracketed by `0` and `s`.
    fn solve_resolvent(&self, eps: f64, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let gamma = |r: f64| self.smooth_value(r).expect("single-valued graph");
        let dgamma = |r: f64| self.smooth_derivative(r).expect("single-valued graph");
        let residual = |r: f64| r + eps * gamma(r) - s;
        let (mut lo, mut hi) = if s > 0.0 { (0.0, s) } else { (s, 0.0) };
        let tol = 1e-14 * (1.0 + s.abs());
        // Newton from the linearization at 0 stays inside the bracket.
        let mut r = s / (1.0 + eps * dgamma(0.0));
        for _ in 0..200 {
            let f = residual(r);
            if f.abs() <= tol {
                return r;
            }
            if f > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let d = 1.0 + eps * dgamma(r);
            let mut next = r - f / d;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if next == r || hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
                return next;
            }
            r = next;
        }
        r
    }

    /// `γ_ε(s) = (s - J_ε(s))/ε`.
    pub fn yosida(&self, eps: f64, s: f64) -> f64 {
        match self {
            MonotoneGraph::Linear { slope } => slope * s / (1.0 + eps * slope),
            MonotoneGraph::Zero => 0.0,
            MonotoneGraph::DoubleObstacle { .. } => (s - self.resolvent(eps, s)) / eps,
            _ => {
                // γ(J_ε s) avoids the cancellation in (s - r)/ε
                let r = self.resolvent(eps, s);
                self.smooth_value(r).unwrap()
            }
        }
    }

    /// `φ_ε(s) = |s - J_ε(s)|²/(2ε) + φ(J_ε(s))`.
    pub fn moreau(&self, eps: f64, s: f64) -> f64 {
        match self {
            MonotoneGraph::Linear { slope } => 0.5 * slope * s * s / (1.0 + eps * slope),
            MonotoneGraph::Zero => 0.0,
            _ => {
                let r = self.resolvent(eps, s);
                let d = s - r;
                d * d / (2.0 * eps) + self.potential(r)
            }
        }
    }

    /// Derivative of `γ_ε`; at a kink the right limit is returned.
    pub fn yosida_derivative(&self, eps: f64, s: f64) -> f64 {
        match self {
            MonotoneGraph::DoubleObstacle { lower, upper } => {
                if s >= *upper || s < *lower {
                    1.0 / eps
                } else {
                    0.0
                }
            }
            MonotoneGraph::Linear { slope } => slope / (1.0 + eps * slope),
            MonotoneGraph::Zero => 0.0,
            _ => {
                let r = self.resolvent(eps, s);
                let d = self.smooth_derivative(r).unwrap();
                d / (1.0 + eps * d)
            }
        }
    }
}

/// A graph paired with a fixed regularization parameter.
#[derive(Debug, Clone)]
pub struct YosidaOperator {
    graph: MonotoneGraph,
    eps: f64,
}

impl YosidaOperator {
    pub fn new(graph: MonotoneGraph, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
        }
        Ok(Self { graph, eps })
    }

    pub fn graph(&self) -> &MonotoneGraph {
        &self.graph
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn resolvent(&self, s: f64) -> f64 {
        self.graph.resolvent(self.eps, s)
    }

    pub fn value(&self, s: f64) -> f64 {
        self.graph.yosida(self.eps, s)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.graph.yosida_derivative(self.eps, s)
    }

    pub fn envelope(&self, s: f64) -> f64 {
        self.graph.moreau(self.eps, s)
    }
}
