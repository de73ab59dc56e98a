//! Model data and the physics functionals built on it.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{BoxDomain, CoeffVector, GridFunction, SpectralBasis};
use crate::error::{check_len, Error, Result};
use crate::graph::MonotoneGraph;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A closure of the spatial coordinates.
#[derive(Clone)]
pub struct SpaceFn(pub Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>);

/// A closure of `(x, t)`.
#[derive(Clone)]
pub struct SpaceTimeFn(pub Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>);

impl fmt::Debug for SpaceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SpaceFn(..)")
    }
}

impl fmt::Debug for SpaceTimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SpaceTimeFn(..)")
    }
}

impl PartialEq for SpaceFn {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl PartialEq for SpaceTimeFn {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemParams {
    pub alpha: f64,
    /// `0` selects the type I limit problem.
    pub beta: f64,
    pub eps: f64,
    pub t_final: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.1,
            eps: 1e-2,
            t_final: 1.0,
        }
    }
}

impl ProblemParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return bad(format!("eps must lie in (0, 1], got {}", self.eps));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be > 0, got {}", self.t_final));
        }
        Ok(())
    }
}

/// The Lipschitz part `g` of the phase nonlinearity, with `G' = g`.
#[derive(Clone)]
pub struct SmoothNonlinearity {
    pub name: String,
    pub g: ScalarFn,
    pub dg: ScalarFn,
    pub antiderivative: ScalarFn,
    pub lipschitz: f64,
}

impl fmt::Debug for SmoothNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothNonlinearity")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl SmoothNonlinearity {
    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            g: Arc::new(|_| 0.0),
            dg: Arc::new(|_| 0.0),
            antiderivative: Arc::new(|_| 0.0),
            lipschitz: 0.0,
        }
    }

    /// `g(s) = c s`, `G(s) = c s²/2`.
    pub fn linear(c: f64) -> Self {
        Self {
            name: "linear".into(),
            g: Arc::new(move |s| c * s),
            dg: Arc::new(move |_| c),
            antiderivative: Arc::new(move |s| 0.5 * c * s * s),
            lipschitz: c.abs(),
        }
    }

    /// `G(s) = 1 - s²`, the concave part of the double-well with obstacle.
    pub fn quadratic_well() -> Self {
        Self {
            name: "quadratic_well".into(),
            g: Arc::new(|s| -2.0 * s),
            dg: Arc::new(|_| -2.0),
            antiderivative: Arc::new(|s| 1.0 - s * s),
            lipschitz: 2.0,
        }
    }

    pub fn g(&self, s: f64) -> f64 {
        (self.g)(s)
    }

    pub fn dg(&self, s: f64) -> f64 {
        (self.dg)(s)
    }

    #[allow(non_snake_case)]
    pub fn G(&self, s: f64) -> f64 {
        (self.antiderivative)(s)
    }
}

/// Closed-form spatial profiles. Cosine factors use `cos(kπx/L)` per axis;
/// `Mode` is the L²-normalized eigenfunction, so `amplitude` is its norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Field {
    Constant {
        value: f64,
    },
    Cosine {
        amplitude: f64,
        wavenumbers: Vec<usize>,
    },
    Mode {
        amplitude: f64,
        wavenumbers: Vec<usize>,
    },
    /// `offset + amplitude·tanh((x - center)/width)` along the first axis.
    TanhFront {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        center: f64,
        width: f64,
    },
    Sum {
        terms: Vec<Field>,
    },
    #[serde(skip)]
    Custom(SpaceFn),
}

impl Default for Field {
    fn default() -> Self {
        Field::Constant { value: 0.0 }
    }
}

impl Field {
    pub fn zero() -> Self {
        Field::default()
    }

    pub fn eval(&self, x: &[f64], domain: &BoxDomain) -> f64 {
        let l = domain.lengths();
        match self {
            Field::Constant { value } => *value,
            Field::Cosine {
                amplitude,
                wavenumbers,
            } => {
                amplitude
                    * wavenumbers
                        .iter()
                        .zip(x)
                        .zip(l)
                        .map(|((&k, &xi), &li)| (k as f64 * PI * xi / li).cos())
                        .product::<f64>()
            }
            Field::Mode {
                amplitude,
                wavenumbers,
            } => {
                amplitude
                    * wavenumbers
                        .iter()
                        .zip(x)
                        .zip(l)
                        .map(|((&k, &xi), &li)| {
                            if k == 0 {
                                1.0 / li.sqrt()
                            } else {
                                (2.0 / li).sqrt() * (k as f64 * PI * xi / li).cos()
                            }
                        })
                        .product::<f64>()
            }
            Field::TanhFront {
                offset,
                amplitude,
                center,
                width,
            } => offset + amplitude * ((x[0] - center) / width).tanh(),
            Field::Sum { terms } => terms.iter().map(|t| t.eval(x, domain)).sum(),
            Field::Custom(f) => (f.0)(x),
        }
    }

    pub fn plus(self, other: Field) -> Field {
        match self {
            Field::Sum { mut terms } => {
                terms.push(other);
                Field::Sum { terms }
            }
            f => Field::Sum {
                terms: vec![f, other],
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeProfile {
    Constant { value: f64 },
    /// `amplitude·e^{rate·t}`
    Exp { amplitude: f64, rate: f64 },
    /// `c0 + c1·t`
    Affine { c0: f64, c1: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant { value } => value,
            TimeProfile::Exp { amplitude, rate } => amplitude * (rate * t).exp(),
            TimeProfile::Affine { c0, c1 } => c0 + c1 * t,
        }
    }

    pub fn d1(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant { .. } => 0.0,
            TimeProfile::Exp { amplitude, rate } => amplitude * rate * (rate * t).exp(),
            TimeProfile::Affine { c1, .. } => c1,
        }
    }

    pub fn d2(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Exp { amplitude, rate } => amplitude * rate * rate * (rate * t).exp(),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Forcing {
    #[default]
    Zero,
    Separable {
        space: Field,
        time: TimeProfile,
    },
    Sum {
        terms: Vec<Forcing>,
    },
    #[serde(skip)]
    Custom(SpaceTimeFn),
}

impl Forcing {
    pub fn eval(&self, x: &[f64], t: f64, domain: &BoxDomain) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Separable { space, time } => space.eval(x, domain) * time.value(t),
            Forcing::Sum { terms } => terms.iter().map(|f| f.eval(x, t, domain)).sum(),
            Forcing::Custom(f) => (f.0)(x, t),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Forcing::Zero => true,
            Forcing::Sum { terms } => terms.iter().all(Forcing::is_zero),
            _ => false,
        }
    }

    pub fn plus(self, other: Forcing) -> Forcing {
        match (self, other) {
            (Forcing::Zero, o) => o,
            (s, Forcing::Zero) => s,
            (Forcing::Sum { mut terms }, o) => {
                terms.push(o);
                Forcing::Sum { terms }
            }
            (s, o) => Forcing::Sum { terms: vec![s, o] },
        }
    }

    /// `P_n` of the forcing at time `t`.
    pub fn project(&self, basis: &SpectralBasis, t: f64) -> CoeffVector {
        if self.is_zero() {
            return basis.zeros();
        }
        let d = basis.domain();
        basis.project_fn(|x| self.eval(x, t, d))
    }
}

/// Source `f` of the balance equation and an optional source `h` of the phase
/// equation; `h` is zero except for manufactured-solution runs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingTerm {
    #[serde(default)]
    pub f: Forcing,
    #[serde(default)]
    pub phase_source: Forcing,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default)]
    pub w0: Field,
    #[serde(default)]
    pub v0: Field,
    #[serde(default)]
    pub u0: Field,
}

#[derive(Debug, Clone)]
pub struct ProblemData {
    pub params: ProblemParams,
    pub graph: MonotoneGraph,
    pub nl: SmoothNonlinearity,
    pub forcing: ForcingTerm,
    pub init: InitialData,
    pub domain: BoxDomain,
}

impl ProblemData {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.nl.lipschitz < 0.0 || !self.nl.lipschitz.is_finite() {
            return Err(Error::InvalidParameter("Lipschitz constant of g must be finite".into()));
        }
        Ok(())
    }

    /// Free energy of `(θ, u)` with the regularized potential `φ_ε`.
    pub fn energy(&self, theta: &GridFunction, u: &GridFunction, basis: &SpectralBasis) -> Result<f64> {
        let eps = self.params.eps;
        free_energy(
            theta,
            u,
            basis,
            |s| self.graph.moreau(eps, s),
            |s| self.nl.G(s),
        )
    }
}

/// `∫ -θ²/2 - θu + φ(u) + G(u) + |∇u|²/2`; `+∞` as soon as `φ(u)` is infinite
/// at some quadrature node.
pub fn free_energy(
    theta: &GridFunction,
    u: &GridFunction,
    basis: &SpectralBasis,
    potential: impl Fn(f64) -> f64,
    antiderivative: impl Fn(f64) -> f64,
) -> Result<f64> {
    check_len(basis.n_points(), theta.values.len())?;
    check_len(basis.n_points(), u.values.len())?;
    let mut total = 0.0;
    for ((&th, &us), &w) in theta.values.iter().zip(&u.values).zip(basis.weights()) {
        let phi = potential(us);
        if phi == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        total += w * (-0.5 * th * th - th * us + phi + antiderivative(us));
    }
    let grad = basis.grid_norms(u)?.h1_seminorm;
    Ok(total + 0.5 * grad * grad)
}

/// `e = w_t + u`.
pub fn enthalpy(w_t: &GridFunction, u: &GridFunction) -> Result<GridFunction> {
    w_t.zip_with(u, |a, b| a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxLaw {
    /// `q = -α∇w_t`
    TypeI,
    /// `q = -β∇w`
    TypeII,
    /// `q = -α∇w_t - β∇w`
    TypeIII,
}

/// Heat flux on the grid, one component per axis.
pub fn heat_flux(
    law: FluxLaw,
    w: &CoeffVector,
    w_t: &CoeffVector,
    alpha: f64,
    beta: f64,
    basis: &SpectralBasis,
) -> Result<Vec<GridFunction>> {
    check_len(basis.len(), w.len())?;
    check_len(basis.len(), w_t.len())?;
    let (a, b) = match law {
        FluxLaw::TypeI => (alpha, 0.0),
        FluxLaw::TypeII => (0.0, beta),
        FluxLaw::TypeIII => (alpha, beta),
    };
    let combined = w_t.scale(-a).axpy(-b, w);
    (0..basis.domain().dim())
        .map(|axis| basis.gradient_to_grid(&combined, axis))
        .collect()
}

/// `w(t_k) = w₀ + ∫₀^{t_k} θ` by the trapezoid rule on a uniform grid.
pub fn thermal_displacement(theta: &[CoeffVector], dt: f64, w0: &CoeffVector) -> Result<Vec<CoeffVector>> {
    let mut out = Vec::with_capacity(theta.len());
    if theta.is_empty() {
        return Ok(out);
    }
    for th in theta {
        check_len(w0.len(), th.len())?;
    }
    out.push(w0.clone());
    for k in 1..theta.len() {
        let next = out[k - 1].axpy(0.5 * dt, &theta[k - 1]).axpy(0.5 * dt, &theta[k]);
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis() -> SpectralBasis {
        SpectralBasis::interval(1.0, 6).unwrap()
    }

    #[test]
    fn energy_of_constant_fields() {
        let b = basis();
        let zero = b.sample(|_| 0.0);
        let well = SmoothNonlinearity::quadratic_well();
        let obstacle = MonotoneGraph::double_obstacle(-1.0, 1.0).unwrap();
        let e = free_energy(&zero, &zero, &b, |s| obstacle.potential(s), |s| well.G(s)).unwrap();
        assert!((e - 1.0).abs() < 1e-13);
        let e = free_energy(&zero, &zero, &b, |_| 0.0, |_| 0.0).unwrap();
        assert_eq!(e, 0.0);
        let one = b.sample(|_| 1.0);
        let e = free_energy(&one, &one, &b, |s| obstacle.potential(s), |s| well.G(s)).unwrap();
        assert!((e + 1.5).abs() < 1e-13);
        let out = b.sample(|_| 1.2);
        let e = free_energy(&zero, &out, &b, |s| obstacle.potential(s), |s| well.G(s)).unwrap();
        assert_eq!(e, f64::INFINITY);
    }

    #[test]
    fn energy_gradient_term() {
        // u = √2 cos(πx): ∫|∇u|²/2 = π²/2, ∫G(u) = ∫1 - u² = 0
        let b = basis();
        let u = b.sample(|x| 2f64.sqrt() * (PI * x[0]).cos());
        let zero = b.sample(|_| 0.0);
        let e = free_energy(&zero, &u, &b, |_| 0.0, |s| 1.0 - s * s).unwrap();
        assert!((e - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn enthalpy_sums() {
        let a = GridFunction::new(vec![2.0; 4]);
        let b = GridFunction::new(vec![3.0; 4]);
        assert_eq!(enthalpy(&a, &b).unwrap().values, vec![5.0; 4]);
        let z = GridFunction::new(vec![0.0; 4]);
        assert_eq!(enthalpy(&z, &b).unwrap(), b);
        assert!(enthalpy(&a, &GridFunction::new(vec![0.0; 3])).is_err());
        let s = enthalpy(&a.map(|x| 1.5 * x), &b.map(|x| 1.5 * x)).unwrap();
        assert_eq!(s, enthalpy(&a, &b).unwrap().map(|x| 1.5 * x));
    }

    #[test]
    fn flux_laws() {
        let b = basis();
        let w = b.unit_mode(&[1]).unwrap();
        let wt = CoeffVector(vec![0.3, 0.1, -0.2, 0.0, 0.05, 0.0]);
        let q2 = heat_flux(FluxLaw::TypeII, &w, &b.zeros(), 1.0, 1.0, &b).unwrap();
        for (p, q) in b.points().iter().zip(&q2[0].values) {
            let exact = 2f64.sqrt() * PI * (PI * p[0]).sin();
            assert!((q - exact).abs() < 1e-10);
        }
        let q1 = heat_flux(FluxLaw::TypeI, &w, &wt, 0.7, 0.0, &b).unwrap();
        let q3 = heat_flux(FluxLaw::TypeIII, &w, &wt, 0.7, 0.0, &b).unwrap();
        assert_eq!(q1, q3);
        let constant = CoeffVector(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let q = heat_flux(FluxLaw::TypeIII, &constant, &constant, 1.0, 1.0, &b).unwrap();
        assert!(q[0].sup_abs() == 0.0);
    }

    #[test]
    fn displacement_of_constant_temperature() {
        let c = CoeffVector(vec![0.5, -1.0]);
        let w0 = CoeffVector(vec![1.0, 2.0]);
        let theta = vec![c.clone(); 11];
        let w = thermal_displacement(&theta, 0.1, &w0).unwrap();
        for (k, wk) in w.iter().enumerate() {
            let t = 0.1 * k as f64;
            assert!((wk.0[0] - (1.0 + 0.5 * t)).abs() < 1e-14);
            assert!((wk.0[1] - (2.0 - t)).abs() < 1e-14);
        }
        let w = thermal_displacement(&vec![CoeffVector::zeros(2); 5], 0.1, &w0).unwrap();
        assert!(w.iter().all(|x| *x == w0));
    }

    #[test]
    fn params_validation() {
        assert!(ProblemParams::default().validate().is_ok());
        let p = ProblemParams { beta: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ProblemParams { beta: 0.0, ..Default::default() };
        assert!(p.validate().is_ok());
        let p = ProblemParams { alpha: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = ProblemParams { eps: 2.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn mode_field_has_unit_norm() {
        let b = SpectralBasis::interval(2.0, 5).unwrap();
        let f = Field::Mode { amplitude: 1.0, wavenumbers: vec![2] };
        let c = b.project_fn(|x| f.eval(x, b.domain()));
        assert!((b.l2_norm(&c) - 1.0).abs() < 1e-12);
        assert!((c.0[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_nonlinearity_antiderivative() {
        for nl in [SmoothNonlinearity::quadratic_well(), SmoothNonlinearity::linear(0.7)] {
            for s in [-1.3, 0.2, 0.9] {
                let h = 1e-4;
                let fd = (nl.G(s + h) - nl.G(s - h)) / (2.0 * h);
                assert!((fd - nl.g(s)).abs() < 1e-8);
                assert!((nl.g(s) - nl.g(0.1)).abs() <= nl.lipschitz * (s - 0.1f64).abs() + 1e-15);
            }
        }
    }
}
