//! Neumann eigenbasis of the Laplacian on a box.
//!
//! On `[0, L]` the L²-orthonormal eigenfunctions are `1/√L` and
//! `√(2/L) cos(kπx/L)` with eigenvalue `(kπ/L)²`. In 2D the basis is the tensor
//! product and the eigenvalue is the sum of the axis eigenvalues. Modes are
//! ordered by eigenvalue, ties broken lexicographically by the per-axis index
//! tuple; [`SpectralBasis::modes`] lists the tuples in storage order.
//!
//! Nonlinear terms are evaluated on a tensor Gauss–Legendre grid with
//! `2n + 16` nodes on an axis carrying `n` modes. Grid values are stored
//! row-major with the last axis fastest.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lengths: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 2 {
            return Err(Error::InvalidDomain(format!(
                "dimension must be 1 or 2, got {}",
                lengths.len()
            )));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidDomain(format!("side length {l} is not positive")));
        }
        Ok(Self { lengths })
    }

    pub fn interval(length: f64) -> Result<Self> {
        Self::new(vec![length])
    }

    pub fn rectangle(lx: f64, ly: f64) -> Result<Self> {
        Self::new(vec![lx, ly])
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }
}

/// Expansion coefficients in the eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffVector(pub Vec<f64>);

impl CoeffVector {
    pub fn zeros(n: usize) -> Self {
        CoeffVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &CoeffVector) -> CoeffVector {
        CoeffVector(self.0.iter().zip(&other.0).map(|(x, y)| x + a * y).collect())
    }

    pub fn sub(&self, other: &CoeffVector) -> CoeffVector {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, a: f64) -> CoeffVector {
        CoeffVector(self.0.iter().map(|x| a * x).collect())
    }
}

/// Values on the tensor quadrature grid of a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::new(self.values.iter().map(|&x| f(x)).collect())
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        check_len(self.values.len(), other.values.len())?;
        Ok(GridFunction::new(
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `(‖c‖_H, |c|_V, ‖Δc‖_H)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1_seminorm: f64,
    pub laplacian_l2: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    domain: BoxDomain,
    n_modes: Vec<usize>,
    modes: Vec<Vec<usize>>,
    eigenvalues: Vec<f64>,
    axis_nodes: Vec<Vec<f64>>,
    grid_shape: Vec<usize>,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    // n_points x n_total, row-major
    synth: Vec<f64>,
    // one n_points x n_total matrix per axis
    grad_synth: Vec<Vec<f64>>,
}

fn axis_eigenfunction(k: usize, length: f64, x: f64) -> (f64, f64) {
    if k == 0 {
        (1.0 / length.sqrt(), 0.0)
    } else {
        let kappa = k as f64 * PI / length;
        let a = (2.0 / length).sqrt();
        (a * (kappa * x).cos(), -a * kappa * (kappa * x).sin())
    }
}

/// Quadrature nodes used on an axis carrying `n` modes.
pub fn quadrature_nodes_for(n: usize) -> usize {
    2 * n + 16
}

impl SpectralBasis {
    pub fn new(domain: BoxDomain, n_modes: Vec<usize>) -> Result<Self> {
        if n_modes.len() != domain.dim() {
            return Err(Error::InvalidBasis(format!(
                "{} mode counts given for a {}-dimensional domain",
                n_modes.len(),
                domain.dim()
            )));
        }
        if n_modes.contains(&0) {
            return Err(Error::InvalidBasis("mode counts must be positive".into()));
        }
        let lengths = domain.lengths().to_vec();
        let axis_eig = |axis: usize, k: usize| (k as f64 * PI / lengths[axis]).powi(2);

        let mut modes: Vec<Vec<usize>> = match n_modes.as_slice() {
            [n] => (0..*n).map(|i| vec![i]).collect(),
            [nx, ny] => (0..*nx)
                .flat_map(|i| (0..*ny).map(move |j| vec![i, j]))
                .collect(),
            _ => unreachable!(),
        };
        let eig_of = |m: &Vec<usize>| m.iter().enumerate().map(|(a, &k)| axis_eig(a, k)).sum::<f64>();
        // stable: ties keep lexicographic order
        modes.sort_by(|a, b| eig_of(a).partial_cmp(&eig_of(b)).unwrap());
        let eigenvalues: Vec<f64> = modes.iter().map(eig_of).collect();

        let mut axis_nodes = Vec::new();
        let mut axis_weights = Vec::new();
        for (a, &n) in n_modes.iter().enumerate() {
            let (x, w) = gauss_legendre(quadrature_nodes_for(n), 0.0, lengths[a]);
            axis_nodes.push(x);
            axis_weights.push(w);
        }
        let grid_shape: Vec<usize> = axis_nodes.iter().map(Vec::len).collect();

        let mut points = Vec::new();
        let mut weights = Vec::new();
        match grid_shape.as_slice() {
            [qx] => {
                for i in 0..*qx {
                    points.push(vec![axis_nodes[0][i]]);
                    weights.push(axis_weights[0][i]);
                }
            }
            [qx, qy] => {
                for i in 0..*qx {
                    for j in 0..*qy {
                        points.push(vec![axis_nodes[0][i], axis_nodes[1][j]]);
                        weights.push(axis_weights[0][i] * axis_weights[1][j]);
                    }
                }
            }
            _ => unreachable!(),
        }

        let n_total = modes.len();
        let dim = domain.dim();
        let mut synth = vec![0.0; points.len() * n_total];
        let mut grad_synth = vec![vec![0.0; points.len() * n_total]; dim];
        for (p, x) in points.iter().enumerate() {
            for (i, m) in modes.iter().enumerate() {
                let parts: Vec<(f64, f64)> = m
                    .iter()
                    .enumerate()
                    .map(|(a, &k)| axis_eigenfunction(k, lengths[a], x[a]))
                    .collect();
                synth[p * n_total + i] = parts.iter().map(|v| v.0).product();
                for a in 0..dim {
                    grad_synth[a][p * n_total + i] = parts
                        .iter()
                        .enumerate()
                        .map(|(b, v)| if a == b { v.1 } else { v.0 })
                        .product();
                }
            }
        }

        Ok(Self {
            domain,
            n_modes,
            modes,
            eigenvalues,
            axis_nodes,
            grid_shape,
            points,
            weights,
            synth,
            grad_synth,
        })
    }

    pub fn interval(length: f64, n_modes: usize) -> Result<Self> {
        Self::new(BoxDomain::interval(length)?, vec![n_modes])
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn n_modes(&self) -> &[usize] {
        &self.n_modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Vec<usize>] {
        &self.modes
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn grid_shape(&self) -> &[usize] {
        &self.grid_shape
    }

    pub fn axis_nodes(&self) -> &[Vec<f64>] {
        &self.axis_nodes
    }

    /// Quadrature points, each a coordinate tuple.
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Value of basis function `i` at grid point `p`.
    pub fn basis_value(&self, p: usize, i: usize) -> f64 {
        self.synth[p * self.len() + i]
    }

    pub fn zeros(&self) -> CoeffVector {
        CoeffVector::zeros(self.len())
    }

    /// Samples `f` at the quadrature points.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> GridFunction {
        GridFunction::new(self.points.iter().map(|x| f(x)).collect())
    }

    pub fn to_grid(&self, c: &CoeffVector) -> Result<GridFunction> {
        check_len(self.len(), c.len())?;
        Ok(GridFunction::new(synthesize(&self.synth, self.len(), &c.0)))
    }

    /// Component `axis` of the gradient of `Σ c_i v_i` on the grid.
    pub fn gradient_to_grid(&self, c: &CoeffVector, axis: usize) -> Result<GridFunction> {
        check_len(self.len(), c.len())?;
        let m = self
            .grad_synth
            .get(axis)
            .ok_or_else(|| Error::InvalidParameter(format!("axis {axis} out of range")))?;
        Ok(GridFunction::new(synthesize(m, self.len(), &c.0)))
    }

    /// L²-orthogonal projection onto the span by quadrature.
    pub fn project(&self, gf: &GridFunction) -> Result<CoeffVector> {
        check_len(self.n_points(), gf.values.len())?;
        let n = self.len();
        let mut c = vec![0.0; n];
        for (p, (&g, &w)) in gf.values.iter().zip(&self.weights).enumerate() {
            let wg = w * g;
            if wg == 0.0 {
                continue;
            }
            let row = &self.synth[p * n..(p + 1) * n];
            for (ci, &b) in c.iter_mut().zip(row) {
                *ci += wg * b;
            }
        }
        Ok(CoeffVector(c))
    }

    pub fn project_fn(&self, f: impl Fn(&[f64]) -> f64) -> CoeffVector {
        self.project(&self.sample(f)).expect("sample has grid length")
    }

    /// Quadrature integral of a grid function over the domain.
    pub fn integrate(&self, gf: &GridFunction) -> Result<f64> {
        check_len(self.n_points(), gf.values.len())?;
        Ok(gf.values.iter().zip(&self.weights).map(|(g, w)| g * w).sum())
    }

    /// Quadrature L² norm of a grid function.
    pub fn grid_l2(&self, gf: &GridFunction) -> Result<f64> {
        Ok(self.integrate(&gf.map(|x| x * x))?.sqrt())
    }

    pub fn norms(&self, c: &CoeffVector) -> Result<Norms> {
        check_len(self.len(), c.len())?;
        let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
        for (&ci, &l) in c.0.iter().zip(&self.eigenvalues) {
            a += ci * ci;
            b += l * ci * ci;
            d += l * l * ci * ci;
        }
        Ok(Norms {
            l2: a.sqrt(),
            h1_seminorm: b.sqrt(),
            laplacian_l2: d.sqrt(),
        })
    }

    pub fn grid_norms(&self, gf: &GridFunction) -> Result<Norms> {
        self.norms(&self.project(gf)?)
    }

    /// `√(Σ w(λ_i) c_i²)`; the building block of every Sobolev-type norm here.
    pub fn weighted_norm(&self, c: &CoeffVector, weight: impl Fn(f64) -> f64) -> f64 {
        c.0.iter()
            .zip(&self.eigenvalues)
            .map(|(ci, &l)| weight(l) * ci * ci)
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm(&self, c: &CoeffVector) -> f64 {
        self.weighted_norm(c, |_| 1.0)
    }

    pub fn h1_norm(&self, c: &CoeffVector) -> f64 {
        self.weighted_norm(c, |l| 1.0 + l)
    }

    pub fn h2_norm(&self, c: &CoeffVector) -> f64 {
        self.weighted_norm(c, |l| 1.0 + l + l * l)
    }

    /// Dual norm for the `(1 - Δ)` pairing: `√(Σ c_i²/(1+λ_i))`.
    pub fn dual_norm(&self, c: &CoeffVector) -> f64 {
        self.weighted_norm(c, |l| 1.0 / (1.0 + l))
    }

    /// `Λc`, i.e. the coefficients of `-Δ` applied to `c`.
    pub fn apply_stiffness(&self, c: &CoeffVector) -> CoeffVector {
        CoeffVector(c.0.iter().zip(&self.eigenvalues).map(|(x, l)| x * l).collect())
    }

    /// Re-expresses coefficients of this basis in `target`, keeping the modes
    /// both share (exact orthogonal projection between nested spaces).
    pub fn restrict(&self, c: &CoeffVector, target: &SpectralBasis) -> Result<CoeffVector> {
        check_len(self.len(), c.len())?;
        if self.domain != target.domain {
            return Err(Error::IncompatibleGrids("domains differ".into()));
        }
        let mut out = target.zeros();
        for (j, m) in target.modes.iter().enumerate() {
            if let Some(i) = self.modes.iter().position(|x| x == m) {
                out.0[j] = c.0[i];
            }
        }
        Ok(out)
    }

    /// Evaluates `Σ c_i v_i` at an arbitrary point of the box.
    pub fn evaluate(&self, c: &CoeffVector, x: &[f64]) -> Result<f64> {
        check_len(self.len(), c.len())?;
        check_len(self.domain.dim(), x.len())?;
        let l = self.domain.lengths();
        Ok(self
            .modes
            .iter()
            .zip(&c.0)
            .map(|(m, ci)| {
                ci * m
                    .iter()
                    .enumerate()
                    .map(|(a, &k)| axis_eigenfunction(k, l[a], x[a]).0)
                    .product::<f64>()
            })
            .sum())
    }

    /// Index of the mode with the given per-axis wavenumbers.
    pub fn mode_index(&self, wavenumbers: &[usize]) -> Option<usize> {
        self.modes.iter().position(|m| m.as_slice() == wavenumbers)
    }

    /// Unit-L²-norm coefficient vector of a single mode.
    pub fn unit_mode(&self, wavenumbers: &[usize]) -> Result<CoeffVector> {
        let i = self.mode_index(wavenumbers).ok_or_else(|| {
            Error::InvalidParameter(format!("mode {wavenumbers:?} is not in the basis"))
        })?;
        let mut c = self.zeros();
        c.0[i] = 1.0;
        Ok(c)
    }
}

fn synthesize(matrix: &[f64], n: usize, c: &[f64]) -> Vec<f64> {
    matrix
        .chunks_exact(n)
        .map(|row| row.iter().zip(c).map(|(b, x)| b * x).sum())
        .collect()
}
