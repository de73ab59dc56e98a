//! Norms, monitors and time-convolution utilities over trajectories.
//!
//! Discrete conventions: `L²(0,T; X)` norms use the trapezoid rule over the
//! stored nodes, `L∞(0,T; X)` the maximum over nodes, and `u_t` the forward
//! difference between consecutive nodes (integrated as a piecewise constant).
//! `sup_Q` channels are maxima over the quadrature grid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::basis::{CoeffVector, SpectralBasis};
use crate::error::{check_len, Error, Result};
use crate::problem::ProblemData;
use crate::solver::{residuals, Trajectory};

/// Monitor channel names with their meaning, in report order.
pub const MONITOR_CHANNELS: &[(&str, &str)] = &[
    ("u_sup_l2", "sup_t ||u||_H"),
    ("grad_u_sq_int", "int_0^T ||grad u||_H^2 dt"),
    ("v_sq_int", "int_0^T ||w_t||_H^2 dt"),
    ("sqrt_alpha_grad_w_sup", "sqrt(alpha) sup_t ||grad w||_H"),
    ("v_sup_l2", "sup_t ||w_t||_H"),
    ("sqrt_beta_grad_w_sup", "sqrt(beta) sup_t ||grad w||_H"),
    ("u_t_sq_int", "int_0^T ||u_t||_H^2 dt"),
    ("phi_eps_int_sup", "sup_t int phi_eps(u)"),
    ("sixth_estimate", "v_sup_l2 + sqrt_beta_grad_w_sup + u_t_sq_int + phi_eps_int_sup"),
    ("v_sup_q", "sup_Q |w_t|"),
    ("xi_sup_q", "sup_Q |gamma_eps(u)|"),
    ("overshoot_sup_q", "sup_Q dist(u, D(gamma))"),
    ("energy_initial", "free energy at t = 0"),
    ("energy_final", "free energy at t = T"),
    ("energy_max_increase", "max_k (E_{k+1} - E_k)"),
    ("enthalpy_residual_l2", "L2(0,T;H) norm of e_t + div q - f, central differences"),
];

/// The channels of the first a priori bound, which must not degrade as β ↘ 0.
pub const ESTIMATE_ONE_CHANNELS: &[&str] = &["u_sup_l2", "grad_u_sq_int", "v_sq_int", "sqrt_alpha_grad_w_sup"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub channels: BTreeMap<String, f64>,
    pub times: Vec<f64>,
    pub energy_trace: Vec<f64>,
    /// Channels that came out NaN or infinite.
    pub non_finite: Vec<String>,
}

impl MonitorReport {
    pub fn get(&self, name: &str) -> f64 {
        self.channels.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("channel,value\n");
        for (name, _) in MONITOR_CHANNELS {
            s.push_str(&format!("{name},{}\n", fmt_f64(self.get(name))));
        }
        s
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

fn sup(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// `(a ∗ b)(t_k) = ∫₀^{t_k} a(s) b(t_k - s) ds`, trapezoid rule.
pub fn convolve_time(a: &[f64], b: &[f64], dt: f64) -> Result<Vec<f64>> {
    check_len(a.len(), b.len())?;
    Ok((0..a.len())
        .map(|k| {
            let prod: Vec<f64> = (0..=k).map(|j| a[j] * b[k - j]).collect();
            trapezoid(&prod, dt)
        })
        .collect())
}

/// `(1 ∗ a)(t_k)`, the running integral.
pub fn running_integral(a: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    let mut acc = 0.0;
    for k in 0..a.len() {
        if k > 0 {
            acc += 0.5 * dt * (a[k - 1] + a[k]);
        }
        out.push(acc);
    }
    out
}

fn forward_diff_sq_int(basis: &SpectralBasis, series: &[&CoeffVector], dt: f64, weight: impl Fn(f64) -> f64 + Copy) -> f64 {
    series
        .windows(2)
        .map(|p| {
            let d = p[1].sub(p[0]).scale(1.0 / dt);
            dt * basis.weighted_norm(&d, weight).powi(2)
        })
        .sum()
}

pub fn monitor(traj: &Trajectory, pd: &ProblemData, basis: &SpectralBasis) -> Result<MonitorReport> {
    let states = &traj.states;
    let dt = traj.dt;
    let alpha = pd.params.alpha;
    let beta = pd.params.beta;
    let eps = pd.params.eps;
    for s in states {
        check_len(basis.len(), s.u.len())?;
    }

    let u_l2: Vec<f64> = states.iter().map(|s| basis.l2_norm(&s.u)).collect();
    let grad_u_sq: Vec<f64> = states.iter().map(|s| basis.weighted_norm(&s.u, |l| l).powi(2)).collect();
    let v_sq: Vec<f64> = states.iter().map(|s| basis.l2_norm(&s.v).powi(2)).collect();
    let grad_w: Vec<f64> = states.iter().map(|s| basis.weighted_norm(&s.w, |l| l)).collect();

    let mut phi_int = Vec::with_capacity(states.len());
    let mut energy = Vec::with_capacity(states.len());
    let mut v_sup_q = 0.0f64;
    let mut xi_sup_q = 0.0f64;
    let mut overshoot = 0.0f64;
    for s in states {
        let u = basis.to_grid(&s.u)?;
        let v = basis.to_grid(&s.v)?;
        phi_int.push(basis.integrate(&u.map(|x| pd.graph.moreau(eps, x)))?);
        energy.push(pd.energy(&v, &u, basis)?);
        v_sup_q = v_sup_q.max(v.sup_abs());
        xi_sup_q = xi_sup_q.max(u.map(|x| pd.graph.yosida(eps, x)).sup_abs());
        overshoot = overshoot.max(sup(u.values.iter().map(|&x| pd.graph.domain_distance(x))));
    }

    let u_series: Vec<&CoeffVector> = states.iter().map(|s| &s.u).collect();
    let mut ch = BTreeMap::new();
    ch.insert("u_sup_l2".to_string(), sup(u_l2.iter().copied()));
    ch.insert("grad_u_sq_int".to_string(), trapezoid(&grad_u_sq, dt));
    ch.insert("v_sq_int".to_string(), trapezoid(&v_sq, dt));
    ch.insert("sqrt_alpha_grad_w_sup".to_string(), alpha.sqrt() * sup(grad_w.iter().copied()));
    let v_sup = sup(v_sq.iter().map(|x| x.sqrt()));
    let sb = beta.sqrt() * sup(grad_w.iter().copied());
    let ut = forward_diff_sq_int(basis, &u_series, dt, |_| 1.0);
    let phi_sup = phi_int.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ch.insert("v_sup_l2".to_string(), v_sup);
    ch.insert("sqrt_beta_grad_w_sup".to_string(), sb);
    ch.insert("u_t_sq_int".to_string(), ut);
    ch.insert("phi_eps_int_sup".to_string(), phi_sup);
    ch.insert("sixth_estimate".to_string(), v_sup + sb + ut + phi_sup);
    ch.insert("v_sup_q".to_string(), v_sup_q);
    ch.insert("xi_sup_q".to_string(), xi_sup_q);
    ch.insert("overshoot_sup_q".to_string(), overshoot);
    ch.insert("energy_initial".to_string(), energy[0]);
    ch.insert("energy_final".to_string(), *energy.last().unwrap());
    let max_increase = if energy.len() < 2 {
        0.0
    } else {
        energy.windows(2).map(|p| p[1] - p[0]).fold(f64::NEG_INFINITY, f64::max)
    };
    ch.insert("energy_max_increase".to_string(), max_increase);
    let balance = if states.len() >= 3 && !traj.meta.phase_only {
        let r: Vec<f64> = residuals(traj, pd, basis)?.iter().map(|r| r.balance * r.balance).collect();
        trapezoid(&r, dt).sqrt()
    } else {
        0.0
    };
    ch.insert("enthalpy_residual_l2".to_string(), balance);

    let non_finite = ch
        .iter()
        .filter(|(_, v)| !v.is_finite())
        .map(|(k, _)| k.clone())
        .collect();
    Ok(MonitorReport {
        channels: ch,
        times: traj.times(),
        energy_trace: energy,
        non_finite,
    })
}

/// Difference channels; `stimaerr1`/`stimaerr2` are the sums of their parts.
pub const DIFFERENCE_CHANNELS: &[(&str, &str)] = &[
    ("w_h1_l2", "||w_a - w_b||_{H1(0,T;L2)}"),
    ("w_linf_h1", "||w_a - w_b||_{Linf(0,T;H1)}"),
    ("u_linf_l2", "||u_a - u_b||_{Linf(0,T;L2)}"),
    ("u_l2_h1", "||u_a - u_b||_{L2(0,T;H1)}"),
    ("stimaerr1", "w_h1_l2 + w_linf_h1 + u_linf_l2 + u_l2_h1"),
    ("w_w1inf_h1", "||w_a - w_b||_{W1,inf(0,T;H1)}"),
    ("w_h1_h2", "||w_a - w_b||_{H1(0,T;H2)}"),
    ("u_h1_l2", "||u_a - u_b||_{H1(0,T;L2)}"),
    ("u_linf_h1", "||u_a - u_b||_{Linf(0,T;H1)}"),
    ("u_l2_h2", "||u_a - u_b||_{L2(0,T;H2)}"),
    ("stimaerr2", "w_w1inf_h1 + w_h1_h2 + u_h1_l2 + u_linf_h1 + u_l2_h2"),
    ("v_linf_dual", "||w_t,a - w_t,b||_{Linf(0,T;(H1)')}"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceNorms {
    pub channels: BTreeMap<String, f64>,
}

impl DifferenceNorms {
    pub fn get(&self, name: &str) -> f64 {
        self.channels.get(name).copied().unwrap_or(f64::NAN)
    }
}

/// Norms of `(w_a - w_b, u_a - u_b)` for trajectories on the same time grid
/// and basis. `w_t` differences use the stored velocity.
pub fn difference_norms(a: &Trajectory, b: &Trajectory, basis: &SpectralBasis) -> Result<DifferenceNorms> {
    if a.states.len() != b.states.len() {
        return Err(Error::IncompatibleGrids(format!(
            "{} vs {} time nodes",
            a.states.len(),
            b.states.len()
        )));
    }
    if (a.dt - b.dt).abs() > 1e-12 {
        return Err(Error::IncompatibleGrids(format!("dt {} vs {}", a.dt, b.dt)));
    }
    for s in a.states.iter().chain(&b.states) {
        check_len(basis.len(), s.w.len())?;
    }
    let dt = a.dt;
    let dw: Vec<CoeffVector> = a.states.iter().zip(&b.states).map(|(x, y)| x.w.sub(&y.w)).collect();
    let dv: Vec<CoeffVector> = a.states.iter().zip(&b.states).map(|(x, y)| x.v.sub(&y.v)).collect();
    let du: Vec<CoeffVector> = a.states.iter().zip(&b.states).map(|(x, y)| x.u.sub(&y.u)).collect();
    Ok(DifferenceNorms {
        channels: bundle(basis, &dw, &dv, &du, dt),
    })
}

/// As [`difference_norms`] but for trajectories on different bases of the
/// same domain; both are restricted to the modes they share.
pub fn difference_norms_across(
    a: &Trajectory,
    basis_a: &SpectralBasis,
    b: &Trajectory,
    basis_b: &SpectralBasis,
) -> Result<DifferenceNorms> {
    let common = if basis_a.len() <= basis_b.len() { basis_a } else { basis_b };
    let restrict = |t: &Trajectory, from: &SpectralBasis| -> Result<Trajectory> {
        let mut out = t.clone();
        for s in &mut out.states {
            s.w = from.restrict(&s.w, common)?;
            s.v = from.restrict(&s.v, common)?;
            s.u = from.restrict(&s.u, common)?;
        }
        Ok(out)
    };
    difference_norms(&restrict(a, basis_a)?, &restrict(b, basis_b)?, common)
}

fn bundle(basis: &SpectralBasis, dw: &[CoeffVector], dv: &[CoeffVector], du: &[CoeffVector], dt: f64) -> BTreeMap<String, f64> {
    let l2 = |c: &CoeffVector| basis.l2_norm(c);
    let h1 = |c: &CoeffVector| basis.h1_norm(c);
    let h2 = |c: &CoeffVector| basis.h2_norm(c);
    let sq = |xs: Vec<f64>| -> Vec<f64> { xs.into_iter().map(|x| x * x).collect() };

    let w_h1_l2 = (trapezoid(&sq(dw.iter().map(l2).collect()), dt) + trapezoid(&sq(dv.iter().map(l2).collect()), dt)).sqrt();
    let w_linf_h1 = sup(dw.iter().map(h1));
    let u_linf_l2 = sup(du.iter().map(l2));
    let u_l2_h1 = trapezoid(&sq(du.iter().map(h1).collect()), dt).sqrt();

    let w_w1inf_h1 = sup(dw.iter().map(h1)) + sup(dv.iter().map(h1));
    let w_h1_h2 = (trapezoid(&sq(dw.iter().map(h2).collect()), dt) + trapezoid(&sq(dv.iter().map(h2).collect()), dt)).sqrt();
    let du_refs: Vec<&CoeffVector> = du.iter().collect();
    let u_h1_l2 = (trapezoid(&sq(du.iter().map(l2).collect()), dt) + forward_diff_sq_int(basis, &du_refs, dt, |_| 1.0)).sqrt();
    let u_linf_h1 = sup(du.iter().map(h1));
    let u_l2_h2 = trapezoid(&sq(du.iter().map(h2).collect()), dt).sqrt();

    let mut ch = BTreeMap::new();
    ch.insert("w_h1_l2".into(), w_h1_l2);
    ch.insert("w_linf_h1".into(), w_linf_h1);
    ch.insert("u_linf_l2".into(), u_linf_l2);
    ch.insert("u_l2_h1".into(), u_l2_h1);
    ch.insert("stimaerr1".into(), w_h1_l2 + w_linf_h1 + u_linf_l2 + u_l2_h1);
    ch.insert("w_w1inf_h1".into(), w_w1inf_h1);
    ch.insert("w_h1_h2".into(), w_h1_h2);
    ch.insert("u_h1_l2".into(), u_h1_l2);
    ch.insert("u_linf_h1".into(), u_linf_h1);
    ch.insert("u_l2_h2".into(), u_l2_h2);
    ch.insert("stimaerr2".into(), w_w1inf_h1 + w_h1_h2 + u_h1_l2 + u_linf_h1 + u_l2_h2);
    ch.insert("v_linf_dual".into(), sup(dv.iter().map(|c| basis.dual_norm(c))));
    ch
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_integral_of_constant() {
        let r = running_integral(&[2.0; 11], 0.1);
        for (k, x) in r.iter().enumerate() {
            assert!((x - 0.2 * k as f64).abs() < 1e-14);
        }
        assert!(running_integral(&[0.0; 5], 0.1).iter().all(|x| *x == 0.0));
    }

    #[test]
    fn convolution_with_one_is_running_integral() {
        let a: Vec<f64> = (0..20).map(|k| (0.1 * k as f64).sin()).collect();
        let c = convolve_time(&[1.0; 20], &a, 0.1).unwrap();
        let r = running_integral(&a, 0.1);
        for (x, y) in c.iter().zip(&r) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!(convolve_time(&[1.0; 3], &[1.0; 4], 0.1).is_err());
    }

    #[test]
    fn convolution_of_exponential_is_second_order() {
        // (1 ∗ e^{-s})(t) = 1 - e^{-t}
        let err = |n: usize| {
            let dt = 1.0 / n as f64;
            let a: Vec<f64> = (0..=n).map(|k| (-(k as f64) * dt).exp()).collect();
            let c = convolve_time(&vec![1.0; n + 1], &a, dt).unwrap();
            (c[n] - (1.0 - (-1.0f64).exp())).abs()
        };
        let order = (err(50) / err(100)).log2();
        assert!((order - 2.0).abs() < 0.05, "{order}");
    }

    #[test]
    fn convolution_is_bilinear() {
        let a: Vec<f64> = (0..9).map(|k| k as f64 * 0.3 - 1.0).collect();
        let b: Vec<f64> = (0..9).map(|k| (k as f64).cos()).collect();
        let c: Vec<f64> = (0..9).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let lhs = convolve_time(&a.iter().zip(&c).map(|(x, y)| 2.0 * x + y).collect::<Vec<_>>(), &b, 0.25).unwrap();
        let ab = convolve_time(&a, &b, 0.25).unwrap();
        let cb = convolve_time(&c, &b, 0.25).unwrap();
        for k in 0..9 {
            assert!((lhs[k] - (2.0 * ab[k] + cb[k])).abs() < 1e-13);
        }
    }

    #[test]
    fn trapezoid_rule() {
        assert_eq!(trapezoid(&[], 0.1), 0.0);
        assert_eq!(trapezoid(&[3.0], 0.1), 0.0);
        assert!((trapezoid(&[0.0, 1.0, 2.0], 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_formatting() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}
