//! Executable forms of the functional inequalities, the nonlinear Gronwall
//! bounds, the Lyapunov pair `(rho, Phi)` and the moment-horizon schedule.
//!
//! Inequality checks return a [`GapReport`] instead of asserting; callers
//! decide what tolerance counts as a violation.

mod gronwall;
mod lyapunov;
mod schedule;

pub use gronwall::{gronwall_alpha_bound, log_gronwall_bound, TimeFn};
pub use lyapunov::{phi, phi_prime, rho, t_star};
pub use schedule::{build_schedule, gamma_map, horizon_tp, Schedule, MAX_SCHEDULE_ITERATIONS};

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::{log_plus, xlogx};
use crate::spectral::{SpectralBasis, SpectralField};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`
    pub gap: f64,
    pub inputs: Vec<(&'static str, f64)>,
}

impl GapReport {
    fn new(lhs: f64, rhs: f64, inputs: Vec<(&'static str, f64)>) -> Self {
        Self {
            lhs,
            rhs,
            gap: rhs - lhs,
            inputs,
        }
    }

    /// `1 + |lhs| + |rhs|`, the scale against which violations are measured.
    pub fn scale(&self) -> f64 {
        1.0 + self.lhs.abs() + self.rhs.abs()
    }

    /// True unless `gap < -tol * scale`.
    pub fn passes(&self, tol: f64) -> bool {
        self.gap >= -tol * self.scale()
    }
}

/// `x^2 log x` with the value 0 at 0.
fn sq_log(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x * x.ln()
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Contract(format!("epsilon must be positive, got {eps}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Contract(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_field(u: &SpectralField, basis: &SpectralBasis) -> Result<()> {
    if u.len() == basis.n() {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "field has {} modes, basis has {}",
            u.len(),
            basis.n()
        )))
    }
}

fn grid(u: &SpectralField, basis: &SpectralBasis) -> Vec<f64> {
    let mut v = vec![0.0; basis.nodes()];
    basis.synthesize_into(u.coeffs(), &mut v);
    v
}

/// `eps |u|_V^2 + (d/4) log(1/eps) |u|^2 + |u|^2 log |u|`
fn log_sobolev_rhs(basis: &SpectralBasis, u: &[f64], eps: f64, d: u32) -> f64 {
    let h = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    eps * basis.v_norm_sq(u) + 0.25 * d as f64 * (1.0 / eps).ln() * h * h + sq_log(h)
}

/// `int u^2 log|u| <= eps |u|_V^2 + (d/4) log(1/eps) |u|^2 + |u|^2 log |u|`.
pub fn log_sobolev_gap(u: &SpectralField, basis: &SpectralBasis, eps: f64, d: u32) -> Result<GapReport> {
    check_eps(eps)?;
    check_field(u, basis)?;
    let v = grid(u, basis);
    let lhs = basis.quadrature().integrate_map(&v, |x| x * xlogx(x));
    let rhs = log_sobolev_rhs(basis, u.coeffs(), eps, d);
    Ok(GapReport::new(
        lhs,
        rhs,
        vec![("eps", eps), ("d", d as f64), ("h_norm", u.norm())],
    ))
}

/// The `log_+` form: the left side drops the negative part of the logarithm,
/// the right side pays `m(D) max_{z<=1} z^2 log(1/z) = m(D) / (2e)`.
pub fn log_sobolev_plus_gap(u: &SpectralField, basis: &SpectralBasis, eps: f64, d: u32) -> Result<GapReport> {
    check_eps(eps)?;
    check_field(u, basis)?;
    let v = grid(u, basis);
    let lhs = basis
        .quadrature()
        .integrate_map(&v, |x| x * x * log_plus(x.abs()));
    let rhs = log_sobolev_rhs(basis, u.coeffs(), eps, d) + basis.domain_measure() / (2.0 * E);
    Ok(GapReport::new(
        lhs,
        rhs,
        vec![("eps", eps), ("d", d as f64), ("h_norm", u.norm())],
    ))
}

/// Terms shared by both difference estimates, evaluated on `z = u - v`.
fn difference_rhs(
    basis: &SpectralBasis,
    u: &SpectralField,
    v: &SpectralField,
    z: &[f64],
    eps: f64,
    alpha: f64,
    d: u32,
) -> f64 {
    let zn = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cross = ((u.norm().powf(2.0 * (1.0 - alpha)) + v.norm().powf(2.0 * (1.0 - alpha)))
        * zn.powf(2.0 * alpha))
        / (2.0 * (1.0 - alpha) * E);
    eps * basis.v_norm_sq(z) + 0.25 * d as f64 * (1.0 / eps).ln() * zn * zn + sq_log(zn) + cross
}

/// `(u log|u| - v log|v|, u - v) <= eps |Z|_V^2 + (1 + (d/4) log(1/eps)) |Z|^2
///  + |Z|^2 log|Z| + (|u|^{2(1-a)} + |v|^{2(1-a)}) |Z|^{2a} / (2(1-a)e)`, `Z = u - v`.
pub fn lemma31_gap(
    u: &SpectralField,
    v: &SpectralField,
    basis: &SpectralBasis,
    eps: f64,
    alpha: f64,
) -> Result<GapReport> {
    check_eps(eps)?;
    check_alpha(alpha)?;
    check_field(u, basis)?;
    check_field(v, basis)?;
    let (gu, gv) = (grid(u, basis), grid(v, basis));
    let q = basis.quadrature();
    let lhs: f64 = q
        .weights()
        .iter()
        .zip(gu.iter().zip(&gv))
        .map(|(w, (&a, &b))| w * (xlogx(a) - xlogx(b)) * (a - b))
        .sum();
    let z = u.sub(v);
    let rhs = difference_rhs(basis, u, v, z.coeffs(), eps, alpha, 1) + z.norm().powi(2);
    Ok(GapReport::new(
        lhs,
        rhs,
        vec![
            ("eps", eps),
            ("alpha", alpha),
            ("u_norm", u.norm()),
            ("v_norm", v.norm()),
            ("z_norm", z.norm()),
        ],
    ))
}

/// `int |u - v|^2 log_+(|u| v |v|) <= eps |Z|_V^2 + (d/4) log(1/eps) |Z|^2 + |Z|^2 log|Z|
///  + (|u|^{2(1-a)} + |v|^{2(1-a)}) |Z|^{2a} / (2(1-a)e) + (4 m(D))^{1-a} |Z|^{2a} / (2(1-a)e)`.
pub fn lemma32_gap(
    u: &SpectralField,
    v: &SpectralField,
    basis: &SpectralBasis,
    eps: f64,
    alpha: f64,
) -> Result<GapReport> {
    check_eps(eps)?;
    check_alpha(alpha)?;
    check_field(u, basis)?;
    check_field(v, basis)?;
    let (gu, gv) = (grid(u, basis), grid(v, basis));
    let q = basis.quadrature();
    let lhs: f64 = q
        .weights()
        .iter()
        .zip(gu.iter().zip(&gv))
        .map(|(w, (&a, &b))| w * (a - b) * (a - b) * log_plus(a.abs().max(b.abs())))
        .sum();
    let z = u.sub(v);
    let extra = (4.0 * basis.domain_measure()).powf(1.0 - alpha) * z.norm().powf(2.0 * alpha)
        / (2.0 * (1.0 - alpha) * E);
    let rhs = difference_rhs(basis, u, v, z.coeffs(), eps, alpha, 1) + extra;
    Ok(GapReport::new(
        lhs,
        rhs,
        vec![
            ("eps", eps),
            ("alpha", alpha),
            ("u_norm", u.norm()),
            ("v_norm", v.norm()),
            ("z_norm", z.norm()),
        ],
    ))
}
