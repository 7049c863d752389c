//! Explicit bounds for the integral inequalities
//!
//! ```text
//! Y(t) <= c + int_{t0}^t a(s) Y(s) + b(s) Y(s)^alpha ds            (Bihari type)
//! X(t) <= M(t) + int_0^t c1(s) X(s) + c2(s) X(s) log X(s) ds      (log type)
//! ```
//!
//! Both bounds are attained by the corresponding ODEs, which is what the tests use.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::integrate;

const TOL: f64 = 1e-10;

/// Coefficient of a Gronwall inequality: a constant (closed-form path) or a callable.
#[derive(Clone)]
pub enum TimeFn {
    Const(f64),
    Fn(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl TimeFn {
    pub fn func(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        TimeFn::Fn(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeFn::Const(c) => *c,
            TimeFn::Fn(f) => f(t),
        }
    }

    /// `int_a^b f`
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            TimeFn::Const(c) => c * (b - a),
            TimeFn::Fn(f) => integrate(|s| f(s), a, b, TOL, TOL).value,
        }
    }
}

impl fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFn::Const(c) => write!(f, "Const({c})"),
            TimeFn::Fn(_) => write!(f, "Fn(..)"),
        }
    }
}

impl From<f64> for TimeFn {
    fn from(c: f64) -> Self {
        TimeFn::Const(c)
    }
}

/// `(e^{x} - 1) / x`, continuous at 0.
fn expm1_ratio(x: f64) -> f64 {
    if x.abs() < 1e-300 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// `{ c^{1-a} exp((1-a) int a) + (1-a) int_{t0}^t b(s) exp((1-a) int_s^t a) ds }^{1/(1-a)}`.
pub fn gronwall_alpha_bound(c: f64, a: &TimeFn, b: &TimeFn, alpha: f64, t0: f64, t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Contract(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if !(c >= 0.0) {
        return Err(Error::Contract(format!("c must be nonnegative, got {c}")));
    }
    if !(t >= t0) {
        return Err(Error::Contract(format!("need t >= t0, got t = {t}, t0 = {t0}")));
    }
    let k = 1.0 - alpha;
    let inner = match (a, b) {
        (TimeFn::Const(a), TimeFn::Const(b)) => {
            let tau = t - t0;
            c.powf(k) * (k * a * tau).exp() + k * b * tau * expm1_ratio(k * a * tau)
        }
        _ => {
            let big_a = a.integral(t0, t);
            let tail = integrate(
                |s| b.eval(s) * (k * (big_a - a.integral(t0, s))).exp(),
                t0,
                t,
                TOL,
                TOL,
            );
            c.powf(k) * (k * big_a).exp() + k * tail.value
        }
    };
    Ok(inner.powf(1.0 / k))
}

/// `M(t)^{exp(C2(t))} exp( exp(C2(t)) int_0^t c1(s) exp(-C2(s)) ds )`, `C2(t) = int_0^t c2`.
///
/// `M` must be nondecreasing with `M >= 1`; only the endpoints are checked.
pub fn log_gronwall_bound(m: &TimeFn, c1: &TimeFn, c2: &TimeFn, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Contract(format!("need t >= 0, got {t}")));
    }
    let (m0, mt) = (m.eval(0.0), m.eval(t));
    if !(m0 >= 1.0 && mt >= m0) {
        return Err(Error::Contract(format!(
            "M must be nondecreasing with M >= 1, got M(0) = {m0}, M(t) = {mt}"
        )));
    }
    let big_c2 = c2.integral(0.0, t);
    let weighted = match (c1, c2) {
        (TimeFn::Const(c1), TimeFn::Const(c2)) => c1 * t * expm1_ratio(-c2 * t),
        _ => integrate(|s| c1.eval(s) * (-c2.integral(0.0, s)).exp(), 0.0, t, TOL, TOL).value,
    };
    let g = big_c2.exp();
    Ok((g * mt.ln() + g * weighted).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_gronwall_recovered() {
        for t in [0.0, 0.5, 1.0, 2.0] {
            let r = gronwall_alpha_bound(1.0, &1.0.into(), &0.0.into(), 0.5, 0.0, t).unwrap();
            assert!((r - f64::exp(t)).abs() < 1e-12 * f64::exp(t));
            let r = log_gronwall_bound(&1.5.into(), &0.7.into(), &0.0.into(), t).unwrap();
            assert!((r - 1.5 * f64::exp(0.7 * t)).abs() < 1e-12 * r);
        }
    }

    #[test]
    fn square_root_ode_saturates() {
        for t in [0.3, 1.0, 4.0] {
            let r = gronwall_alpha_bound(0.0, &0.0.into(), &1.0.into(), 0.5, 0.0, t).unwrap();
            assert!((r - t * t / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn log_bound_substitution() {
        let r = log_gronwall_bound(&2.0.into(), &0.0.into(), &1.0.into(), 1.0).unwrap();
        assert!((r - 2f64.powf(std::f64::consts::E)).abs() < 1e-12);
        assert!((r - 6.5808).abs() < 1e-4);
    }

    #[test]
    fn callable_path_matches_constants() {
        let (a, b) = (0.8, 1.3);
        let fa = TimeFn::func(move |_| a);
        let fb = TimeFn::func(move |_| b);
        let closed = gronwall_alpha_bound(0.4, &a.into(), &b.into(), 0.3, 0.5, 2.0).unwrap();
        let numeric = gronwall_alpha_bound(0.4, &fa, &fb, 0.3, 0.5, 2.0).unwrap();
        assert!((closed - numeric).abs() < 1e-9 * closed);
        let closed = log_gronwall_bound(&1.2.into(), &a.into(), &b.into(), 1.0).unwrap();
        let numeric = log_gronwall_bound(&TimeFn::func(|_| 1.2), &fa, &fb, 1.0).unwrap();
        assert!((closed - numeric).abs() < 1e-9 * closed);
    }

    #[test]
    fn preconditions() {
        assert!(gronwall_alpha_bound(1.0, &1.0.into(), &1.0.into(), 1.0, 0.0, 1.0).is_err());
        assert!(gronwall_alpha_bound(1.0, &1.0.into(), &1.0.into(), -0.1, 0.0, 1.0).is_err());
        assert!(log_gronwall_bound(&0.5.into(), &1.0.into(), &1.0.into(), 1.0).is_err());
        assert!(log_gronwall_bound(&TimeFn::func(|t| 2.0 - t), &1.0.into(), &1.0.into(), 1.0).is_err());
    }
}
