//! The Lyapunov pair
//!
//! ```text
//! rho(x) = x / e  on [0, e],   log x  on [e, inf)
//! Phi(z) = exp( int_0^z dx / (1 + x + x rho(x)) )
//! ```
//!
//! `Phi` is increasing, concave, `Phi(0) = 1` and grows slower than any power.

use std::f64::consts::E;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quadrature::integrate;

const TOL: f64 = 1e-12;
const CHECKPOINTS: [f64; 3] = [E, 10.0, 100.0];

fn check_nonneg(x: f64, what: &str) -> Result<()> {
    if x >= 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "{what} needs a nonnegative argument, got {x}"
        )))
    }
}

fn rho_unchecked(x: f64) -> f64 {
    if x <= E {
        x / E
    } else {
        x.ln()
    }
}

fn density(x: f64) -> f64 {
    1.0 / (1.0 + x + x * rho_unchecked(x))
}

pub fn rho(x: f64) -> Result<f64> {
    check_nonneg(x, "rho")?;
    Ok(rho_unchecked(x))
}

/// `log Phi` at the checkpoints, computed once per process.
fn checkpoint_logs() -> &'static [f64; 3] {
    static LOGS: OnceLock<[f64; 3]> = OnceLock::new();
    LOGS.get_or_init(|| {
        let mut out = [0.0; 3];
        let mut acc = 0.0;
        let mut from = 0.0;
        for (o, &c) in out.iter_mut().zip(&CHECKPOINTS) {
            acc += integrate(density, from, c, TOL, 0.0).value;
            *o = acc;
            from = c;
        }
        out
    })
}

/// `log Phi(z)`: the nearest checkpoint below `z` plus one adaptive quadrature.
/// The knee of `rho` is a checkpoint, so each quadrature sees a smooth integrand.
fn log_phi(z: f64) -> f64 {
    let logs = checkpoint_logs();
    let (start, base) = match CHECKPOINTS.iter().rposition(|&c| c <= z) {
        Some(i) => (CHECKPOINTS[i], logs[i]),
        None => (0.0, 0.0),
    };
    base + integrate(density, start, z, TOL, 0.0).value
}

pub fn phi(z: f64) -> Result<f64> {
    check_nonneg(z, "Phi")?;
    Ok(log_phi(z).exp())
}

/// `Phi'(z) = Phi(z) / (1 + z + z rho(z))`
pub fn phi_prime(z: f64) -> Result<f64> {
    check_nonneg(z, "Phi'")?;
    Ok(log_phi(z).exp() * density(z))
}

/// Horizon `T* = (e / (4 (1 + L2^2)))^2` of the coupling argument.
pub fn t_star(l2: f64) -> Result<f64> {
    check_nonneg(l2, "T*")?;
    Ok((E / (4.0 * (1.0 + l2 * l2))).powi(2))
}
