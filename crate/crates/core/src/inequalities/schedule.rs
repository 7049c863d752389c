//! Restart schedule covering `[0, T]` by moment horizons.
//!
//! `T_p = log(p / (p - 1 + theta))` shrinks as `p` grows, and the exponent map
//! `gamma(z) = z^2 / (z - 1 + theta)` raises `p` at each restart. Segment lengths
//! are consumed in reverse, `S(i+1) = S(i) + T(kappa - i)`, so the last segment
//! runs at the original `p`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Guard for the harmonic-like divergence of `sum T(i)`; `T` up to about 15 fits.
pub const MAX_SCHEDULE_ITERATIONS: usize = 10_000_000;

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::Contract(format!("θ must lie in [0,1), got {theta}")))
    }
}

pub fn horizon_tp(p: f64, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::Contract(format!("p must be at least 2, got {p}")));
    }
    Ok((p / (p - 1.0 + theta)).ln())
}

pub fn gamma_map(z: f64, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if !(z >= 2.0 && z.is_finite()) {
        return Err(Error::Contract(format!("gamma needs z >= 2, got {z}")));
    }
    Ok(z * z / (z - 1.0 + theta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub p: f64,
    pub theta: f64,
    pub target: f64,
    /// Exponents `q(i) = gamma^i(p)`, `i = 0..=kappa`.
    pub q: Vec<f64>,
    /// `T(i) = T_{q(i)}`.
    pub horizons: Vec<f64>,
    pub kappa: usize,
    /// Restart times `S(0) = 0, ..., S(kappa + 1)`.
    pub s: Vec<f64>,
}

impl Schedule {
    /// End of the covered interval, `S(kappa + 1) >= T`.
    pub fn end(&self) -> f64 {
        *self.s.last().expect("schedule has at least two restart times")
    }
}

pub fn build_schedule(p: f64, theta: f64, target: f64) -> Result<Schedule> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::Contract(format!(
            "target horizon must be positive, got {target}"
        )));
    }
    let mut q = vec![p];
    let mut horizons = vec![horizon_tp(p, theta)?];
    let mut sum = horizons[0];
    while sum < target {
        if q.len() >= MAX_SCHEDULE_ITERATIONS {
            return Err(Error::Internal(format!(
                "schedule for T = {target} did not close within {MAX_SCHEDULE_ITERATIONS} segments"
            )));
        }
        let next = gamma_map(*q.last().expect("nonempty"), theta)?;
        let h = horizon_tp(next, theta)?;
        q.push(next);
        horizons.push(h);
        sum += h;
    }
    let kappa = q.len() - 1;
    let mut s = Vec::with_capacity(kappa + 2);
    s.push(0.0);
    for i in 0..=kappa {
        s.push(s[i] + horizons[kappa - i]);
    }
    Ok(Schedule {
        p,
        theta,
        target,
        q,
        horizons,
        kappa,
        s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutions() {
        assert!((horizon_tp(2.0, 0.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((horizon_tp(2.0, 0.5).unwrap() - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((gamma_map(2.0, 0.5).unwrap() - 8.0 / 3.0).abs() < 1e-15);
        assert!(horizon_tp(1.5, 0.0).is_err());
        assert!(horizon_tp(2.0, 1.0).is_err());
    }

    #[test]
    fn unit_target_schedule() {
        let s = build_schedule(2.0, 0.0, 1.0).unwrap();
        assert_eq!(s.kappa, 2);
        assert_eq!(&s.q[..2], &[2.0, 4.0]);
        assert!((s.q[2] - 16.0 / 3.0).abs() < 1e-14);
        let want = [0.0, 0.2076, 0.4953, 1.1884];
        for (a, b) in s.s.iter().zip(want) {
            assert!((a - b).abs() < 1e-4, "{:?}", s.s);
        }
        assert!(s.s[2] < 1.0 && 1.0 <= s.s[3]);
    }

    #[test]
    fn short_target_is_one_segment() {
        let s = build_schedule(3.0, 0.2, 0.1).unwrap();
        let tp = horizon_tp(3.0, 0.2).unwrap();
        assert_eq!(s.kappa, 0);
        assert_eq!(s.s, vec![0.0, tp]);
    }
}
