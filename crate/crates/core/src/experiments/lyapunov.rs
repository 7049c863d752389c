//! Growth of `E[Phi(|u_n(t ^ tau_M)|^2)]` and the exit probability `P(tau_M <= T)`.

use serde_json::json;

use super::{fmt_f64, replicate_seed, Check, ExperimentSpec, Report, Table};
use crate::ensemble::{try_map_replicates, McSummary};
use crate::error::{Error, Result};
use crate::inequalities::phi;
use crate::noise::NoisePath;
use crate::sde::{hitting_time, simulate_with, steps_for, Monitor};

pub const DEFAULT_HORIZON: f64 = 0.5;
pub const RESIDUAL_TOL: f64 = 0.1;
pub const C_HAT_AGREEMENT: f64 = 0.25;
/// One-sided 95% normal quantile for the binomial slack on the exit frequency.
pub const Z_95: f64 = 1.645;

/// Least-squares line `y = a + c t`; returns `(a, c)`.
pub fn fit_line(t: &[f64], y: &[f64]) -> (f64, f64) {
    let k = t.len() as f64;
    let tm = t.iter().sum::<f64>() / k;
    let ym = y.iter().sum::<f64>() / k;
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let sxx: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (ym - c * tm, c)
}

struct Replicate {
    seed: u64,
    tau: Option<f64>,
    phis: Vec<f64>,
}

pub fn run_lyapunov(spec: &ExperimentSpec, workers: usize) -> Result<Report> {
    let horizon = spec.horizon.unwrap_or(DEFAULT_HORIZON);
    let levels = spec.levels()?;
    let dt = spec.dt()?;
    let pts = spec.t_points;
    let grid: Vec<f64> = (0..pts).map(|i| horizon * i as f64 / (pts - 1) as f64).collect();
    let grid_steps: Vec<usize> = grid
        .iter()
        .map(|&t| if t == 0.0 { 0 } else { steps_for(t, dt) })
        .collect();
    let steps = *grid_steps.last().expect("at least two grid points");
    let r = spec.replicates();

    let mut cases_cols = vec![
        "n".to_string(),
        "replicate".into(),
        "seed".into(),
        "hit".into(),
        "tau".into(),
    ];
    cases_cols.extend((0..pts).map(|i| format!("phi_t{i}")));
    let cols: Vec<&str> = cases_cols.iter().map(String::as_str).collect();
    let mut cases = Table::new(&cols);

    let mut checks = Vec::new();
    let mut level_results = Vec::new();
    let mut c_hats = Vec::new();
    for &n in &levels {
        let mut cfg = spec.sim_config(n, horizon)?;
        cfg.snapshot_stride = usize::MAX;
        let basis = cfg.basis()?;
        let u0_sq = cfg.initial_field()?.norm().powi(2);
        let level = spec.m_threshold.unwrap_or(25.0 * u0_sq);
        if !(level > u0_sq) {
            return Err(Error::Config(format!(
                "M_threshold = {level} must exceed |u0|^2 = {u0_sq}"
            )));
        }
        let reps = try_map_replicates(r, workers, |i| {
            let seed = replicate_seed(spec, i);
            let noise = NoisePath::generate(seed, steps, dt)?;
            let traj = simulate_with(&cfg, &basis, &noise)?;
            let hit = hitting_time(&traj, level, Monitor::HSquared)?;
            // A blow-up between grid points is an exit at the blow-up time.
            let tau = hit.map(|h| h.time).or(traj.exploded.map(|e| e.time));
            let last = traj.len() - 1;
            let phis = grid_steps
                .iter()
                .map(|&k| {
                    let idx = hit.map_or(k, |h| h.index.min(k)).min(last);
                    phi(traj.h_norms[idx].powi(2))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Replicate { seed, tau, phis })
        })?;

        for (i, rep) in reps.iter().enumerate() {
            let mut row = vec![
                n.to_string(),
                i.to_string(),
                rep.seed.to_string(),
                rep.tau.is_some().to_string(),
                rep.tau.map_or(String::new(), fmt_f64),
            ];
            row.extend(rep.phis.iter().map(|&x| fmt_f64(x)));
            cases.push(row);
        }
        let means: Vec<McSummary> = (0..pts)
            .map(|j| {
                let xs: Vec<f64> = reps.iter().map(|rep| rep.phis[j]).collect();
                McSummary::from_samples(&xs).expect("at least one replicate")
            })
            .collect();
        let logs: Vec<f64> = means.iter().map(|m| m.mean.ln()).collect();
        let (a, c_hat) = fit_line(&grid, &logs);
        let residual = grid
            .iter()
            .zip(&means)
            .map(|(&t, m)| (m.mean / (a + c_hat * t).exp() - 1.0).abs())
            .fold(0.0, f64::max);
        let phi0 = phi(u0_sq)?;
        let phi_m = phi(level)?;
        let exits = reps
            .iter()
            .filter(|rep| rep.tau.is_some_and(|t| t <= horizon))
            .count();
        let freq = exits as f64 / r as f64;
        let bound = phi0 * (c_hat * horizon).exp() / phi_m;
        let b = bound.clamp(0.0, 1.0);
        let slack = Z_95 * (b * (1.0 - b) / r as f64).sqrt();

        checks.push(Check::new(
            &format!("n{n}_initial_value"),
            means[0].mean == phi0,
            format!(
                "E[Phi] at t=0 is {} vs Phi(|u0|^2) = {}",
                fmt_f64(means[0].mean),
                fmt_f64(phi0)
            ),
        ));
        checks.push(Check::new(
            &format!("n{n}_fit_residual"),
            residual <= RESIDUAL_TOL,
            format!(
                "max relative residual {} (tolerance {RESIDUAL_TOL})",
                fmt_f64(residual)
            ),
        ));
        checks.push(Check::new(
            &format!("n{n}_exit_bound"),
            freq <= bound + slack,
            format!(
                "exit frequency {} vs bound {} + slack {}",
                fmt_f64(freq),
                fmt_f64(bound),
                fmt_f64(slack)
            ),
        ));
        c_hats.push((n, c_hat));
        level_results.push(json!({
            "n": n,
            "M_level": level,
            "t_grid": grid,
            "mean_phi": means,
            "intercept": a,
            "C_hat_empirical": c_hat,
            "max_relative_residual": residual,
            "exit_frequency": freq,
            "exit_bound": bound,
            "exit_slack": slack,
        }));
    }
    if c_hats.len() >= 2 {
        let (n_ref, c_ref) = *c_hats.last().expect("nonempty");
        let worst = c_hats.iter().map(|(_, c)| (c - c_ref).abs()).fold(0.0, f64::max);
        let rel = worst / c_ref.abs();
        checks.push(Check::new(
            "c_hat_agreement",
            rel <= C_HAT_AGREEMENT,
            format!(
                "max |C_hat(n) - C_hat({n_ref})| / |C_hat({n_ref})| = {} (tolerance {C_HAT_AGREEMENT}); {}",
                fmt_f64(rel),
                c_hats
                    .iter()
                    .map(|(n, c)| format!("n={n}: {}", fmt_f64(*c)))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        ));
    }
    let results = json!({
        "horizon": horizon,
        "replicates": r,
        "levels": level_results,
        "constants_are_empirical": true,
    });
    Ok(Report::new(spec, cases, results, checks))
}
