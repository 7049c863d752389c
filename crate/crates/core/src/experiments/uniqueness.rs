//! Coupling experiment: two solutions from `u0` and `u0 + delta e_1` on one noise path.

use serde_json::json;

use super::{fmt_f64, replicate_seed, Check, ExperimentSpec, Report, Table};
use crate::ensemble::{try_map_replicates, McSummary};
use crate::error::{Error, Result};
use crate::inequalities::t_star;
use crate::noise::NoisePath;
use crate::sde::coupled_simulate_with;
use crate::spectral::SpectralField;

pub const DEFAULT_DELTAS: [f64; 4] = [0.0, 1e-2, 1e-3, 1e-4];

pub fn run_uniqueness(spec: &ExperimentSpec, workers: usize) -> Result<Report> {
    let model = spec.model.build()?;
    let lip = model.lipschitz().ok_or_else(|| {
        Error::Config(format!(
            "uniqueness needs a diffusion with local Lipschitz constants (H.1); `{}` has none",
            model.kind()
        ))
    })?;
    let t_star = t_star(lip.l2)?;
    let horizon = spec.horizon.map_or(t_star, |t| t.min(t_star));
    let n = spec.n()?;
    let mut cfg = spec.sim_config(n, horizon)?;
    cfg.snapshot_stride = usize::MAX;
    let basis = cfg.basis()?;
    let steps = cfg.steps();
    let deltas = if spec.delta_list.is_empty() {
        DEFAULT_DELTAS.to_vec()
    } else {
        spec.delta_list.clone()
    };
    let u0 = cfg.initial_field()?;
    let w = SpectralField::mode(n, 1);
    let r = spec.replicates();

    // One task per (replicate, delta); the noise path depends on the replicate only.
    let jobs = r * deltas.len();
    let runs = try_map_replicates(jobs, workers, |job| {
        let (rep, di) = (job / deltas.len(), job % deltas.len());
        let seed = replicate_seed(spec, rep);
        let noise = NoisePath::generate(seed, steps, cfg.dt)?;
        let v0 = u0.add(&w.scaled(deltas[di]));
        let run = coupled_simulate_with(&cfg, &basis, &noise, &u0, &v0)?;
        let exploded = run.a.exploded.is_some() || run.b.exploded.is_some();
        Ok((seed, run.z_sup, run.z_l2, exploded))
    })?;

    let mut cases = Table::new(&[
        "delta",
        "replicate",
        "seed",
        "z_sup",
        "z_sup_sq",
        "z_l2",
        "exploded",
    ]);
    let mut per_delta = Vec::new();
    let mut explosions = 0;
    for (di, &delta) in deltas.iter().enumerate() {
        let mut z = Vec::with_capacity(r);
        let mut z2 = Vec::with_capacity(r);
        for rep in 0..r {
            let (seed, z_sup, z_l2, exploded) = runs[rep * deltas.len() + di];
            cases.push(vec![
                fmt_f64(delta),
                rep.to_string(),
                seed.to_string(),
                fmt_f64(z_sup),
                fmt_f64(z_sup * z_sup),
                fmt_f64(z_l2),
                exploded.to_string(),
            ]);
            if exploded {
                explosions += 1;
            } else {
                z.push(z_sup);
                z2.push(z_sup * z_sup);
            }
        }
        per_delta.push((delta, z, z2));
    }

    let mut checks = Vec::new();
    let zero_runs: Vec<&Vec<f64>> = per_delta
        .iter()
        .filter(|(d, _, _)| *d == 0.0)
        .map(|(_, z, _)| z)
        .collect();
    if !zero_runs.is_empty() {
        let worst = zero_runs
            .iter()
            .flat_map(|z| z.iter())
            .fold(0.0f64, |m, &x| m.max(x));
        checks.push(Check::new(
            "zero_perturbation_exact",
            worst == 0.0,
            format!("max z_sup at delta = 0 is {worst:e}"),
        ));
    }
    let mut positive: Vec<(f64, f64)> = per_delta
        .iter()
        .filter(|(d, _, _)| *d > 0.0)
        .map(|(d, _, z2)| (*d, McSummary::from_samples(z2).map_or(f64::NAN, |s| s.mean)))
        .collect();
    positive.sort_by(|a, b| b.0.total_cmp(&a.0));
    if positive.len() >= 2 {
        let decreasing = positive.windows(2).all(|w| w[1].1 < w[0].1);
        checks.push(Check::new(
            "mean_z_sup_sq_decreasing",
            decreasing,
            positive
                .iter()
                .map(|(d, m)| format!("delta={}:{}", fmt_f64(*d), fmt_f64(*m)))
                .collect::<Vec<_>>()
                .join(", "),
        ));
    }
    checks.push(Check::new(
        "no_explosion",
        explosions == 0,
        format!("{explosions} coupled runs produced non-finite coefficients"),
    ));

    let results = json!({
        "t_star": t_star,
        "l2_used": lip.l2,
        "l2_empirical": lip.empirical,
        "horizon": horizon,
        "steps": steps,
        "replicates": r,
        "deltas": per_delta.iter().map(|(d, z, z2)| json!({
            "delta": d,
            "z_sup": McSummary::from_samples(z),
            "z_sup_sq": McSummary::from_samples(z2),
        })).collect::<Vec<_>>(),
    });
    Ok(Report::new(spec, cases, results, checks))
}
