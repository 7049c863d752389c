use serde_json::json;

use super::{fmt_f64, replicate_seed, Check, ExperimentSpec, Report, Table};
use crate::ensemble::{try_map_replicates, McSummary};
use crate::error::Result;
use crate::noise::NoisePath;
use crate::sde::simulate_with;

/// Plain ensemble of trajectories over `[0, T]`.
pub fn run_simulate(spec: &ExperimentSpec, workers: usize) -> Result<Report> {
    let n = spec.n()?;
    let cfg = spec.sim_config(n, spec.horizon()?)?;
    let basis = cfg.basis()?;
    let steps = cfg.steps();
    let r = spec.replicates();
    let runs = try_map_replicates(r, workers, |i| {
        let seed = replicate_seed(spec, i);
        let noise = NoisePath::generate(seed, steps, cfg.dt)?;
        Ok((seed, simulate_with(&cfg, &basis, &noise)?))
    })?;

    let mut cases = Table::new(&[
        "replicate",
        "seed",
        "final_h_norm",
        "sup_h_norm",
        "v_integral",
        "exploded",
        "explosion_time",
    ]);
    let mut finals = Vec::new();
    let mut sups = Vec::new();
    let mut explosions = 0;
    for (i, (seed, t)) in runs.iter().enumerate() {
        let fin = *t.h_norms.last().expect("nonempty trajectory");
        let vint = *t.v_integral.last().expect("nonempty trajectory");
        cases.push(vec![
            i.to_string(),
            seed.to_string(),
            fmt_f64(fin),
            fmt_f64(t.sup_h_norm()),
            fmt_f64(vint),
            t.exploded.is_some().to_string(),
            t.exploded.map_or(String::new(), |e| fmt_f64(e.time)),
        ]);
        if t.exploded.is_some() {
            explosions += 1;
        } else {
            finals.push(fin);
            sups.push(t.sup_h_norm());
        }
    }
    let results = json!({
        "steps": steps,
        "replicates": r,
        "explosions": explosions,
        "final_h_norm": McSummary::from_samples(&finals),
        "sup_h_norm": McSummary::from_samples(&sups),
    });
    let checks = vec![Check::new(
        "no_explosion",
        explosions == 0,
        format!("{explosions} of {r} replicates produced non-finite coefficients"),
    )];
    let mut report = Report::new(spec, cases, results, checks);
    if spec.trajectory {
        report.trajectories = runs;
    }
    Ok(report)
}
