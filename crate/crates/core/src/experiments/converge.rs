//! Cauchy diagnostic across doubling Galerkin levels driven by one noise path.

use serde_json::json;

use super::{fmt_f64, replicate_seed, Check, ExperimentSpec, Report, Table};
use crate::ensemble::{try_map_replicates, McSummary};
use crate::error::{Error, Result};
use crate::inequalities::horizon_tp;
use crate::noise::NoisePath;
use crate::sde::{w_beta_p_norm, Integrator, SimConfig, Trajectory, MIN_WNORM_SNAPSHOTS};
use crate::spectral::{SpectralBasis, SpectralField};

pub const WNORM_RATIO_MAX: f64 = 3.0;
const TARGET_SNAPSHOTS: usize = 100;

struct Outcome {
    seed: u64,
    /// `d` for each consecutive pair of levels.
    d: Vec<f64>,
    /// `W^{beta,p}` norm per level, `None` if too few snapshots.
    wnorm: Vec<Option<f64>>,
    exploded: bool,
}

/// `|a - pad(b)|^2` for `b` with fewer modes than `a`.
fn padded_diff_sq(fine: &[f64], coarse: &[f64]) -> f64 {
    let head: f64 = fine.iter().zip(coarse).map(|(x, y)| (x - y) * (x - y)).sum();
    let tail: f64 = fine[coarse.len()..].iter().map(|x| x * x).sum();
    head + tail
}

fn run_replicate(
    spec: &ExperimentSpec,
    cfgs: &[SimConfig],
    bases: &[SpectralBasis],
    steps: usize,
    stride: usize,
    seed: u64,
) -> Result<Outcome> {
    let dt = cfgs[0].dt;
    let noise = NoisePath::generate(seed, steps, dt)?;
    let mut integ: Vec<Integrator> = cfgs
        .iter()
        .zip(bases)
        .map(|(c, b)| Integrator::new(c, b, &c.model))
        .collect();
    let mut g: Vec<Vec<f64>> = cfgs
        .iter()
        .map(|c| c.initial_field().map(SpectralField::into_coeffs))
        .collect::<Result<_>>()?;
    let pairs = g.len() - 1;
    let diffs =
        |g: &[Vec<f64>]| -> Vec<f64> { (0..pairs).map(|l| padded_diff_sq(&g[l + 1], &g[l])).collect() };
    let mut snaps: Vec<Trajectory> = (0..g.len()).map(|_| Trajectory::default()).collect();
    let record = |snaps: &mut Vec<Trajectory>, g: &[Vec<f64>], k: usize| {
        for (s, gl) in snaps.iter_mut().zip(g) {
            s.snapshot_times.push(k as f64 * dt);
            s.snapshots
                .push(SpectralField::new(gl.clone()).expect("finite state"));
        }
    };
    record(&mut snaps, &g, 0);
    let mut prev = diffs(&g);
    let mut acc = vec![0.0; pairs];
    let mut exploded = false;
    for (k, &dw) in noise.increments().iter().enumerate() {
        let mut ok = true;
        for (it, gl) in integ.iter_mut().zip(g.iter_mut()) {
            ok &= it.step(gl, dw);
        }
        if !ok {
            exploded = true;
            break;
        }
        let cur = diffs(&g);
        for l in 0..pairs {
            acc[l] += 0.5 * dt * (prev[l] + cur[l]);
        }
        prev = cur;
        if (k + 1) % stride == 0 {
            record(&mut snaps, &g, k + 1);
        }
    }
    let wnorm = if exploded {
        vec![None; g.len()]
    } else {
        snaps
            .iter()
            .zip(bases)
            .map(|(s, b)| {
                if s.snapshots.len() < MIN_WNORM_SNAPSHOTS {
                    Ok(None)
                } else {
                    w_beta_p_norm(s, b, spec.beta, spec.p_wnorm).map(Some)
                }
            })
            .collect::<Result<_>>()?
    };
    Ok(Outcome {
        seed,
        d: acc.into_iter().map(f64::sqrt).collect(),
        wnorm,
        exploded,
    })
}

pub fn run_convergence(spec: &ExperimentSpec, workers: usize) -> Result<Report> {
    let levels = spec.levels()?;
    if levels.len() < 3 || levels.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::Config(format!(
            "converge needs n_list with at least 3 doubling levels, got {levels:?}"
        )));
    }
    let theta = spec.theta();
    let horizon = match spec.horizon {
        Some(t) => t,
        None => horizon_tp(2.0, theta)?,
    };
    let cfgs: Vec<SimConfig> = levels
        .iter()
        .map(|&n| spec.sim_config(n, horizon))
        .collect::<Result<_>>()?;
    let bases: Vec<SpectralBasis> = cfgs.iter().map(SimConfig::basis).collect::<Result<_>>()?;
    let steps = cfgs[0].steps();
    let stride = spec.snapshot_stride.unwrap_or((steps / TARGET_SNAPSHOTS).max(1));
    let r = spec.replicates();

    let outcomes = try_map_replicates(r, workers, |i| {
        run_replicate(spec, &cfgs, &bases, steps, stride, replicate_seed(spec, i))
    })?;

    let mut cases = Table::new(&["n", "replicate", "seed", "d_n", "w_beta_p_norm", "exploded"]);
    let mut explosions = 0;
    for (i, o) in outcomes.iter().enumerate() {
        explosions += o.exploded as usize;
        for (l, &n) in levels.iter().enumerate() {
            cases.push(vec![
                n.to_string(),
                i.to_string(),
                o.seed.to_string(),
                o.d.get(l).map_or(String::new(), |&d| fmt_f64(d)),
                o.wnorm[l].map_or(String::new(), fmt_f64),
                o.exploded.to_string(),
            ]);
        }
    }
    let ok: Vec<&Outcome> = outcomes.iter().filter(|o| !o.exploded).collect();
    let d_summary: Vec<Option<McSummary>> = (0..levels.len() - 1)
        .map(|l| McSummary::from_samples(&ok.iter().map(|o| o.d[l]).collect::<Vec<_>>()))
        .collect();
    let w_summary: Vec<Option<McSummary>> = (0..levels.len())
        .map(|l| {
            let xs: Vec<f64> = ok.iter().filter_map(|o| o.wnorm[l]).collect();
            McSummary::from_samples(&xs)
        })
        .collect();

    let d_means: Vec<f64> = d_summary.iter().map(|s| s.map_or(f64::NAN, |s| s.mean)).collect();
    let all_zero = d_means.iter().all(|&d| d == 0.0);
    let decreasing = all_zero || d_means.windows(2).all(|w| w[1] < w[0]);
    let mut checks = vec![
        Check::new(
            "d_n_decreasing",
            decreasing,
            levels[..levels.len() - 1]
                .iter()
                .zip(&d_means)
                .map(|(n, d)| format!("d_{n}={}", fmt_f64(*d)))
                .collect::<Vec<_>>()
                .join(", "),
        ),
        Check::new(
            "no_explosion",
            explosions == 0,
            format!("{explosions} of {r} replicates produced non-finite coefficients"),
        ),
    ];
    let w_means: Vec<f64> = w_summary.iter().flatten().map(|s| s.mean).collect();
    let w_ratio = if w_means.len() == levels.len() {
        let max = w_means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = w_means.iter().cloned().fold(f64::INFINITY, f64::min);
        Some(max / min)
    } else {
        None
    };
    checks.push(Check::new(
        "w_beta_p_ratio",
        w_ratio.is_some_and(|q| q <= WNORM_RATIO_MAX),
        match w_ratio {
            Some(q) => format!("max/min across levels {} (limit {WNORM_RATIO_MAX})", fmt_f64(q)),
            None => format!("fewer than {MIN_WNORM_SNAPSHOTS} snapshots; norm not computed"),
        },
    ));

    let results = json!({
        "horizon": horizon,
        "theta": theta,
        "steps": steps,
        "snapshot_stride": stride,
        "replicates": r,
        "beta": spec.beta,
        "p_wnorm": spec.p_wnorm,
        "d_n": levels[..levels.len() - 1].iter().zip(&d_summary).map(|(n, s)| json!({"n": n, "d": s})).collect::<Vec<_>>(),
        "w_beta_p_norm": levels.iter().zip(&w_summary).map(|(n, s)| json!({"n": n, "norm": s})).collect::<Vec<_>>(),
        "w_beta_p_ratio": w_ratio,
    });
    Ok(Report::new(spec, cases, results, checks))
}
