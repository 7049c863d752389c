//! Restarted simulation along the moment-horizon schedule versus one monolithic run.

use serde_json::json;

use super::{fmt_f64, Check, ExperimentSpec, Report, Table};
use crate::error::Result;
use crate::inequalities::build_schedule;
use crate::noise::NoisePath;
use crate::sde::{simulate_steps, simulate_with, steps_for, SdeState, Trajectory};

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}

/// Concatenation of segment trajectories, dropping each restart point after the first.
fn concatenate(segments: &[Trajectory]) -> Trajectory {
    let mut out = Trajectory::default();
    for (i, s) in segments.iter().enumerate() {
        let skip = usize::from(i > 0);
        out.times.extend_from_slice(&s.times[skip..]);
        out.h_norms.extend_from_slice(&s.h_norms[skip..]);
        out.v_norms.extend_from_slice(&s.v_norms[skip..]);
        let snap_skip = usize::from(i > 0 && s.snapshot_times.first() == s.times.first());
        out.snapshot_times
            .extend_from_slice(&s.snapshot_times[snap_skip..]);
        out.snapshots.extend_from_slice(&s.snapshots[snap_skip..]);
        out.exploded = out.exploded.or(s.exploded);
        out.final_state = s.final_state.clone();
    }
    out
}

pub fn run_schedule_check(spec: &ExperimentSpec, _workers: usize) -> Result<Report> {
    let theta = spec.theta();
    let target = spec.horizon()?;
    let schedule = build_schedule(spec.p, theta, target)?;
    let n = spec.n()?;
    let dt = spec.dt()?;
    let cfg = spec.sim_config(n, schedule.end())?;
    let basis = cfg.basis()?;
    let total = cfg.steps();

    let mut bounds = vec![0usize];
    for &s in &schedule.s[1..=schedule.kappa] {
        bounds.push(steps_for(s, dt).min(total));
    }
    bounds.push(total);

    let noise = NoisePath::generate(cfg.seed, total, dt)?;
    let mono = simulate_with(&cfg, &basis, &noise)?;

    let mut segments = Vec::new();
    let mut state = SdeState::initial(cfg.initial_field()?);
    for w in bounds.windows(2) {
        let (k0, k1) = (w[0], w[1]);
        let traj = if k1 > k0 {
            let inc = NoisePath::generate_from(cfg.seed, k0 as u64, k1 - k0, dt)?;
            simulate_steps(&cfg, &basis, &state, inc.increments())?
        } else {
            simulate_steps(&cfg, &basis, &state, &[])?
        };
        let Some(next) = traj.final_state.clone() else {
            segments.push(traj);
            break;
        };
        state = next;
        segments.push(traj);
    }
    let seg = concatenate(&segments);

    let same_final = match (&seg.final_state, &mono.final_state) {
        (Some(a), Some(b)) => a.step == b.step && bits(a.g.coeffs()) == bits(b.g.coeffs()),
        (None, None) => true,
        _ => false,
    };
    let same_snapshots = seg.snapshot_times == mono.snapshot_times
        && seg
            .snapshots
            .iter()
            .zip(&mono.snapshots)
            .all(|(a, b)| bits(a.coeffs()) == bits(b.coeffs()));
    let identical = bits(&seg.times) == bits(&mono.times)
        && bits(&seg.h_norms) == bits(&mono.h_norms)
        && bits(&seg.v_norms) == bits(&mono.v_norms)
        && same_snapshots
        && same_final;
    let max_diff = seg
        .h_norms
        .iter()
        .zip(&mono.h_norms)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let k = schedule.kappa;
    let mut cases = Table::new(&[
        "segment",
        "start",
        "end",
        "q",
        "segment_horizon",
        "start_step",
        "end_step",
    ]);
    for i in 0..=k {
        cases.push(vec![
            i.to_string(),
            fmt_f64(schedule.s[i]),
            fmt_f64(schedule.s[i + 1]),
            fmt_f64(schedule.q[k - i]),
            fmt_f64(schedule.horizons[k - i]),
            bounds[i].to_string(),
            bounds[i + 1].to_string(),
        ]);
    }
    let covers = schedule.s[k] < target && target <= schedule.s[k + 1];
    let checks = vec![
        Check::new(
            "segmented_equals_monolithic",
            identical,
            format!(
                "{} segments, {} points, max |h| difference {max_diff:e}",
                segments.len(),
                mono.len()
            ),
        ),
        Check::new(
            "schedule_covers_target",
            covers,
            format!(
                "S(kappa) = {} < T = {} <= S(kappa+1) = {}",
                fmt_f64(schedule.s[k]),
                fmt_f64(target),
                fmt_f64(schedule.s[k + 1])
            ),
        ),
        Check::new(
            "no_explosion",
            mono.exploded.is_none(),
            mono.exploded.map_or("finite".into(), |e| {
                format!("non-finite at t = {}", fmt_f64(e.time))
            }),
        ),
    ];
    let results = json!({
        "schedule": schedule,
        "segment_steps": bounds,
        "steps": total,
        "bit_identical": identical,
        "final_h_norm": mono.h_norms.last(),
    });
    let mut report = Report::new(spec, cases, results, checks);
    if spec.trajectory {
        report.trajectories = vec![(cfg.seed, mono)];
    }
    Ok(report)
}
