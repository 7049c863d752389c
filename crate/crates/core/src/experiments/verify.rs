//! Randomized gap suites for the functional inequalities and ODE-oracle checks
//! of the two Gronwall bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{fmt_f64, Check, ExperimentSpec, Report, Table};
use crate::ensemble::try_map_replicates;
use crate::error::Result;
use crate::inequalities::{
    gronwall_alpha_bound, lemma31_gap, lemma32_gap, log_gronwall_bound, log_sobolev_gap,
    log_sobolev_plus_gap, GapReport,
};
use crate::noise::derive_seed;
use crate::spectral::{SpectralBasis, SpectralField};

pub const DIFFERENCE_CASES: usize = 10_000;
pub const LOG_SOBOLEV_FIELDS: usize = 1_000;
pub const ODE_CASES: usize = 200;
pub const DIFFERENCE_TOL: f64 = 1e-8;
pub const LOG_SOBOLEV_TOL: f64 = 1e-6;
pub const GRONWALL_TOL: f64 = 1e-6;
pub const SATURATION_TOL: f64 = 1e-10;

const LS_EPS: [f64; 3] = [0.01, 0.1, 1.0];
const DIFF_EPS: [f64; 3] = [0.05, 0.25, 1.0];
const DIFF_ALPHA: [f64; 3] = [0.3, 0.5, 0.9];
const ALPHA_ODE_EXPONENTS: [f64; 2] = [0.3, 0.7];
const ALPHA_ODE_TIMES: [f64; 3] = [0.5, 1.0, 2.0];
const LOG_ODE_TIMES: [f64; 3] = [0.25, 0.5, 1.0];
const ODE_STEP: f64 = 1e-4;

#[derive(Clone, Copy)]
enum Suite {
    Lemma31,
    Lemma32,
    LogSobolev,
    LogSobolevPlus,
    GronwallAlpha,
    LogGronwall,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Lemma31 => "lemma31",
            Suite::Lemma32 => "lemma32",
            Suite::LogSobolev => "log_sobolev",
            Suite::LogSobolevPlus => "log_sobolev_plus",
            Suite::GronwallAlpha => "gronwall_alpha",
            Suite::LogGronwall => "log_gronwall",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

struct Case {
    case_seed: u64,
    inputs: String,
    lhs: f64,
    rhs: f64,
    /// Violation threshold on `rhs - lhs`.
    floor: f64,
}

impl Case {
    fn gap(&self) -> f64 {
        self.rhs - self.lhs
    }

    fn passed(&self) -> bool {
        self.gap() >= self.floor
    }
}

fn case_rng(master: u64, suite: Suite, i: usize) -> (u64, ChaCha8Rng) {
    let s = derive_seed(master, (suite.tag() << 40) | i as u64);
    (s, ChaCha8Rng::seed_from_u64(s))
}

/// Band-limited field with a random amplitude over several decades and a random spectral decay.
fn random_field(rng: &mut ChaCha8Rng, n: usize) -> SpectralField {
    let amp = 10f64.powf(rng.random_range(-2.0..1.5));
    let decay = rng.random_range(0.0..2.0);
    let c = (1..=n)
        .map(|j| amp * rng.random_range(-1.0..1.0) / (j as f64).powf(decay))
        .collect();
    SpectralField::new(c).expect("finite coefficients")
}

/// Second field of a pair: independent, a small perturbation, zero, or a multiple.
fn partner(rng: &mut ChaCha8Rng, u: &SpectralField, n: usize) -> SpectralField {
    match rng.random_range(0..4) {
        0 => random_field(rng, n),
        1 => {
            let size = u.norm().max(1e-3) * 10f64.powf(rng.random_range(-6.0..-1.0));
            let d = random_field(rng, n);
            u.add(&d.scaled(size / d.norm().max(1e-300)))
        }
        2 => SpectralField::zeros(n),
        _ => u.scaled(rng.random_range(-1.0..1.0)),
    }
}

fn inputs_string(r: &GapReport) -> String {
    r.inputs
        .iter()
        .map(|(k, v)| format!("{k}={}", fmt_f64(*v)))
        .collect::<Vec<_>>()
        .join(";")
}

fn gap_case(r: GapReport, case_seed: u64, tol: f64, rhs_scale: f64) -> Case {
    let rhs = r.rhs * rhs_scale;
    Case {
        case_seed,
        inputs: inputs_string(&r),
        lhs: r.lhs,
        rhs,
        floor: -tol * (1.0 + r.lhs.abs() + rhs.abs()),
    }
}

/// Classical RK4 for `y' = f(y)`, sampled at the requested times.
fn rk4_samples(f: impl Fn(f64) -> f64, y0: f64, times: &[f64]) -> Vec<f64> {
    let mut y = y0;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let steps = ((target - t) / ODE_STEP).round() as usize;
        let h = (target - t) / steps.max(1) as f64;
        for _ in 0..steps {
            let k1 = f(y);
            let k2 = f(y + 0.5 * h * k1);
            let k3 = f(y + 0.5 * h * k2);
            let k4 = f(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        t = target;
        out.push(y);
    }
    out
}

fn difference_suite(
    spec: &ExperimentSpec,
    basis: &SpectralBasis,
    suite: Suite,
    count: usize,
    workers: usize,
) -> Result<Vec<Case>> {
    let n = basis.n();
    try_map_replicates(count, workers, |i| {
        let (s, mut rng) = case_rng(spec.seed, suite, i);
        let u = random_field(&mut rng, n);
        let v = partner(&mut rng, &u, n);
        let eps = DIFF_EPS[rng.random_range(0..DIFF_EPS.len())];
        let alpha = DIFF_ALPHA[rng.random_range(0..DIFF_ALPHA.len())];
        let r = match suite {
            Suite::Lemma31 => lemma31_gap(&u, &v, basis, eps, alpha)?,
            _ => lemma32_gap(&u, &v, basis, eps, alpha)?,
        };
        Ok(gap_case(r, s, DIFFERENCE_TOL, spec.rhs_scale))
    })
}

fn log_sobolev_suite(
    spec: &ExperimentSpec,
    basis: &SpectralBasis,
    suite: Suite,
    fields: usize,
    workers: usize,
) -> Result<Vec<Case>> {
    let n = basis.n();
    let per_field = try_map_replicates(fields, workers, |i| {
        let (s, mut rng) = case_rng(spec.seed, suite, i);
        let u = random_field(&mut rng, n);
        LS_EPS
            .iter()
            .map(|&eps| {
                let r = match suite {
                    Suite::LogSobolev => log_sobolev_gap(&u, basis, eps, 1)?,
                    _ => log_sobolev_plus_gap(&u, basis, eps, 1)?,
                };
                Ok(gap_case(r, s, LOG_SOBOLEV_TOL, spec.rhs_scale))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_field.into_iter().flatten().collect())
}

/// `Y' = aY + bY^alpha`, `Y(0) = c` against the Bihari-type bound.
fn alpha_ode_suite(spec: &ExperimentSpec, count: usize, workers: usize) -> Result<Vec<Case>> {
    let per = try_map_replicates(count, workers, |i| {
        let (s, mut rng) = case_rng(spec.seed, Suite::GronwallAlpha, i);
        let a = rng.random_range(0.0..2.0);
        let b = rng.random_range(0.0..2.0);
        let alpha = ALPHA_ODE_EXPONENTS[rng.random_range(0..2)];
        let c = rng.random_range(0.0..1.0);
        let sol = rk4_samples(|y: f64| a * y + b * y.max(0.0).powf(alpha), c, &ALPHA_ODE_TIMES);
        ALPHA_ODE_TIMES
            .iter()
            .zip(sol)
            .map(|(&t, y)| {
                let bound = gronwall_alpha_bound(c, &a.into(), &b.into(), alpha, 0.0, t)?;
                Ok(Case {
                    case_seed: s,
                    inputs: format!(
                        "a={};b={};alpha={};c={};t={}",
                        fmt_f64(a),
                        fmt_f64(b),
                        fmt_f64(alpha),
                        fmt_f64(c),
                        fmt_f64(t)
                    ),
                    lhs: y,
                    rhs: bound * spec.rhs_scale,
                    floor: -GRONWALL_TOL,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per.into_iter().flatten().collect())
}

/// `X' = c1 X + c2 X log X`, `X(0) = M` against the log-Gronwall bound.
fn log_ode_suite(spec: &ExperimentSpec, count: usize, workers: usize) -> Result<Vec<Case>> {
    let per = try_map_replicates(count, workers, |i| {
        let (s, mut rng) = case_rng(spec.seed, Suite::LogGronwall, i);
        let m = rng.random_range(1.0..2.0);
        let c1 = rng.random_range(0.0..1.0);
        let c2 = rng.random_range(0.0..1.0);
        let sol = rk4_samples(|x: f64| c1 * x + c2 * x * x.ln(), m, &LOG_ODE_TIMES);
        LOG_ODE_TIMES
            .iter()
            .zip(sol)
            .map(|(&t, x)| {
                let bound = log_gronwall_bound(&m.into(), &c1.into(), &c2.into(), t)?;
                Ok(Case {
                    case_seed: s,
                    inputs: format!(
                        "M={};c1={};c2={};t={}",
                        fmt_f64(m),
                        fmt_f64(c1),
                        fmt_f64(c2),
                        fmt_f64(t)
                    ),
                    lhs: x,
                    rhs: bound * spec.rhs_scale,
                    floor: -GRONWALL_TOL,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per.into_iter().flatten().collect())
}

fn suite_summary(cases: &[Case]) -> Value {
    let worst = cases.iter().enumerate().min_by(|(_, a), (_, b)| {
        let sa = a.gap() / (1.0 + a.lhs.abs() + a.rhs.abs());
        let sb = b.gap() / (1.0 + b.lhs.abs() + b.rhs.abs());
        sa.total_cmp(&sb)
    });
    let min_gap = cases.iter().map(Case::gap).fold(f64::INFINITY, f64::min);
    let violations: Vec<Value> = cases
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.passed())
        .map(|(i, c)| json!({"case": i, "case_seed": c.case_seed, "inputs": c.inputs, "lhs": c.lhs, "rhs": c.rhs}))
        .collect();
    json!({
        "cases": cases.len(),
        "min_gap": min_gap,
        "min_scaled_gap": worst.map(|(_, c)| c.gap() / (1.0 + c.lhs.abs() + c.rhs.abs())),
        "worst_case": worst.map(|(i, c)| json!({"case": i, "case_seed": c.case_seed, "inputs": c.inputs})),
        "violations": violations.len(),
        "violating_cases": violations,
    })
}

pub fn run_inequality_suite(spec: &ExperimentSpec, workers: usize) -> Result<Report> {
    let n = spec.n.unwrap_or(8);
    let basis = match spec.nodes {
        Some(m) => SpectralBasis::new(n, spec.length, m)?,
        None => SpectralBasis::with_default_nodes(n, spec.length)?,
    };
    let diff_cases = spec.replicates.unwrap_or(DIFFERENCE_CASES);
    let ls_fields = spec.replicates.unwrap_or(LOG_SOBOLEV_FIELDS);
    let ode_cases = spec.replicates.unwrap_or(ODE_CASES);

    let suites: Vec<(Suite, Vec<Case>)> = vec![
        (
            Suite::Lemma31,
            difference_suite(spec, &basis, Suite::Lemma31, diff_cases, workers)?,
        ),
        (
            Suite::Lemma32,
            difference_suite(spec, &basis, Suite::Lemma32, diff_cases, workers)?,
        ),
        (
            Suite::LogSobolev,
            log_sobolev_suite(spec, &basis, Suite::LogSobolev, ls_fields, workers)?,
        ),
        (
            Suite::LogSobolevPlus,
            log_sobolev_suite(spec, &basis, Suite::LogSobolevPlus, ls_fields, workers)?,
        ),
        (Suite::GronwallAlpha, alpha_ode_suite(spec, ode_cases, workers)?),
        (Suite::LogGronwall, log_ode_suite(spec, ode_cases, workers)?),
    ];

    let mut table = Table::new(&[
        "suite",
        "case",
        "case_seed",
        "inputs",
        "lhs",
        "rhs",
        "gap",
        "passed",
    ]);
    let mut results = serde_json::Map::new();
    let mut checks = Vec::new();
    for (suite, cases) in &suites {
        for (i, c) in cases.iter().enumerate() {
            table.push(vec![
                suite.name().into(),
                i.to_string(),
                c.case_seed.to_string(),
                c.inputs.clone(),
                fmt_f64(c.lhs),
                fmt_f64(c.rhs),
                fmt_f64(c.gap()),
                c.passed().to_string(),
            ]);
        }
        let bad = cases.iter().filter(|c| !c.passed()).count();
        results.insert(suite.name().into(), suite_summary(cases));
        checks.push(Check::new(
            suite.name(),
            bad == 0,
            format!("{bad} of {} cases below tolerance", cases.len()),
        ));
    }

    // Closed forms that attain the bounds.
    let mut worst_saturation: f64 = 0.0;
    for t in ALPHA_ODE_TIMES {
        let e = gronwall_alpha_bound(1.0, &1.0.into(), &0.0.into(), 0.5, 0.0, t)? * spec.rhs_scale;
        let q = gronwall_alpha_bound(0.0, &0.0.into(), &1.0.into(), 0.5, 0.0, t)? * spec.rhs_scale;
        worst_saturation = worst_saturation
            .max((e - t.exp()).abs())
            .max((q - t * t / 4.0).abs());
    }
    let two_e = log_gronwall_bound(&2.0.into(), &0.0.into(), &1.0.into(), 1.0)? * spec.rhs_scale;
    worst_saturation = worst_saturation.max((two_e - 2f64.powf(std::f64::consts::E)).abs());
    results.insert("saturation_max_error".into(), json!(worst_saturation));
    checks.push(Check::new(
        "saturation",
        worst_saturation <= SATURATION_TOL,
        format!("max deviation {worst_saturation:e} from e^t, t^2/4 and 2^e"),
    ));
    results.insert("n".into(), json!(n));
    results.insert("nodes".into(), json!(basis.nodes()));

    Ok(Report::new(spec, table, Value::Object(results), checks))
}
