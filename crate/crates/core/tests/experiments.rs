use std::path::Path;

use loghe::experiments::config::parse_config_str;
use loghe::experiments::{run, Report};
use loghe::Error;
use serde_json::Value;

fn spec(text: &str) -> loghe::experiments::config::ExperimentSpec {
    parse_config_str(text, Path::new("test.cfg")).unwrap()
}

fn run_text(text: &str, workers: usize) -> Report {
    run(&spec(text), workers).unwrap()
}

fn outputs(report: &Report) -> (Vec<u8>, String) {
    (report.cases.to_csv().unwrap(), report.summary_json().unwrap())
}

const SIMULATE: &str = "experiment = simulate\nn = 8\ndt = 1e-3\nT = 0.2\nseed = 3\nreplicates = 6\nmodel = linear_cut_log\nu0 = 2, 0, 0.5\n";
const VERIFY: &str = "experiment = verify\nseed = 5\nreplicates = 40\n";
const UNIQUENESS: &str = "experiment = uniqueness\nn = 8\ndt = 1e-3\nT = 0.05\nseed = 7\nreplicates = 8\nmodel = linear_cut_log\nu0 = 4\ndelta_list = 0, 1e-2, 1e-3\n";

#[test]
fn reruns_are_byte_identical() {
    for text in [SIMULATE, VERIFY, UNIQUENESS] {
        assert_eq!(outputs(&run_text(text, 1)), outputs(&run_text(text, 1)));
    }
}

#[test]
fn worker_count_does_not_change_outputs() {
    for text in [SIMULATE, VERIFY, UNIQUENESS] {
        assert_eq!(outputs(&run_text(text, 1)), outputs(&run_text(text, 3)));
    }
}

#[test]
fn written_files_match_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = SIMULATE.to_string();
    text.push_str("trajectory = true\n");
    let report = run_text(&text, 1);
    let files = report.write(dir.path()).unwrap();
    assert_eq!(files.len(), 2 + 6);
    let summary: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "simulate");
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["passed"], true);
    let cases = std::fs::read_to_string(dir.path().join("cases.csv")).unwrap();
    assert!(cases.starts_with("schema_version,"));
    assert_eq!(cases.lines().count(), 1 + 6);
    let traj = files
        .iter()
        .find(|p| p.to_string_lossy().contains("trajectory_"))
        .unwrap();
    assert!(std::fs::read_to_string(traj)
        .unwrap()
        .starts_with("schema_version,t,h_norm,v_norm"));
}

#[test]
fn verify_passes_and_reports_min_gaps() {
    let report = run_text(VERIFY, 0);
    assert!(report.passed(), "{:?}", report.checks);
    for suite in ["lemma31", "lemma32", "log_sobolev", "log_sobolev_plus"] {
        let s = &report.results[suite];
        assert!(s["min_gap"].is_number(), "{suite}: {s}");
        assert!(s["min_scaled_gap"].as_f64().unwrap() >= -1e-8, "{suite}");
    }
}

#[test]
fn zeroed_rhs_fails_verify() {
    let report = run_text(&format!("{VERIFY}debug_rhs_scale = 0\n"), 0);
    assert!(!report.passed());
    assert!(!report.check("saturation").unwrap().passed);
}

#[test]
fn zero_perturbation_is_exact() {
    let report = run_text(&UNIQUENESS.replace("0, 1e-2, 1e-3", "0"), 0);
    assert!(report.check("zero_perturbation_exact").unwrap().passed);
    let d = &report.results["deltas"][0];
    assert_eq!(d["z_sup"]["mean"].as_f64(), Some(0.0));
    assert_eq!(
        report.results["t_star"].as_f64().unwrap(),
        loghe::inequalities::t_star(0.77).unwrap()
    );
}

#[test]
fn heat_moments_match_closed_form() {
    let report = run_text(
        "experiment = moments\ndt = 1e-4\nn_list = 4, 8\np = 2\nmodel = zero\nlog_drift = false\nu0 = e1\nseed = 1\nreplicates = 2\n",
        0,
    );
    let t2 = 2f64.ln();
    for level in report.results["levels"].as_array().unwrap() {
        let p = &level["powers"][0];
        assert_eq!(p["sup_term"]["mean"].as_f64(), Some(1.0));
        let int = p["integral_term"]["mean"].as_f64().unwrap();
        assert!((int - (1.0 - (-2.0 * t2).exp()) / 2.0).abs() < 1e-3, "{int}");
    }
    assert!(report.passed());
}

#[test]
fn moments_reject_models_without_sublinear_growth() {
    let s = spec("experiment = moments\ndt = 1e-3\nn = 4\nmodel = linear_cut_log\nseed = 1\n");
    assert!(matches!(run(&s, 0), Err(Error::Config(_))));
}

#[test]
fn uniqueness_rejects_models_without_lipschitz_constants() {
    let s = spec("experiment = uniqueness\ndt = 1e-3\nn = 4\nmodel = sublinear\nseed = 1\n");
    assert!(matches!(run(&s, 0), Err(Error::Config(_))));
}

#[test]
fn diagonal_dynamics_give_zero_cauchy_distance() {
    let report = run_text(
        "experiment = converge\ndt = 1e-3\nn_list = 2, 4, 8\nmodel = zero\nlog_drift = false\nu0 = 1, 0.5\nseed = 2\nreplicates = 3\n",
        0,
    );
    for d in report.results["d_n"].as_array().unwrap() {
        assert_eq!(d["d"]["mean"].as_f64(), Some(0.0));
    }
    assert!(report.check("d_n_decreasing").unwrap().passed);
}

#[test]
fn converge_needs_doubling_levels() {
    let s = spec("experiment = converge\ndt = 1e-3\nn_list = 4, 8, 12\nseed = 1\nmodel = linear_cut_log\n");
    assert!(matches!(run(&s, 0), Err(Error::Config(_))));
}

#[test]
fn pure_decay_has_nonpositive_growth_rate() {
    let report = run_text(
        "experiment = lyapunov\ndt = 1e-3\nT = 0.5\nn_list = 4, 8\nmodel = zero\nlog_drift = false\nu0 = e1\nseed = 3\nreplicates = 2\n",
        0,
    );
    for level in report.results["levels"].as_array().unwrap() {
        let c = level["C_hat_empirical"].as_f64().unwrap();
        assert!(c <= 1e-2, "{c}");
        let means: Vec<f64> = level["mean_phi"]
            .as_array()
            .unwrap()
            .iter()
            .map(|m| m["mean"].as_f64().unwrap())
            .collect();
        assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
    }
    assert!(report.check("n4_initial_value").unwrap().passed);
}

#[test]
fn short_target_is_a_single_segment() {
    let report = run_text(
        "experiment = schedule\nn = 4\ndt = 1e-3\nT = 0.1\np = 2\ntheta = 0\nmodel = linear_cut_log\nseed = 4\n",
        0,
    );
    assert_eq!(report.results["schedule"]["kappa"].as_u64(), Some(0));
    assert!(report.passed(), "{:?}", report.checks);
}

#[test]
fn schedule_seeds_give_distinct_consistent_runs() {
    let base = "experiment = schedule\nn = 8\ndt = 1e-3\nT = 1\np = 2\ntheta = 0\nmodel = linear_cut_log\n";
    let a = run_text(&format!("{base}seed = 1\n"), 0);
    let b = run_text(&format!("{base}seed = 2\n"), 0);
    assert!(a.passed() && b.passed());
    assert_eq!(a.results["schedule"]["kappa"].as_u64(), Some(2));
    assert_ne!(a.results["final_h_norm"], b.results["final_h_norm"]);
}

#[test]
fn config_errors_name_key_and_line() {
    let cases = [
        (
            "experiment = simulate\nn = 4\ndt = 1e-3\nbogus = 1\n",
            "bad.cfg:4: key `bogus`: unknown key",
        ),
        (
            "experiment = simulate\nn = 4\ndt = 1e-3\nn = 5\n",
            "line 2, again on line 4",
        ),
        (
            "experiment = moments\nn = 4\ndt = 1e-3\ntheta = 1.2\n",
            "θ must lie in [0,1)",
        ),
        (
            "experiment = simulate\nn = four\ndt = 1e-3\n",
            "bad.cfg:2: key `n`",
        ),
        ("experiment = simulate\ndt = 1e-3\n", "`n`"),
    ];
    for (text, needle) in cases {
        let err = parse_config_str(text, Path::new("bad.cfg"))
            .unwrap_err()
            .to_string();
        assert!(err.contains(needle), "{err:?} should mention {needle:?}");
    }
}

#[test]
fn minimal_config_gets_defaults() {
    let s = spec("experiment = simulate\nn = 4\ndt = 1e-3\nT = 1\nseed = 9\n");
    assert_eq!(s.length, std::f64::consts::PI);
    assert_eq!(s.beta, 0.25);
    assert_eq!(s.p_wnorm, 1.5);
    assert_eq!(s.sim_config(4, 1.0).unwrap().nodes, 32);
}
