//! Config-driven experiments and their CSV/JSON outputs.
//!
//! Each runner turns an [`ExperimentSpec`] into a [`Report`]: a per-case table,
//! a JSON summary of aggregates and a list of named pass/fail checks. Outputs
//! contain no timings or host details, so identical inputs give identical bytes.

pub mod config;
mod converge;
mod lyapunov;
mod moments;
mod schedule;
mod simulate;
mod uniqueness;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

pub use config::{parse_config, parse_config_str, Experiment, ExperimentSpec, ModelSpec};
pub use converge::run_convergence;
pub use lyapunov::run_lyapunov;
pub use moments::run_moments;
pub use schedule::run_schedule_check;
pub use simulate::run_simulate;
pub use uniqueness::run_uniqueness;
pub use verify::run_inequality_suite;

use crate::error::{Error, Result};
use crate::sde::Trajectory;

pub const CASES_SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Fixed-format float: plain decimal in `[1e-4, 1e15)`, scientific otherwise.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// A table whose first column is `schema_version`.
    pub fn new(columns: &[&str]) -> Self {
        let mut header = vec!["schema_version".to_string()];
        header.extend(columns.iter().map(|c| c.to_string()));
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len() + 1, self.header.len());
        let mut r = vec![CASES_SCHEMA_VERSION.to_string()];
        r.extend(row);
        self.rows.push(r);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner()
            .map_err(|e| Error::Internal(format!("csv buffer: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: Experiment,
    pub cases: Table,
    pub results: Value,
    pub checks: Vec<Check>,
    /// Per-replicate trajectories to emit as `trajectory_<seed>.csv`.
    pub trajectories: Vec<(u64, Trajectory)>,
    spec: Value,
}

impl Report {
    fn new(spec: &ExperimentSpec, cases: Table, results: Value, checks: Vec<Check>) -> Self {
        Self {
            experiment: spec.experiment,
            cases,
            results,
            checks,
            trajectories: Vec::new(),
            spec: serde_json::to_value(spec).unwrap_or(Value::Null),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary(&self) -> Value {
        json!({
            "schema_version": SUMMARY_SCHEMA_VERSION,
            "experiment": self.experiment.name(),
            "spec": self.spec,
            "results": self.results,
            "checks": self.checks,
            "passed": self.passed(),
        })
    }

    pub fn summary_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.summary())?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `cases.csv`, `summary.json` and any trajectories into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let cases = dir.join("cases.csv");
        fs::write(&cases, self.cases.to_csv()?).map_err(|e| Error::io(&cases, e))?;
        written.push(cases);
        let summary = dir.join("summary.json");
        fs::write(&summary, self.summary_json()?).map_err(|e| Error::io(&summary, e))?;
        written.push(summary);
        for (seed, traj) in &self.trajectories {
            let path = dir.join(format!("trajectory_{seed}.csv"));
            traj.write_csv(&path)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Runs the experiment named in `spec` on `workers` threads (0 = all cores).
pub fn run(spec: &ExperimentSpec, workers: usize) -> Result<Report> {
    match spec.experiment {
        Experiment::Simulate => run_simulate(spec, workers),
        Experiment::Verify => run_inequality_suite(spec, workers),
        Experiment::Uniqueness => run_uniqueness(spec, workers),
        Experiment::Moments => run_moments(spec, workers),
        Experiment::Lyapunov => run_lyapunov(spec, workers),
        Experiment::Converge => run_convergence(spec, workers),
        Experiment::Schedule => run_schedule_check(spec, workers),
    }
}

/// Seed of replicate `r`; shared by every level and perturbation of one experiment
/// so that comparisons across them see the same Brownian path.
pub(crate) fn replicate_seed(spec: &ExperimentSpec, r: usize) -> u64 {
    crate::noise::derive_seed(spec.seed, r as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(1.5e-7), "1.5e-7");
        assert_eq!(fmt_f64(-3.0), "-3");
    }

    #[test]
    fn table_has_version_column() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x".into()]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s, "schema_version,a,b\n1,1,x\n");
    }
}
