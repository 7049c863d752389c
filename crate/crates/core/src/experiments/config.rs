//! Flat `key = value` configuration with optional `[section]` headers.
//!
//! Sections only group keys for readability; every key is global and may appear
//! once. `#` starts a comment. Lists are comma-separated, optionally bracketed.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::{DiffusionKind, DiffusionModel, LocalLipschitz, SuperlinearGrowth};
use crate::sde::{InitialCondition, SimConfig};
use crate::spectral::SpectralBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Simulate,
    Verify,
    Uniqueness,
    Moments,
    Lyapunov,
    Converge,
    Schedule,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Simulate,
        Experiment::Verify,
        Experiment::Uniqueness,
        Experiment::Moments,
        Experiment::Lyapunov,
        Experiment::Converge,
        Experiment::Schedule,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Verify => "verify",
            Experiment::Uniqueness => "uniqueness",
            Experiment::Moments => "moments",
            Experiment::Lyapunov => "lyapunov",
            Experiment::Converge => "converge",
            Experiment::Schedule => "schedule",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Model selection plus optional overrides of the stated hypothesis constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub kind: DiffusionKind,
    pub theta: Option<f64>,
    pub c1: f64,
    pub c2: f64,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<DiffusionModel> {
        let mut model = match self.kind {
            DiffusionKind::Zero => DiffusionModel::zero(),
            DiffusionKind::LinearCutLog => DiffusionModel::linear_cut_log(),
            DiffusionKind::Sublinear => {
                DiffusionModel::sublinear(self.theta.unwrap_or(DEFAULT_THETA), self.c1, self.c2)?
            }
            DiffusionKind::Custom => {
                return Err(Error::Config(
                    "custom models cannot be selected from a config file".into(),
                ))
            }
        };
        if self.l1.is_some() || self.l2.is_some() {
            let base = model.lipschitz().unwrap_or(LocalLipschitz {
                l1: 0.0,
                l2: 0.0,
                empirical: true,
            });
            model = model.with_lipschitz(LocalLipschitz {
                l1: self.l1.unwrap_or(base.l1),
                l2: self.l2.unwrap_or(base.l2),
                empirical: true,
            });
        }
        if self.c3.is_some() || self.c4.is_some() {
            let base = model.superlinear_growth();
            model = model.with_superlinear_growth(SuperlinearGrowth {
                c3: self.c3.unwrap_or(base.c3),
                c4: self.c4.unwrap_or(base.c4),
            });
        }
        Ok(model)
    }
}

pub const DEFAULT_THETA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    #[serde(skip)]
    pub source: PathBuf,
    pub n: Option<usize>,
    pub length: f64,
    pub nodes: Option<usize>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub p: f64,
    pub p_list: Vec<f64>,
    pub model: ModelSpec,
    pub u0: InitialCondition,
    pub seed: u64,
    pub replicates: Option<usize>,
    pub delta_list: Vec<f64>,
    pub n_list: Vec<usize>,
    pub beta: f64,
    pub p_wnorm: f64,
    pub m_threshold: Option<f64>,
    pub taming: bool,
    pub log_drift: bool,
    pub snapshot_stride: Option<usize>,
    pub t_points: usize,
    pub saturation_threshold: f64,
    pub trajectory: bool,
    /// Multiplies every right-hand side in `verify`; only for exercising the failure path.
    pub rhs_scale: f64,
}

impl ExperimentSpec {
    /// Defaults for everything but the experiment name.
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            source: PathBuf::from("<inline>"),
            n: None,
            length: PI,
            nodes: None,
            dt: None,
            horizon: None,
            p: 2.0,
            p_list: Vec::new(),
            model: ModelSpec {
                kind: DiffusionKind::LinearCutLog,
                theta: None,
                c1: 1.0,
                c2: 1.0,
                c3: None,
                c4: None,
                l1: None,
                l2: None,
            },
            u0: InitialCondition::e1(),
            seed: 0,
            replicates: None,
            delta_list: Vec::new(),
            n_list: Vec::new(),
            beta: 0.25,
            p_wnorm: 1.5,
            m_threshold: None,
            taming: false,
            log_drift: true,
            snapshot_stride: None,
            t_points: 10,
            saturation_threshold: 0.2,
            trajectory: false,
            rhs_scale: 1.0,
        }
    }

    pub fn n(&self) -> Result<usize> {
        self.n.ok_or_else(|| self.missing("n"))
    }

    pub fn dt(&self) -> Result<f64> {
        self.dt.ok_or_else(|| self.missing("dt"))
    }

    pub fn horizon(&self) -> Result<f64> {
        self.horizon.ok_or_else(|| self.missing("T"))
    }

    /// `n_list`, or `[n]` when only `n` is given.
    pub fn levels(&self) -> Result<Vec<usize>> {
        if !self.n_list.is_empty() {
            Ok(self.n_list.clone())
        } else {
            Ok(vec![self.n()?])
        }
    }

    pub fn powers(&self) -> Vec<f64> {
        if self.p_list.is_empty() {
            vec![self.p]
        } else {
            self.p_list.clone()
        }
    }

    pub fn replicates(&self) -> usize {
        self.replicates.unwrap_or(1)
    }

    /// `theta` of the sublinear model, else the `theta` key, else 0.
    pub fn theta(&self) -> f64 {
        self.model.theta.unwrap_or(match self.model.kind {
            DiffusionKind::Sublinear => DEFAULT_THETA,
            _ => 0.0,
        })
    }

    fn missing(&self, key: &str) -> Error {
        Error::Config(format!(
            "{}: experiment `{}` needs key `{key}`",
            self.source.display(),
            self.experiment
        ))
    }

    /// Simulation parameters at `n` modes with horizon `horizon`.
    pub fn sim_config(&self, n: usize, horizon: f64) -> Result<SimConfig> {
        let mut cfg = SimConfig::new(n, self.dt()?, horizon, self.model.build()?);
        cfg.length = self.length;
        cfg.nodes = match (self.nodes, self.n) {
            // An explicit M is tied to the configured n; other levels keep its ratio.
            (Some(m), Some(n0)) if n0 > 0 => (m * n).div_ceil(n0),
            (Some(m), _) => m,
            _ => SpectralBasis::DEFAULT_NODES_PER_MODE * n,
        };
        cfg.u0 = self.u0.clone();
        cfg.seed = self.seed;
        cfg.taming = self.taming;
        cfg.log_drift = self.log_drift;
        cfg.snapshot_stride = self.snapshot_stride.unwrap_or(1);
        cfg.validate()?;
        Ok(cfg)
    }
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

struct Parser<'a> {
    path: &'a Path,
}

impl Parser<'_> {
    fn err(&self, line: usize, key: &str, message: impl Into<String>) -> Error {
        Error::ConfigKey {
            path: self.path.to_path_buf(),
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn f64(&self, key: &str, e: &Entry) -> Result<f64> {
        e.value
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| {
                self.err(
                    e.line,
                    key,
                    format!("expected a finite number, got `{}`", e.value),
                )
            })
    }

    fn positive(&self, key: &str, e: &Entry) -> Result<f64> {
        let x = self.f64(key, e)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(self.err(e.line, key, format!("must be positive, got {x}")))
        }
    }

    fn nonneg(&self, key: &str, e: &Entry) -> Result<f64> {
        let x = self.f64(key, e)?;
        if x >= 0.0 {
            Ok(x)
        } else {
            Err(self.err(e.line, key, format!("must be nonnegative, got {x}")))
        }
    }

    fn usize(&self, key: &str, e: &Entry) -> Result<usize> {
        e.value.parse::<usize>().map_err(|_| {
            self.err(
                e.line,
                key,
                format!("expected a nonnegative integer, got `{}`", e.value),
            )
        })
    }

    fn count(&self, key: &str, e: &Entry) -> Result<usize> {
        match self.usize(key, e)? {
            0 => Err(self.err(e.line, key, "must be at least 1")),
            k => Ok(k),
        }
    }

    fn bool(&self, key: &str, e: &Entry) -> Result<bool> {
        match e.value {
            "true" => Ok(true),
            "false" => Ok(false),
            v => Err(self.err(e.line, key, format!("expected true or false, got `{v}`"))),
        }
    }

    fn items<'v>(&self, key: &str, e: &Entry<'v>) -> Result<Vec<&'v str>> {
        let v = e.value.trim();
        let v = v.strip_prefix('[').map_or(Ok(v), |rest| {
            rest.strip_suffix(']')
                .ok_or_else(|| self.err(e.line, key, "unterminated list"))
        })?;
        let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            return Err(self.err(e.line, key, "list must not be empty"));
        }
        Ok(items)
    }

    fn f64_list(&self, key: &str, e: &Entry) -> Result<Vec<f64>> {
        self.items(key, e)?
            .into_iter()
            .map(|s| {
                self.f64(
                    key,
                    &Entry {
                        line: e.line,
                        value: s,
                    },
                )
            })
            .collect()
    }

    fn usize_list(&self, key: &str, e: &Entry) -> Result<Vec<usize>> {
        self.items(key, e)?
            .into_iter()
            .map(|s| {
                self.count(
                    key,
                    &Entry {
                        line: e.line,
                        value: s,
                    },
                )
            })
            .collect()
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

/// Every accepted key, in documentation order.
pub const KEYS: &[&str] = &[
    "experiment",
    "n",
    "L",
    "M",
    "dt",
    "T",
    "p",
    "p_list",
    "theta",
    "model",
    "C1",
    "C2",
    "C3",
    "C4",
    "L1",
    "L2",
    "u0",
    "seed",
    "replicates",
    "delta_list",
    "n_list",
    "beta",
    "p_wnorm",
    "M_threshold",
    "taming",
    "log_drift",
    "snapshot_stride",
    "t_points",
    "saturation_threshold",
    "trajectory",
    "debug_rhs_scale",
];

pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, path)
}

/// Parses config text; `path` only labels error messages.
pub fn parse_config_str(text: &str, path: &Path) -> Result<ExperimentSpec> {
    let p = Parser { path };
    let mut entries: HashMap<&str, Entry> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') && content.ends_with(']') && !content.contains('=') {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::ConfigKey {
                path: path.to_path_buf(),
                line,
                key: content.to_string(),
                message: "expected `key = value`".into(),
            });
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(p.err(line, key, "unknown key"));
        }
        if let Some(prev) = entries.get(key) {
            return Err(p.err(
                line,
                key,
                format!(
                    "duplicate key (first set on line {}, again on line {line})",
                    prev.line
                ),
            ));
        }
        entries.insert(
            key,
            Entry {
                line,
                value: unquote(value),
            },
        );
    }

    let experiment_entry = entries.get("experiment").ok_or_else(|| {
        Error::Config(format!(
            "{}: required key `experiment` is missing",
            path.display()
        ))
    })?;
    let experiment = Experiment::from_name(experiment_entry.value).ok_or_else(|| {
        p.err(
            experiment_entry.line,
            "experiment",
            format!(
                "unknown experiment `{}` (expected one of: {})",
                experiment_entry.value,
                Experiment::ALL.map(Experiment::name).join(", ")
            ),
        )
    })?;
    let mut spec = ExperimentSpec::new(experiment);
    spec.source = path.to_path_buf();

    let mut ordered: Vec<(&str, &Entry)> = entries.iter().map(|(k, e)| (*k, e)).collect();
    ordered.sort_by_key(|(_, e)| e.line);
    for (key, e) in ordered {
        match key {
            "experiment" => {}
            "n" => spec.n = Some(p.count(key, e)?),
            "L" => spec.length = p.positive(key, e)?,
            "M" => spec.nodes = Some(p.count(key, e)?),
            "dt" => spec.dt = Some(p.positive(key, e)?),
            "T" => spec.horizon = Some(p.positive(key, e)?),
            "p" => spec.p = p.f64(key, e)?,
            "p_list" => spec.p_list = p.f64_list(key, e)?,
            "theta" => {
                let t = p.f64(key, e)?;
                if !(0.0..1.0).contains(&t) {
                    return Err(p.err(e.line, key, format!("θ must lie in [0,1), got {t}")));
                }
                spec.model.theta = Some(t);
            }
            "model" => {
                spec.model.kind = match e.value {
                    "zero" => DiffusionKind::Zero,
                    "linear_cut_log" => DiffusionKind::LinearCutLog,
                    "sublinear" => DiffusionKind::Sublinear,
                    v => {
                        return Err(p.err(
                            e.line,
                            key,
                            format!("unknown model `{v}` (expected zero, linear_cut_log or sublinear)"),
                        ))
                    }
                }
            }
            "C1" => spec.model.c1 = p.nonneg(key, e)?,
            "C2" => spec.model.c2 = p.nonneg(key, e)?,
            "C3" => spec.model.c3 = Some(p.nonneg(key, e)?),
            "C4" => spec.model.c4 = Some(p.nonneg(key, e)?),
            "L1" => spec.model.l1 = Some(p.nonneg(key, e)?),
            "L2" => spec.model.l2 = Some(p.nonneg(key, e)?),
            "u0" => {
                spec.u0 = if e.value == "e1" {
                    InitialCondition::e1()
                } else {
                    InitialCondition::Coefficients(p.f64_list(key, e)?)
                }
            }
            "seed" => {
                spec.seed = e.value.parse::<u64>().map_err(|_| {
                    p.err(
                        e.line,
                        key,
                        format!("expected an unsigned integer, got `{}`", e.value),
                    )
                })?
            }
            "replicates" => spec.replicates = Some(p.count(key, e)?),
            "delta_list" => {
                spec.delta_list = p.f64_list(key, e)?;
                if spec.delta_list.iter().any(|&d| d < 0.0) {
                    return Err(p.err(e.line, key, "perturbation sizes must be nonnegative"));
                }
            }
            "n_list" => spec.n_list = p.usize_list(key, e)?,
            "beta" => spec.beta = p.f64(key, e)?,
            "p_wnorm" => spec.p_wnorm = p.f64(key, e)?,
            "M_threshold" => spec.m_threshold = Some(p.positive(key, e)?),
            "taming" => spec.taming = p.bool(key, e)?,
            "log_drift" => spec.log_drift = p.bool(key, e)?,
            "snapshot_stride" => spec.snapshot_stride = Some(p.count(key, e)?),
            "t_points" => {
                spec.t_points = p.usize(key, e)?;
                if spec.t_points < 2 {
                    return Err(p.err(e.line, key, "need at least 2 grid points"));
                }
            }
            "saturation_threshold" => spec.saturation_threshold = p.positive(key, e)?,
            "trajectory" => spec.trajectory = p.bool(key, e)?,
            "debug_rhs_scale" => spec.rhs_scale = p.f64(key, e)?,
            _ => unreachable!("key table and match arms agree"),
        }
    }

    for (key, ps) in [("p", vec![spec.p]), ("p_list", spec.p_list.clone())] {
        if let Some(&bad) = ps.iter().find(|&&x| x < 2.0) {
            let line = entries.get(key).map_or(0, |e| e.line);
            return Err(p.err(line, key, format!("moment powers must be at least 2, got {bad}")));
        }
    }
    if !(spec.beta > 0.0 && spec.beta < 0.5) {
        let line = entries.get("beta").map_or(0, |e| e.line);
        return Err(p.err(line, "beta", format!("must lie in (0, 1/2), got {}", spec.beta)));
    }
    if !(spec.p_wnorm > 1.0 && spec.p_wnorm < 2.0) {
        let line = entries.get("p_wnorm").map_or(0, |e| e.line);
        return Err(p.err(
            line,
            "p_wnorm",
            format!("must lie in (1, 2), got {}", spec.p_wnorm),
        ));
    }
    if let (Some(n), Some(m)) = (spec.n, spec.nodes) {
        if m < SpectralBasis::MIN_NODES_PER_MODE * n {
            let line = entries["M"].line;
            return Err(p.err(line, "M", format!("need M >= 4n = {}, got {m}", 4 * n)));
        }
    }
    spec.model.build().map_err(|e| {
        let key = if entries.contains_key("theta") {
            "theta"
        } else {
            "model"
        };
        let line = entries.get(key).map_or(0, |e| e.line);
        p.err(line, key, e.to_string())
    })?;

    if experiment != Experiment::Verify {
        if spec.dt.is_none() {
            return Err(spec.missing("dt"));
        }
        if spec.n.is_none() && spec.n_list.is_empty() {
            return Err(spec.missing("n"));
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<ExperimentSpec> {
        parse_config_str(s, Path::new("test.cfg"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let s = parse("experiment = simulate\nn = 8\ndt = 1e-3\nT = 1\nseed = 5\n").unwrap();
        assert_eq!(s.experiment, Experiment::Simulate);
        assert_eq!(s.length, PI);
        assert_eq!(s.beta, 0.25);
        assert_eq!(s.p_wnorm, 1.5);
        assert_eq!(s.seed, 5);
        let cfg = s.sim_config(8, 1.0).unwrap();
        assert_eq!(cfg.nodes, 64);
        assert_eq!(cfg.u0, InitialCondition::e1());
    }

    #[test]
    fn sections_comments_and_lists() {
        let s = parse(
            "# header\n[run]\nexperiment = \"uniqueness\" # trailing\n[grid]\nn = 4\ndt = 0.01\n\
             delta_list = [0, 1e-2, 1e-3]\nu0 = 1, 0.5\n",
        )
        .unwrap();
        assert_eq!(s.delta_list, vec![0.0, 1e-2, 1e-3]);
        assert_eq!(s.u0, InitialCondition::Coefficients(vec![1.0, 0.5]));
    }

    #[test]
    fn theta_out_of_range() {
        let err =
            parse("experiment = moments\nn = 8\ndt = 1e-3\nmodel = sublinear\ntheta = 1.2\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("θ must lie in [0,1)"), "{msg}");
        assert!(msg.contains(":5:"), "{msg}");
    }

    #[test]
    fn duplicate_key_names_both_lines() {
        let msg = parse("experiment = simulate\nn = 8\ndt = 1e-3\nn = 16\n")
            .unwrap_err()
            .to_string();
        assert!(
            msg.contains("line 2") && msg.contains("line 4") && msg.contains("`n`"),
            "{msg}"
        );
    }

    #[test]
    fn unknown_and_ill_typed_keys() {
        let msg = parse("experiment = simulate\nnn = 8\n").unwrap_err().to_string();
        assert!(
            msg.contains(":2:") && msg.contains("`nn`") && msg.contains("unknown key"),
            "{msg}"
        );
        let msg = parse("experiment = simulate\nn = eight\ndt = 1\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains(":2:") && msg.contains("`n`"), "{msg}");
        let msg = parse("experiment = simulate\nn = 8\n").unwrap_err().to_string();
        assert!(msg.contains("`dt`"), "{msg}");
        assert!(parse("n = 8\n").is_err());
    }

    #[test]
    fn node_count_scales_with_level() {
        let s = parse("experiment = converge\nn = 8\nM = 128\ndt = 1e-3\nn_list = 8, 16\n").unwrap();
        assert_eq!(s.sim_config(16, 1.0).unwrap().nodes, 256);
        assert!(parse("experiment = simulate\nn = 8\nM = 16\ndt = 1e-3\n").is_err());
    }
}
