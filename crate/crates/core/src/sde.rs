//! Time integration of the Galerkin system
//!
//! ```text
//! dg_j = -lambda_j g_j dt + F_j(g) dt + G_j(g) dB_t,   j = 1..n
//! ```
//!
//! driven by one scalar Brownian motion. The scheme is exponential Euler: the
//! stiff linear part is integrated exactly and the drift and noise are explicit,
//!
//! ```text
//! g_j <- exp(-lambda_j dt) (g_j + dt F_j(g) + G_j(g) dW)
//! ```
//!
//! which is unconditionally stable in the linear part and exact for the heat flow.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::NoisePath;
use crate::nonlinearity::{xlogx, DiffusionKind, DiffusionModel};
use crate::spectral::{SpectralBasis, SpectralField};

pub const TRAJECTORY_SCHEMA_VERSION: u32 = 1;

/// Initial datum `u_0`; the simulation starts from `P_n u_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// Coefficients in the eigenbasis, truncated or zero-padded to `n`.
    Coefficients(Vec<f64>),
    /// `amplitude * e_mode`.
    Mode { mode: usize, amplitude: f64 },
}

impl InitialCondition {
    pub fn e1() -> Self {
        InitialCondition::Mode {
            mode: 1,
            amplitude: 1.0,
        }
    }

    pub fn project(&self, n: usize) -> Result<SpectralField> {
        match self {
            InitialCondition::Coefficients(c) => SpectralField::new(c.clone()).map(|f| f.resized(n)),
            InitialCondition::Mode { mode, amplitude } => {
                if *mode == 0 {
                    return Err(Error::Config("initial mode index starts at 1".into()));
                }
                if !amplitude.is_finite() {
                    return Err(Error::Config("initial amplitude must be finite".into()));
                }
                let mut c = vec![0.0; n];
                if *mode <= n {
                    c[mode - 1] = *amplitude;
                }
                Ok(SpectralField::from_raw(c))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n: usize,
    pub length: f64,
    /// Quadrature node count `M`.
    pub nodes: usize,
    pub dt: f64,
    /// Horizon `T`.
    pub horizon: f64,
    pub u0: InitialCondition,
    pub model: DiffusionModel,
    pub seed: u64,
    /// Replace `F` by `F / (1 + dt |F|)`.
    pub taming: bool,
    /// Include the `u log|u|` drift; off reduces the system to the heat flow plus noise.
    pub log_drift: bool,
    pub snapshot_stride: usize,
    /// Powers `p` for which `int_0^t |u|^{p-2} |u|_V^2 ds` is accumulated.
    pub moment_powers: Vec<f64>,
}

impl SimConfig {
    /// `L = pi`, `M = 8n`, `u0 = e_1`, log drift on, no taming, stride 1.
    pub fn new(n: usize, dt: f64, horizon: f64, model: DiffusionModel) -> Self {
        Self {
            n,
            length: std::f64::consts::PI,
            nodes: SpectralBasis::DEFAULT_NODES_PER_MODE * n,
            dt,
            horizon,
            u0: InitialCondition::e1(),
            model,
            seed: 0,
            taming: false,
            log_drift: true,
            snapshot_stride: 1,
            moment_powers: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "horizon T = {} must be at least dt = {}",
                self.horizon, self.dt
            )));
        }
        if self.horizon / self.dt > (usize::MAX / 8) as f64 {
            return Err(Error::Config("T/dt does not fit a step counter".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot_stride must be positive".into()));
        }
        self.u0.project(self.n)?;
        Ok(())
    }

    /// `K = ceil(T / dt)`, treating ratios within `1e-9` of an integer as exact.
    pub fn steps(&self) -> usize {
        steps_for(self.horizon, self.dt)
    }

    pub fn basis(&self) -> Result<SpectralBasis> {
        SpectralBasis::new(self.n, self.length, self.nodes)
    }

    pub fn initial_field(&self) -> Result<SpectralField> {
        self.u0.project(self.n)
    }
}

/// Number of steps of size `dt` that cover `[0, horizon]`.
pub fn steps_for(horizon: f64, dt: f64) -> usize {
    let r = horizon / dt;
    let k = if (r - r.round()).abs() <= 1e-9 * r.max(1.0) {
        r.round()
    } else {
        r.ceil()
    };
    k.max(1.0) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdeState {
    /// Index on the global time grid `t = step * dt`.
    pub step: usize,
    pub t: f64,
    pub g: SpectralField,
}

impl SdeState {
    pub fn initial(g: SpectralField) -> Self {
        Self { step: 0, t: 0.0, g }
    }
}

/// Stepping engine with preallocated work arrays. One per trajectory.
pub struct Integrator<'a> {
    basis: &'a SpectralBasis,
    model: &'a DiffusionModel,
    dt: f64,
    decay: Vec<f64>,
    taming: bool,
    log_drift: bool,
    field: Vec<f64>,
    drift_grid: Vec<f64>,
    noise_grid: Vec<f64>,
    drift: Vec<f64>,
    noise: Vec<f64>,
}

impl<'a> Integrator<'a> {
    pub fn new(cfg: &SimConfig, basis: &'a SpectralBasis, model: &'a DiffusionModel) -> Self {
        Self::with_options(basis, model, cfg.dt, cfg.taming, cfg.log_drift)
    }

    pub fn with_options(
        basis: &'a SpectralBasis,
        model: &'a DiffusionModel,
        dt: f64,
        taming: bool,
        log_drift: bool,
    ) -> Self {
        let m = basis.nodes();
        let n = basis.n();
        Self {
            basis,
            model,
            dt,
            decay: basis.lambdas().iter().map(|l| (-l * dt).exp()).collect(),
            taming,
            log_drift,
            field: vec![0.0; m],
            drift_grid: vec![0.0; m],
            noise_grid: vec![0.0; m],
            drift: vec![0.0; n],
            noise: vec![0.0; n],
        }
    }

    pub fn basis(&self) -> &SpectralBasis {
        self.basis
    }

    /// Advances `g` in place by one step with Brownian increment `dw`.
    /// Returns `false` if any coefficient became non-finite.
    pub fn step(&mut self, g: &mut [f64], dw: f64) -> bool {
        let has_noise = self.model.kind() != DiffusionKind::Zero;
        if self.log_drift || has_noise {
            self.basis.synthesize_into(g, &mut self.field);
        }
        match (self.log_drift, has_noise) {
            (true, true) => {
                for ((d, s), &v) in self
                    .drift_grid
                    .iter_mut()
                    .zip(self.noise_grid.iter_mut())
                    .zip(&self.field)
                {
                    *d = xlogx(v);
                    *s = self.model.eval(v);
                }
                self.basis.project_pair_into(
                    &self.drift_grid,
                    &self.noise_grid,
                    &mut self.drift,
                    &mut self.noise,
                );
            }
            (true, false) => {
                for (d, &v) in self.drift_grid.iter_mut().zip(&self.field) {
                    *d = xlogx(v);
                }
                self.basis.project_into(&self.drift_grid, &mut self.drift);
                self.noise.iter_mut().for_each(|x| *x = 0.0);
            }
            (false, true) => {
                for (s, &v) in self.noise_grid.iter_mut().zip(&self.field) {
                    *s = self.model.eval(v);
                }
                self.basis.project_into(&self.noise_grid, &mut self.noise);
                self.drift.iter_mut().for_each(|x| *x = 0.0);
            }
            (false, false) => {
                for (gj, e) in g.iter_mut().zip(&self.decay) {
                    *gj *= e;
                }
                return g.iter().all(|x| x.is_finite());
            }
        }
        if self.taming {
            let dt = self.dt;
            self.drift.iter_mut().for_each(|f| *f /= 1.0 + dt * f.abs());
        }
        let mut finite = true;
        #[allow(clippy::needless_range_loop)]
        for j in 0..g.len() {
            g[j] = self.decay[j] * (g[j] + self.dt * self.drift[j] + self.noise[j] * dw);
            finite &= g[j].is_finite();
        }
        finite
    }
}

/// One exponential-Euler step from `state`.
pub fn step(state: &SdeState, dw: f64, cfg: &SimConfig, basis: &SpectralBasis) -> Result<SdeState> {
    let mut integ = Integrator::new(cfg, basis, &cfg.model);
    let mut g = state.g.coeffs().to_vec();
    if g.len() != basis.n() {
        return Err(Error::Contract(format!(
            "state has {} modes, basis has {}",
            g.len(),
            basis.n()
        )));
    }
    if !integ.step(&mut g, dw) {
        let mode = g.iter().position(|x| !x.is_finite()).unwrap_or(0) + 1;
        return Err(Error::Numerical {
            mode,
            what: format!("step from t = {} produced a non-finite coefficient", state.t),
        });
    }
    Ok(SdeState {
        step: state.step + 1,
        t: (state.step + 1) as f64 * cfg.dt,
        g: SpectralField::from_raw(g),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Explosion {
    pub step: usize,
    pub time: f64,
}

/// Cumulative trapezoid integral of `|u|^{p-2} |u|_V^2` on the step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentIntegral {
    pub p: f64,
    pub cumulative: Vec<f64>,
}

fn moment_density(p: f64, h_sq: f64, v_sq: f64) -> f64 {
    if v_sq == 0.0 {
        0.0
    } else {
        h_sq.powf(0.5 * p - 1.0) * v_sq
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub dt: f64,
    /// Global index of the first recorded point.
    pub first_step: usize,
    pub times: Vec<f64>,
    pub h_norms: Vec<f64>,
    pub v_norms: Vec<f64>,
    /// Cumulative `int_0^t |u|_V^2 ds` (from the segment start).
    pub v_integral: Vec<f64>,
    pub moment_integrals: Vec<MomentIntegral>,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<SpectralField>,
    pub exploded: Option<Explosion>,
    /// State at the last recorded point.
    pub final_state: Option<SdeState>,
}

impl Trajectory {
    /// `max_t |u(t)|` over the recorded grid.
    pub fn sup_h_norm(&self) -> f64 {
        self.h_norms.iter().fold(0.0, |m: f64, &h| m.max(h))
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn moment_integral(&self, p: f64) -> Option<&[f64]> {
        self.moment_integrals
            .iter()
            .find(|m| m.p == p)
            .map(|m| m.cumulative.as_slice())
    }

    fn push_point(&mut self, basis: &SpectralBasis, step: usize, dt: f64, g: &[f64], stride: usize) {
        let h_sq: f64 = g.iter().map(|x| x * x).sum();
        let v_sq = basis.v_norm_sq(g);
        let t = step as f64 * dt;
        if let Some(&t_prev) = self.times.last() {
            let h_prev = *self.h_norms.last().expect("parallel arrays");
            let v_prev = *self.v_norms.last().expect("parallel arrays");
            let w = 0.5 * (t - t_prev);
            let last = *self.v_integral.last().expect("parallel arrays");
            self.v_integral.push(last + w * (v_prev * v_prev + v_sq));
            for m in &mut self.moment_integrals {
                let prev = moment_density(m.p, h_prev * h_prev, v_prev * v_prev);
                let cur = moment_density(m.p, h_sq, v_sq);
                let last = *m.cumulative.last().expect("parallel arrays");
                m.cumulative.push(last + w * (prev + cur));
            }
        } else {
            self.v_integral.push(0.0);
            for m in &mut self.moment_integrals {
                m.cumulative.push(0.0);
            }
        }
        self.times.push(t);
        self.h_norms.push(h_sq.sqrt());
        self.v_norms.push(v_sq.sqrt());
        if step.is_multiple_of(stride) {
            self.snapshot_times.push(t);
            self.snapshots.push(SpectralField::from_raw(g.to_vec()));
        }
    }

    fn start(cfg: &SimConfig, first_step: usize) -> Self {
        Self {
            dt: cfg.dt,
            first_step,
            moment_integrals: cfg
                .moment_powers
                .iter()
                .map(|&p| MomentIntegral {
                    p,
                    cumulative: Vec::new(),
                })
                .collect(),
            ..Default::default()
        }
    }

    /// CSV with columns `schema_version,t,h_norm,v_norm`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "schema_version,t,h_norm,v_norm").map_err(io)?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{},{}",
                TRAJECTORY_SCHEMA_VERSION, self.times[i], self.h_norms[i], self.v_norms[i]
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// CSV with columns `schema_version,t,g_1,...,g_n`, one row per snapshot.
    pub fn write_snapshots_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        let n = self.snapshots.first().map_or(0, |s| s.len());
        write!(w, "schema_version,t").map_err(io)?;
        for i in 1..=n {
            write!(w, ",g_{i}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
        for (t, s) in self.snapshot_times.iter().zip(&self.snapshots) {
            write!(w, "{TRAJECTORY_SCHEMA_VERSION},{t}").map_err(io)?;
            for c in s.coeffs() {
                write!(w, ",{c}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Runs global steps `start.step .. end_step` with increments taken from
/// `noise` at the same global indices.
pub fn simulate_segment(
    cfg: &SimConfig,
    basis: &SpectralBasis,
    noise: &NoisePath,
    start: &SdeState,
    end_step: usize,
) -> Result<Trajectory> {
    if end_step > noise.len() || end_step < start.step {
        return Err(Error::Contract(format!(
            "segment {}..{end_step} does not fit a noise path of {} increments",
            start.step,
            noise.len()
        )));
    }
    simulate_steps(cfg, basis, start, &noise.increments()[start.step..end_step])
}

/// Runs one step per entry of `increments`, starting from `start`.
pub fn simulate_steps(
    cfg: &SimConfig,
    basis: &SpectralBasis,
    start: &SdeState,
    increments: &[f64],
) -> Result<Trajectory> {
    if start.g.len() != basis.n() {
        return Err(Error::Contract(format!(
            "state has {} modes, basis has {}",
            start.g.len(),
            basis.n()
        )));
    }
    let mut traj = Trajectory::start(cfg, start.step);
    let mut integ = Integrator::new(cfg, basis, &cfg.model);
    let mut g = start.g.coeffs().to_vec();
    traj.push_point(basis, start.step, cfg.dt, &g, cfg.snapshot_stride);
    let mut last_step = start.step;
    for (i, &dw) in increments.iter().enumerate() {
        let k = start.step + i;
        if !integ.step(&mut g, dw) {
            traj.exploded = Some(Explosion {
                step: k + 1,
                time: (k + 1) as f64 * cfg.dt,
            });
            break;
        }
        traj.push_point(basis, k + 1, cfg.dt, &g, cfg.snapshot_stride);
        last_step = k + 1;
    }
    if traj.exploded.is_none() {
        traj.final_state = Some(SdeState {
            step: last_step,
            t: last_step as f64 * cfg.dt,
            g: SpectralField::from_raw(g),
        });
    }
    Ok(traj)
}

/// Full run on `[0, K dt]` with a caller-supplied basis and noise path.
pub fn simulate_with(cfg: &SimConfig, basis: &SpectralBasis, noise: &NoisePath) -> Result<Trajectory> {
    cfg.validate()?;
    let start = SdeState::initial(cfg.initial_field()?);
    simulate_segment(cfg, basis, noise, &start, cfg.steps().min(noise.len()))
}

/// Full run: builds the basis and the noise path keyed by `cfg.seed`.
pub fn simulate(cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let basis = cfg.basis()?;
    let noise = NoisePath::generate(cfg.seed, cfg.steps(), cfg.dt)?;
    simulate_with(cfg, &basis, &noise)
}

#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub a: Trajectory,
    pub b: Trajectory,
    /// `max_t |u(t) - v(t)|` on the step grid.
    pub z_sup: f64,
    /// `(int |u - v|^2 dt)^{1/2}` by the trapezoid rule.
    pub z_l2: f64,
}

/// Two solutions from different initial data driven by the same noise path.
pub fn coupled_simulate_with(
    cfg: &SimConfig,
    basis: &SpectralBasis,
    noise: &NoisePath,
    u0_a: &SpectralField,
    u0_b: &SpectralField,
) -> Result<CoupledRun> {
    cfg.validate()?;
    for u in [u0_a, u0_b] {
        if u.len() != basis.n() {
            return Err(Error::Contract(format!(
                "initial field has {} modes, basis has {}",
                u.len(),
                basis.n()
            )));
        }
    }
    let steps = cfg.steps().min(noise.len());
    let mut a = Trajectory::start(cfg, 0);
    let mut b = Trajectory::start(cfg, 0);
    let mut ia = Integrator::new(cfg, basis, &cfg.model);
    let mut ib = Integrator::new(cfg, basis, &cfg.model);
    let mut ga = u0_a.coeffs().to_vec();
    let mut gb = u0_b.coeffs().to_vec();
    let diff_sq = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum() };
    a.push_point(basis, 0, cfg.dt, &ga, cfg.snapshot_stride);
    b.push_point(basis, 0, cfg.dt, &gb, cfg.snapshot_stride);
    let mut z_prev = diff_sq(&ga, &gb);
    let mut z_sup_sq = z_prev;
    let mut z_int = 0.0;
    for k in 0..steps {
        let dw = noise.increments()[k];
        let ok_a = ia.step(&mut ga, dw);
        let ok_b = ib.step(&mut gb, dw);
        let t = (k + 1) as f64 * cfg.dt;
        if !(ok_a && ok_b) {
            let e = Some(Explosion { step: k + 1, time: t });
            if !ok_a {
                a.exploded = e;
            }
            if !ok_b {
                b.exploded = e;
            }
            break;
        }
        a.push_point(basis, k + 1, cfg.dt, &ga, cfg.snapshot_stride);
        b.push_point(basis, k + 1, cfg.dt, &gb, cfg.snapshot_stride);
        let z = diff_sq(&ga, &gb);
        z_sup_sq = z_sup_sq.max(z);
        z_int += 0.5 * cfg.dt * (z_prev + z);
        z_prev = z;
    }
    Ok(CoupledRun {
        a,
        b,
        z_sup: z_sup_sq.sqrt(),
        z_l2: z_int.sqrt(),
    })
}

/// [`coupled_simulate_with`] using the basis and noise path of `cfg`.
pub fn coupled_simulate(cfg: &SimConfig, u0_a: &SpectralField, u0_b: &SpectralField) -> Result<CoupledRun> {
    cfg.validate()?;
    let basis = cfg.basis()?;
    let noise = NoisePath::generate(cfg.seed, cfg.steps(), cfg.dt)?;
    coupled_simulate_with(cfg, &basis, &noise, u0_a, u0_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monitor {
    /// `|u(t)|^2`
    HSquared,
    /// `int_0^t |u(s)|_V^2 ds`
    VIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Index into the trajectory arrays.
    pub index: usize,
    pub time: f64,
}

/// First grid point where the monitored quantity exceeds `threshold`.
pub fn hitting_time(traj: &Trajectory, threshold: f64, which: Monitor) -> Result<Option<Hit>> {
    if !(threshold > 0.0) {
        return Err(Error::Contract(format!(
            "hitting threshold must be positive, got {threshold}"
        )));
    }
    let index = match which {
        Monitor::HSquared => traj.h_norms.iter().position(|h| h * h > threshold),
        Monitor::VIntegral => traj.v_integral.iter().position(|&v| v > threshold),
    };
    Ok(index.map(|index| Hit {
        index,
        time: traj.times[index],
    }))
}

pub const MIN_WNORM_SNAPSHOTS: usize = 50;

fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let s = times.len();
    let mut w = vec![0.0; s];
    for i in 0..s.saturating_sub(1) {
        let h = 0.5 * (times[i + 1] - times[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Discrete `W^{beta,p}([0, T]; V*)` norm over the stored snapshots:
///
/// ```text
/// ( int |u(t)|_{V*}^p dt + sum_{s != t} |u(t) - u(s)|_{V*}^p / |t - s|^{1 + beta p} w_s w_t )^{1/p}
/// ```
///
/// with trapezoid weights on the snapshot times and the diagonal omitted.
pub fn w_beta_p_norm(traj: &Trajectory, basis: &SpectralBasis, beta: f64, p: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::Contract(format!("beta must lie in (0, 1/2), got {beta}")));
    }
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::Contract(format!("p must lie in (1, 2), got {p}")));
    }
    let s = traj.snapshots.len();
    if s < MIN_WNORM_SNAPSHOTS {
        return Err(Error::Contract(format!(
            "W^(beta,p) norm needs at least {MIN_WNORM_SNAPSHOTS} snapshots, trajectory has {s}"
        )));
    }
    let w = trapezoid_weights(&traj.snapshot_times);
    let single: f64 = traj
        .snapshots
        .iter()
        .zip(&w)
        .map(|(u, wi)| wi * basis.vstar_norm_sq(u.coeffs()).powf(0.5 * p))
        .sum();
    let exponent = 1.0 + beta * p;
    let mut double = 0.0;
    let mut diff = vec![0.0; basis.n()];
    for i in 0..s {
        for j in 0..i {
            for ((d, a), b) in diff
                .iter_mut()
                .zip(traj.snapshots[i].coeffs())
                .zip(traj.snapshots[j].coeffs())
            {
                *d = a - b;
            }
            let num = basis.vstar_norm_sq(&diff).powf(0.5 * p);
            let dt = (traj.snapshot_times[i] - traj.snapshot_times[j]).abs();
            // Symmetric in (i, j): count both orderings.
            double += 2.0 * w[i] * w[j] * num / dt.powf(exponent);
        }
    }
    Ok((single + double).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn heat_cfg(n: usize, dt: f64, horizon: f64) -> SimConfig {
        let mut cfg = SimConfig::new(n, dt, horizon, DiffusionModel::zero());
        cfg.log_drift = false;
        cfg
    }

    #[test]
    fn step_count_covers_horizon() {
        assert_eq!(steps_for(1.0, 1e-3), 1000);
        assert_eq!(steps_for(0.1, 0.01), 10);
        assert_eq!(steps_for(0.105, 0.01), 11);
    }

    #[test]
    fn pure_heat_step_is_exact_decay() {
        let cfg = heat_cfg(3, 1e-3, 1.0);
        let basis = cfg.basis().unwrap();
        let s0 = SdeState::initial(SpectralField::new(vec![1.0, -2.0, 0.5]).unwrap());
        let s1 = step(&s0, 0.37, &cfg, &basis).unwrap();
        for (j, (&g1, &g0)) in s1.g.coeffs().iter().zip(s0.g.coeffs()).enumerate() {
            let want = (-basis.lambdas()[j] * 1e-3).exp() * g0;
            assert_eq!(g1, want);
        }
        assert_eq!(s1.step, 1);
    }

    #[test]
    fn zero_state_stays_zero_when_sigma_vanishes_at_zero() {
        let cfg = SimConfig::new(4, 1e-3, 1.0, DiffusionModel::linear_cut_log());
        let basis = cfg.basis().unwrap();
        let s0 = SdeState::initial(SpectralField::zeros(4));
        let s1 = step(&s0, 0.0, &cfg, &basis).unwrap();
        assert!(s1.g.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn one_step_with_log_drift() {
        let mut cfg = SimConfig::new(1, 1e-3, 1.0, DiffusionModel::zero());
        cfg.nodes = 256;
        let basis = cfg.basis().unwrap();
        let s1 = step(&SdeState::initial(SpectralField::mode(1, 1)), 0.0, &cfg, &basis).unwrap();
        // F_1(1) = (1/2) log(2/pi) - log 2 + 1/2
        let f1 = 0.5 * (2.0 / PI).ln() - std::f64::consts::LN_2 + 0.5;
        let fq = crate::nonlinearity::drift_f(&SpectralField::mode(1, 1), &basis)
            .unwrap()
            .coeffs()[0];
        assert!((fq - f1).abs() < 1e-5);
        let want = (-1e-3f64).exp() * (1.0 + 1e-3 * fq);
        assert!((s1.g.coeffs()[0] - want).abs() < 1e-15);
    }

    #[test]
    fn simulate_records_every_step() {
        let mut cfg = heat_cfg(2, 0.01, 0.1);
        cfg.u0 = InitialCondition::Coefficients(vec![1.0]);
        let traj = simulate(&cfg).unwrap();
        assert_eq!(traj.times.len(), 11);
        assert_eq!(traj.times[0], 0.0);
        assert!((traj.times[10] - 0.1).abs() < 1e-15);
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(traj.sup_h_norm(), 1.0);
        assert!(traj.v_integral.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn explosion_is_recorded_not_thrown() {
        let model = DiffusionModel::custom(
            |x| if x.abs() > 0.5 { f64::INFINITY } else { x },
            None,
            None,
            crate::nonlinearity::SuperlinearGrowth { c3: 0.0, c4: 0.0 },
        );
        let mut cfg = SimConfig::new(2, 0.01, 0.1, model);
        cfg.seed = 1;
        let traj = simulate(&cfg).unwrap();
        let e = traj.exploded.expect("explosion flagged");
        assert_eq!(e.step, 1);
        assert_eq!(traj.times.len(), 1);
        assert!(traj.final_state.is_none());
    }

    #[test]
    fn coupled_identical_initials_give_zero_difference() {
        let mut cfg = SimConfig::new(8, 1e-3, 0.05, DiffusionModel::linear_cut_log());
        cfg.seed = 11;
        let u = SpectralField::new(vec![3.0, 0.5, 0.0, 0.0, 0.1, 0.0, 0.0, 0.0]).unwrap();
        let run = coupled_simulate(&cfg, &u, &u).unwrap();
        assert_eq!(run.z_sup, 0.0);
        assert_eq!(run.z_l2, 0.0);
        let v = u.add(&SpectralField::mode(8, 1).scaled(1e-3));
        let run = coupled_simulate(&cfg, &u, &v).unwrap();
        assert!(run.z_sup > 0.0);
    }

    #[test]
    fn hitting_times() {
        let cfg = heat_cfg(2, 0.01, 0.5);
        let traj = simulate(&cfg).unwrap();
        assert_eq!(hitting_time(&traj, 2.0, Monitor::HSquared).unwrap(), None);
        let hit = hitting_time(&traj, 1e-300, Monitor::HSquared).unwrap().unwrap();
        assert_eq!(hit.index, 0);
        assert_eq!(hit.time, 0.0);
        assert!(hitting_time(&traj, 0.0, Monitor::HSquared).is_err());
        let hit = hitting_time(&traj, 0.1, Monitor::VIntegral).unwrap().unwrap();
        let scan = traj.v_integral.iter().position(|&v| v > 0.1).unwrap();
        assert_eq!(hit.index, scan);
    }

    #[test]
    fn wnorm_of_constant_trajectory_is_single_integral() {
        let basis = SpectralBasis::with_default_nodes(2, PI).unwrap();
        let u = SpectralField::new(vec![1.0, 2.0]).unwrap();
        let times: Vec<f64> = (0..=60).map(|i| i as f64 / 60.0).collect();
        let traj = Trajectory {
            snapshots: vec![u.clone(); times.len()],
            snapshot_times: times,
            ..Default::default()
        };
        let got = w_beta_p_norm(&traj, &basis, 0.25, 1.5).unwrap();
        let want = basis.vstar_norm(&u).powf(1.5).powf(1.0 / 1.5);
        assert!((got - want).abs() < 1e-12);
        assert!(w_beta_p_norm(&traj, &basis, 0.5, 1.5).is_err());
        assert!(w_beta_p_norm(&traj, &basis, 0.25, 2.0).is_err());
    }
}
