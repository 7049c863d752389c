//! The logarithmic drift `u log|u|`, diffusion coefficients `sigma`, their Galerkin
//! projections `F_j` and `G_j`, and the explicit growth/continuity constants for
//! `F_j` and `G_j` in terms of the basis sup-norms and `m(D)`.

use std::f64::consts::{E, LN_2};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{SpectralBasis, SpectralField};

/// `x log|x|`, extended continuously by `0` at `x = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.abs().ln()
    }
}

/// `log(1 v z)`.
///
/// Panics on negative or NaN input.
#[inline]
pub fn log_plus(z: f64) -> f64 {
    assert!(z >= 0.0, "log_plus is defined for z >= 0, got {z}");
    if z > 1.0 {
        z.ln()
    } else {
        0.0
    }
}

/// Antiderivative density `s^2/2 log|s| - s^2/4` of `xlogx`.
#[inline]
pub fn psi_density(s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        0.5 * s * s * s.abs().ln() - 0.25 * s * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionKind {
    Zero,
    LinearCutLog,
    Sublinear,
    Custom,
}

impl fmt::Display for DiffusionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiffusionKind::Zero => "zero",
            DiffusionKind::LinearCutLog => "linear_cut_log",
            DiffusionKind::Sublinear => "sublinear",
            DiffusionKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// `|sigma(x) - sigma(y)| <= L1 |x-y| + L2 |x-y| (log_+(|x| v |y|))^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalLipschitz {
    pub l1: f64,
    pub l2: f64,
    /// Set when the constants come from a numerical sweep rather than a proof.
    pub empirical: bool,
}

/// `|sigma(x)| <= C1 + C2 |x|^theta` with `theta in [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SublinearGrowth {
    pub theta: f64,
    pub c1: f64,
    pub c2: f64,
}

/// `|sigma(x)| <= C3 + C4 |x| (log_+|x|)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuperlinearGrowth {
    pub c3: f64,
    pub c4: f64,
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar diffusion coefficient `sigma` together with the hypothesis
/// constants it is known to satisfy.
#[derive(Clone)]
pub struct DiffusionModel {
    kind: DiffusionKind,
    lipschitz: Option<LocalLipschitz>,
    sublinear: Option<SublinearGrowth>,
    superlinear: SuperlinearGrowth,
    custom: Option<Evaluator>,
}

impl fmt::Debug for DiffusionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionModel")
            .field("kind", &self.kind)
            .field("lipschitz", &self.lipschitz)
            .field("sublinear", &self.sublinear)
            .field("superlinear", &self.superlinear)
            .finish()
    }
}

/// Constants for `linear_cut_log` from [`fit_lipschitz_l2`] with `L1 = 1` over
/// `|x|, |y| <= 1e6`, rounded up. The sweep maximum is 0.7667.
pub const LINEAR_CUT_LOG_L1: f64 = 1.0;
pub const LINEAR_CUT_LOG_L2: f64 = 0.77;

impl DiffusionModel {
    pub fn zero() -> Self {
        Self {
            kind: DiffusionKind::Zero,
            lipschitz: Some(LocalLipschitz {
                l1: 0.0,
                l2: 0.0,
                empirical: false,
            }),
            sublinear: Some(SublinearGrowth {
                theta: 0.0,
                c1: 0.0,
                c2: 0.0,
            }),
            superlinear: SuperlinearGrowth { c3: 0.0, c4: 0.0 },
            custom: None,
        }
    }

    /// `sigma(x) = x (log|x|)^{1/2}` for `|x| >= e`, `sigma(x) = x` otherwise.
    pub fn linear_cut_log() -> Self {
        Self {
            kind: DiffusionKind::LinearCutLog,
            lipschitz: Some(LocalLipschitz {
                l1: LINEAR_CUT_LOG_L1,
                l2: LINEAR_CUT_LOG_L2,
                empirical: true,
            }),
            sublinear: None,
            superlinear: SuperlinearGrowth { c3: E, c4: 1.0 },
            custom: None,
        }
    }

    /// `sigma(x) = C1 + C2 |x|^theta`, which saturates the sublinear bound.
    pub fn sublinear(theta: f64, c1: f64, c2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::Config(format!("θ must lie in [0,1), got {theta}")));
        }
        if !(c1 >= 0.0 && c2 >= 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(Error::Config(format!(
                "C1 and C2 must be finite and nonnegative, got {c1}, {c2}"
            )));
        }
        Ok(Self {
            kind: DiffusionKind::Sublinear,
            lipschitz: None,
            sublinear: Some(SublinearGrowth { theta, c1, c2 }),
            // |x|^theta <= e^theta on |x| < e and <= |x| (log|x|)^{1/2} beyond.
            superlinear: SuperlinearGrowth {
                c3: c1 + c2 * E.powf(theta),
                c4: c2,
            },
            custom: None,
        })
    }

    /// A user-supplied `sigma`. The caller vouches for the stated constants.
    pub fn custom(
        sigma: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lipschitz: Option<LocalLipschitz>,
        sublinear: Option<SublinearGrowth>,
        superlinear: SuperlinearGrowth,
    ) -> Self {
        Self {
            kind: DiffusionKind::Custom,
            lipschitz,
            sublinear,
            superlinear,
            custom: Some(Arc::new(sigma)),
        }
    }

    /// Replaces the stated local Lipschitz constants (e.g. a user-supplied fit).
    pub fn with_lipschitz(mut self, lipschitz: LocalLipschitz) -> Self {
        self.lipschitz = Some(lipschitz);
        self
    }

    pub fn with_superlinear_growth(mut self, growth: SuperlinearGrowth) -> Self {
        self.superlinear = growth;
        self
    }

    pub fn kind(&self) -> DiffusionKind {
        self.kind
    }

    pub fn lipschitz(&self) -> Option<LocalLipschitz> {
        self.lipschitz
    }

    pub fn sublinear_growth(&self) -> Option<SublinearGrowth> {
        self.sublinear
    }

    pub fn superlinear_growth(&self) -> SuperlinearGrowth {
        self.superlinear
    }

    /// True when `sigma(0) = 0`.
    pub fn vanishes_at_zero(&self) -> bool {
        self.eval(0.0) == 0.0
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            DiffusionKind::Zero => 0.0,
            DiffusionKind::LinearCutLog => {
                let a = x.abs();
                if a >= E {
                    x * a.ln().sqrt()
                } else {
                    x
                }
            }
            DiffusionKind::Sublinear => {
                let s = self.sublinear.expect("sublinear constants");
                s.c1 + s.c2 * x.abs().powf(s.theta)
            }
            DiffusionKind::Custom => (self.custom.as_ref().expect("custom evaluator"))(x),
        }
    }
}

/// Smallest `L2` with `|sigma(x)-sigma(y)| <= l1 |x-y| + L2 |x-y| (log_+(|x| v |y|))^{1/2}`
/// over all pairs from a symmetric log-spaced grid on `[-max_abs, max_abs]`.
///
/// Returns `None` if some pair with `log_+ = 0` already violates the `l1` term.
pub fn fit_lipschitz_l2(
    sigma: impl Fn(f64) -> f64,
    l1: f64,
    max_abs: f64,
    points_per_sign: usize,
) -> Option<f64> {
    let lo: f64 = 1e-3;
    let mut grid = vec![0.0];
    for k in 0..points_per_sign {
        let a = lo * (max_abs / lo).powf(k as f64 / (points_per_sign - 1) as f64);
        grid.push(a);
        grid.push(-a);
    }
    // Dense near the knee at |x| = e, where the secant ratio changes fastest.
    for k in 0..=64 {
        let a = 1.0 + 3.0 * k as f64 / 64.0;
        grid.push(a);
        grid.push(-a);
    }
    let values: Vec<f64> = grid.iter().map(|&x| sigma(x)).collect();
    let mut l2: f64 = 0.0;
    for i in 0..grid.len() {
        for j in 0..i {
            let dx = (grid[i] - grid[j]).abs();
            if dx == 0.0 {
                continue;
            }
            let ratio = (values[i] - values[j]).abs() / dx;
            let lp = log_plus(grid[i].abs().max(grid[j].abs())).sqrt();
            if lp == 0.0 {
                if ratio > l1 * (1.0 + 1e-12) {
                    return None;
                }
            } else {
                l2 = l2.max((ratio - l1) / lp);
            }
        }
    }
    Some(l2)
}

fn check_len(y: &SpectralField, basis: &SpectralBasis) -> Result<()> {
    if y.len() != basis.n() {
        return Err(Error::Contract(format!(
            "field has {} coefficients but the basis has {} modes",
            y.len(),
            basis.n()
        )));
    }
    Ok(())
}

fn finite_or_mode(f: SpectralField, what: &str) -> Result<SpectralField> {
    match f.coeffs().iter().position(|c| !c.is_finite()) {
        Some(j) => Err(Error::Numerical {
            mode: j + 1,
            what: format!("{what} component is {}", f.coeffs()[j]),
        }),
        None => Ok(f),
    }
}

/// `F_j(y) = int e_j v log|v| dx` with `v = sum y_i e_i`.
pub fn drift_f(y: &SpectralField, basis: &SpectralBasis) -> Result<SpectralField> {
    check_len(y, basis)?;
    let mut v = vec![0.0; basis.nodes()];
    basis.synthesize_into(y.coeffs(), &mut v);
    v.iter_mut().for_each(|x| *x = xlogx(*x));
    let mut out = vec![0.0; basis.n()];
    basis.project_into(&v, &mut out);
    finite_or_mode(SpectralField::from_raw(out), "drift")
}

/// `Psi(y) = int (v^2/2 log|v| - v^2/4) dx`; its gradient is [`drift_f`].
pub fn potential_psi(y: &SpectralField, basis: &SpectralBasis) -> Result<f64> {
    check_len(y, basis)?;
    let mut v = vec![0.0; basis.nodes()];
    basis.synthesize_into(y.coeffs(), &mut v);
    Ok(basis.quadrature().integrate_map(&v, psi_density))
}

/// `G_j(y) = int e_j sigma(v) dx`.
pub fn diffusion_g(
    y: &SpectralField,
    basis: &SpectralBasis,
    model: &DiffusionModel,
) -> Result<SpectralField> {
    check_len(y, basis)?;
    let mut v = vec![0.0; basis.nodes()];
    basis.synthesize_into(y.coeffs(), &mut v);
    v.iter_mut().for_each(|x| *x = model.eval(*x));
    let mut out = vec![0.0; basis.n()];
    basis.project_into(&v, &mut out);
    finite_or_mode(SpectralField::from_raw(out), "diffusion")
}

/// Result of evaluating one side of a bound against the other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    /// The bound in its normalized constant form (`C1~ + C2~ |y| log_+|y|`, ...).
    pub rhs: f64,
    /// The sharper intermediate bound before the constants are collected.
    pub intermediate: f64,
}

impl BoundCheck {
    /// The collected form equals the intermediate one when every `log_+` argument
    /// is at least 1, so that comparison allows a few ulps of rounding.
    pub fn holds(&self) -> bool {
        self.lhs <= self.intermediate && self.intermediate <= self.rhs * (1.0 + 8.0 * f64::EPSILON)
    }
}

/// Basis-derived constants for the bounds on `F_j` and `G_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionConstants {
    /// `max_j |e_j|_inf`
    pub sup_norm: f64,
    /// `(sum_i |e_i|_inf^2)^{1/2}`
    pub sup_root_sum: f64,
    /// `m(D)`
    pub measure: f64,
}

impl ProjectionConstants {
    pub fn from_basis(basis: &SpectralBasis) -> Self {
        Self {
            sup_norm: basis.sup_norms().iter().fold(0.0, |m: f64, &s| m.max(s)),
            sup_root_sum: basis.sup_norm_root_sum(),
            measure: basis.domain_measure(),
        }
    }

    /// Radius of the log-Lipschitz estimate:
    /// `min{ (sum |e_i|_inf^2)^{-1/2}, sqrt(m(D)) / e }`.
    pub fn delta(&self) -> f64 {
        (1.0 / self.sup_root_sum).min(self.measure.sqrt() / E)
    }

    fn esm(&self) -> f64 {
        self.sup_norm * self.measure.sqrt()
    }

    /// `(C1~, C2~)` with `|F_j(y)| <= C1~ + C2~ |y| log_+|y|`.
    ///
    /// Collected from `[1 + e sqrt(m)(log_+(|y| S) + log 2)] |y| + e m / e` using
    /// `log_+(ab) <= log_+ a + log_+ b` and `|y| <= 1 + |y| log_+|y|`.
    pub fn f_growth(&self) -> (f64, f64) {
        let a = 1.0 + self.esm() * (log_plus(self.sup_root_sum) + LN_2);
        let b = self.esm();
        let c = self.sup_norm * self.measure / E;
        (c + a, a + b)
    }

    fn f_growth_intermediate(&self, y: f64) -> f64 {
        (1.0 + self.esm() * (log_plus(y * self.sup_root_sum) + LN_2)) * y + self.sup_norm * self.measure / E
    }

    /// `(L1~, L2~, L3~)` for the local log-Lipschitz estimate of `F_j`.
    pub fn f_log_lipschitz(&self) -> (f64, f64, f64) {
        let l1 = 1.0 + self.esm() * (log_plus(self.sup_root_sum) + LN_2 + 0.5 * self.measure.ln());
        (l1, self.esm(), self.esm())
    }

    fn f_log_lipschitz_intermediate(&self, r: f64, d: f64) -> f64 {
        (1.0 + self.esm() * (log_plus(r * self.sup_root_sum) + LN_2 + 0.5 * self.measure.ln())) * d
            + self.esm() * d_log_inv(d)
    }

    /// `(L4~, L5~)` with `|G_j(y)-G_j(z)| <= L4~ |y-z| + L5~ |y-z| (log_+(|y| v |z|))^{1/2}`.
    pub fn g_lipschitz(&self, h1: LocalLipschitz) -> (f64, f64) {
        (h1.l1 + h1.l2 * log_plus(self.sup_root_sum).sqrt(), h1.l2)
    }

    fn g_lipschitz_intermediate(&self, h1: LocalLipschitz, r: f64, d: f64) -> f64 {
        (h1.l1 + h1.l2 * log_plus(r * self.sup_root_sum).sqrt()) * d
    }

    /// `(C3~, C4~)` with `|G_j(y)| <= C3~ + C4~ |y| (log_+|y|)^{1/2}`.
    pub fn g_growth(&self, h3: SuperlinearGrowth) -> (f64, f64) {
        let ls = log_plus(self.sup_root_sum).sqrt();
        (h3.c3 * self.measure.sqrt() + h3.c4 * ls, h3.c4 * (1.0 + ls))
    }

    fn g_growth_intermediate(&self, h3: SuperlinearGrowth, y: f64) -> f64 {
        h3.c3 * self.measure.sqrt() + h3.c4 * y * log_plus(y * self.sup_root_sum).sqrt()
    }
}

/// `d log(1/d)` with the value `0` at `d = 0`.
fn d_log_inv(d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        -d * d.ln()
    }
}

fn max_abs(f: &SpectralField) -> f64 {
    f.coeffs().iter().fold(0.0, |m: f64, c| m.max(c.abs()))
}

/// `max_j |F_j(y)|` against `C1~ + C2~ |y| log_+|y|`.
pub fn f_bound_check(y: &SpectralField, basis: &SpectralBasis) -> Result<BoundCheck> {
    let f = drift_f(y, basis)?;
    let k = ProjectionConstants::from_basis(basis);
    let (c1, c2) = k.f_growth();
    let r = y.norm();
    Ok(BoundCheck {
        lhs: max_abs(&f),
        rhs: c1 + c2 * r * log_plus(r),
        intermediate: k.f_growth_intermediate(r),
    })
}

/// `max_j |F_j(y) - F_j(z)|` against the local log-Lipschitz bound, valid for
/// `|y - z| <= delta`.
pub fn f_loglip_check(y: &SpectralField, z: &SpectralField, basis: &SpectralBasis) -> Result<BoundCheck> {
    let k = ProjectionConstants::from_basis(basis);
    let d = y.sub(z).norm();
    if d > k.delta() {
        return Err(Error::Contract(format!(
            "|y - z| = {d} exceeds the locality radius delta = {}",
            k.delta()
        )));
    }
    let fy = drift_f(y, basis)?;
    let fz = drift_f(z, basis)?;
    let (l1, l2, l3) = k.f_log_lipschitz();
    let r = y.norm().max(z.norm());
    Ok(BoundCheck {
        lhs: max_abs(&fy.sub(&fz)),
        rhs: l1 * d + l2 * d * log_plus(r) + l3 * d_log_inv(d),
        intermediate: k.f_log_lipschitz_intermediate(r, d),
    })
}

/// `max_j |G_j(y)|` against `C3~ + C4~ |y| (log_+|y|)^{1/2}`.
pub fn g_bound_check(y: &SpectralField, basis: &SpectralBasis, model: &DiffusionModel) -> Result<BoundCheck> {
    let g = diffusion_g(y, basis, model)?;
    let k = ProjectionConstants::from_basis(basis);
    let h3 = model.superlinear_growth();
    let (c3, c4) = k.g_growth(h3);
    let r = y.norm();
    Ok(BoundCheck {
        lhs: max_abs(&g),
        rhs: c3 + c4 * r * log_plus(r).sqrt(),
        intermediate: k.g_growth_intermediate(h3, r),
    })
}

/// `max_j |G_j(y) - G_j(z)|` against the local Lipschitz bound; needs a model
/// with local Lipschitz constants.
pub fn g_lip_check(
    y: &SpectralField,
    z: &SpectralField,
    basis: &SpectralBasis,
    model: &DiffusionModel,
) -> Result<BoundCheck> {
    let h1 = model.lipschitz().ok_or_else(|| {
        Error::Contract(format!(
            "model `{}` has no local Lipschitz constants",
            model.kind()
        ))
    })?;
    let k = ProjectionConstants::from_basis(basis);
    let gy = diffusion_g(y, basis, model)?;
    let gz = diffusion_g(z, basis, model)?;
    let d = y.sub(z).norm();
    let r = y.norm().max(z.norm());
    let (l4, l5) = k.g_lipschitz(h1);
    Ok(BoundCheck {
        lhs: max_abs(&gy.sub(&gz)),
        rhs: l4 * d + l5 * d * log_plus(r).sqrt(),
        intermediate: k.g_lipschitz_intermediate(h1, r, d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn scalar_functions() {
        assert_eq!(xlogx(1.0), 0.0);
        assert!((xlogx(E) - E).abs() < 1e-15);
        assert_eq!(xlogx(0.0), 0.0);
        assert!((xlogx(-E) + E).abs() < 1e-15);
        assert_eq!(log_plus(0.5), 0.0);
        assert!((log_plus(E) - 1.0).abs() < 1e-15);
        assert_eq!(log_plus(1.0), 0.0);
        assert_eq!(psi_density(0.0), 0.0);
        assert_eq!(psi_density(1.0), -0.25);
    }

    #[test]
    #[should_panic]
    fn log_plus_rejects_negative() {
        log_plus(-1.0);
    }

    #[test]
    fn linear_cut_log_is_continuous_at_knee() {
        let m = DiffusionModel::linear_cut_log();
        assert!((m.eval(E + 1e-12) - E).abs() <= 1e-10);
        assert!((m.eval(E - 1e-12) - E).abs() <= 1e-10);
        assert!((m.eval(-E - 1e-12) + E).abs() <= 1e-10);
        assert_eq!(m.eval(2.0), 2.0);
        assert!((m.eval(10.0) - 10.0 * 10f64.ln().sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sublinear_rejects_theta_out_of_range() {
        let err = DiffusionModel::sublinear(1.2, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("θ must lie in [0,1)"));
        assert!(DiffusionModel::sublinear(0.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn frozen_lipschitz_constant_reproduces_sweep() {
        let m = DiffusionModel::linear_cut_log();
        let l2 = fit_lipschitz_l2(|x| m.eval(x), LINEAR_CUT_LOG_L1, 1e6, 400).unwrap();
        assert!(l2 <= LINEAR_CUT_LOG_L2, "sweep gave {l2}");
        assert!(l2 > LINEAR_CUT_LOG_L2 - 0.01, "frozen constant is loose: {l2}");
        // L1 below 1 fails on |x|,|y| <= 1 where sigma is the identity.
        assert!(fit_lipschitz_l2(|x| m.eval(x), 0.9, 1e6, 50).is_none());
    }

    #[test]
    fn drift_of_zero_field_is_zero() {
        let b = SpectralBasis::with_default_nodes(4, PI).unwrap();
        let f = drift_f(&SpectralField::zeros(4), &b).unwrap();
        assert!(f.coeffs().iter().all(|&c| c == 0.0));
        assert_eq!(potential_psi(&SpectralField::zeros(4), &b).unwrap(), 0.0);
    }

    #[test]
    fn drift_is_odd() {
        let b = SpectralBasis::with_default_nodes(5, PI).unwrap();
        let y = SpectralField::new(vec![1.0, -0.3, 0.8, 0.2, -1.5]).unwrap();
        let f = drift_f(&y, &b).unwrap();
        let g = drift_f(&y.scaled(-1.0), &b).unwrap();
        for (a, c) in f.coeffs().iter().zip(g.coeffs()) {
            assert!((a + c).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_diffusion_projects_to_zero() {
        let b = SpectralBasis::with_default_nodes(3, PI).unwrap();
        let y = SpectralField::new(vec![1.0, 2.0, 3.0]).unwrap();
        let g = diffusion_g(&y, &b, &DiffusionModel::zero()).unwrap();
        assert!(g.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn linear_cut_log_is_identity_on_small_fields() {
        let b = SpectralBasis::with_default_nodes(4, PI).unwrap();
        let y = SpectralField::new(vec![0.5, -0.4, 0.3, 0.2]).unwrap();
        let u = b.synthesize(&y).unwrap();
        assert!(u.max_abs() < E);
        let g = diffusion_g(&y, &b, &DiffusionModel::linear_cut_log()).unwrap();
        for (a, c) in g.coeffs().iter().zip(y.coeffs()) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn nonfinite_diffusion_reports_mode() {
        let b = SpectralBasis::with_default_nodes(2, PI).unwrap();
        let bad = DiffusionModel::custom(|_| f64::NAN, None, None, SuperlinearGrowth { c3: 0.0, c4: 0.0 });
        let err = diffusion_g(&SpectralField::zeros(2), &b, &bad).unwrap_err();
        assert!(matches!(err, Error::Numerical { mode: 1, .. }));
    }

    #[test]
    fn delta_for_single_mode() {
        let b = SpectralBasis::with_default_nodes(1, PI).unwrap();
        let k = ProjectionConstants::from_basis(&b);
        // min{ sqrt(pi/2), sqrt(pi)/e }
        let want = (PI / 2.0).sqrt().min(PI.sqrt() / E);
        assert!((k.delta() - want).abs() < 1e-14);
        assert!((k.delta() - 0.652_05).abs() < 1e-5);
    }

    #[test]
    fn loglip_rejects_pairs_outside_delta() {
        let b = SpectralBasis::with_default_nodes(1, PI).unwrap();
        let y = SpectralField::new(vec![1.0]).unwrap();
        let z = SpectralField::new(vec![0.0]).unwrap();
        assert!(matches!(f_loglip_check(&y, &z, &b), Err(Error::Contract(_))));
        let c = f_loglip_check(&y, &y, &b).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert_eq!(c.rhs, 0.0);
    }

    #[test]
    fn bound_at_zero_is_constant_term() {
        let b = SpectralBasis::with_default_nodes(3, PI).unwrap();
        let c = f_bound_check(&SpectralField::zeros(3), &b).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.rhs > 0.0);
        assert!(c.holds());
    }

    #[test]
    fn g_lip_needs_lipschitz_model() {
        let b = SpectralBasis::with_default_nodes(2, PI).unwrap();
        let m = DiffusionModel::sublinear(0.5, 1.0, 1.0).unwrap();
        let y = SpectralField::zeros(2);
        assert!(g_lip_check(&y, &y, &b, &m).is_err());
    }
}
