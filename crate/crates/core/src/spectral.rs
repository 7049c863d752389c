//! Dirichlet eigenbasis of the Laplacian on an interval `(0, L)`.
//!
//! Eigenpairs are `e_i(x) = sqrt(2/L) sin(i pi x / L)` with `lambda_i = (i pi / L)^2`,
//! `i = 1..=n`. Physical-space quantities live on a composite midpoint grid of `M`
//! cells; with `M >= 4n` the grid inner products of the basis functions are exact
//! up to roundoff, so projection and synthesis are mutually inverse on the span.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Composite midpoint rule on `(0, L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    pub fn midpoint(length: f64, cells: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(format!(
                "domain length must be positive, got {length}"
            )));
        }
        if cells == 0 {
            return Err(Error::Config("quadrature needs at least one cell".into()));
        }
        let h = length / cells as f64;
        let nodes = (0..cells).map(|k| (k as f64 + 0.5) * h).collect();
        Ok(Self {
            nodes,
            weights: vec![h; cells],
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_k w_k f_k`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        self.weights.iter().zip(values).map(|(w, f)| w * f).sum()
    }

    /// Quadrature of `f(values_k)` without allocating.
    pub fn integrate_map(&self, values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        self.weights.iter().zip(values).map(|(w, &v)| w * f(v)).sum()
    }
}

/// Coefficients `(g_1, ..., g_n)` of `u = sum_i g_i e_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Numerical {
                mode: i + 1,
                what: format!("coefficient {}", coeffs[i]),
            });
        }
        Ok(Self { coeffs })
    }

    /// Skips the finiteness check; used inside the integrator where explosion
    /// is detected separately.
    pub(crate) fn from_raw(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        Self { coeffs: vec![0.0; n] }
    }

    /// The eigenfunction `e_mode` (1-based) as a field of length `n`.
    pub fn mode(n: usize, mode: usize) -> Self {
        assert!(mode >= 1 && mode <= n, "mode {mode} outside 1..={n}");
        let mut coeffs = vec![0.0; n];
        coeffs[mode - 1] = 1.0;
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Euclidean length `|y|` of the coefficient vector, equal to the `H` norm.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self - other`; the shorter field is zero-padded.
    pub fn sub(&self, other: &Self) -> Self {
        let n = self.len().max(other.len());
        let coeffs = (0..n)
            .map(|i| self.coeffs.get(i).unwrap_or(&0.0) - other.coeffs.get(i).unwrap_or(&0.0))
            .collect();
        Self { coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.len().max(other.len());
        let coeffs = (0..n)
            .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + other.coeffs.get(i).unwrap_or(&0.0))
            .collect();
        Self { coeffs }
    }

    /// Embeds into `n` modes by zero-padding or truncation.
    pub fn resized(&self, n: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n, 0.0);
        Self { coeffs }
    }
}

/// Values of a function at the quadrature nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "grid value {} at node {k} is not finite",
                values[k]
            )));
        }
        Ok(Self { values })
    }

    /// Samples `f` at the nodes of `basis`.
    pub fn sample(basis: &SpectralBasis, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(basis.quadrature().nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    n: usize,
    length: f64,
    lambdas: Vec<f64>,
    sup_norms: Vec<f64>,
    quad: Quadrature,
    /// `table[k * n + i] = e_{i+1}(x_k)`
    table: Vec<f64>,
}

impl SpectralBasis {
    /// Smallest admissible node count per mode.
    pub const MIN_NODES_PER_MODE: usize = 4;
    pub const DEFAULT_NODES_PER_MODE: usize = 8;

    pub fn new(n: usize, length: f64, nodes: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("mode count n must be at least 1".into()));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(format!(
                "domain length L must be positive, got {length}"
            )));
        }
        if nodes < Self::MIN_NODES_PER_MODE * n {
            return Err(Error::Config(format!(
                "quadrature node count M = {nodes} is below 4n = {}",
                Self::MIN_NODES_PER_MODE * n
            )));
        }
        let quad = Quadrature::midpoint(length, nodes)?;
        let lambdas = (1..=n)
            .map(|i| {
                let k = i as f64 * PI / length;
                k * k
            })
            .collect();
        let amp = (2.0 / length).sqrt();
        let sup_norms = vec![amp; n];
        let mut table = Vec::with_capacity(nodes * n);
        for &x in quad.nodes() {
            for i in 1..=n {
                table.push(amp * (i as f64 * PI * x / length).sin());
            }
        }
        Ok(Self {
            n,
            length,
            lambdas,
            sup_norms,
            quad,
            table,
        })
    }

    /// `M = 8n` nodes.
    pub fn with_default_nodes(n: usize, length: f64) -> Result<Self> {
        Self::new(n, length, Self::DEFAULT_NODES_PER_MODE * n.max(1))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Lebesgue measure `m(D)` of the domain.
    pub fn domain_measure(&self) -> f64 {
        self.length
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda1(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn sup_norms(&self) -> &[f64] {
        &self.sup_norms
    }

    /// `(sum_i |e_i|_inf^2)^{1/2}`, the factor bounding `|u(x)| <= |y| * S`.
    pub fn sup_norm_root_sum(&self) -> f64 {
        self.sup_norms.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    pub fn nodes(&self) -> usize {
        self.quad.len()
    }

    /// `e_mode(x)` for a 1-based mode index.
    pub fn eigenfunction(&self, mode: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (mode as f64 * PI * x / self.length).sin()
    }

    pub fn eigenfunction_derivative(&self, mode: usize, x: f64) -> f64 {
        let k = mode as f64 * PI / self.length;
        (2.0 / self.length).sqrt() * k * (k * x).cos()
    }

    /// Row of the basis table at node `k`: `(e_1(x_k), ..., e_n(x_k))`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.table[k * self.n..(k + 1) * self.n]
    }

    fn check_field(&self, f: &SpectralField) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::Contract(format!(
                "field has {} coefficients but the basis has {} modes",
                f.len(),
                self.n
            )));
        }
        Ok(())
    }

    fn check_grid(&self, g: &GridFunction) -> Result<()> {
        if g.len() != self.nodes() {
            return Err(Error::Contract(format!(
                "grid function has {} values but the quadrature has {} nodes",
                g.len(),
                self.nodes()
            )));
        }
        Ok(())
    }

    /// `P_n g`: quadrature inner products `<g, e_i>`.
    pub fn project(&self, g: &GridFunction) -> Result<SpectralField> {
        self.check_grid(g)?;
        let mut out = vec![0.0; self.n];
        self.project_into(g.values(), &mut out);
        Ok(SpectralField::from_raw(out))
    }

    /// `out_i = sum_k w_k values_k e_i(x_k)`.
    pub(crate) fn project_into(&self, values: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let w = self.quad.weights();
        for (k, &v) in values.iter().enumerate() {
            let wv = w[k] * v;
            if wv == 0.0 {
                continue;
            }
            for (o, e) in out.iter_mut().zip(self.row(k)) {
                *o += wv * e;
            }
        }
    }

    /// Projects two grid functions in one sweep over the table.
    pub(crate) fn project_pair_into(&self, a: &[f64], b: &[f64], out_a: &mut [f64], out_b: &mut [f64]) {
        out_a.iter_mut().for_each(|o| *o = 0.0);
        out_b.iter_mut().for_each(|o| *o = 0.0);
        let w = self.quad.weights();
        for k in 0..self.nodes() {
            let wa = w[k] * a[k];
            let wb = w[k] * b[k];
            for ((oa, ob), e) in out_a.iter_mut().zip(out_b.iter_mut()).zip(self.row(k)) {
                *oa += wa * e;
                *ob += wb * e;
            }
        }
    }

    /// `u(x_k) = sum_i g_i e_i(x_k)`.
    pub fn synthesize(&self, f: &SpectralField) -> Result<GridFunction> {
        self.check_field(f)?;
        let mut out = vec![0.0; self.nodes()];
        self.synthesize_into(f.coeffs(), &mut out);
        GridFunction::new(out)
    }

    pub(crate) fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.row(k).iter().zip(coeffs).map(|(e, g)| e * g).sum();
        }
    }

    /// `u'(x_k)`, evaluated analytically from the coefficients.
    pub fn synthesize_derivative(&self, f: &SpectralField) -> Result<GridFunction> {
        self.check_field(f)?;
        let values = self
            .quad
            .nodes()
            .iter()
            .map(|&x| {
                f.coeffs()
                    .iter()
                    .enumerate()
                    .map(|(i, g)| g * self.eigenfunction_derivative(i + 1, x))
                    .sum()
            })
            .collect();
        GridFunction::new(values)
    }

    /// `|u|_H = (sum g_i^2)^{1/2}`.
    pub fn h_norm(&self, f: &SpectralField) -> f64 {
        f.norm()
    }

    /// `|u|_V = (sum lambda_i g_i^2)^{1/2}`.
    pub fn v_norm(&self, f: &SpectralField) -> f64 {
        self.v_norm_sq(f.coeffs()).sqrt()
    }

    pub(crate) fn v_norm_sq(&self, coeffs: &[f64]) -> f64 {
        coeffs.iter().zip(&self.lambdas).map(|(g, l)| l * g * g).sum()
    }

    /// `|u|_{V*} = (sum g_i^2 / lambda_i)^{1/2}`.
    pub fn vstar_norm(&self, f: &SpectralField) -> f64 {
        self.vstar_norm_sq(f.coeffs()).sqrt()
    }

    pub(crate) fn vstar_norm_sq(&self, coeffs: &[f64]) -> f64 {
        coeffs.iter().zip(&self.lambdas).map(|(g, l)| g * g / l).sum()
    }

    /// `(1/lambda_1) |u|_V^2 - |u|^2`, nonnegative for every field.
    pub fn poincare_gap(&self, f: &SpectralField) -> f64 {
        // Summed termwise so the result is a sum of nonnegative numbers.
        f.coeffs()
            .iter()
            .zip(&self.lambdas)
            .map(|(g, l)| (l / self.lambdas[0] - 1.0) * g * g)
            .sum()
    }

    /// Quadrature of `g^2`.
    pub fn grid_l2_sq(&self, g: &GridFunction) -> f64 {
        self.quad.integrate_map(g.values(), |v| v * v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

    #[test]
    fn eigenvalues_on_zero_pi() {
        let b = SpectralBasis::with_default_nodes(3, PI).unwrap();
        for (l, want) in b.lambdas().iter().zip([1.0, 4.0, 9.0]) {
            assert!((l - want).abs() < 1e-12);
        }
        assert!(b.lambdas().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sup_norm_single_mode() {
        let b = SpectralBasis::with_default_nodes(1, PI).unwrap();
        assert!((b.sup_norms()[0] - SQRT_2_OVER_PI).abs() < 1e-15);
    }

    #[test]
    fn gram_matrix_is_identity() {
        let b = SpectralBasis::new(8, PI, 64).unwrap();
        let q = b.quadrature();
        for i in 0..8 {
            for j in 0..8 {
                let gij: f64 = (0..q.len())
                    .map(|k| q.weights()[k] * b.row(k)[i] * b.row(k)[j])
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gij - want).abs() < 1e-10, "G[{i}][{j}] = {gij}");
            }
        }
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(SpectralBasis::new(0, PI, 8).is_err());
        assert!(SpectralBasis::new(2, -1.0, 8).is_err());
        assert!(SpectralBasis::new(2, PI, 7).is_err());
        assert!(SpectralBasis::new(2, PI, 8).is_ok());
    }

    #[test]
    fn quadrature_weights_sum_to_length_and_nodes_interior() {
        let b = SpectralBasis::new(5, 2.5, 40).unwrap();
        let q = b.quadrature();
        assert!((q.weights().iter().sum::<f64>() - 2.5).abs() < 1e-13);
        assert!(q.nodes().iter().all(|&x| x > 0.0 && x < 2.5));
    }

    #[test]
    fn project_picks_out_modes() {
        let b = SpectralBasis::with_default_nodes(4, PI).unwrap();
        let g = GridFunction::sample(&b, |x| b.eigenfunction(2, x)).unwrap();
        let f = b.project(&g).unwrap();
        for (i, c) in f.coeffs().iter().enumerate() {
            let want = if i == 1 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-10);
        }
        let zero = GridFunction::new(vec![0.0; b.nodes()]).unwrap();
        assert!(b.project(&zero).unwrap().coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn projection_truncates_higher_modes() {
        // Sampled on a grid that resolves mode 3, projected onto two modes.
        let b = SpectralBasis::new(2, PI, 16).unwrap();
        let g = GridFunction::sample(&b, |x| b.eigenfunction(1, x) + 0.5 * b.eigenfunction(3, x)).unwrap();
        let f = b.project(&g).unwrap();
        assert!((f.coeffs()[0] - 1.0).abs() < 1e-10);
        assert!(f.coeffs()[1].abs() < 1e-10);
    }

    #[test]
    fn length_mismatch_is_contract_violation() {
        let b = SpectralBasis::with_default_nodes(3, PI).unwrap();
        let g = GridFunction::new(vec![0.0; 5]).unwrap();
        assert!(matches!(b.project(&g), Err(Error::Contract(_))));
        assert!(matches!(
            b.synthesize(&SpectralField::zeros(2)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn synthesize_first_mode_at_midpoint() {
        // M odd puts a node exactly at pi/2.
        let b = SpectralBasis::new(1, PI, 9).unwrap();
        let u = b.synthesize(&SpectralField::mode(1, 1)).unwrap();
        assert!((u.values()[4] - SQRT_2_OVER_PI).abs() < 1e-15);
        let z = b.synthesize(&SpectralField::zeros(1)).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn norms_of_single_modes() {
        let b = SpectralBasis::with_default_nodes(3, PI).unwrap();
        let e1 = SpectralField::mode(3, 1);
        assert_eq!(b.h_norm(&e1), 1.0);
        assert!((b.v_norm(&e1) - 1.0).abs() < 1e-14);
        assert!((b.vstar_norm(&e1) - 1.0).abs() < 1e-14);
        let e2 = SpectralField::mode(3, 2);
        assert!((b.v_norm(&e2) - 2.0).abs() < 1e-14);
        assert!((b.vstar_norm(&e2) - 0.5).abs() < 1e-14);
        assert_eq!(b.poincare_gap(&e1), 0.0);
        assert!((b.poincare_gap(&e2) - 3.0).abs() < 1e-13);
    }

    #[test]
    fn spectral_v_norm_matches_quadrature_of_derivative() {
        let b = SpectralBasis::with_default_nodes(6, PI).unwrap();
        let f = SpectralField::new(vec![0.3, -1.2, 0.7, 0.05, -0.4, 0.9]).unwrap();
        let du = b.synthesize_derivative(&f).unwrap();
        let q = b.grid_l2_sq(&du);
        assert!((q - b.v_norm(&f).powi(2)).abs() < 1e-8);
    }
}
