//! Estimators, feature maps, and the statistics they induce at a parameter.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::diff::{directional_derivative, Stencil};
use crate::error::{Error, Result};
use crate::measure::{self, DensityMeasure, Outcome, SampleSpace};
use crate::model::{density_at, score_with_density, Domain, ParamModel, ScoreField};

type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type MatFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A feature `φ: R^d → R^m` of the parameter, defined on all of `R^d`.
#[derive(Clone)]
pub struct FeatureMap {
    name: String,
    input_dim: usize,
    output_dim: usize,
    value: VecFn,
    jacobian: Option<MatFn>,
}

impl fmt::Debug for FeatureMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeatureMap")
            .field("name", &self.name)
            .field("input_dim", &self.input_dim)
            .field("output_dim", &self.output_dim)
            .finish()
    }
}

impl FeatureMap {
    pub fn new(name: impl Into<String>, input_dim: usize, output_dim: usize, value: VecFn, jacobian: Option<MatFn>) -> Self {
        Self { name: name.into(), input_dim, output_dim, value, jacobian }
    }

    pub fn identity(d: usize) -> Self {
        Self::new(
            "identity",
            d,
            d,
            Arc::new(|xi: &[f64]| xi.to_vec()),
            Some(Arc::new(move |_: &[f64]| DMatrix::identity(d, d))),
        )
    }

    /// `ξ ↦ A ξ + b`.
    pub fn affine(name: impl Into<String>, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Dimension("affine feature: offset length differs from row count".into()));
        }
        let (m, d) = (a.nrows(), a.ncols());
        let a2 = a.clone();
        Ok(Self::new(
            name,
            d,
            m,
            Arc::new(move |xi: &[f64]| (&a * DVector::from_column_slice(xi) + &b).iter().copied().collect()),
            Some(Arc::new(move |_: &[f64]| a2.clone())),
        ))
    }

    /// Chart coordinates of the probability simplex mapped to all `n`
    /// masses: `(ξ_1, …, ξ_{n−1}, 1 − Σ ξ)`.
    pub fn simplex_masses(n: usize) -> Self {
        let d = n - 1;
        Self::new(
            "simplex-masses",
            d,
            n,
            Arc::new(|xi: &[f64]| {
                let mut v = xi.to_vec();
                v.push(1.0 - xi.iter().sum::<f64>());
                v
            }),
            Some(Arc::new(move |_: &[f64]| {
                DMatrix::from_fn(n, d, |r, c| if r == d { -1.0 } else if r == c { 1.0 } else { 0.0 })
            })),
        )
    }

    /// Feature with no analytic Jacobian; derivatives fall back to central differences.
    pub fn from_fn(name: impl Into<String>, input_dim: usize, output_dim: usize, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self::new(name, input_dim, output_dim, Arc::new(f), None)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn value(&self, xi: &[f64]) -> Vec<f64> {
        (self.value)(xi)
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn jacobian(&self, xi: &[f64]) -> DMatrix<f64> {
        match &self.jacobian {
            Some(j) => j(xi),
            None => self.finite_difference_jacobian(xi),
        }
    }

    pub fn finite_difference_jacobian(&self, xi: &[f64]) -> DMatrix<f64> {
        let dom = Domain::unbounded(self.input_dim);
        crate::diff::jacobian(&dom, xi, |x| Ok(self.value(x))).expect("unbounded domain always admits a stencil")
    }
}

/// An estimator tabulated on the sample space: one parameter value per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    name: String,
    dim: usize,
    values: Vec<f64>,
}

impl Estimator {
    pub fn tabulated(name: impl Into<String>, dim: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("estimator dimension must be positive".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Dimension(format!("estimator row {i} has {} entries, expected {dim}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("estimator row {i} is not finite")));
            }
            values.extend_from_slice(row);
        }
        Ok(Self { name: name.into(), dim, values })
    }

    pub fn from_fn(name: impl Into<String>, space: &SampleSpace, dim: usize, f: impl Fn(Outcome) -> Vec<f64>) -> Result<Self> {
        Self::tabulated(name, dim, space.outcomes().map(f).collect())
    }

    pub fn constant(name: impl Into<String>, points: usize, value: &[f64]) -> Result<Self> {
        Self::tabulated(name, value.len(), vec![value.to_vec(); points])
    }

    /// `ω ↦ c · σ̂(ω)`.
    pub fn scaled(&self, name: impl Into<String>, c: f64) -> Self {
        Self { name: name.into(), dim: self.dim, values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, point: usize) -> &[f64] {
        &self.values[point * self.dim..(point + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks_exact(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// Whether every value lies in `domain`. Estimators may leave the model
    /// domain (e.g. `c · ω` with `c > 1`); features are defined on `R^d`.
    pub fn within(&self, domain: &Domain) -> bool {
        self.values.chunks_exact(self.dim).all(|v| domain.contains(v))
    }
}

/// `φ ∘ σ̂` as `m` per-point functions.
pub fn composition(model: &ParamModel, est: &Estimator, feat: &FeatureMap) -> Result<Vec<Vec<f64>>> {
    let d = model.param_dim();
    if est.dim() != d || feat.input_dim() != d {
        return Err(Error::Dimension(format!(
            "model has dimension {d}, estimator {}, feature input {}",
            est.dim(),
            feat.input_dim()
        )));
    }
    if est.len() != model.space().len() {
        return Err(Error::Dimension(format!(
            "estimator has {} rows for a space of {} points",
            est.len(),
            model.space().len()
        )));
    }
    let m = feat.output_dim();
    let mut cols = vec![vec![0.0; est.len()]; m];
    for j in 0..est.len() {
        let v = feat.value(est.value(j));
        if v.len() != m {
            return Err(Error::Dimension(format!("feature returned {} values, declared {m}", v.len())));
        }
        for (col, x) in cols.iter_mut().zip(v) {
            col[j] = x;
        }
    }
    Ok(cols)
}

fn expectations(cols: &[Vec<f64>], mu: &DensityMeasure) -> Result<DVector<f64>> {
    let v: Result<Vec<f64>> = cols.iter().map(|c| measure::expectation(c, mu)).collect();
    Ok(DVector::from_vec(v?))
}

/// On probability models scores integrate to zero, so each component is
/// paired after subtracting its value at a support point; components that are
/// constant on the support then get an exactly zero derivative.
fn score_pairing(model: &ParamModel, cols: &[Vec<f64>], mu: &DensityMeasure, scores: &ScoreField) -> Result<DMatrix<f64>> {
    let d = scores.dim();
    let anchor = mu.density().iter().position(|p| *p > 0.0).filter(|_| model.is_statistical());
    let mut j = DMatrix::zeros(cols.len(), d);
    for i in 0..d {
        let s = scores.component(i);
        for (l, c) in cols.iter().enumerate() {
            let r = anchor.map_or(0.0, |a| c[a]);
            let prod: Vec<f64> = c.iter().zip(&s).map(|(a, b)| (a - r) * b).collect();
            j[(l, i)] = measure::expectation(&prod, mu)?;
        }
    }
    Ok(j)
}

/// `φ̂(ξ) = E_{p(ξ)}(φ ∘ σ̂)`.
pub fn phi_hat(model: &ParamModel, est: &Estimator, feat: &FeatureMap, xi: &[f64]) -> Result<DVector<f64>> {
    let cols = composition(model, est, feat)?;
    expectations(&cols, &density_at(model, xi)?)
}

/// `∂_i φ̂^l = E_{p(ξ)}((φ^l ∘ σ̂) · ∂_i log p)`, an `m × d` matrix.
pub fn d_phi_hat(model: &ParamModel, est: &Estimator, feat: &FeatureMap, xi: &[f64]) -> Result<DMatrix<f64>> {
    let cols = composition(model, est, feat)?;
    let (mu, scores) = score_with_density(model, xi)?;
    score_pairing(model, &cols, &mu, &scores)
}

/// Finite-difference Jacobian of `ξ ↦ φ̂(ξ)`, the reference for [`d_phi_hat`].
pub fn d_phi_hat_finite_difference(model: &ParamModel, est: &Estimator, feat: &FeatureMap, xi: &[f64]) -> Result<DMatrix<f64>> {
    let cols = composition(model, est, feat)?;
    crate::diff::jacobian(model.domain(), xi, |x| {
        let mu = density_at(model, x)?;
        Ok(expectations(&cols, &mu)?.iter().copied().collect())
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorStats {
    pub xi: Vec<f64>,
    pub phi_hat: DVector<f64>,
    /// `φ̂(ξ) − φ(ξ)`.
    pub bias: DVector<f64>,
    pub variance: DMatrix<f64>,
    pub mse: DMatrix<f64>,
    pub d_phi_hat: DMatrix<f64>,
    /// `max |MSE − V − b bᵀ|`.
    pub msevb_residual: f64,
    pub mass: f64,
}

pub fn estimator_stats(model: &ParamModel, est: &Estimator, feat: &FeatureMap, xi: &[f64]) -> Result<EstimatorStats> {
    if !model.is_statistical() {
        return Err(Error::NotStatistical);
    }
    let cols = composition(model, est, feat)?;
    let (mu, scores) = score_with_density(model, xi)?;
    let phi_hat = expectations(&cols, &mu)?;
    let target = DVector::from_vec(feat.value(xi));
    let bias = &phi_hat - &target;
    let variance = second_moment(&cols, &mu, &phi_hat)?;
    let mse = second_moment(&cols, &mu, &target)?;
    let d_phi_hat = score_pairing(model, &cols, &mu, &scores)?;
    let msevb_residual = (&mse - &variance - &bias * bias.transpose()).abs().max();
    Ok(EstimatorStats { xi: xi.to_vec(), phi_hat, bias, variance, mse, d_phi_hat, msevb_residual, mass: mu.mass() })
}

/// `E[(φσ̂ − c)(φσ̂ − c)ᵀ]`.
fn second_moment(cols: &[Vec<f64>], mu: &DensityMeasure, center: &DVector<f64>) -> Result<DMatrix<f64>> {
    let m = cols.len();
    let centered: Vec<Vec<f64>> = cols.iter().zip(center.iter()).map(|(c, e)| c.iter().map(|v| v - e).collect()).collect();
    let mut out = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let prod: Vec<f64> = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).collect();
            let v = measure::expectation(&prod, mu)?;
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreGradientResidual {
    pub direction: Vec<f64>,
    /// `∂_X E_{p(ξ)}(f)` by finite differences.
    pub finite_difference: f64,
    /// `E_{p(ξ)}((f − E f) · ∂_X log p)`.
    pub pairing: f64,
    pub residual: f64,
}

/// Checks that the centred function `f − E(f)` reproduces the derivative of
/// `ξ ↦ E_{p(ξ)}(f)` when paired with scores.
pub fn pre_gradient_check(model: &ParamModel, f: &[f64], xi: &[f64], directions: &[Vec<f64>]) -> Result<Vec<PreGradientResidual>> {
    let (mu, scores) = score_with_density(model, xi)?;
    let mean = measure::expectation(f, &mu)?;
    let centered: Vec<f64> = f.iter().map(|v| v - mean).collect();
    directions
        .iter()
        .map(|dir| {
            if dir.len() != model.param_dim() {
                return Err(Error::Dimension("direction length differs from parameter dimension".into()));
            }
            Stencil::choose(model.domain(), xi, dir)?;
            let fd = directional_derivative(model.domain(), xi, dir, |x| Ok(vec![measure::expectation(f, &density_at(model, x)?)?]))?[0];
            let s = scores.along(dir);
            let prod: Vec<f64> = centered.iter().zip(&s).map(|(a, b)| a * b).collect();
            let pairing = measure::expectation(&prod, &mu)?;
            Ok(PreGradientResidual { direction: dir.clone(), finite_difference: fd, pairing, residual: (fd - pairing).abs() })
        })
        .collect()
}
