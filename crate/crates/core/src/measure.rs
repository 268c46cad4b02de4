//! Sample spaces, measures stored as densities against a base weighting,
//! and the integrals everything else is built from.
//!
//! A [`SampleSpace`] is either a finite set of labelled outcomes with
//! counting weights, or a 1-D grid on a truncated interval whose base
//! weights are composite Simpson weights. Every measure in the crate is a
//! density with respect to those weights, so an integral is always the
//! finite sum `Σ f_i · density_i · weight_i`.
//!
//! Points of zero density are kept. An integrand evaluated at such a point
//! contributes nothing, even when it is infinite there (`0 · ∞ := 0`).

use std::sync::Arc;

use crate::error::{Error, Result};

/// Tolerance used when checking that a measure is a probability measure.
pub const MASS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Finite,
    Grid1D,
}

/// One outcome of a sample space, as seen by density functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub index: usize,
    /// Abscissa for grids, the index as a float for finite spaces.
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpace {
    kind: SpaceKind,
    labels: Vec<String>,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl SampleSpace {
    /// Finite space with unit counting weights.
    pub fn finite<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let weights = vec![1.0; labels.len()];
        Self::finite_weighted(labels, weights)
    }

    /// Finite space with `n` outcomes labelled `w1..wn`.
    pub fn finite_n(n: usize) -> Result<Self> {
        Self::finite((1..=n).map(|i| format!("w{i}")))
    }

    pub fn finite_weighted(labels: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidSpace("a sample space needs at least one point".into()));
        }
        if labels.len() != weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} labels but {} weights",
                labels.len(),
                weights.len()
            )));
        }
        check_weights(&weights)?;
        let points = (0..labels.len()).map(|i| i as f64).collect();
        Ok(Self { kind: SpaceKind::Finite, labels, points, weights })
    }

    /// Grid with explicit abscissas and quadrature weights.
    pub fn grid(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSpace("a sample space needs at least one point".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} abscissas but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpace("grid abscissas must be finite".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpace("grid abscissas must be strictly increasing".into()));
        }
        check_weights(&weights)?;
        Ok(Self { kind: SpaceKind::Grid1D, labels: Vec::new(), points, weights })
    }

    /// Composite Simpson grid on `[lo, hi]` with `points` nodes (odd, ≥ 3).
    pub fn simpson(lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::simpson_panels(&[lo, hi], points.saturating_sub(1))
    }

    /// Composite Simpson rule over consecutive panels `[b_k, b_{k+1}]`, each
    /// split into `intervals` equal sub-intervals (even). Shared panel
    /// endpoints get the sum of both panels' weights.
    pub fn simpson_panels(breakpoints: &[f64], intervals: usize) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidSpace("need at least two breakpoints".into()));
        }
        if intervals < 2 || !intervals.is_multiple_of(2) {
            return Err(Error::InvalidSpace(format!(
                "Simpson panels need an even number of intervals, got {intervals}"
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpace("breakpoints must be finite and strictly increasing".into()));
        }
        let mut points = vec![breakpoints[0]];
        let mut weights = vec![0.0];
        for panel in breakpoints.windows(2) {
            let (a, b) = (panel[0], panel[1]);
            let h = (b - a) / intervals as f64;
            *weights.last_mut().unwrap() += h / 3.0;
            for j in 1..=intervals {
                let x = if j == intervals { b } else { a + h * j as f64 };
                let w = if j == intervals {
                    h / 3.0
                } else if j % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                };
                points.push(x);
                weights.push(w);
            }
        }
        Self::grid(points, weights)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Outcome labels; empty for grids.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn outcome(&self, index: usize) -> Outcome {
        Outcome { index, x: self.points[index] }
    }

    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        (0..self.len()).map(|i| self.outcome(i))
    }

    /// `Σ f_i · weight_i`, the base-measure integral of a per-point function.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    match weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        Some(i) => Err(Error::InvalidSpace(format!(
            "base weight {i} is {} (must be positive and finite)",
            weights[i]
        ))),
        None => Ok(()),
    }
}

/// A nonnegative measure, stored as its density against the space's base weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMeasure {
    space: Arc<SampleSpace>,
    density: Vec<f64>,
}

impl DensityMeasure {
    pub fn new(space: Arc<SampleSpace>, density: Vec<f64>) -> Result<Self> {
        if density.len() != space.len() {
            return Err(Error::Dimension(format!(
                "density has {} values for a space of {} points",
                density.len(),
                space.len()
            )));
        }
        if let Some(i) = density.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidDensity(format!("value {} at point {i}", density[i])));
        }
        Ok(Self { space, density })
    }

    /// The probability measure with constant density `1 / Σ weights`.
    pub fn uniform(space: Arc<SampleSpace>) -> Self {
        let total: f64 = space.weights().iter().sum();
        let density = vec![1.0 / total; space.len()];
        Self { space, density }
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn mass(&self) -> f64 {
        self.space.integrate(&self.density)
    }

    pub fn is_probability(&self) -> bool {
        (self.mass() - 1.0).abs() <= MASS_TOL
    }

    pub fn to_signed(&self) -> SignedDensity {
        SignedDensity { space: self.space.clone(), density: self.density.clone() }
    }
}

/// A finite signed measure in density form.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedDensity {
    space: Arc<SampleSpace>,
    density: Vec<f64>,
}

impl SignedDensity {
    pub fn new(space: Arc<SampleSpace>, density: Vec<f64>) -> Result<Self> {
        if density.len() != space.len() {
            return Err(Error::Dimension(format!(
                "density has {} values for a space of {} points",
                density.len(),
                space.len()
            )));
        }
        if let Some(i) = density.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidDensity(format!("value {} at point {i}", density[i])));
        }
        Ok(Self { space, density })
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }
}

pub fn total_variation(nu: &SignedDensity) -> f64 {
    nu.density.iter().zip(nu.space.weights()).map(|(d, w)| d.abs() * w).sum()
}

/// Weighted sum `Σ g(f_i) · density_i · weight_i` over positive-density points.
fn weighted_sum(f: &[f64], mu: &DensityMeasure, g: impl Fn(f64) -> f64) -> Result<f64> {
    if f.len() != mu.density.len() {
        return Err(Error::Dimension(format!(
            "function has {} values for a space of {} points",
            f.len(),
            mu.density.len()
        )));
    }
    let mut acc = 0.0;
    for (i, ((&fi, &p), &w)) in f.iter().zip(&mu.density).zip(mu.space.weights()).enumerate() {
        if p == 0.0 {
            continue;
        }
        if !fi.is_finite() {
            return Err(Error::NonIntegrable { point: i, value: fi });
        }
        acc += g(fi) * p * w;
    }
    Ok(acc)
}

/// `‖f‖_{L^k(μ)}` for `k ≥ 1`.
pub fn lk_norm(f: &[f64], mu: &DensityMeasure, k: f64) -> Result<f64> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("L^k norm needs finite k >= 1, got {k}")));
    }
    let sum = weighted_sum(f, mu, |v| v.abs().powf(k))?;
    Ok(sum.powf(1.0 / k))
}

pub fn expectation(f: &[f64], mu: &DensityMeasure) -> Result<f64> {
    weighted_sum(f, mu, |v| v)
}

/// Builds a measure dominating every input: `Σ_n |ν_n| / (2ⁿ ‖ν_n‖_TV)`.
pub fn dominating_mixture(measures: &[DensityMeasure]) -> Result<DensityMeasure> {
    let first = measures
        .first()
        .ok_or_else(|| Error::InvalidArgument("dominating_mixture needs at least one measure".into()))?;
    let space = first.space.clone();
    let mut density = vec![0.0; space.len()];
    let mut scale = 1.0;
    for (index, nu) in measures.iter().enumerate() {
        if nu.space != space && *nu.space != *space {
            return Err(Error::InvalidArgument(format!("measure {index} lives on a different space")));
        }
        let tv = total_variation(&nu.to_signed());
        if tv <= 0.0 {
            return Err(Error::NullMeasure { index });
        }
        scale *= 0.5;
        let factor = scale / tv;
        for (acc, p) in density.iter_mut().zip(&nu.density) {
            *acc += factor * p.abs();
        }
    }
    DensityMeasure::new(space, density)
}
