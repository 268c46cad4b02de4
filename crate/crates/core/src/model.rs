//! Parametrized measure models on a sample space, their scores, and
//! numerical diagnostics for integrability and regularity.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::diff::{offset, unit, Stencil};
use crate::error::{Error, Result};
use crate::measure::{self, DensityMeasure, Outcome, SampleSpace, MASS_TOL};

/// Slack for domain membership tests.
const DOMAIN_EPS: f64 = 1e-12;

/// `coeffs · ξ ≤ bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

/// Box bounds (possibly infinite) plus linear inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    constraints: Vec<LinearConstraint>,
}

impl Domain {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len(), "box bounds differ in length");
        Self { lower, upper, constraints: Vec::new() }
    }

    pub fn unbounded(d: usize) -> Self {
        Self::boxed(vec![f64::NEG_INFINITY; d], vec![f64::INFINITY; d])
    }

    pub fn with_constraint(mut self, coeffs: Vec<f64>, bound: f64) -> Self {
        assert_eq!(coeffs.len(), self.dim(), "constraint dimension");
        self.constraints.push(LinearConstraint { coeffs, bound });
        self
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.dim()
            && xi.iter().all(|x| x.is_finite())
            && xi
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= lo - DOMAIN_EPS && *x <= hi + DOMAIN_EPS)
            && self.constraints.iter().all(|c| {
                let v: f64 = c.coeffs.iter().zip(xi).map(|(a, x)| a * x).sum();
                v <= c.bound + DOMAIN_EPS
            })
    }
}

/// A family of densities `p(ω; ξ)` with respect to a space's base weights.
pub trait DensityFamily: Send + Sync {
    fn param_dim(&self) -> usize;

    fn density(&self, at: Outcome, xi: &[f64]) -> f64;

    /// Whether [`DensityFamily::score`] is implemented.
    fn has_analytic_score(&self) -> bool {
        false
    }

    /// Writes `∂_i log p(ω; ξ)` into `out`. Only called where the density is
    /// positive and only when `has_analytic_score` is true.
    fn score(&self, _at: Outcome, _xi: &[f64], _out: &mut [f64]) {
        unimplemented!("family has no analytic score")
    }
}

#[derive(Clone)]
pub struct ParamModel {
    name: String,
    space: Arc<SampleSpace>,
    domain: Domain,
    family: Arc<dyn DensityFamily>,
    statistical: bool,
}

impl fmt::Debug for ParamModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamModel")
            .field("name", &self.name)
            .field("points", &self.space.len())
            .field("param_dim", &self.param_dim())
            .field("statistical", &self.statistical)
            .finish()
    }
}

impl ParamModel {
    pub fn new(
        name: impl Into<String>,
        space: Arc<SampleSpace>,
        domain: Domain,
        family: Arc<dyn DensityFamily>,
        statistical: bool,
    ) -> Result<Self> {
        if family.param_dim() == 0 {
            return Err(Error::InvalidArgument("parameter dimension must be positive".into()));
        }
        if domain.dim() != family.param_dim() {
            return Err(Error::Dimension(format!(
                "domain has dimension {} but the family has {}",
                domain.dim(),
                family.param_dim()
            )));
        }
        Ok(Self { name: name.into(), space, domain, family, statistical })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn family(&self) -> &Arc<dyn DensityFamily> {
        &self.family
    }

    pub fn param_dim(&self) -> usize {
        self.family.param_dim()
    }

    pub fn is_statistical(&self) -> bool {
        self.statistical
    }

    pub fn has_analytic_score(&self) -> bool {
        self.family.has_analytic_score()
    }

    fn check_param(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.param_dim() {
            return Err(Error::Dimension(format!(
                "parameter has {} coordinates, model expects {}",
                xi.len(),
                self.param_dim()
            )));
        }
        if !self.domain.contains(xi) {
            return Err(Error::OutOfDomain(xi.to_vec()));
        }
        Ok(())
    }

    /// Raw density values without the probability check; used for stencils.
    fn raw_density(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let values: Vec<f64> = self.space.outcomes().map(|o| self.family.density(o, xi)).collect();
        if let Some(i) = values.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidDensity(format!(
                "{} at point {i} for parameter {xi:?}",
                values[i]
            )));
        }
        Ok(values)
    }
}

pub fn density_at(model: &ParamModel, xi: &[f64]) -> Result<DensityMeasure> {
    model.check_param(xi)?;
    let mu = DensityMeasure::new(model.space.clone(), model.raw_density(xi)?)?;
    if model.statistical {
        let mass = mu.mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::NotNormalized { mass, tol: MASS_TOL });
        }
    }
    Ok(mu)
}

/// Per-point values of `∂_i log p(·; ξ)`; zero wherever the density vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreField {
    pub xi: Vec<f64>,
    dim: usize,
    values: Vec<f64>,
}

impl ScoreField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Score vector at one outcome.
    pub fn at(&self, point: usize) -> &[f64] {
        &self.values[point * self.dim..(point + 1) * self.dim]
    }

    /// Component `i` as a per-point function.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.values.iter().skip(i).step_by(self.dim).copied().collect()
    }

    /// `∂_v log p` as a per-point function.
    pub fn along(&self, v: &[f64]) -> Vec<f64> {
        self.values
            .chunks_exact(self.dim)
            .map(|s| s.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Scores together with the density they were computed against.
pub fn score_with_density(model: &ParamModel, xi: &[f64]) -> Result<(DensityMeasure, ScoreField)> {
    let mu = density_at(model, xi)?;
    let d = model.param_dim();
    let n = model.space.len();
    let mut values = vec![0.0; n * d];
    if model.family.has_analytic_score() {
        for (o, s) in model.space.outcomes().zip(values.chunks_exact_mut(d)) {
            if mu.density()[o.index] > 0.0 {
                model.family.score(o, xi, s);
            }
        }
    } else {
        for i in 0..d {
            let column = fd_log_derivative(model, xi, i, mu.density())?;
            for (j, v) in column.into_iter().enumerate() {
                values[j * d + i] = v;
            }
        }
    }
    Ok((mu, ScoreField { xi: xi.to_vec(), dim: d, values }))
}

pub fn score_at(model: &ParamModel, xi: &[f64]) -> Result<ScoreField> {
    score_with_density(model, xi).map(|(_, s)| s)
}

/// Finite-difference scores, ignoring any analytic score the family has.
pub fn finite_difference_score(model: &ParamModel, xi: &[f64]) -> Result<ScoreField> {
    let mu = density_at(model, xi)?;
    let d = model.param_dim();
    let mut values = vec![0.0; model.space.len() * d];
    for i in 0..d {
        for (j, v) in fd_log_derivative(model, xi, i, mu.density())?.into_iter().enumerate() {
            values[j * d + i] = v;
        }
    }
    Ok(ScoreField { xi: xi.to_vec(), dim: d, values })
}

fn fd_log_derivative(model: &ParamModel, xi: &[f64], coord: usize, p0: &[f64]) -> Result<Vec<f64>> {
    let dir = unit(xi.len(), coord);
    let (stencil, h) = Stencil::choose(&model.domain, xi, &dir)?;
    let nodes = stencil.nodes();
    let mut node_density = Vec::with_capacity(nodes.len());
    for &(m, _) in nodes {
        node_density.push(if m == 0.0 { p0.to_vec() } else { model.raw_density(&offset(xi, &dir, m * h))? });
    }
    let density_at = |m: f64, j: usize| -> Option<f64> {
        nodes.iter().position(|&(mm, _)| mm == m).map(|k| node_density[k][j])
    };

    let mut out = vec![0.0; p0.len()];
    for (j, slot) in out.iter_mut().enumerate() {
        if p0[j] <= 0.0 {
            continue;
        }
        if nodes.iter().enumerate().all(|(k, _)| node_density[k][j] > 0.0) {
            *slot = nodes
                .iter()
                .enumerate()
                .map(|(k, &(_, c))| c * node_density[k][j].ln())
                .sum::<f64>()
                / h;
            continue;
        }
        // Stencil hits a zero of the density: fall back to a first-order
        // difference towards whichever neighbour is still positive.
        let ln0 = p0[j].ln();
        *slot = match (density_at(1.0, j), density_at(-1.0, j)) {
            (Some(p), _) if p > 0.0 => (p.ln() - ln0) / h,
            (_, Some(p)) if p > 0.0 => (ln0 - p.ln()) / h,
            _ => return Err(Error::ScoreUndefined { point: j, coordinate: coord }),
        };
    }
    Ok(out)
}

type PathFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// A parametrized curve `t ↦ ξ(t)` on `[t0, t1]`.
#[derive(Clone)]
pub struct Curve {
    pub t0: f64,
    pub t1: f64,
    position: PathFn,
    velocity: Option<PathFn>,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve")
            .field("t0", &self.t0)
            .field("t1", &self.t1)
            .field("start", &self.point(self.t0))
            .field("end", &self.point(self.t1))
            .finish()
    }
}

impl Curve {
    pub fn new(t0: f64, t1: f64, position: PathFn, velocity: Option<PathFn>) -> Self {
        Self { t0, t1, position, velocity }
    }

    /// `t ↦ origin + t · direction` on `[t0, t1]`.
    pub fn line(origin: Vec<f64>, direction: Vec<f64>, t0: f64, t1: f64) -> Self {
        let dir = direction.clone();
        Self {
            t0,
            t1,
            position: Arc::new(move |t| origin.iter().zip(&dir).map(|(o, d)| o + t * d).collect()),
            velocity: Some(Arc::new(move |_| direction.clone())),
        }
    }

    /// Straight segment from `a` (t = 0) to `b` (t = 1).
    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Self {
        let dir = b.iter().zip(&a).map(|(b, a)| b - a).collect();
        Self::line(a, dir, 0.0, 1.0)
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        (self.position)(t)
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        match &self.velocity {
            Some(v) => v(t),
            None => {
                let h = 1e-6 * t.abs().max(1.0);
                let (a, b) = (self.point(t - h), self.point(t + h));
                b.iter().zip(&a).map(|(b, a)| (b - a) / (2.0 * h)).collect()
            }
        }
    }

    /// `n` equally spaced parameters covering `[t0, t1]`.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![self.t0];
        }
        (0..n)
            .map(|j| self.t0 + (self.t1 - self.t0) * j as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormSample {
    pub t: f64,
    /// `‖∂_{ξ̇(t)} log p‖_{L^k(p(ξ(t)))}`, `+∞` when it could not be evaluated.
    pub norm: f64,
    /// `norm^k`, i.e. `∫ |∂_{ξ̇} log p|^k dp(ξ(t))`.
    pub norm_pow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityReport {
    pub k: f64,
    pub samples: Vec<NormSample>,
    /// Largest absolute difference between consecutive norms.
    pub max_jump: f64,
}

pub fn integrability_diagnostic(
    model: &ParamModel,
    curve: &Curve,
    k: f64,
    t_samples: usize,
) -> Result<IntegrabilityReport> {
    if t_samples < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 curve samples, got {t_samples}")));
    }
    integrability_at(model, curve, k, &curve.samples(t_samples))
}

/// Same diagnostic at caller-chosen curve parameters.
pub fn integrability_at(model: &ParamModel, curve: &Curve, k: f64, ts: &[f64]) -> Result<IntegrabilityReport> {
    if !(k > 1.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("integrability exponent must exceed 1, got {k}")));
    }
    let samples: Vec<NormSample> = ts
        .par_iter()
        .map(|&t| {
            let xi = curve.point(t);
            let v = curve.velocity(t);
            let norm = score_with_density(model, &xi)
                .and_then(|(mu, s)| measure::lk_norm(&s.along(&v), &mu, k))
                .ok()
                .filter(|n| n.is_finite())
                .unwrap_or(f64::INFINITY);
            NormSample { t, norm, norm_pow: norm.powf(k) }
        })
        .collect();
    Ok(IntegrabilityReport { k, max_jump: max_jump(&samples), samples })
}

fn max_jump(samples: &[NormSample]) -> f64 {
    samples
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].norm, w[1].norm);
            if a == b {
                0.0
            } else {
                (b - a).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityEntry {
    pub radius: f64,
    /// Largest norm among this radius' own sample.
    pub sup_norm: f64,
    pub argmax: Vec<f64>,
    /// Largest norm among every evaluated parameter within `radius` of the
    /// centre; nondecreasing in `radius`.
    pub cumulative_sup: f64,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub k: f64,
    pub center: Vec<f64>,
    pub entries: Vec<RegularityEntry>,
}

pub const DEFAULT_NEIGHBORHOOD_SAMPLES: usize = 32;

/// Samples `‖f‖_{L^k(p(ξ))}` over shrinking neighbourhoods of `center`.
///
/// Each radius gets its own Halton sample of the box of that radius around
/// the centre (points outside the domain are skipped).
pub fn regularity_diagnostic(
    model: &ParamModel,
    f: &[f64],
    k: f64,
    center: &[f64],
    radii: &[f64],
    samples_per_radius: usize,
) -> Result<RegularityReport> {
    if !(k > 1.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("regularity exponent must exceed 1, got {k}")));
    }
    model.check_param(center)?;
    if f.len() != model.space.len() {
        return Err(Error::Dimension("function length differs from the sample space".into()));
    }
    let d = model.param_dim();
    let mut evaluated: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    let mut own: Vec<(f64, Vec<f64>, usize)> = Vec::new();
    for &r in radii {
        let params: Vec<Vec<f64>> = (1..=samples_per_radius)
            .map(|i| (0..d).map(|j| center[j] + r * (2.0 * halton(i, PRIMES[j % PRIMES.len()]) - 1.0)).collect())
            .filter(|xi: &Vec<f64>| model.domain.contains(xi))
            .collect();
        let norms: Vec<f64> = params
            .par_iter()
            .map(|xi| {
                density_at(model, xi)
                    .and_then(|mu| measure::lk_norm(f, &mu, k))
                    .ok()
                    .filter(|n| n.is_finite())
                    .unwrap_or(f64::INFINITY)
            })
            .collect();
        let mut best = (0.0, center.to_vec());
        for (xi, n) in params.iter().zip(&norms) {
            if *n > best.0 {
                best = (*n, xi.clone());
            }
            evaluated.push((dist_inf(xi, center), xi.clone(), *n));
        }
        own.push((best.0, best.1, params.len()));
    }
    let entries = radii
        .iter()
        .zip(own)
        .map(|(&radius, (sup_norm, argmax, count))| RegularityEntry {
            radius,
            sup_norm,
            argmax,
            cumulative_sup: evaluated
                .iter()
                .filter(|(dist, _, _)| *dist <= radius * (1.0 + 1e-12))
                .map(|(_, _, n)| *n)
                .fold(0.0, f64::max),
            evaluated: count,
        })
        .collect();
    Ok(RegularityReport { k, center: center.to_vec(), entries })
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `i` in `base`.
fn halton(mut i: usize, base: u64) -> f64 {
    let b = base as f64;
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= b;
        r += f * (i as u64 % base) as f64;
        i /= base as usize;
    }
    r
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `E_{p(ξ(t))}(f)` at each requested curve parameter.
pub fn expectation_curve(model: &ParamModel, f: &[f64], curve: &Curve, ts: &[f64]) -> Result<Vec<f64>> {
    ts.par_iter()
        .map(|&t| {
            let mu = density_at(model, &curve.point(t))?;
            measure::expectation(f, &mu)
        })
        .collect()
}
