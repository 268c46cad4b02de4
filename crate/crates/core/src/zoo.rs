//! Concrete models with estimator suites and machine-checkable facts.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::crbound::{self, PsdTolerance};
use crate::error::{Error, Result};
use crate::estimation::{Estimator, FeatureMap};
use crate::fisher::{self, DEFAULT_REL_THRESHOLD};
use crate::measure::{Outcome, SampleSpace, SpaceKind};
use crate::model::{Curve, DensityFamily, Domain, ParamModel};

/// Scale factors of the shrunk/inflated estimators in every suite.
pub const SCALES: [f64; 3] = [0.5, 0.8, 1.2];
/// Upper bound on the size of a product sample space.
pub const MAX_PRODUCT_OUTCOMES: u128 = 1_000_000;

#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub name: String,
    pub estimator: Estimator,
    pub feature: FeatureMap,
}

/// A per-point function attached to a model (e.g. an unbounded observable).
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KnownFact {
    Rank { xi: Vec<f64>, rank: usize },
    Fisher { xi: Vec<f64>, matrix: DMatrix<f64>, tol: f64 },
    /// The Fisher kernel is one-dimensional and spanned by `direction`.
    KernelDirection { xi: Vec<f64>, direction: Vec<f64> },
    /// The named suite estimator attains the bound: `V = bound` within `tol`.
    Efficient { xi: Vec<f64>, estimator: String, tol: f64 },
}

#[derive(Debug, Clone)]
pub struct ZooEntry {
    pub name: String,
    pub model: ParamModel,
    pub default_points: Vec<Vec<f64>>,
    pub default_curves: Vec<Curve>,
    pub estimator_suite: Vec<SuiteEntry>,
    pub known_facts: Vec<KnownFact>,
    pub observables: Vec<Observable>,
}

impl ZooEntry {
    pub fn suite_entry(&self, name: &str) -> Option<&SuiteEntry> {
        self.estimator_suite.iter().find(|s| s.name == name)
    }

    pub fn observable(&self, name: &str) -> Option<&Observable> {
        self.observables.iter().find(|o| o.name == name)
    }
}

/// Outcome of checking one known fact.
#[derive(Debug, Clone, PartialEq)]
pub struct FactCheck {
    pub fact: KnownFact,
    pub ok: bool,
    pub detail: String,
}

pub fn check_known_fact(entry: &ZooEntry, fact: &KnownFact) -> Result<FactCheck> {
    let model = &entry.model;
    let (ok, detail) = match fact {
        KnownFact::Rank { xi, rank } => {
            let f = fisher::fisher_matrix(model, xi)?;
            let e = fisher::essential_decomposition(&f, DEFAULT_REL_THRESHOLD);
            (e.rank == *rank, format!("rank {} (expected {rank})", e.rank))
        }
        KnownFact::Fisher { xi, matrix, tol } => {
            let f = fisher::fisher_matrix(model, xi)?;
            let err = (&f.g - matrix).abs().max();
            (err <= *tol, format!("max deviation {err:e} (tol {tol:e})"))
        }
        KnownFact::KernelDirection { xi, direction } => {
            let f = fisher::fisher_matrix(model, xi)?;
            let e = fisher::essential_decomposition(&f, DEFAULT_REL_THRESHOLD);
            let k = e.kernel_basis();
            if k.ncols() != 1 {
                (false, format!("kernel has dimension {}", k.ncols()))
            } else {
                let norm: f64 = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
                let overlap = k.column(0).iter().zip(direction).map(|(a, b)| a * b).sum::<f64>().abs() / norm;
                (overlap >= 1.0 - 1e-6, format!("overlap {overlap}"))
            }
        }
        KnownFact::Efficient { xi, estimator, tol } => {
            let s = entry
                .suite_entry(estimator)
                .ok_or_else(|| Error::InvalidArgument(format!("no suite estimator named {estimator}")))?;
            let r = crbound::cr_gap(model, &s.estimator, &s.feature, xi, PsdTolerance::Auto, DEFAULT_REL_THRESHOLD)?;
            let err = r.gap.abs().max();
            (err <= *tol, format!("max |gap| {err:e} (tol {tol:e})"))
        }
    };
    Ok(FactCheck { fact: fact.clone(), ok, detail })
}

fn standard_suite(empirical: Estimator, constant: &[f64], feature: FeatureMap, points: usize) -> Result<Vec<SuiteEntry>> {
    let mut suite = vec![SuiteEntry { name: "empirical".into(), estimator: empirical.clone(), feature: feature.clone() }];
    for c in SCALES {
        let name = format!("scaled-{c}");
        suite.push(SuiteEntry { estimator: empirical.scaled(name.clone(), c), name, feature: feature.clone() });
    }
    suite.push(SuiteEntry {
        name: "constant".into(),
        estimator: Estimator::constant("constant", points, constant)?,
        feature,
    });
    Ok(suite)
}

struct Bernoulli;

impl DensityFamily for Bernoulli {
    fn param_dim(&self) -> usize {
        1
    }

    fn density(&self, at: Outcome, xi: &[f64]) -> f64 {
        if at.index == 1 {
            xi[0]
        } else {
            1.0 - xi[0]
        }
    }

    fn has_analytic_score(&self) -> bool {
        true
    }

    fn score(&self, at: Outcome, xi: &[f64], out: &mut [f64]) {
        out[0] = if at.index == 1 { 1.0 / xi[0] } else { -1.0 / (1.0 - xi[0]) };
    }
}

pub fn make_bernoulli() -> Result<ZooEntry> {
    let space = Arc::new(SampleSpace::finite(["0", "1"])?);
    let model = ParamModel::new("bernoulli", space.clone(), Domain::boxed(vec![0.0], vec![1.0]), Arc::new(Bernoulli), true)?;
    let empirical = Estimator::from_fn("empirical", &space, 1, |o| vec![o.index as f64])?;
    let suite = standard_suite(empirical, &[0.5], FeatureMap::identity(1), space.len())?;
    let fisher_at = |x: f64| KnownFact::Fisher { xi: vec![x], matrix: DMatrix::from_element(1, 1, 1.0 / (x * (1.0 - x))), tol: 1e-10 };
    Ok(ZooEntry {
        name: "bernoulli".into(),
        model,
        default_points: vec![vec![0.1], vec![0.3], vec![0.5], vec![0.7], vec![0.9]],
        default_curves: vec![Curve::segment(vec![0.05], vec![0.95])],
        estimator_suite: suite,
        known_facts: vec![
            fisher_at(0.5),
            fisher_at(0.3),
            KnownFact::Rank { xi: vec![0.5], rank: 1 },
            KnownFact::Efficient { xi: vec![0.3], estimator: "empirical".into(), tol: 1e-10 },
            KnownFact::Efficient { xi: vec![0.5], estimator: "scaled-0.8".into(), tol: 1e-10 },
        ],
        observables: vec![Observable { name: "indicator-1".into(), values: vec![0.0, 1.0] }],
    })
}

/// Categorical model on `n` outcomes in the chart `(μ_1, …, μ_{n−1})`.
struct SimplexChart {
    n: usize,
}

impl SimplexChart {
    fn last(xi: &[f64]) -> f64 {
        (1.0 - xi.iter().sum::<f64>()).max(0.0)
    }
}

impl DensityFamily for SimplexChart {
    fn param_dim(&self) -> usize {
        self.n - 1
    }

    fn density(&self, at: Outcome, xi: &[f64]) -> f64 {
        if at.index + 1 < self.n {
            xi[at.index]
        } else {
            Self::last(xi)
        }
    }

    fn has_analytic_score(&self) -> bool {
        true
    }

    fn score(&self, at: Outcome, xi: &[f64], out: &mut [f64]) {
        if at.index + 1 < self.n {
            out.fill(0.0);
            out[at.index] = 1.0 / xi[at.index];
        } else {
            out.fill(-1.0 / Self::last(xi));
        }
    }
}

/// Positive measures on `n` outcomes, parametrized by their masses.
struct MeasureCone {
    n: usize,
}

impl DensityFamily for MeasureCone {
    fn param_dim(&self) -> usize {
        self.n
    }

    fn density(&self, at: Outcome, xi: &[f64]) -> f64 {
        xi[at.index]
    }

    fn has_analytic_score(&self) -> bool {
        true
    }

    fn score(&self, at: Outcome, xi: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[at.index] = 1.0 / xi[at.index];
    }
}

/// Fisher matrix of the simplex chart: `diag(1/μ_i) + (1/μ_n) 1 1ᵀ`.
pub fn simplex_chart_fisher(xi: &[f64]) -> DMatrix<f64> {
    let last = 1.0 - xi.iter().sum::<f64>();
    let d = xi.len();
    DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 / xi[i] + 1.0 / last } else { 1.0 / last })
}

/// Single draw from `n` categories on the probability simplex (chart of dimension `n − 1`).
pub fn make_multinomial(n: usize) -> Result<ZooEntry> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("multinomial needs n >= 2, got {n}")));
    }
    let d = n - 1;
    let space = Arc::new(SampleSpace::finite_n(n)?);
    let domain = Domain::boxed(vec![0.0; d], vec![1.0; d]).with_constraint(vec![1.0; d], 1.0);
    let model = ParamModel::new(format!("multinomial-{n}"), space.clone(), domain, Arc::new(SimplexChart { n }), true)?;
    let empirical = Estimator::from_fn("empirical", &space, d, |o| {
        let mut v = vec![0.0; d];
        if o.index < d {
            v[o.index] = 1.0;
        }
        v
    })?;
    let uniform = vec![1.0 / n as f64; d];
    let mut suite = standard_suite(empirical.clone(), &uniform, FeatureMap::identity(d), n)?;
    suite.push(SuiteEntry { name: "empirical-masses".into(), estimator: empirical, feature: FeatureMap::simplex_masses(n) });

    let skewed: Vec<f64> = (1..n).map(|i| i as f64 / (n * (n + 1) / 2) as f64).collect();
    let mut facts = Vec::new();
    for xi in [uniform.clone(), skewed.clone()] {
        facts.push(KnownFact::Fisher { matrix: simplex_chart_fisher(&xi), xi: xi.clone(), tol: 1e-10 });
        facts.push(KnownFact::Rank { xi: xi.clone(), rank: d });
        facts.push(KnownFact::Efficient { xi: xi.clone(), estimator: "empirical".into(), tol: 1e-10 });
        facts.push(KnownFact::Efficient { xi, estimator: "empirical-masses".into(), tol: 1e-10 });
    }
    Ok(ZooEntry {
        name: format!("multinomial-{n}"),
        model,
        default_points: vec![uniform.clone(), skewed.clone()],
        default_curves: vec![Curve::segment(uniform, skewed)],
        estimator_suite: suite,
        known_facts: facts,
        observables: Vec::new(),
    })
}

/// Positive (not necessarily normalized) measures on `n` points.
pub fn make_measure_cone(n: usize) -> Result<ZooEntry> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("measure cone needs n >= 2, got {n}")));
    }
    let space = Arc::new(SampleSpace::finite_n(n)?);
    let domain = Domain::boxed(vec![0.0; n], vec![f64::INFINITY; n]);
    let model = ParamModel::new(format!("measure-cone-{n}"), space, domain, Arc::new(MeasureCone { n }), false)?;
    let ones = vec![1.0; n];
    let ramp: Vec<f64> = (1..=n).map(|i| 0.5 * i as f64).collect();
    let diag = |xi: &[f64]| DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / xi[i] } else { 0.0 });
    Ok(ZooEntry {
        name: format!("measure-cone-{n}"),
        model,
        default_points: vec![ones.clone(), ramp.clone()],
        default_curves: vec![Curve::segment(ones.clone(), ramp.clone())],
        estimator_suite: Vec::new(),
        known_facts: vec![
            KnownFact::Fisher { matrix: diag(&ones), xi: ones.clone(), tol: 1e-10 },
            KnownFact::Fisher { matrix: diag(&ramp), xi: ramp, tol: 1e-10 },
            KnownFact::Rank { xi: ones, rank: n },
        ],
        observables: Vec::new(),
    })
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn std_normal(x: f64) -> f64 {
    (-0.5 * x * x).exp() * INV_SQRT_2PI
}

/// `((1 − a) e^{−x²/2} + a e^{−(x−b)²/2}) / √(2π)`.
struct NormalMixture;

impl DensityFamily for NormalMixture {
    fn param_dim(&self) -> usize {
        2
    }

    fn density(&self, at: Outcome, xi: &[f64]) -> f64 {
        let (a, b) = (xi[0], xi[1]);
        (1.0 - a) * std_normal(at.x) + a * std_normal(at.x - b)
    }

    fn has_analytic_score(&self) -> bool {
        true
    }

    fn score(&self, at: Outcome, xi: &[f64], out: &mut [f64]) {
        let (a, b) = (xi[0], xi[1]);
        let (n0, nb) = (std_normal(at.x), std_normal(at.x - b));
        let p = (1.0 - a) * n0 + a * nb;
        out[0] = (nb - n0) / p;
        out[1] = a * (at.x - b) * nb / p;
    }
}

pub const NORMAL_MIXTURE_B_RANGE: f64 = 6.0;

/// Default quadrature grid for the normal mixture.
pub fn normal_mixture_grid() -> Result<SampleSpace> {
    SampleSpace::simpson(-12.0, 12.0, 4001)
}

pub fn make_normal_mixture(grid: SampleSpace) -> Result<ZooEntry> {
    if grid.kind() != SpaceKind::Grid1D {
        return Err(Error::InvalidArgument("normal mixture needs a 1-D grid".into()));
    }
    let space = Arc::new(grid);
    let bmax = NORMAL_MIXTURE_B_RANGE;
    let domain = Domain::boxed(vec![0.0, -bmax], vec![1.0, bmax]);
    let model = ParamModel::new("normal-mixture", space.clone(), domain, Arc::new(NormalMixture), true)?;
    let empirical = Estimator::from_fn("empirical", &space, 2, |o| vec![1.0 / (1.0 + (-o.x).exp()), o.x.clamp(-bmax, bmax)])?;
    let suite = standard_suite(empirical, &[0.5, 1.0], FeatureMap::identity(2), space.len())?;

    let mut facts = vec![KnownFact::Rank { xi: vec![0.0, 0.0], rank: 0 }];
    for a in [0.25, 0.5, 0.75] {
        facts.push(KnownFact::Rank { xi: vec![a, 0.0], rank: 1 });
        facts.push(KnownFact::KernelDirection { xi: vec![a, 0.0], direction: vec![1.0, 0.0] });
    }
    for b in [0.5, 1.0, 2.0] {
        facts.push(KnownFact::Rank { xi: vec![0.0, b], rank: 1 });
        facts.push(KnownFact::KernelDirection { xi: vec![0.0, b], direction: vec![0.0, 1.0] });
    }
    for xi in normal_mixture_regular_points() {
        facts.push(KnownFact::Rank { xi, rank: 2 });
    }
    Ok(ZooEntry {
        name: "normal-mixture".into(),
        model,
        default_points: vec![vec![0.5, 1.0], vec![0.25, 2.0], vec![0.75, -1.0], vec![0.5, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]],
        default_curves: vec![
            Curve::segment(vec![0.5, -1.0], vec![0.5, 1.0]),
            Curve::segment(vec![0.0, 1.0], vec![1.0, 1.0]),
        ],
        estimator_suite: suite,
        known_facts: facts,
        observables: Vec::new(),
    })
}

/// Interior points where both mixture directions are visible.
pub fn normal_mixture_regular_points() -> Vec<Vec<f64>> {
    vec![vec![0.5, 1.0], vec![0.25, 2.0], vec![0.75, -1.0], vec![0.5, 3.0], vec![0.9, 0.5]]
}

/// Unit-variance Gaussian with unknown mean.
struct LocationGaussian;

impl DensityFamily for LocationGaussian {
    fn param_dim(&self) -> usize {
        1
    }

    fn density(&self, at: Outcome, xi: &[f64]) -> f64 {
        std_normal(at.x - xi[0])
    }

    fn has_analytic_score(&self) -> bool {
        true
    }

    fn score(&self, at: Outcome, xi: &[f64], out: &mut [f64]) {
        out[0] = at.x - xi[0];
    }
}

pub fn make_location_gaussian(grid: SampleSpace) -> Result<ZooEntry> {
    if grid.kind() != SpaceKind::Grid1D {
        return Err(Error::InvalidArgument("location Gaussian needs a 1-D grid".into()));
    }
    let space = Arc::new(grid);
    let model = ParamModel::new("location-gaussian", space.clone(), Domain::boxed(vec![-4.0], vec![4.0]), Arc::new(LocationGaussian), true)?;
    let empirical = Estimator::from_fn("empirical", &space, 1, |o| vec![o.x])?;
    let suite = standard_suite(empirical, &[0.0], FeatureMap::identity(1), space.len())?;
    let one = DMatrix::from_element(1, 1, 1.0);
    Ok(ZooEntry {
        name: "location-gaussian".into(),
        model,
        default_points: vec![vec![-1.0], vec![0.0], vec![1.5]],
        default_curves: vec![Curve::segment(vec![-2.0], vec![2.0])],
        estimator_suite: suite,
        known_facts: vec![
            KnownFact::Fisher { xi: vec![0.0], matrix: one.clone(), tol: 1e-8 },
            KnownFact::Fisher { xi: vec![1.5], matrix: one, tol: 1e-8 },
            KnownFact::Efficient { xi: vec![0.0], estimator: "empirical".into(), tol: 1e-8 },
        ],
        observables: Vec::new(),
    })
}

/// Smooth bump supported on `(0, 1)`: `c · exp(−1/(u(1−u)))` with unit mass.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    norm: f64,
}

impl Bump {
    pub fn new() -> Self {
        let n = 40_000;
        let h = 1.0 / n as f64;
        let mut s = 0.0;
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * Self::raw(i as f64 * h);
        }
        Self { norm: 1.0 / (s * h / 3.0) }
    }

    fn raw(u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            (-1.0 / (u * (1.0 - u))).exp()
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.norm * Self::raw(u)
    }

    /// `h′(u) / h(u)` on `(0, 1)`.
    pub fn log_derivative(u: f64) -> f64 {
        let s = u * (1.0 - u);
        (1.0 - 2.0 * u) / (s * s)
    }
}

impl Default for Bump {
    fn default() -> Self {
        Self::new()
    }
}

/// `p_t = (1 − |t|^{α+1}) on (−1, 0]` plus `|t|^α h(x/|t|)` on `(0, 1)`.
///
/// The boundary node `x = 0` takes the left-hand value; it is a null set.
#[derive(Debug, Clone, Copy)]
pub struct Pathology {
    pub alpha: f64,
    pub bump: Bump,
}

impl DensityFamily for Pathology {
    fn param_dim(&self) -> usize {
        1
    }

    fn density(&self, at: Outcome, xi: &[f64]) -> f64 {
        let t = xi[0].abs();
        if at.x <= 0.0 {
            1.0 - t.powf(self.alpha + 1.0)
        } else if t == 0.0 {
            0.0
        } else {
            t.powf(self.alpha) * self.bump.value(at.x / t)
        }
    }

    fn has_analytic_score(&self) -> bool {
        true
    }

    fn score(&self, at: Outcome, xi: &[f64], out: &mut [f64]) {
        let t = xi[0];
        let (abs, sign) = (t.abs(), t.signum());
        out[0] = if t == 0.0 {
            0.0
        } else if at.x <= 0.0 {
            -(self.alpha + 1.0) * abs.powf(self.alpha) * sign / (1.0 - abs.powf(self.alpha + 1.0))
        } else {
            let u = at.x / abs;
            sign / abs * (self.alpha - u * Bump::log_derivative(u))
        };
    }
}

/// Grid on `[−1, 1]`: one panel for the negative half and geometrically
/// growing panels from `1e−9` to `1` so that bumps of every width are resolved.
pub fn pathology_grid() -> Result<SampleSpace> {
    let mut breaks = vec![-1.0, 0.0];
    let mut x = 1e-9;
    while x < 1.0 {
        breaks.push(x);
        x *= 1.15;
    }
    breaks.push(1.0);
    SampleSpace::simpson_panels(&breaks, 48)
}

pub const PATHOLOGY_T_RANGE: f64 = 0.25;

pub fn make_pathology(alpha: f64, beta: f64) -> Result<ZooEntry> {
    if alpha.is_nan() || alpha <= 1.0 || beta.is_nan() || beta <= 0.0 {
        return Err(Error::InvalidArgument(format!("pathology needs alpha > 1 and beta > 0, got {alpha}, {beta}")));
    }
    let space = Arc::new(pathology_grid()?);
    let family = Pathology { alpha, bump: Bump::new() };
    let domain = Domain::boxed(vec![-PATHOLOGY_T_RANGE], vec![PATHOLOGY_T_RANGE]);
    let model = ParamModel::new(format!("pathology(alpha={alpha}, beta={beta})"), space.clone(), domain, Arc::new(family), true)?;
    let first_positive = space.points().iter().copied().find(|x| *x > 0.0).unwrap_or(1.0);
    let phi = space.points().iter().map(|&x| if x > 0.0 { x.max(first_positive).powf(-beta) } else { 0.0 }).collect();
    Ok(ZooEntry {
        name: "pathology".into(),
        model,
        default_points: vec![vec![-0.1], vec![0.0], vec![0.1]],
        default_curves: vec![Curve::line(vec![0.0], vec![1.0], -0.2, 0.2)],
        estimator_suite: Vec::new(),
        known_facts: vec![KnownFact::Rank { xi: vec![0.0], rank: 0 }],
        observables: vec![Observable { name: "x^-beta".into(), values: phi }],
    })
}

/// Independent copies of a finite base model.
struct Product {
    base: Arc<dyn DensityFamily>,
    base_space: Arc<SampleSpace>,
    copies: usize,
}

impl Product {
    fn digits(&self, index: usize) -> impl Iterator<Item = Outcome> + '_ {
        let n = self.base_space.len();
        let mut rest = index;
        let mut digits = vec![0usize; self.copies];
        for slot in digits.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        digits.into_iter().map(move |j| self.base_space.outcome(j))
    }
}

impl DensityFamily for Product {
    fn param_dim(&self) -> usize {
        self.base.param_dim()
    }

    fn density(&self, at: Outcome, xi: &[f64]) -> f64 {
        self.digits(at.index).map(|o| self.base.density(o, xi)).product()
    }

    fn has_analytic_score(&self) -> bool {
        self.base.has_analytic_score()
    }

    fn score(&self, at: Outcome, xi: &[f64], out: &mut [f64]) {
        let mut s = vec![0.0; out.len()];
        out.fill(0.0);
        for o in self.digits(at.index) {
            self.base.score(o, xi, &mut s);
            out.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
        }
    }
}

/// `copies` i.i.d. observations of a finite model.
pub fn make_product(entry: &ZooEntry, copies: usize) -> Result<ZooEntry> {
    let base_space = entry.model.space().clone();
    if base_space.kind() != SpaceKind::Finite {
        return Err(Error::InvalidArgument("product models need a finite base space".into()));
    }
    if copies == 0 {
        return Err(Error::InvalidArgument("product needs at least one copy".into()));
    }
    let n = base_space.len() as u128;
    let outcomes = (0..copies).try_fold(1u128, |acc, _| acc.checked_mul(n)).unwrap_or(u128::MAX);
    if outcomes > MAX_PRODUCT_OUTCOMES {
        return Err(Error::ProductTooLarge { outcomes, limit: MAX_PRODUCT_OUTCOMES });
    }
    let family = Product { base: entry.model.family().clone(), base_space: base_space.clone(), copies };
    let labels: Vec<String> = (0..outcomes as usize)
        .map(|i| family.digits(i).map(|o| base_space.labels()[o.index].clone()).collect::<Vec<_>>().join(","))
        .collect();
    let weights = (0..outcomes as usize)
        .map(|i| family.digits(i).map(|o| base_space.weights()[o.index]).product())
        .collect();
    let space = Arc::new(SampleSpace::finite_weighted(labels, weights)?);
    let name = format!("{}^{copies}", entry.name);

    let mut suite = Vec::with_capacity(entry.estimator_suite.len());
    for s in &entry.estimator_suite {
        let d = s.estimator.dim();
        let est = Estimator::from_fn(s.name.clone(), &space, d, |o| {
            let mut avg = vec![0.0; d];
            for b in family.digits(o.index) {
                avg.iter_mut().zip(s.estimator.value(b.index)).for_each(|(a, v)| *a += v / copies as f64);
            }
            avg
        })?;
        suite.push(SuiteEntry { name: s.name.clone(), estimator: est, feature: s.feature.clone() });
    }

    let mut facts = Vec::new();
    for xi in &entry.default_points {
        if let Ok(f) = fisher::fisher_matrix(&entry.model, xi) {
            facts.push(KnownFact::Fisher { xi: xi.clone(), matrix: f.g * copies as f64, tol: 1e-8 });
        }
    }
    let model = ParamModel::new(name.clone(), space, entry.model.domain().clone(), Arc::new(family), entry.model.is_statistical())?;
    Ok(ZooEntry {
        name,
        model,
        default_points: entry.default_points.clone(),
        default_curves: entry.default_curves.clone(),
        estimator_suite: suite,
        known_facts: facts,
        observables: Vec::new(),
    })
}

/// Names accepted by [`by_name`].
pub const ZOO_NAMES: [&str; 6] = ["bernoulli", "multinomial", "measure-cone", "normal-mixture", "location-gaussian", "pathology"];

/// Looks up a zoo model with its default construction parameters.
pub fn by_name(name: &str) -> Result<ZooEntry> {
    match name {
        "bernoulli" => make_bernoulli(),
        "multinomial" => make_multinomial(3),
        "measure-cone" => make_measure_cone(3),
        "normal-mixture" => make_normal_mixture(normal_mixture_grid()?),
        "location-gaussian" => make_location_gaussian(SampleSpace::simpson(-12.0, 12.0, 4001)?),
        "pathology" => make_pathology(2.0, 4.0),
        other => Err(Error::InvalidArgument(format!("unknown zoo model {other:?}"))),
    }
}
