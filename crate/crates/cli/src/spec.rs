//! Job specs: what to compute, on which model, at which parameters.

use serde::{Deserialize, Serialize};

use infogeo_core::zoo::ZOO_NAMES;

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Fisher,
    Scan,
    Crbound,
    Verify,
    Simplex,
    Integrability,
    Regularity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fisher => "fisher",
            Command::Scan => "scan",
            Command::Crbound => "crbound",
            Command::Verify => "verify",
            Command::Simplex => "simplex",
            Command::Integrability => "integrability",
            Command::Regularity => "regularity",
        }
    }

    fn uses_estimators(self) -> bool {
        matches!(self, Command::Crbound | Command::Verify)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub version: u32,
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<PointsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimators: Option<Vec<EstimatorSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrability: Option<IntegrabilitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity: Option<RegularitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplex: Option<SimplexSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copies: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<ModelSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableSpec>,
}

/// Composite Simpson grid on `[lo, hi]` with an odd number of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

/// Densities tabulated on a rectangular parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub axes: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    /// One row of outcome densities per grid node, last axis fastest.
    pub rows: Vec<Vec<f64>>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub statistical: bool,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PointsSpec {
    List(Vec<Vec<f64>>),
    Grid(ParamGrid),
}

/// Tensor grid of parameters, last coordinate fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamGrid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl ParamGrid {
    pub fn points(&self) -> Vec<Vec<f64>> {
        let axis = |i: usize| -> Vec<f64> {
            let n = self.counts[i];
            if n == 1 {
                return vec![self.lower[i]];
            }
            (0..n)
                .map(|j| {
                    if j + 1 == n {
                        self.upper[i]
                    } else {
                        self.lower[i] + (self.upper[i] - self.lower[i]) * j as f64 / (n - 1) as f64
                    }
                })
                .collect()
        };
        let mut out = vec![Vec::new()];
        for i in 0..self.counts.len() {
            let values = axis(i);
            out = out
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EstimatorSpec {
    /// Name of an entry of the model's estimator suite.
    Suite(String),
    Inline(InlineEstimator),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineEstimator {
    pub name: String,
    /// Estimator value for each outcome of the sample space.
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<FeatureSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum FeatureSpec {
    Identity,
    SimplexMasses,
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_rel: Option<f64>,
    /// Absolute tolerance on the smallest gap eigenvalue; automatic if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrabilitySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSpec>,
    /// Curve parameters to sample; defaults to evenly spaced ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

/// Straight line `origin + t · direction` for `t ∈ [t0, t1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularitySpec {
    /// A model observable by name, or the values of `f` on each outcome.
    pub function: FunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    pub radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Observable(String),
    Values(Vec<f64>),
}

/// Closed-form simplex geometry; the points are mass vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constrained: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
    /// Partial derivatives of a function of the masses, for its gradient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partials: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// A rejected field and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl FieldError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid job spec: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
pub struct SpecErrors(pub Vec<FieldError>);

/// Parses and validates a job spec.
pub fn parse(text: &str) -> Result<JobSpec, SpecErrors> {
    let spec = deserialize(text)?;
    check(spec)
}

/// Shape-only parse: types, required fields, no unknown fields.
pub fn deserialize(text: &str) -> Result<JobSpec, SpecErrors> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        SpecErrors(vec![FieldError::new(path, e.inner().to_string())])
    })
}

/// Runs [`validate`] and turns a non-empty error list into `Err`.
pub fn check(spec: JobSpec) -> Result<JobSpec, SpecErrors> {
    let errors = validate(&spec);
    if errors.is_empty() {
        Ok(spec)
    } else {
        Err(SpecErrors(errors))
    }
}

/// Semantic checks beyond the JSON shape. Returns every problem found.
pub fn validate(spec: &JobSpec) -> Vec<FieldError> {
    let mut errs = Vec::new();
    if spec.version != SPEC_VERSION {
        errs.push(FieldError::new("version", format!("unsupported version {} (expected {SPEC_VERSION})", spec.version)));
    }
    let cmd = spec.command;

    let dim = match (&spec.model, cmd) {
        (Some(_), Command::Simplex) => {
            errs.push(FieldError::new("model", "simplex works on mass vectors and takes no model"));
            None
        }
        (Some(m), _) => model_dim(m, "model", &mut errs),
        (None, Command::Simplex) => None,
        (None, _) => {
            errs.push(FieldError::new("model", format!("required for {}", cmd.name())));
            None
        }
    };

    match &spec.points {
        Some(PointsSpec::List(list)) => {
            if list.is_empty() {
                errs.push(FieldError::new("points.list", "must not be empty"));
            }
            for (i, p) in list.iter().enumerate() {
                if p.iter().any(|v| !v.is_finite()) {
                    errs.push(FieldError::new(format!("points.list[{i}]"), "coordinates must be finite"));
                }
                if let Some(d) = dim {
                    if p.len() != d {
                        errs.push(FieldError::new(format!("points.list[{i}]"), format!("has {} coordinates, model has {d}", p.len())));
                    }
                }
            }
        }
        Some(PointsSpec::Grid(g)) => {
            let n = g.counts.len();
            if g.lower.len() != n || g.upper.len() != n {
                errs.push(FieldError::new("points.grid", "lower, upper and counts must have equal lengths"));
            } else if let Some(d) = dim.filter(|d| *d != n) {
                errs.push(FieldError::new("points.grid", format!("grid has {n} axes, model has {d} parameters")));
            }
            if g.counts.contains(&0) {
                errs.push(FieldError::new("points.grid.counts", "counts must be positive"));
            }
            let total = g.counts.iter().try_fold(1usize, |a, c| a.checked_mul(*c));
            if total.is_none_or(|t| t > 1_000_000) {
                errs.push(FieldError::new("points.grid.counts", "grid exceeds 1000000 points"));
            }
            if g.lower.iter().chain(&g.upper).any(|v| !v.is_finite()) || g.lower.iter().zip(&g.upper).any(|(a, b)| a > b) {
                errs.push(FieldError::new("points.grid", "bounds must be finite with lower <= upper"));
            }
        }
        None if cmd == Command::Simplex => errs.push(FieldError::new("points", "simplex needs mass vectors")),
        None => {}
    }

    if let Some(ests) = &spec.estimators {
        if !cmd.uses_estimators() {
            errs.push(FieldError::new("estimators", format!("not used by {}", cmd.name())));
        }
        if ests.is_empty() {
            errs.push(FieldError::new("estimators", "must not be empty"));
        }
        for (i, e) in ests.iter().enumerate() {
            if let EstimatorSpec::Inline(e) = e {
                let path = format!("estimators[{i}]");
                if e.rows.is_empty() || e.rows.iter().any(|r| r.len() != e.rows[0].len() || r.is_empty()) {
                    errs.push(FieldError::new(format!("{path}.rows"), "rows must be non-empty and of equal length"));
                }
                if let Some(FeatureSpec::Affine { matrix, offset }) = &e.feature {
                    if matrix.len() != offset.len() || matrix.is_empty() {
                        errs.push(FieldError::new(format!("{path}.feature.affine"), "matrix rows must match offset length"));
                    }
                }
            }
        }
    }

    if let Some(t) = &spec.thresholds {
        if let Some(r) = t.rank_rel {
            if !(r > 0.0 && r < 1.0) {
                errs.push(FieldError::new("thresholds.rank_rel", "must lie in (0, 1)"));
            }
        }
        if let Some(p) = t.psd_tol {
            if !(p >= 0.0 && p.is_finite()) {
                errs.push(FieldError::new("thresholds.psd_tol", "must be finite and non-negative"));
            }
        }
    }

    if let Some(mc) = &spec.monte_carlo {
        if !cmd.uses_estimators() {
            errs.push(FieldError::new("monte_carlo", format!("not used by {}", cmd.name())));
        }
        if mc.samples < 2 || mc.samples > 100_000_000 {
            errs.push(FieldError::new("monte_carlo.samples", "must lie in [2, 100000000]"));
        }
        if spec.seed.is_none() {
            errs.push(FieldError::new("seed", "seed required for Monte Carlo"));
        }
    }

    section_for(spec.integrability.is_some(), "integrability", Command::Integrability, cmd, &mut errs);
    section_for(spec.regularity.is_some(), "regularity", Command::Regularity, cmd, &mut errs);
    section_for(spec.simplex.is_some(), "simplex", Command::Simplex, cmd, &mut errs);

    if let Some(s) = &spec.integrability {
        if let Some(ks) = &s.k {
            if ks.is_empty() || ks.iter().any(|k| !(*k > 1.0 && k.is_finite())) {
                errs.push(FieldError::new("integrability.k", "exponents must be finite and exceed 1"));
            }
        }
        if let Some(c) = &s.curve {
            if let Some(d) = dim {
                if c.origin.len() != d || c.direction.len() != d {
                    errs.push(FieldError::new("integrability.curve", format!("origin and direction need {d} coordinates")));
                }
            }
            if c.t0.is_nan() || c.t1.is_nan() || c.t0 >= c.t1 {
                errs.push(FieldError::new("integrability.curve", "t0 must be less than t1"));
            }
        }
        if s.t.is_some() && s.samples.is_some() {
            errs.push(FieldError::new("integrability", "give either t or samples, not both"));
        }
        if s.samples.is_some_and(|n| !(3..=100_000).contains(&n)) {
            errs.push(FieldError::new("integrability.samples", "must lie in [3, 100000]"));
        }
    }
    if let Some(r) = &spec.regularity {
        if r.k.is_some_and(|k| !(k > 1.0 && k.is_finite())) {
            errs.push(FieldError::new("regularity.k", "must be finite and exceed 1"));
        }
        if r.radii.is_empty() || r.radii.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            errs.push(FieldError::new("regularity.radii", "radii must be positive"));
        }
        if r.samples.is_some_and(|n| n == 0 || n > 100_000) {
            errs.push(FieldError::new("regularity.samples", "must lie in [1, 100000]"));
        }
    }
    if cmd == Command::Regularity && spec.regularity.is_none() {
        errs.push(FieldError::new("regularity", "required for regularity"));
    }
    errs
}

fn section_for(present: bool, name: &str, owner: Command, cmd: Command, errs: &mut Vec<FieldError>) {
    if present && cmd != owner {
        errs.push(FieldError::new(name, format!("not used by {}", cmd.name())));
    }
}

/// Parameter dimension implied by a model spec, recording problems on the way.
fn model_dim(m: &ModelSpec, path: &str, errs: &mut Vec<FieldError>) -> Option<usize> {
    let allowed: &[&str] = match m.name.as_str() {
        "bernoulli" => &[],
        "multinomial" | "measure-cone" => &["n"],
        "normal-mixture" | "location-gaussian" => &["grid"],
        "pathology" => &["alpha", "beta"],
        "product" => &["base", "copies"],
        "tabulated" => &["table"],
        other => {
            let known = ZOO_NAMES.iter().chain(&["product", "tabulated"]).copied().collect::<Vec<_>>().join(", ");
            errs.push(FieldError::new(format!("{path}.name"), format!("unknown model {other:?} (expected one of {known})")));
            return None;
        }
    };
    let given = [
        ("n", m.n.is_some()),
        ("grid", m.grid.is_some()),
        ("alpha", m.alpha.is_some()),
        ("beta", m.beta.is_some()),
        ("copies", m.copies.is_some()),
        ("base", m.base.is_some()),
        ("table", m.table.is_some()),
    ];
    for (field, present) in given {
        if present && !allowed.contains(&field) {
            errs.push(FieldError::new(format!("{path}.{field}"), format!("not a parameter of {}", m.name)));
        }
    }
    if let Some(g) = &m.grid {
        if !(g.lo.is_finite() && g.hi.is_finite() && g.lo < g.hi) {
            errs.push(FieldError::new(format!("{path}.grid"), "need finite lo < hi"));
        }
        if g.points < 3 || g.points % 2 == 0 || g.points > 1_000_001 {
            errs.push(FieldError::new(format!("{path}.grid.points"), "must be odd and in [3, 1000001]"));
        }
    }
    match m.name.as_str() {
        "bernoulli" => Some(1),
        "multinomial" | "measure-cone" => {
            let n = m.n.unwrap_or(3);
            if !(2..=10_000).contains(&n) {
                errs.push(FieldError::new(format!("{path}.n"), "must lie in [2, 10000]"));
                return None;
            }
            Some(if m.name == "multinomial" { n - 1 } else { n })
        }
        "normal-mixture" => Some(2),
        "location-gaussian" => Some(1),
        "pathology" => {
            if m.alpha.is_some_and(|a| !(a > 1.0 && a.is_finite())) {
                errs.push(FieldError::new(format!("{path}.alpha"), "must be finite and exceed 1"));
            }
            if m.beta.is_some_and(|b| !(b > 0.0 && b.is_finite())) {
                errs.push(FieldError::new(format!("{path}.beta"), "must be finite and positive"));
            }
            Some(1)
        }
        "product" => {
            if m.copies.is_none_or(|c| c == 0) {
                errs.push(FieldError::new(format!("{path}.copies"), "required and positive for product"));
            }
            match &m.base {
                Some(b) if matches!(b.name.as_str(), "normal-mixture" | "location-gaussian" | "pathology") => {
                    errs.push(FieldError::new(format!("{path}.base.name"), "product needs a finite base model"));
                    None
                }
                Some(b) => model_dim(b, &format!("{path}.base"), errs),
                None => {
                    errs.push(FieldError::new(format!("{path}.base"), "required for product"));
                    None
                }
            }
        }
        "tabulated" => match &m.table {
            Some(t) => Some(t.axes.len()),
            None => {
                errs.push(FieldError::new(format!("{path}.table"), "required for tabulated"));
                None
            }
        },
        _ => None,
    }
}
