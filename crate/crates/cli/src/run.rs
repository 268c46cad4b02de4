//! Dispatch of a validated job spec to the library.

use rayon::prelude::*;

use infogeo_core::crbound::PsdTolerance;
use infogeo_core::fisher::{self, DEFAULT_REL_THRESHOLD};
use infogeo_core::model::{self, Curve, ParamModel, DEFAULT_NEIGHBORHOOD_SAMPLES};
use infogeo_core::simplex::{self, SimplexPoint};
use infogeo_core::verify::{self, CellReport, VerifyOptions};
use infogeo_core::zoo::{self, KnownFact, ZooEntry};

use crate::models;
use crate::report::*;
use crate::spec::{Command, FunctionSpec, JobSpec, PointsSpec};
use crate::CliError;

const DEFAULT_CURVE_SAMPLES: usize = 9;

/// Runs a job. Numerical failures at individual points are recorded in the
/// report; only problems with the job as a whole are returned as errors.
pub fn run(spec: &JobSpec) -> Result<Report, CliError> {
    let rel = spec.thresholds.as_ref().and_then(|t| t.rank_rel).unwrap_or(DEFAULT_REL_THRESHOLD);
    let (results, facts) = match spec.command {
        Command::Simplex => (run_simplex(spec)?, Vec::new()),
        cmd => {
            let model_spec = spec.model.as_ref().ok_or_else(|| CliError::field("model", "required"))?;
            let entry = models::build_model(model_spec)?;
            let points = match &spec.points {
                Some(PointsSpec::List(l)) => l.clone(),
                Some(PointsSpec::Grid(g)) => g.points(),
                None => entry.default_points.clone(),
            };
            match cmd {
                Command::Fisher => (per_point(&points, |xi| fisher_at(&entry.model, xi, rel)), Vec::new()),
                Command::Scan => (per_point(&points, |xi| scan_at(&entry.model, xi, rel)), Vec::new()),
                Command::Crbound | Command::Verify => {
                    let cells = run_gaps(spec, &entry, &points, rel)?;
                    let facts = if cmd == Command::Verify { check_facts(&entry) } else { Vec::new() };
                    (cells, facts)
                }
                Command::Integrability => (run_integrability(spec, &entry)?, Vec::new()),
                Command::Regularity => (run_regularity(spec, &entry, &points)?, Vec::new()),
                Command::Simplex => unreachable!(),
            }
        }
    };
    let gaps: Vec<bool> = results
        .iter()
        .filter_map(|r| match &r.result {
            Some(ResultBody::Gap(g)) => Some(g.certified()),
            _ => None,
        })
        .collect();
    let gap_command = matches!(spec.command, Command::Crbound | Command::Verify);
    let summary = Summary {
        results: results.len(),
        errors: results.iter().filter(|r| r.error.is_some()).count(),
        certified: gap_command.then(|| gaps.iter().filter(|c| **c).count()),
        uncertified: gap_command.then(|| gaps.iter().filter(|c| !**c).count()),
    };
    Ok(Report {
        schema: REPORT_SCHEMA.into(),
        versions: Versions::default(),
        seed: spec.seed,
        spec: spec.clone(),
        results,
        facts,
        summary,
    })
}

/// 2 when a `verify` gap is not certified, 1 when any point failed, else 0.
pub fn exit_code(report: &Report) -> i32 {
    if report.spec.command == Command::Verify && report.summary.uncertified.unwrap_or(0) > 0 {
        2
    } else if report.summary.errors > 0 {
        1
    } else {
        0
    }
}

fn error_object(e: &infogeo_core::Error) -> ErrorObject {
    let kind = match e {
        infogeo_core::Error::OutOfDomain(_) => "out-of-domain",
        infogeo_core::Error::SingularPoint => "singular-point",
        infogeo_core::Error::ThresholdTooSmall { .. } => "threshold-too-small",
        infogeo_core::Error::ScoreUndefined { .. } | infogeo_core::Error::ScoreNotSquareIntegrable { .. } => "score",
        infogeo_core::Error::NotNormalized { .. } => "not-normalized",
        _ => "numerical",
    };
    ErrorObject { kind: kind.into(), path: None, message: e.to_string() }
}

fn per_point(points: &[Vec<f64>], f: impl Fn(&[f64]) -> infogeo_core::Result<ResultBody> + Sync) -> Vec<PointResult> {
    points
        .par_iter()
        .enumerate()
        .map(|(index, xi)| {
            let (result, error) = match f(xi) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(error_object(&e))),
            };
            PointResult { index, xi: xi.clone(), estimator: None, result, error }
        })
        .collect()
}

fn mass_residual(model: &ParamModel, xi: &[f64]) -> infogeo_core::Result<f64> {
    let mu = model::density_at(model, xi)?;
    Ok(if model.is_statistical() { (mu.mass() - 1.0).abs() } else { 0.0 })
}

fn fisher_at(model: &ParamModel, xi: &[f64], rel: f64) -> infogeo_core::Result<ResultBody> {
    let f = fisher::fisher_matrix(model, xi)?;
    let e = fisher::essential_decomposition(&f, rel);
    let (pinv, pinv_error) = match fisher::reduced_metric(&e, &f) {
        Ok(r) => (Some(Matrix::from(&r.pinv)), None),
        Err(err) => (None, Some(err.to_string())),
    };
    Ok(ResultBody::Fisher(FisherResult {
        fisher: Matrix::from(&f.g),
        rank: e.rank,
        eigenvalues: nums(e.eigenvalues.iter().copied()),
        cutoff: Num(e.cutoff),
        kernel: Matrix::from(&e.kernel_basis()),
        pinv,
        pinv_error,
        mass_residual: Num(mass_residual(model, xi)?),
    }))
}

fn scan_at(model: &ParamModel, xi: &[f64], rel: f64) -> infogeo_core::Result<ResultBody> {
    let f = fisher::fisher_matrix(model, xi)?;
    let e = fisher::essential_decomposition(&f, rel);
    Ok(ResultBody::Scan(ScanResult {
        rank: e.rank,
        eigenvalues: nums(e.eigenvalues.iter().copied()),
        cutoff: Num(e.cutoff),
        mass_residual: Num(mass_residual(model, xi)?),
    }))
}

fn run_gaps(spec: &JobSpec, entry: &ZooEntry, points: &[Vec<f64>], rel: f64) -> Result<Vec<PointResult>, CliError> {
    let suite = models::estimators(entry, spec.estimators.as_deref())?;
    let tol = match spec.thresholds.as_ref().and_then(|t| t.psd_tol) {
        Some(t) => PsdTolerance::Absolute(t),
        None => PsdTolerance::Auto,
    };
    let monte_carlo = match (&spec.monte_carlo, spec.seed) {
        (Some(mc), Some(seed)) => Some((mc.samples, seed)),
        (Some(_), None) => return Err(CliError::field("seed", "seed required for Monte Carlo")),
        _ => None,
    };
    let opts = VerifyOptions { rel_threshold: rel, tol, monte_carlo };
    let cells: Vec<_> = points.iter().flat_map(|xi| suite.iter().map(move |s| (&entry.model, s, xi.clone()))).collect();
    let reports = verify::verify_cells(&cells, &opts);
    let with_checks = spec.command == Command::Verify;
    Ok(cells
        .iter()
        .zip(reports)
        .enumerate()
        .map(|(index, ((model, s, xi), r))| {
            let (result, error) = match r.and_then(|c| gap_result(model, &c, with_checks)) {
                Ok(g) => (Some(ResultBody::Gap(Box::new(g))), None),
                Err(e) => (None, Some(error_object(&e))),
            };
            PointResult { index, xi: xi.clone(), estimator: Some(s.name.clone()), result, error }
        })
        .collect())
}

fn gap_result(model: &ParamModel, c: &CellReport, with_checks: bool) -> infogeo_core::Result<GapResult> {
    let g = &c.gap;
    Ok(GapResult {
        feature: c.feature.clone(),
        phi_hat: nums(c.stats.phi_hat.iter().copied()),
        bias: nums(c.stats.bias.iter().copied()),
        variance: Matrix::from(&g.variance),
        mse: Matrix::from(&c.stats.mse),
        d_phi_hat: Matrix::from(&c.stats.d_phi_hat),
        bound: Matrix::from(&g.bound),
        gap: Matrix::from(&g.gap),
        min_gap_eig: Num(g.min_gap_eig),
        tol: Num(g.tol),
        psd_certified: g.psd_certified,
        fisher_rank: g.fisher_rank,
        msevb_residual: Num(c.stats.msevb_residual),
        mass_residual: Num(mass_residual(model, &c.xi)?),
        monte_carlo: c.monte_carlo.as_ref().map(|m| MonteCarloResult {
            samples: m.samples,
            seed: m.seed,
            variance: Matrix::from(&m.report.variance),
            gap: Matrix::from(&m.report.gap),
            min_gap_eig: Num(m.report.min_gap_eig),
            standard_error: Num(m.standard_error),
            tol: Num(m.report.tol),
            psd_certified: m.report.psd_certified,
        }),
        checks: with_checks.then(|| VerifyChecks {
            derivative_rel_error: Num(c.derivative_rel_error),
            borovkov_rel_deviation: c.borovkov_rel_deviation.map(Num),
            estimator_in_domain: c.estimator_in_domain,
        }),
    })
}

fn describe(fact: &KnownFact) -> String {
    match fact {
        KnownFact::Rank { xi, rank } => format!("rank at {xi:?} is {rank}"),
        KnownFact::Fisher { xi, .. } => format!("fisher matrix at {xi:?} matches closed form"),
        KnownFact::KernelDirection { xi, direction } => format!("kernel at {xi:?} is spanned by {direction:?}"),
        KnownFact::Efficient { xi, estimator, .. } => format!("{estimator} attains the bound at {xi:?}"),
    }
}

fn check_facts(entry: &ZooEntry) -> Vec<FactResult> {
    entry
        .known_facts
        .par_iter()
        .map(|f| match zoo::check_known_fact(entry, f) {
            Ok(c) => FactResult { fact: describe(f), ok: c.ok, detail: c.detail },
            Err(e) => FactResult { fact: describe(f), ok: false, detail: e.to_string() },
        })
        .collect()
}

fn run_simplex(spec: &JobSpec) -> Result<Vec<PointResult>, CliError> {
    let Some(PointsSpec::List(points)) = &spec.points else {
        return Err(CliError::field("points", "simplex needs a list of mass vectors"));
    };
    let opts = spec.simplex.clone().unwrap_or(crate::spec::SimplexSpec { constrained: None, f: None, g: None, partials: None });
    let constrained = opts.constrained.unwrap_or(true);
    Ok(per_point(points, |mu| {
        let p = SimplexPoint::new(mu.to_vec(), constrained)?;
        let pairing = match (&opts.f, &opts.g) {
            (Some(f), Some(g)) if constrained => Some(Num(simplex::inverse_pairing_simplex(&p, f, g)?)),
            (Some(f), Some(g)) => Some(Num(simplex::inverse_pairing_full(&p, f, g)?)),
            _ => None,
        };
        let gradient = match &opts.partials {
            Some(d) if constrained => Some(nums(simplex::fisher_gradient_simplex(&p, d)?)),
            Some(d) => Some(nums(simplex::fisher_gradient_full(&p, d)?)),
            None => None,
        };
        let metric = simplex::fisher_metric_full(&p);
        Ok(ResultBody::Simplex(SimplexResult { constrained, metric: nums(metric.diagonal().iter().copied()), pairing, gradient }))
    }))
}

fn run_integrability(spec: &JobSpec, entry: &ZooEntry) -> Result<Vec<PointResult>, CliError> {
    let opts = spec.integrability.as_ref();
    let curve = match opts.and_then(|o| o.curve.as_ref()) {
        Some(c) => Curve::line(c.origin.clone(), c.direction.clone(), c.t0, c.t1),
        None => entry
            .default_curves
            .first()
            .cloned()
            .ok_or_else(|| CliError::field("integrability.curve", "model has no default curve"))?,
    };
    let ts = match (opts.and_then(|o| o.t.clone()), opts.and_then(|o| o.samples)) {
        (Some(t), _) => t,
        (None, n) => curve.samples(n.unwrap_or(DEFAULT_CURVE_SAMPLES)),
    };
    let ks = opts.and_then(|o| o.k.clone()).unwrap_or_else(|| vec![2.0]);
    let mut out = Vec::with_capacity(ks.len());
    for (index, k) in ks.into_iter().enumerate() {
        let (result, error) = match model::integrability_at(&entry.model, &curve, k, &ts) {
            Ok(r) => (
                Some(ResultBody::Integrability(IntegrabilityResult {
                    k,
                    samples: r
                        .samples
                        .iter()
                        .map(|s| NormSampleOut { t: s.t, xi: curve.point(s.t), norm: Num(s.norm), norm_pow: Num(s.norm_pow) })
                        .collect(),
                    max_jump: Num(r.max_jump),
                })),
                None,
            ),
            Err(e) => (None, Some(error_object(&e))),
        };
        out.push(PointResult { index, xi: Vec::new(), estimator: None, result, error });
    }
    Ok(out)
}

fn run_regularity(spec: &JobSpec, entry: &ZooEntry, points: &[Vec<f64>]) -> Result<Vec<PointResult>, CliError> {
    let r = spec.regularity.as_ref().ok_or_else(|| CliError::field("regularity", "required"))?;
    let f = match &r.function {
        FunctionSpec::Observable(name) => entry
            .observable(name)
            .map(|o| o.values.clone())
            .ok_or_else(|| CliError::field("regularity.function", format!("{} has no observable {name:?}", entry.name)))?,
        FunctionSpec::Values(v) => {
            if v.len() != entry.model.space().len() {
                return Err(CliError::field("regularity.function", format!("{} values for {} outcomes", v.len(), entry.model.space().len())));
            }
            v.clone()
        }
    };
    let k = r.k.unwrap_or(2.0);
    let samples = r.samples.unwrap_or(DEFAULT_NEIGHBORHOOD_SAMPLES);
    Ok(per_point(points, |center| {
        let rep = model::regularity_diagnostic(&entry.model, &f, k, center, &r.radii, samples)?;
        Ok(ResultBody::Regularity(RegularityResult {
            k,
            entries: rep
                .entries
                .into_iter()
                .map(|e| RegularityEntryOut {
                    radius: e.radius,
                    sup_norm: Num(e.sup_norm),
                    argmax: e.argmax,
                    cumulative_sup: Num(e.cumulative_sup),
                    evaluated: e.evaluated,
                })
                .collect(),
        }))
    }))
}
