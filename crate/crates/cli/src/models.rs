//! Turning model and estimator specs into library objects.

use infogeo_core::estimation::{Estimator, FeatureMap};
use infogeo_core::measure::SampleSpace;
use infogeo_core::model::Curve;
use infogeo_core::tabulated::TabulatedFamily;
use infogeo_core::zoo::{self, SuiteEntry, ZooEntry};
use nalgebra::{DMatrix, DVector};

use crate::spec::{EstimatorSpec, FeatureSpec, GridSpec, ModelSpec, TableSpec};
use crate::CliError;

fn grid(g: &Option<GridSpec>) -> infogeo_core::Result<SampleSpace> {
    match g {
        Some(g) => SampleSpace::simpson(g.lo, g.hi, g.points),
        None => zoo::normal_mixture_grid(),
    }
}

pub fn build_model(m: &ModelSpec) -> Result<ZooEntry, CliError> {
    let entry = match m.name.as_str() {
        "bernoulli" => zoo::make_bernoulli()?,
        "multinomial" => zoo::make_multinomial(m.n.unwrap_or(3))?,
        "measure-cone" => zoo::make_measure_cone(m.n.unwrap_or(3))?,
        "normal-mixture" => zoo::make_normal_mixture(grid(&m.grid)?)?,
        "location-gaussian" => zoo::make_location_gaussian(grid(&m.grid)?)?,
        "pathology" => zoo::make_pathology(m.alpha.unwrap_or(2.0), m.beta.unwrap_or(4.0))?,
        "product" => {
            let base = m.base.as_ref().ok_or_else(|| CliError::field("model.base", "required for product"))?;
            zoo::make_product(&build_model(base)?, m.copies.unwrap_or(1))?
        }
        "tabulated" => {
            let t = m.table.as_ref().ok_or_else(|| CliError::field("model.table", "required for tabulated"))?;
            tabulated_entry(t)?
        }
        other => return Err(CliError::field("model.name", format!("unknown model {other:?}"))),
    };
    Ok(entry)
}

/// A tabulated model wrapped as a zoo entry without an estimator suite.
pub fn tabulated_entry(t: &TableSpec) -> Result<ZooEntry, CliError> {
    let family = TabulatedFamily::new(t.axes.clone(), t.labels.len(), t.rows.clone())?;
    let domain = family.domain();
    let model = family.into_model("tabulated", t.labels.clone(), t.statistical)?;
    let mid: Vec<f64> = domain.lower().iter().zip(domain.upper()).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(ZooEntry {
        name: "tabulated".into(),
        model,
        default_points: vec![mid],
        default_curves: vec![Curve::segment(domain.lower().to_vec(), domain.upper().to_vec())],
        estimator_suite: Vec::new(),
        known_facts: Vec::new(),
        observables: Vec::new(),
    })
}

/// Parses a table spec from JSON and builds the model.
pub fn parse_tabulated(text: &str) -> Result<ZooEntry, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let t: TableSpec = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::field(e.path().to_string(), e.inner().to_string()))?;
    tabulated_entry(&t)
}

pub fn feature(spec: &FeatureSpec, param_dim: usize) -> Result<FeatureMap, CliError> {
    Ok(match spec {
        FeatureSpec::Identity => FeatureMap::identity(param_dim),
        FeatureSpec::SimplexMasses => FeatureMap::simplex_masses(param_dim + 1),
        FeatureSpec::Affine { matrix, offset } => {
            let rows = matrix.len();
            if matrix.iter().any(|r| r.len() != param_dim) {
                return Err(CliError::field("feature.affine.matrix", format!("rows need {param_dim} entries")));
            }
            let a = DMatrix::from_row_iterator(rows, param_dim, matrix.iter().flatten().copied());
            FeatureMap::affine("affine", a, DVector::from_column_slice(offset))?
        }
    })
}

/// Resolves the estimators of a gap job; all suite entries when none are named.
pub fn estimators(entry: &ZooEntry, specs: Option<&[EstimatorSpec]>) -> Result<Vec<SuiteEntry>, CliError> {
    let Some(specs) = specs else {
        if entry.estimator_suite.is_empty() {
            return Err(CliError::field("estimators", format!("{} has no estimator suite; give inline estimators", entry.name)));
        }
        return Ok(entry.estimator_suite.clone());
    };
    let d = entry.model.param_dim();
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| match s {
            EstimatorSpec::Suite(name) => entry.suite_entry(name).cloned().ok_or_else(|| {
                let known: Vec<&str> = entry.estimator_suite.iter().map(|s| s.name.as_str()).collect();
                CliError::field(format!("estimators[{i}]"), format!("no suite estimator {name:?} (have {})", known.join(", ")))
            }),
            EstimatorSpec::Inline(e) => {
                let n = entry.model.space().len();
                if e.rows.len() != n {
                    return Err(CliError::field(format!("estimators[{i}].rows"), format!("{} rows for {n} outcomes", e.rows.len())));
                }
                let estimator = Estimator::tabulated(e.name.clone(), d, e.rows.clone())
                    .map_err(|err| CliError::field(format!("estimators[{i}].rows"), err.to_string()))?;
                let feature = feature(e.feature.as_ref().unwrap_or(&FeatureSpec::Identity), d)
                    .map_err(|err| CliError::field(format!("estimators[{i}].feature"), err.to_string()))?;
                Ok(SuiteEntry { name: e.name.clone(), estimator, feature })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_named_model_builds() {
        for name in ["bernoulli", "multinomial", "measure-cone", "pathology"] {
            let m = ModelSpec { name: name.into(), n: None, grid: None, alpha: None, beta: None, copies: None, base: None, table: None };
            assert!(build_model(&m).is_ok(), "{name}");
        }
        let g = Some(GridSpec { lo: -8.0, hi: 8.0, points: 201 });
        let m = ModelSpec { name: "location-gaussian".into(), n: None, grid: g, alpha: None, beta: None, copies: None, base: None, table: None };
        assert_eq!(build_model(&m).unwrap().model.space().len(), 201);
    }

    #[test]
    fn tabulated_json_builds_a_model() {
        let e = parse_tabulated(r#"{"axes":[[0.2,0.8]],"labels":["a","b"],"rows":[[0.8,0.2],[0.2,0.8]]}"#).unwrap();
        assert_eq!(e.model.param_dim(), 1);
        assert_eq!(e.default_points, vec![vec![0.5]]);
        assert!(parse_tabulated(r#"{"axes":[[0.2,0.8]],"labels":["a"],"rows":[[0.8,0.2],[0.2,0.8]]}"#).is_err());
        assert!(parse_tabulated(r#"{"axes":[[0.2,0.8]],"labels":["a"],"rows":[[1],[1]],"extra":0}"#).is_err());
    }
}
