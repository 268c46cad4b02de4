//! Reports: the spec that was run, per-point results and a summary.

use std::fmt;

use nalgebra::DMatrix;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::spec::JobSpec;

pub const REPORT_SCHEMA: &str = "infogeo-report/v1";

/// A float that survives JSON: non-finite values are written as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 || (self.0.is_nan() && other.0.is_nan())
    }
}

impl Num {
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num(v)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct NumVisitor;
        impl Visitor<'_> for NumVisitor {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                match v {
                    "inf" => Ok(Num(f64::INFINITY)),
                    "-inf" => Ok(Num(f64::NEG_INFINITY)),
                    "nan" => Ok(Num(f64::NAN)),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(NumVisitor)
    }
}

pub fn nums(v: impl IntoIterator<Item = f64>) -> Vec<Num> {
    v.into_iter().map(Num).collect()
}

/// Row-major matrix; `divergent` is set when any entry is not finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Matrix {
    pub dims: [usize; 2],
    pub data: Vec<Num>,
    pub divergent: bool,
}

impl Matrix {
    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.dims[0], self.dims[1], self.data.iter().map(|n| n.0))
    }
}

impl From<&DMatrix<f64>> for Matrix {
    fn from(m: &DMatrix<f64>) -> Self {
        let data: Vec<Num> = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| Num(m[(i, j)]))).collect();
        Matrix { dims: [m.nrows(), m.ncols()], divergent: data.iter().any(|n| !n.is_finite()), data }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub versions: Versions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub spec: JobSpec,
    pub results: Vec<PointResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub facts: Vec<FactResult>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Versions {
    pub infogeo: String,
    pub report: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self { infogeo: env!("CARGO_PKG_VERSION").to_string(), report: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub results: usize,
    pub errors: usize,
    /// Gap commands only: number of certified and uncertified cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertified: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointResult {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub xi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ResultBody>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorObject>,
}

/// Machine-readable error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorObject {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResultBody {
    Fisher(FisherResult),
    Scan(ScanResult),
    Gap(Box<GapResult>),
    Simplex(SimplexResult),
    Integrability(IntegrabilityResult),
    Regularity(RegularityResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FisherResult {
    pub fisher: Matrix,
    pub rank: usize,
    /// Descending.
    pub eigenvalues: Vec<Num>,
    pub cutoff: Num,
    /// Columns span the numerical kernel.
    pub kernel: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinv: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinv_error: Option<String>,
    pub mass_residual: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanResult {
    pub rank: usize,
    pub eigenvalues: Vec<Num>,
    pub cutoff: Num,
    pub mass_residual: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapResult {
    pub feature: String,
    pub phi_hat: Vec<Num>,
    pub bias: Vec<Num>,
    pub variance: Matrix,
    pub mse: Matrix,
    pub d_phi_hat: Matrix,
    pub bound: Matrix,
    pub gap: Matrix,
    pub min_gap_eig: Num,
    pub tol: Num,
    pub psd_certified: bool,
    pub fisher_rank: usize,
    pub msevb_residual: Num,
    pub mass_residual: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<VerifyChecks>,
}

impl GapResult {
    pub fn certified(&self) -> bool {
        self.psd_certified && self.monte_carlo.as_ref().is_none_or(|m| m.psd_certified)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloResult {
    pub samples: usize,
    pub seed: u64,
    pub variance: Matrix,
    pub gap: Matrix,
    pub min_gap_eig: Num,
    pub standard_error: Num,
    pub tol: Num,
    pub psd_certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyChecks {
    pub derivative_rel_error: Num,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub borovkov_rel_deviation: Option<Num>,
    pub estimator_in_domain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexResult {
    pub constrained: bool,
    /// Diagonal of the metric, `1/μ_i`.
    pub metric: Vec<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<Vec<Num>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrabilityResult {
    pub k: f64,
    pub samples: Vec<NormSampleOut>,
    pub max_jump: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSampleOut {
    pub t: f64,
    pub xi: Vec<f64>,
    pub norm: Num,
    pub norm_pow: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityResult {
    pub k: f64,
    pub entries: Vec<RegularityEntryOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityEntryOut {
    pub radius: f64,
    pub sup_norm: Num,
    pub argmax: Vec<f64>,
    pub cumulative_sup: Num,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactResult {
    pub fact: String,
    pub ok: bool,
    pub detail: String,
}

/// Parses a report, reporting the failing field path.
pub fn parse_report(text: &str) -> Result<Report, ErrorObject> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ErrorObject {
        kind: "report".into(),
        path: Some(e.path().to_string()),
        message: e.inner().to_string(),
    })
}
