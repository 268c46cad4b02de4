//! Fisher information on possibly singular statistical models.
//!
//! Models are density families on a discretized sample space (finite sets
//! or 1-D quadrature grids). On top of them the crate computes
//!
//! - scores and the Fisher matrix ([`model`], [`fisher`]),
//! - the numerical kernel of the Fisher matrix, the reduced metric on the
//!   remaining essential directions, and the pseudoinverse built from it,
//! - estimator statistics for a feature of the parameter: expectation,
//!   bias, variance, mean square error and the derivative of the
//!   expectation ([`estimation`]),
//! - the generalized Cramér-Rao bound `J · ĝ⁻¹ · Jᵀ` and a certificate that
//!   the variance dominates it ([`crbound`]),
//! - closed forms on the simplex of measures on `n` points ([`simplex`]).
//!
//! [`zoo`] holds ready-made models, from regular (Bernoulli, multinomial)
//! through singular (a two-component normal mixture) to pathological.

pub mod crbound;
pub mod diff;
pub mod error;
pub mod estimation;
pub mod fisher;
pub mod measure;
pub mod model;
pub mod simplex;
pub mod tabulated;
pub mod verify;
pub mod zoo;

pub use error::{Error, Result};
pub use estimation::{Estimator, FeatureMap};
pub use fisher::{EssentialDecomposition, FisherMatrix, ReducedMetric};
pub use measure::{DensityMeasure, SampleSpace, SignedDensity};
pub use model::{Curve, DensityFamily, Domain, ParamModel, ScoreField};
