//! Verification cells: one (model, estimator, feature, parameter) combination
//! checked for the Cramér-Rao gap and the identities around it.

use rayon::prelude::*;

use crate::crbound::{self, CrGapReport, MonteCarloGap, PsdTolerance};
use crate::error::Result;
use crate::estimation::{self, EstimatorStats};
use crate::fisher::DEFAULT_REL_THRESHOLD;
use crate::model::ParamModel;
use crate::zoo::SuiteEntry;

/// Relative comparisons of quantities smaller than this are made against it instead.
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub rel_threshold: f64,
    pub tol: PsdTolerance,
    /// `(samples, seed)`; when set the variance is also estimated by sampling.
    pub monte_carlo: Option<(usize, u64)>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { rel_threshold: DEFAULT_REL_THRESHOLD, tol: PsdTolerance::Auto, monte_carlo: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub model: String,
    pub estimator: String,
    pub feature: String,
    pub xi: Vec<f64>,
    pub stats: EstimatorStats,
    pub gap: CrGapReport,
    pub monte_carlo: Option<MonteCarloGap>,
    /// `max |J − J_fd| / max(‖J‖, ‖φ̂‖, floor)` for `J` = derivative of `φ̂`,
    /// norms being entrywise maxima.
    pub derivative_rel_error: f64,
    /// Relative deviation between the bias-Jacobian bound and the general
    /// bound; only for identity features.
    pub borovkov_rel_deviation: Option<f64>,
    pub estimator_in_domain: bool,
}

impl CellReport {
    /// Exact certificate and, when sampled, the Monte Carlo one.
    pub fn certified(&self) -> bool {
        self.gap.psd_certified && self.monte_carlo.as_ref().is_none_or(|m| m.report.psd_certified)
    }
}

pub fn relative_deviation(a: &nalgebra::DMatrix<f64>, reference: &nalgebra::DMatrix<f64>) -> f64 {
    let scale = reference.abs().max().max(RELATIVE_FLOOR);
    (a - reference).abs().max() / scale
}

pub fn verify_cell(model: &ParamModel, suite: &SuiteEntry, xi: &[f64], opts: &VerifyOptions) -> Result<CellReport> {
    let stats = estimation::estimator_stats(model, &suite.estimator, &suite.feature, xi)?;
    let gap = crbound::cr_gap_from_stats(model, &stats, opts.tol, opts.rel_threshold)?;
    let fd = estimation::d_phi_hat_finite_difference(model, &suite.estimator, &suite.feature, xi)?;
    let scale = stats.d_phi_hat.abs().max().max(stats.phi_hat.abs().max()).max(RELATIVE_FLOOR);
    let derivative_rel_error = (&fd - &stats.d_phi_hat).abs().max() / scale;
    let borovkov_rel_deviation = if suite.feature.name() == "identity" {
        let b = crbound::borovkov_bound(model, &suite.estimator, xi, opts.rel_threshold)?;
        Some(relative_deviation(&b.bound, &gap.bound))
    } else {
        None
    };
    let monte_carlo = match opts.monte_carlo {
        Some((samples, seed)) => Some(crbound::cr_gap_monte_carlo(
            model,
            &suite.estimator,
            &suite.feature,
            xi,
            samples,
            seed,
            opts.rel_threshold,
        )?),
        None => None,
    };
    Ok(CellReport {
        model: model.name().to_string(),
        estimator: suite.name.clone(),
        feature: suite.feature.name().to_string(),
        xi: xi.to_vec(),
        stats,
        gap,
        monte_carlo,
        derivative_rel_error,
        borovkov_rel_deviation,
        estimator_in_domain: suite.estimator.within(model.domain()),
    })
}

/// Per-cell seed derived from a base seed and the cell's position.
pub fn cell_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Evaluates cells in parallel; results keep the input order.
pub fn verify_cells(cells: &[(&ParamModel, &SuiteEntry, Vec<f64>)], opts: &VerifyOptions) -> Vec<Result<CellReport>> {
    cells
        .par_iter()
        .enumerate()
        .map(|(i, (model, suite, xi))| {
            let mut o = opts.clone();
            o.monte_carlo = opts.monte_carlo.map(|(s, seed)| (s, cell_seed(seed, i)));
            verify_cell(model, suite, xi, &o)
        })
        .collect()
}
