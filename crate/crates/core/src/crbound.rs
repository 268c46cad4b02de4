//! The generalized Cramér-Rao bound `J · ĝ⁻¹ · Jᵀ` and certification that
//! the variance form dominates it, plus the classical special cases.

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimation::{self, composition, Estimator, EstimatorStats, FeatureMap};
use crate::fisher::{self, min_eigenvalue, sorted_eigen, symmetrize};
use crate::measure::SpaceKind;
use crate::model::{density_at, ParamModel};

/// Slack for the scalar biased inequality.
pub const SCALAR_SLACK: f64 = 1e-8;

/// How much negative curvature a certified gap may show.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsdTolerance {
    /// `1e−10` absolute on finite spaces, `1e−6 · (1 + tr V)` on grids.
    Auto,
    Absolute(f64),
    /// `factor · (1 + tr V)`.
    TraceScaled(f64),
}

impl PsdTolerance {
    pub fn resolve(self, kind: SpaceKind, variance: &DMatrix<f64>) -> f64 {
        match self {
            PsdTolerance::Auto => match kind {
                SpaceKind::Finite => 1e-10,
                SpaceKind::Grid1D => 1e-6 * (1.0 + variance.trace()),
            },
            PsdTolerance::Absolute(t) => t,
            PsdTolerance::TraceScaled(f) => f * (1.0 + variance.trace()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrGapReport {
    pub xi: Vec<f64>,
    pub variance: DMatrix<f64>,
    pub bound: DMatrix<f64>,
    pub gap: DMatrix<f64>,
    pub min_gap_eig: f64,
    pub tol: f64,
    pub psd_certified: bool,
    /// Numerical rank of the Fisher matrix at `xi`.
    pub fisher_rank: usize,
}

/// `J · pinv · Jᵀ` given the derivative `J` of `φ̂` and the pseudoinverse.
pub fn bound_from_parts(j: &DMatrix<f64>, pinv: &DMatrix<f64>) -> DMatrix<f64> {
    let mut b = j * pinv * j.transpose();
    symmetrize(&mut b);
    b
}

pub fn cr_bound(model: &ParamModel, est: &Estimator, feat: &FeatureMap, xi: &[f64], rel_threshold: f64) -> Result<DMatrix<f64>> {
    let j = estimation::d_phi_hat(model, est, feat, xi)?;
    let (_, _, reduced) = fisher::analyze(model, xi, rel_threshold)?;
    Ok(bound_from_parts(&j, &reduced.pinv))
}

pub fn cr_gap(
    model: &ParamModel,
    est: &Estimator,
    feat: &FeatureMap,
    xi: &[f64],
    tol: PsdTolerance,
    rel_threshold: f64,
) -> Result<CrGapReport> {
    let stats = estimation::estimator_stats(model, est, feat, xi)?;
    cr_gap_from_stats(model, &stats, tol, rel_threshold)
}

/// Gap report reusing already computed estimator statistics.
pub fn cr_gap_from_stats(model: &ParamModel, stats: &EstimatorStats, tol: PsdTolerance, rel_threshold: f64) -> Result<CrGapReport> {
    let (_, decomp, reduced) = fisher::analyze(model, &stats.xi, rel_threshold)?;
    let bound = bound_from_parts(&stats.d_phi_hat, &reduced.pinv);
    let tol = tol.resolve(model.space().kind(), &stats.variance);
    Ok(gap_report(stats.xi.clone(), stats.variance.clone(), bound, tol, decomp.rank))
}

fn gap_report(xi: Vec<f64>, variance: DMatrix<f64>, bound: DMatrix<f64>, tol: f64, fisher_rank: usize) -> CrGapReport {
    let mut gap = &variance - &bound;
    symmetrize(&mut gap);
    let min_gap_eig = min_eigenvalue(&gap);
    CrGapReport { xi, variance, bound, gap, min_gap_eig, tol, psd_certified: min_gap_eig >= -tol, fisher_rank }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloGap {
    /// Gap report with `variance` replaced by the sample covariance.
    pub report: CrGapReport,
    pub samples: usize,
    pub seed: u64,
    /// Standard error of `vᵀ V̂ v` along the minimizing eigenvector `v`.
    pub standard_error: f64,
}

/// Sampling multiple of the standard error allowed below zero.
pub const MC_SE_MULTIPLE: f64 = 5.0;

/// Certifies the gap with a variance estimated from `samples` seeded draws
/// `ω ~ p(ξ)`. The bound is still computed by quadrature.
pub fn cr_gap_monte_carlo(
    model: &ParamModel,
    est: &Estimator,
    feat: &FeatureMap,
    xi: &[f64],
    samples: usize,
    seed: u64,
    rel_threshold: f64,
) -> Result<MonteCarloGap> {
    if !model.is_statistical() {
        return Err(Error::NotStatistical);
    }
    if samples < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least two samples".into()));
    }
    let cols = composition(model, est, feat)?;
    let mu = density_at(model, xi)?;
    let m = cols.len();

    let mut cumulative = Vec::with_capacity(mu.density().len());
    let mut acc = 0.0;
    for (p, w) in mu.density().iter().zip(mu.space().weights()) {
        acc += p * w;
        cumulative.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<DVector<f64>> = (0..samples)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            let j = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
            DVector::from_iterator(m, cols.iter().map(|c| c[j]))
        })
        .collect();
    if draws.iter().any(|x| x.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidArgument("feature of the estimator is not finite on a drawn outcome".into()));
    }

    let mean = draws.iter().fold(DVector::zeros(m), |a, x| a + x) / samples as f64;
    let mut cov = DMatrix::zeros(m, m);
    for x in &draws {
        let c = x - &mean;
        cov += &c * c.transpose();
    }
    cov /= (samples - 1) as f64;

    let j = estimation::d_phi_hat(model, est, feat, xi)?;
    let (_, decomp, reduced) = fisher::analyze(model, xi, rel_threshold)?;
    let bound = bound_from_parts(&j, &reduced.pinv);

    let mut gap = &cov - &bound;
    symmetrize(&mut gap);
    let (_, vectors) = sorted_eigen(&gap);
    let v = vectors.column(m - 1).into_owned();
    let ys: Vec<f64> = draws.iter().map(|x| v.dot(&(x - &mean)).powi(2)).collect();
    let y_mean = ys.iter().sum::<f64>() / samples as f64;
    let y_var = ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    let standard_error = (y_var / samples as f64).sqrt();

    let tol = MC_SE_MULTIPLE * standard_error;
    let report = gap_report(xi.to_vec(), cov, bound, tol, decomp.rank);
    Ok(MonteCarloGap { report, samples, seed, standard_error })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BorovkovBound {
    /// `D = ∂b/∂ξ` by finite differences.
    pub bias_jacobian: DMatrix<f64>,
    /// `(I + D) · pinv · (I + D)ᵀ`.
    pub bound: DMatrix<f64>,
}

/// The coordinate-feature bound written through the bias Jacobian. At
/// singular points the inverse Fisher matrix is replaced by the
/// pseudoinverse of the reduced metric.
pub fn borovkov_bound(model: &ParamModel, est: &Estimator, xi: &[f64], rel_threshold: f64) -> Result<BorovkovBound> {
    let d = model.param_dim();
    let id = FeatureMap::identity(d);
    let dphi = estimation::d_phi_hat_finite_difference(model, est, &id, xi)?;
    let bias_jacobian = &dphi - DMatrix::identity(d, d);
    let (_, _, reduced) = fisher::analyze(model, xi, rel_threshold)?;
    let e_plus_d = DMatrix::identity(d, d) + &bias_jacobian;
    Ok(BorovkovBound { bound: bound_from_parts(&e_plus_d, &reduced.pinv), bias_jacobian })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarBiasedBound {
    /// `E(σ̂ − ξ)²`.
    pub mse_lhs: f64,
    /// `[1 + b′]² / g + b²`.
    pub rhs: f64,
    pub holds: bool,
    pub fisher: f64,
    pub bias: f64,
    pub bias_derivative: f64,
}

/// One-parameter inequality with a bias term. Refuses singular points.
pub fn scalar_biased_bound(model: &ParamModel, est: &Estimator, xi: &[f64]) -> Result<ScalarBiasedBound> {
    if model.param_dim() != 1 || est.dim() != 1 {
        return Err(Error::Dimension("scalar bound needs a one-parameter model and estimator".into()));
    }
    let f = fisher::fisher_matrix(model, xi)?;
    let g = f.g[(0, 0)];
    if g <= fisher::ABS_FLOOR {
        return Err(Error::SingularPoint);
    }
    let id = FeatureMap::identity(1);
    let stats = estimation::estimator_stats(model, est, &id, xi)?;
    let slope = estimation::d_phi_hat_finite_difference(model, est, &id, xi)?[(0, 0)];
    let bias = stats.bias[0];
    let bias_derivative = slope - 1.0;
    let mse_lhs = stats.mse[(0, 0)];
    let rhs = (1.0 + bias_derivative).powi(2) / g + bias * bias;
    Ok(ScalarBiasedBound { mse_lhs, rhs, holds: mse_lhs >= rhs - SCALAR_SLACK, fisher: g, bias, bias_derivative })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_resolution() {
        let v = DMatrix::from_diagonal_element(2, 2, 0.5);
        assert_eq!(PsdTolerance::Auto.resolve(SpaceKind::Finite, &v), 1e-10);
        assert!((PsdTolerance::Auto.resolve(SpaceKind::Grid1D, &v) - 2e-6).abs() < 1e-18);
        assert_eq!(PsdTolerance::Absolute(0.1).resolve(SpaceKind::Grid1D, &v), 0.1);
        assert!((PsdTolerance::TraceScaled(1.0).resolve(SpaceKind::Finite, &v) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gap_report_flags_negative_curvature() {
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.5]);
        let r = gap_report(vec![0.0], v, b, 1e-10, 2);
        assert!((r.min_gap_eig + 0.5).abs() < 1e-12);
        assert!(!r.psd_certified);
    }
}
