//! Closed-form Fisher geometry of positive measures on `n` points and of the
//! open probability simplex, in ambient mass coordinates `μ_i`.
//!
//! Tangent vectors of the probability simplex are ambient vectors whose
//! entries sum to zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    mu: Vec<f64>,
    constrained: bool,
}

impl SimplexPoint {
    /// A point of the cone of positive measures.
    pub fn measure(mu: Vec<f64>) -> Result<Self> {
        Self::new(mu, false)
    }

    /// A point of the open probability simplex.
    pub fn probability(mu: Vec<f64>) -> Result<Self> {
        Self::new(mu, true)
    }

    pub fn new(mu: Vec<f64>, constrained: bool) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidArgument("simplex point needs at least one mass".into()));
        }
        if let Some(i) = mu.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidArgument(format!("mass {i} is {} (must be positive)", mu[i])));
        }
        if constrained {
            let s: f64 = mu.iter().sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidArgument(format!("masses sum to {s}, not 1")));
            }
        }
        Ok(Self { mu, constrained })
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.mu
    }

    pub fn is_constrained(&self) -> bool {
        self.constrained
    }

    /// `Σ μ_i f_i`.
    pub fn expectation(&self, f: &[f64]) -> f64 {
        self.mu.iter().zip(f).map(|(m, f)| m * f).sum()
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() == self.n() {
            Ok(())
        } else {
            Err(Error::Dimension(format!("vector of length {} at a point with {} masses", v.len(), self.n())))
        }
    }

    fn require(&self, constrained: bool) -> Result<()> {
        if self.constrained == constrained {
            Ok(())
        } else if constrained {
            Err(Error::InvalidArgument("operation needs a probability-simplex point".into()))
        } else {
            Err(Error::InvalidArgument("operation needs an unconstrained point of the measure cone".into()))
        }
    }
}

/// `diag(1/μ_1, …, 1/μ_n)`.
pub fn fisher_metric_full(p: &SimplexPoint) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_iterator(p.n(), p.mu.iter().map(|m| 1.0 / m)))
}

/// Fisher metric evaluated on two tangent vectors.
pub fn metric_pairing(p: &SimplexPoint, x: &[f64], y: &[f64]) -> f64 {
    p.mu.iter().zip(x.iter().zip(y)).map(|(m, (a, b))| a * b / m).sum()
}

/// Inverse metric on the differentials of `E(f)` and `E(g)` over the measure
/// cone: `Σ f_i g_i μ_i`.
pub fn inverse_pairing_full(p: &SimplexPoint, f: &[f64], g: &[f64]) -> Result<f64> {
    p.require(false)?;
    p.check_len(f)?;
    p.check_len(g)?;
    Ok(p.mu.iter().zip(f.iter().zip(g)).map(|(m, (a, b))| a * b * m).sum())
}

/// Inverse metric on the probability simplex: the covariance
/// `Σ μ_i (f_i − f̄)(g_i − ḡ)`.
pub fn inverse_pairing_simplex(p: &SimplexPoint, f: &[f64], g: &[f64]) -> Result<f64> {
    p.require(true)?;
    p.check_len(f)?;
    p.check_len(g)?;
    let (fbar, gbar) = (p.expectation(f), p.expectation(g));
    Ok(p.mu.iter().zip(f.iter().zip(g)).map(|(m, (a, b))| m * (a - fbar) * (b - gbar)).sum())
}

/// Fisher gradient on the measure cone: component `i` is `μ_i ∂f̃/∂μ_i`.
pub fn fisher_gradient_full(p: &SimplexPoint, partials: &[f64]) -> Result<Vec<f64>> {
    p.require(false)?;
    p.check_len(partials)?;
    Ok(p.mu.iter().zip(partials).map(|(m, d)| m * d).collect())
}

/// Fisher gradient on the probability simplex: `μ_i (∂f̃/∂μ_i − λ)` with
/// `λ = Σ μ_j ∂f̃/∂μ_j`.
pub fn fisher_gradient_simplex(p: &SimplexPoint, partials: &[f64]) -> Result<Vec<f64>> {
    p.require(true)?;
    p.check_len(partials)?;
    let lambda = p.expectation(partials);
    Ok(p.mu.iter().zip(partials).map(|(m, d)| m * (d - lambda)).collect())
}
