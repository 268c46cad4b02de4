//! Finite models given as density tables on a rectangular parameter grid,
//! interpolated multilinearly between grid nodes. Experimental: scores come
//! from finite differences and are only piecewise smooth across nodes.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::{Outcome, SampleSpace};
use crate::model::{DensityFamily, Domain, ParamModel};

/// Upper bound on table entries accepted from untrusted input.
pub const MAX_TABLE_ENTRIES: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedFamily {
    axes: Vec<Vec<f64>>,
    outcomes: usize,
    /// `nodes × outcomes`, nodes in row-major order (last axis fastest).
    table: Vec<f64>,
}

impl TabulatedFamily {
    pub fn new(axes: Vec<Vec<f64>>, outcomes: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("tabulated model needs at least one axis".into()));
        }
        if outcomes == 0 {
            return Err(Error::InvalidArgument("tabulated model needs at least one outcome".into()));
        }
        for (i, axis) in axes.iter().enumerate() {
            if axis.len() < 2 {
                return Err(Error::InvalidArgument(format!("axis {i} needs at least two nodes")));
            }
            if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidArgument(format!("axis {i} must be finite and strictly increasing")));
            }
        }
        let nodes = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len()));
        let entries = nodes.and_then(|n| n.checked_mul(outcomes));
        let (nodes, entries) = match (nodes, entries) {
            (Some(n), Some(e)) if e <= MAX_TABLE_ENTRIES => (n, e),
            _ => return Err(Error::InvalidArgument(format!("table larger than {MAX_TABLE_ENTRIES} entries"))),
        };
        if rows.len() != nodes {
            return Err(Error::Dimension(format!("table has {} rows for {nodes} grid nodes", rows.len())));
        }
        let mut table = Vec::with_capacity(entries);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != outcomes {
                return Err(Error::Dimension(format!("table row {i} has {} entries, expected {outcomes}", row.len())));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidDensity(format!("table row {i} contains {v}")));
            }
            table.extend(row);
        }
        Ok(Self { axes, outcomes, table })
    }

    pub fn domain(&self) -> Domain {
        Domain::boxed(
            self.axes.iter().map(|a| a[0]).collect(),
            self.axes.iter().map(|a| a[a.len() - 1]).collect(),
        )
    }

    /// Assembles a model on a finite space with one outcome per table column.
    pub fn into_model(self, name: impl Into<String>, labels: Vec<String>, statistical: bool) -> Result<ParamModel> {
        if labels.len() != self.outcomes {
            return Err(Error::Dimension(format!("{} labels for {} outcomes", labels.len(), self.outcomes)));
        }
        let space = Arc::new(SampleSpace::finite(labels)?);
        let domain = self.domain();
        ParamModel::new(name, space, domain, Arc::new(self), statistical)
    }
}

impl DensityFamily for TabulatedFamily {
    fn param_dim(&self) -> usize {
        self.axes.len()
    }

    fn density(&self, at: Outcome, xi: &[f64]) -> f64 {
        // Cell index and fractional offset along each axis, clamped to the grid.
        let mut cell = Vec::with_capacity(self.axes.len());
        for (axis, &x) in self.axes.iter().zip(xi) {
            let x = x.clamp(axis[0], axis[axis.len() - 1]);
            let k = axis.partition_point(|&a| a <= x).clamp(1, axis.len() - 1) - 1;
            let frac = (x - axis[k]) / (axis[k + 1] - axis[k]);
            cell.push((k, frac));
        }
        let d = self.axes.len();
        let mut value = 0.0;
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut node = 0usize;
            for (i, (axis, &(k, frac))) in self.axes.iter().zip(&cell).enumerate() {
                let up = (corner >> i) & 1 == 1;
                weight *= if up { frac } else { 1.0 - frac };
                node = node * axis.len() + k + usize::from(up);
            }
            if weight != 0.0 {
                value += weight * self.table[node * self.outcomes + at.index];
            }
        }
        value.max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher;
    use crate::model::density_at;

    fn coin_table() -> TabulatedFamily {
        // Bernoulli densities tabulated at ξ ∈ {0.2, 0.4, 0.6, 0.8}.
        let axis = vec![0.2, 0.4, 0.6, 0.8];
        let rows = axis.iter().map(|&x| vec![1.0 - x, x]).collect();
        TabulatedFamily::new(vec![axis], 2, rows).unwrap()
    }

    #[test]
    fn interpolation_is_exact_for_affine_families() {
        let m = coin_table().into_model("coin", vec!["0".into(), "1".into()], true).unwrap();
        let mu = density_at(&m, &[0.53]).unwrap();
        assert!((mu.density()[1] - 0.53).abs() < 1e-14);
        let f = fisher::fisher_matrix(&m, &[0.5]).unwrap();
        assert!((f.g[(0, 0)] - 4.0).abs() < 1e-6);
        assert!(density_at(&m, &[0.9]).is_err());
    }

    #[test]
    fn two_axes_bilinear() {
        let axes = vec![vec![0.0, 1.0], vec![0.0, 2.0]];
        let rows = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let t = TabulatedFamily::new(axes, 1, rows).unwrap();
        let o = Outcome { index: 0, x: 0.0 };
        assert!((t.density(o, &[0.5, 1.0]) - 2.5).abs() < 1e-15);
        assert!((t.density(o, &[1.0, 2.0]) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(TabulatedFamily::new(vec![], 1, vec![]).is_err());
        assert!(TabulatedFamily::new(vec![vec![0.0]], 1, vec![vec![1.0]]).is_err());
        assert!(TabulatedFamily::new(vec![vec![1.0, 0.0]], 1, vec![vec![1.0], vec![1.0]]).is_err());
        assert!(TabulatedFamily::new(vec![vec![0.0, 1.0]], 1, vec![vec![1.0]]).is_err());
        assert!(TabulatedFamily::new(vec![vec![0.0, 1.0]], 1, vec![vec![1.0], vec![-1.0]]).is_err());
        assert!(TabulatedFamily::new(vec![vec![0.0, 1.0]; 40], 1, vec![]).is_err());
    }
}
