//! Finite-difference stencils that never leave the parameter domain.

use crate::error::{Error, Result};
use crate::model::Domain;

/// Step size for a coordinate currently at `x`.
pub fn step_for(x: f64) -> f64 {
    (1e-7 * x.abs()).max(1e-5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Central,
    /// Second-order one-sided stencil into the domain.
    Forward,
    Backward,
}

impl Stencil {
    /// `(multiple of h, coefficient)` pairs; the derivative is `Σ c · f(ξ + m·h·dir) / h`.
    pub fn nodes(self) -> &'static [(f64, f64)] {
        match self {
            Stencil::Central => &[(1.0, 0.5), (-1.0, -0.5)],
            Stencil::Forward => &[(0.0, -1.5), (1.0, 2.0), (2.0, -0.5)],
            Stencil::Backward => &[(0.0, 1.5), (-1.0, -2.0), (-2.0, 0.5)],
        }
    }

    /// Picks the widest stencil whose nodes all lie in `domain`, returning it with `h`.
    pub fn choose(domain: &Domain, xi: &[f64], dir: &[f64]) -> Result<(Stencil, f64)> {
        let scale = xi
            .iter()
            .zip(dir)
            .filter(|(_, d)| **d != 0.0)
            .map(|(x, _)| x.abs())
            .fold(0.0, f64::max);
        let dir_norm = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if dir_norm == 0.0 {
            return Err(Error::InvalidArgument("zero differentiation direction".into()));
        }
        let h = step_for(scale) / dir_norm;
        let inside = |m: f64| domain.contains(&offset(xi, dir, m * h));
        let stencil = if inside(1.0) && inside(-1.0) {
            Stencil::Central
        } else if inside(1.0) && inside(2.0) {
            Stencil::Forward
        } else if inside(-1.0) && inside(-2.0) {
            Stencil::Backward
        } else {
            return Err(Error::InvalidArgument(format!(
                "no finite-difference stencil fits the domain at {xi:?}"
            )));
        };
        Ok((stencil, h))
    }
}

pub(crate) fn offset(xi: &[f64], dir: &[f64], s: f64) -> Vec<f64> {
    xi.iter().zip(dir).map(|(x, d)| x + s * d).collect()
}

pub(crate) fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// Derivative of a vector-valued map along `dir` at `xi`.
pub fn directional_derivative<F>(domain: &Domain, xi: &[f64], dir: &[f64], f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let (stencil, h) = Stencil::choose(domain, xi, dir)?;
    let mut acc: Option<Vec<f64>> = None;
    for &(m, c) in stencil.nodes() {
        let values = f(&offset(xi, dir, m * h))?;
        match acc.as_mut() {
            None => acc = Some(values.iter().map(|v| c * v).collect()),
            Some(a) => {
                if a.len() != values.len() {
                    return Err(Error::Dimension("map changed output length".into()));
                }
                a.iter_mut().zip(&values).for_each(|(a, v)| *a += c * v);
            }
        }
    }
    Ok(acc.unwrap_or_default().into_iter().map(|v| v / h).collect())
}

/// Jacobian (`outputs × d`) of a vector-valued map, column by column.
pub fn jacobian<F>(domain: &Domain, xi: &[f64], f: F) -> Result<nalgebra::DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let d = xi.len();
    let mut cols = Vec::with_capacity(d);
    for i in 0..d {
        cols.push(directional_derivative(domain, xi, &unit(d, i), &f)?);
    }
    let rows = cols.first().map_or(0, Vec::len);
    Ok(nalgebra::DMatrix::from_fn(rows, d, |r, c| cols[c][r]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_respect_box_boundaries() {
        let dom = Domain::boxed(vec![0.0], vec![1.0]);
        assert_eq!(Stencil::choose(&dom, &[0.5], &[1.0]).unwrap().0, Stencil::Central);
        assert_eq!(Stencil::choose(&dom, &[0.0], &[1.0]).unwrap().0, Stencil::Forward);
        assert_eq!(Stencil::choose(&dom, &[1.0], &[1.0]).unwrap().0, Stencil::Backward);
    }

    #[test]
    fn one_sided_stencils_are_second_order() {
        let dom = Domain::boxed(vec![0.0], vec![1.0]);
        let f = |x: &[f64]| Ok(vec![x[0] * x[0], x[0].exp()]);
        let at0 = directional_derivative(&dom, &[0.0], &[1.0], f).unwrap();
        assert!(at0[0].abs() < 1e-12);
        assert!((at0[1] - 1.0).abs() < 1e-9);
        let at1 = directional_derivative(&dom, &[1.0], &[1.0], f).unwrap();
        assert!((at1[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn jacobian_of_linear_map() {
        let dom = Domain::unbounded(2);
        let j = jacobian(&dom, &[0.3, -2.0], |x| Ok(vec![2.0 * x[0] - x[1], 5.0 * x[1]])).unwrap();
        let want = nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, -1.0, 0.0, 5.0]);
        assert!((j - want).abs().max() < 1e-9);
    }
}
