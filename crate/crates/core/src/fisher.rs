//! Fisher matrix, numerical kernel detection, and the reduced metric on the
//! essential tangent space.
//!
//! The pseudoinverse is never computed by a separate SVD: it is assembled
//! from the same eigenbasis that decides the rank, as
//! `B · Ĝ⁻¹ · Bᵀ` with `B` the essential basis and `Ĝ = Bᵀ G B`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::measure::DensityMeasure;
use crate::model::{score_with_density, ParamModel, ScoreField};

/// Default relative eigenvalue cutoff for the numerical rank.
pub const DEFAULT_REL_THRESHOLD: f64 = 1e-8;
/// Below this largest eigenvalue the Fisher matrix counts as zero.
pub const ABS_FLOOR: f64 = 1e-14;
/// Largest admissible condition number of the reduced metric.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub xi: Vec<f64>,
    pub g: DMatrix<f64>,
}

impl FisherMatrix {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }
}

pub fn fisher_matrix(model: &ParamModel, xi: &[f64]) -> Result<FisherMatrix> {
    let (mu, scores) = score_with_density(model, xi)?;
    fisher_from_scores(&mu, &scores)
}

/// `G_ij = Σ s_i s_j p w` over positive-density points, symmetrized.
pub fn fisher_from_scores(mu: &DensityMeasure, scores: &ScoreField) -> Result<FisherMatrix> {
    let d = scores.dim();
    let mut g = DMatrix::<f64>::zeros(d, d);
    for (j, (&p, &w)) in mu.density().iter().zip(mu.space().weights()).enumerate() {
        if p == 0.0 {
            continue;
        }
        let s = scores.at(j);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::ScoreNotSquareIntegrable { point: j });
        }
        let pw = p * w;
        for a in 0..d {
            for b in a..d {
                g[(a, b)] += s[a] * s[b] * pw;
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::ScoreNotSquareIntegrable { point: usize::MAX });
    }
    Ok(FisherMatrix { xi: scores.xi.clone(), g })
}

/// Eigen-split of the Fisher matrix into essential and kernel directions.
#[derive(Debug, Clone, PartialEq)]
pub struct EssentialDecomposition {
    /// Descending; tiny negative rounding values are clamped to 0.
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub eigenvectors: DMatrix<f64>,
    pub rank: usize,
    /// Absolute eigenvalue cutoff that produced `rank`.
    pub cutoff: f64,
}

impl EssentialDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// `d × r` orthonormal basis of the essential directions.
    pub fn essential_basis(&self) -> DMatrix<f64> {
        self.eigenvectors.columns(0, self.rank).into_owned()
    }

    /// `d × (d − r)` orthonormal basis of the numerical kernel.
    pub fn kernel_basis(&self) -> DMatrix<f64> {
        self.eigenvectors.columns(self.rank, self.dim() - self.rank).into_owned()
    }
}

pub fn essential_decomposition(fisher: &FisherMatrix, rel_threshold: f64) -> EssentialDecomposition {
    let (values, vectors) = sorted_eigen(&fisher.g);
    let lambda_max = values.first().copied().unwrap_or(0.0);
    let (rank, cutoff) = if lambda_max <= ABS_FLOOR {
        (0, ABS_FLOOR)
    } else {
        let cutoff = rel_threshold * lambda_max;
        (values.iter().filter(|&&l| l > cutoff).count(), cutoff)
    };
    EssentialDecomposition {
        eigenvalues: DVector::from_iterator(values.len(), values.iter().map(|l| l.max(0.0))),
        eigenvectors: vectors,
        rank,
        cutoff,
    }
}

/// Symmetric eigendecomposition with descending eigenvalues and each
/// eigenvector's largest-magnitude entry made positive.
pub(crate) fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let pivot = v.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(col, &(v * sign));
    }
    (values, vectors)
}

/// Smallest eigenvalue of a symmetric matrix (0 for an empty one).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sorted_eigen(m).0.last().copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMetric {
    /// Essential basis `B` (`d × r`).
    pub basis: DMatrix<f64>,
    /// `Ĝ = Bᵀ G B`, positive definite.
    pub reduced: DMatrix<f64>,
    pub reduced_inverse: DMatrix<f64>,
    /// `B Ĝ⁻¹ Bᵀ`, the Moore-Penrose pseudoinverse of `G`.
    pub pinv: DMatrix<f64>,
}

impl ReducedMetric {
    pub fn rank(&self) -> usize {
        self.reduced.nrows()
    }
}

pub fn reduced_metric(decomp: &EssentialDecomposition, fisher: &FisherMatrix) -> Result<ReducedMetric> {
    let d = fisher.dim();
    if decomp.dim() != d {
        return Err(Error::Dimension(format!(
            "decomposition of dimension {} for a {d}x{d} Fisher matrix",
            decomp.dim()
        )));
    }
    let basis = decomp.essential_basis();
    let r = basis.ncols();
    if r == 0 {
        return Ok(ReducedMetric {
            basis,
            reduced: DMatrix::zeros(0, 0),
            reduced_inverse: DMatrix::zeros(0, 0),
            pinv: DMatrix::zeros(d, d),
        });
    }
    let mut reduced = basis.transpose() * &fisher.g * &basis;
    symmetrize(&mut reduced);
    let (values, vectors) = sorted_eigen(&reduced);
    let (hi, lo) = (values[0], values[r - 1]);
    if lo.is_nan() || lo <= 0.0 || hi / lo > MAX_CONDITION {
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        return Err(Error::ThresholdTooSmall { condition });
    }
    // Ĝ⁻¹ from its own eigenpairs, which keeps the inverse exactly symmetric.
    let inv_diag = DMatrix::from_diagonal(&DVector::from_iterator(r, values.iter().map(|l| 1.0 / l)));
    let mut reduced_inverse = &vectors * inv_diag * vectors.transpose();
    symmetrize(&mut reduced_inverse);
    let mut pinv = &basis * &reduced_inverse * basis.transpose();
    symmetrize(&mut pinv);
    Ok(ReducedMetric { basis, reduced, reduced_inverse, pinv })
}

/// Fisher matrix, decomposition and reduced metric in one go.
pub fn analyze(
    model: &ParamModel,
    xi: &[f64],
    rel_threshold: f64,
) -> Result<(FisherMatrix, EssentialDecomposition, ReducedMetric)> {
    let f = fisher_matrix(model, xi)?;
    let e = essential_decomposition(&f, rel_threshold);
    let r = reduced_metric(&e, &f)?;
    Ok((f, e, r))
}

/// `uᵀ · pinv · v`: the inverse reduced metric evaluated on two covectors.
pub fn covector_pairing(metric: &ReducedMetric, u: &[f64], v: &[f64]) -> f64 {
    let d = metric.pinv.nrows();
    assert!(u.len() == d && v.len() == d, "covector dimension mismatch");
    let u = DVector::from_column_slice(u);
    let v = DVector::from_column_slice(v);
    u.dot(&(&metric.pinv * v))
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for a in 0..n {
        for b in 0..a {
            let avg = 0.5 * (m[(a, b)] + m[(b, a)]);
            m[(a, b)] = avg;
            m[(b, a)] = avg;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fm(g: DMatrix<f64>) -> FisherMatrix {
        FisherMatrix { xi: vec![0.0; g.nrows()], g }
    }

    #[test]
    fn full_rank_pinv_is_inverse() {
        let g = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let f = fm(g.clone());
        let e = essential_decomposition(&f, 1e-10);
        assert_eq!(e.rank, 3);
        assert_eq!(e.kernel_basis().ncols(), 0);
        let r = reduced_metric(&e, &f).unwrap();
        let inv = g.try_inverse().unwrap();
        assert!((&r.pinv - &inv).abs().max() <= 1e-8 * inv.abs().max());
    }

    #[test]
    fn diagonal_rank_one() {
        let f = fm(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
        let e = essential_decomposition(&f, DEFAULT_REL_THRESHOLD);
        assert_eq!(e.rank, 1);
        let r = reduced_metric(&e, &f).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        assert!((&r.pinv - want).abs().max() < 1e-15);
        assert_eq!(covector_pairing(&r, &[0.0, 7.0], &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let f = fm(DMatrix::zeros(2, 2));
        let e = essential_decomposition(&f, DEFAULT_REL_THRESHOLD);
        assert_eq!(e.rank, 0);
        assert_eq!(e.kernel_basis().ncols(), 2);
        let r = reduced_metric(&e, &f).unwrap();
        assert_eq!(r.pinv, DMatrix::zeros(2, 2));
    }

    #[test]
    fn tiny_threshold_is_rejected() {
        let f = fm(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14]));
        let e = essential_decomposition(&f, 1e-16);
        assert_eq!(e.rank, 2);
        assert!(matches!(reduced_metric(&e, &f), Err(Error::ThresholdTooSmall { .. })));
    }

    #[test]
    fn pairing_is_bilinear() {
        let f = fm(DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]));
        let e = essential_decomposition(&f, 1e-10);
        let r = reduced_metric(&e, &f).unwrap();
        let (u, v, w) = ([0.3, -1.2], [2.0, 0.7], [-0.4, 5.0]);
        let vw = [v[0] + w[0], v[1] + w[1]];
        let lhs = covector_pairing(&r, &u, &vw);
        let rhs = covector_pairing(&r, &u, &v) + covector_pairing(&r, &u, &w);
        assert!((lhs - rhs).abs() <= 1e-12);
    }

    fn random_psd(d: usize, rank: usize, entries: &[f64]) -> DMatrix<f64> {
        let a = DMatrix::from_fn(d, rank, |i, j| entries[(i * 8 + j) % entries.len()]);
        &a * a.transpose()
    }

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).abs().max() / b.abs().max().max(1e-300)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn moore_penrose_identities(
            d in 1usize..=8,
            rank_frac in 0.0f64..=1.0,
            entries in prop::collection::vec(-2.0f64..2.0, 64),
        ) {
            let rank = ((d as f64) * rank_frac).round() as usize;
            let g = random_psd(d, rank, &entries);
            let f = fm(g.clone());
            let e = essential_decomposition(&f, DEFAULT_REL_THRESHOLD);
            // Random factors can be ill-conditioned; only check decompositions we accept.
            if let Ok(r) = reduced_metric(&e, &f) {
                prop_assert!(e.rank <= rank);
                if g.abs().max() > 0.0 {
                    prop_assert!(rel_err(&(&g * &r.pinv * &g), &g) <= 1e-8);
                }
                if r.pinv.abs().max() > 0.0 {
                    prop_assert!(rel_err(&(&r.pinv * &g * &r.pinv), &r.pinv) <= 1e-8);
                }
                let basis = e.eigenvectors.clone();
                let gram = basis.transpose() * &basis;
                prop_assert!((gram - DMatrix::identity(d, d)).abs().max() <= 1e-10);
                let kernel = e.kernel_basis();
                for c in 0..kernel.ncols() {
                    let gk = &g * kernel.column(c);
                    prop_assert!(gk.norm() <= e.cutoff + 1e-12 * g.norm());
                }
            }
        }
    }
}
