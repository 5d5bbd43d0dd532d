//! Small dense helpers shared by the learners, PCA and MCD.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const EIGEN_MAX_SWEEPS: usize = 10_000;

/// Returns `(m + mᵀ) / 2`.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Spectral decomposition of a symmetric matrix.
///
/// Eigenvalues come back in ascending order. Each eigenvector is oriented so
/// that its first component of magnitude above `1e-12` is positive, which
/// fixes the per-column sign freedom.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let eig =
        SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_SWEEPS).ok_or(Error::Eigen {
            dim: n,
            max_abs: max_abs(m),
        })?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen {
            dim: n,
            max_abs: max_abs(m),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        if let Some(lead) = col.iter().find(|v| v.abs() > 1e-12) {
            if *lead < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(dst, &col);
    }
    Ok((values, vectors))
}

/// `dᵀ M d` with a fixed summation order.
pub(crate) fn quadratic_form(m: &DMatrix<f64>, d: &[f64]) -> f64 {
    let n = d.len();
    let mut acc = 0.0;
    for r in 0..n {
        let mut row = 0.0;
        for c in 0..n {
            row += m[(r, c)] * d[c];
        }
        acc += d[r] * row;
    }
    acc
}

/// `out = x · P` for a row vector `x`, summing over `k` in order.
pub(crate) fn row_times(x: &[f64], p: &DMatrix<f64>, out: &mut [f64]) {
    debug_assert_eq!(x.len(), p.nrows());
    debug_assert_eq!(out.len(), p.ncols());
    for (c, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, xk) in x.iter().enumerate() {
            acc += xk * p[(k, c)];
        }
        *o = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, -4.0]);
        let (vals, vecs) = sym_eigen(&m).unwrap();
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
        let rebuilt = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((rebuilt - m).norm() < 1e-12);
        for c in 0..3 {
            let lead = vecs
                .column(c)
                .iter()
                .copied()
                .find(|v| v.abs() > 1e-12)
                .unwrap();
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn quadratic_form_matches_matrix_product() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let d = [3.0, -1.0];
        let v = DVector::from_row_slice(&d);
        let expected = (v.transpose() * &m * &v)[(0, 0)];
        assert!((quadratic_form(&m, &d) - expected).abs() < 1e-12);
    }
}
