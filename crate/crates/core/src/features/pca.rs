use nalgebra::DMatrix;

use super::matrix::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::{row_times, sym_eigen};

/// Centering PCA (no whitening) fitted on a training matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `D × k`, columns are principal directions by decreasing variance.
    basis: DMatrix<f64>,
    /// Variances along each retained direction; empty when loaded from disk.
    variances: Vec<f64>,
}

impl PcaModel {
    pub(crate) fn from_parts(mean: Vec<f64>, basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != mean.len() || basis.ncols() == 0 || basis.ncols() > mean.len() {
            return Err(Error::CorruptModel(format!(
                "pca basis {}x{} does not fit mean of length {}",
                basis.nrows(),
                basis.ncols(),
                mean.len()
            )));
        }
        Ok(Self {
            mean,
            basis,
            variances: Vec::new(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Retained dimensionality `k`.
    pub fn output_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Covariance eigenvalues of the retained directions, largest first.
    pub fn variances(&self) -> &[f64] {
        &self.variances
    }
}

/// Fits the top-`k` principal directions of the sample covariance.
pub fn fit_pca(features: &FeatureMatrix, k: usize) -> Result<PcaModel> {
    let (n, d) = (features.count(), features.dim());
    let limit = (n.saturating_sub(1)).min(d);
    if k == 0 || k > limit {
        return Err(Error::InvalidArgument(format!(
            "pca dimension {k} outside 1..={limit} for {n} samples of dimension {d}"
        )));
    }

    let mut mean = vec![0.0; d];
    for row in features.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let centered = DMatrix::from_fn(n, d, |r, c| features.get(r, c) - mean[c]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let cov = crate::linalg::symmetrize(&cov);
    let (values, vectors) = sym_eigen(&cov)?;

    let mut basis = DMatrix::zeros(d, k);
    let mut variances = Vec::with_capacity(k);
    for out in 0..k {
        let src = d - 1 - out;
        basis.set_column(out, &vectors.column(src));
        variances.push(values[src]);
    }
    Ok(PcaModel {
        mean,
        basis,
        variances,
    })
}

/// Projects each row as `(x − mean)ᵀ · basis`.
pub fn apply_pca(model: &PcaModel, features: &FeatureMatrix) -> Result<FeatureMatrix> {
    if features.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: features.dim(),
        });
    }
    let k = model.output_dim();
    let mut out = vec![0.0; features.count() * k];
    let mut centered = vec![0.0; model.input_dim()];
    for (row, dst) in features.rows().zip(out.chunks_exact_mut(k)) {
        for ((c, x), m) in centered.iter_mut().zip(row).zip(&model.mean) {
            *c = x - m;
        }
        row_times(&centered, &model.basis, dst);
    }
    Ok(FeatureMatrix::from_raw(features.count(), k, out))
}
