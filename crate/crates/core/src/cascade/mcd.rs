use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, symmetrize};

/// Eigenvalues in `(−CLAMP_TOLERANCE, 0)` are rounding noise: they are zeroed
/// without being counted as clamped.
pub const CLAMP_TOLERANCE: f64 = 1e-10;

/// Per-group mapping `P` whose Gram matrix `P·Pᵀ` is the metric with its
/// negative spectrum removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    matrix: DMatrix<f64>,
    clamped_count: usize,
}

impl Projection {
    pub(crate) fn from_parts(matrix: DMatrix<f64>, clamped_count: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::CorruptModel(format!(
                "projection must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            matrix,
            clamped_count,
        })
    }

    pub(crate) fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            clamped_count: 0,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of eigenvalues below `−CLAMP_TOLERANCE` that were set to zero.
    pub fn clamped_count(&self) -> usize {
        self.clamped_count
    }

    /// `P·Pᵀ`.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.matrix * self.matrix.transpose()
    }
}

/// Modified Cholesky decomposition.
///
/// Factors `M = QΛQᵀ`, replaces `Λ` by `sqrt(max(Λ, 0))` and returns
/// `P = Q·Λ̂`. Columns follow ascending eigenvalue order and each eigenvector
/// has its first non-negligible component positive.
pub fn mcd(m: &DMatrix<f64>) -> Result<Projection> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    let (values, vectors) = sym_eigen(&symmetrize(m))?;
    let mut clamped_count = 0;
    let scales = DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| {
            if v > 0.0 {
                v.sqrt()
            } else {
                if v < -CLAMP_TOLERANCE {
                    clamped_count += 1;
                }
                0.0
            }
        }),
    );
    let mut matrix = vectors;
    for (mut col, s) in matrix.column_iter_mut().zip(scales.iter()) {
        col *= *s;
    }
    Ok(Projection {
        matrix,
        clamped_count,
    })
}
