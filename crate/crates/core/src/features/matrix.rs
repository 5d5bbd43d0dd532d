use crate::error::{Error, Result};

/// `N × D` row-major sample matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl FeatureMatrix {
    /// Builds a matrix from a row-major buffer, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "feature matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { data, rows, cols })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Internal constructor for buffers already known to be finite.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { data, rows, cols }
    }

    /// Number of samples `N`.
    pub fn count(&self) -> usize {
        self.rows
    }

    /// Feature dimensionality `D`.
    pub fn dim(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Copies the listed columns, in order, into a new matrix.
    pub fn select_columns(&self, columns: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(self.rows * columns.len());
        for row in self.rows() {
            data.extend(columns.iter().map(|&c| row[c]));
        }
        FeatureMatrix::from_raw(self.rows, columns.len(), data)
    }

    /// Scales every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<FeatureMatrix> {
        FeatureMatrix::new(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }
}

/// Right-pads every row with zeros up to the next multiple of `multiple`.
pub fn zero_pad(features: &FeatureMatrix, multiple: usize) -> Result<FeatureMatrix> {
    if multiple == 0 {
        return Err(Error::InvalidArgument(
            "padding multiple must be >= 1".into(),
        ));
    }
    let dim = features.dim();
    let padded = dim.div_ceil(multiple) * multiple;
    if padded == dim {
        return Ok(features.clone());
    }
    let mut data = Vec::with_capacity(features.count() * padded);
    for row in features.rows() {
        data.extend_from_slice(row);
        data.resize(data.len() + padded - dim, 0.0);
    }
    Ok(FeatureMatrix::from_raw(features.count(), padded, data))
}
