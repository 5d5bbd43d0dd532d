use nalgebra::DMatrix;

use super::stats::DifferenceStats;
use crate::error::{Error, Result};

fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            acc += a[(r, c)] * b[(c, r)];
        }
    }
    acc
}

/// RMML objective `λ·g₁ + g₂` at `m`.
///
/// `g₁ = tr(sum_pos·M)/tr_pos − tr(sum_neg·M)/tr_neg` and
/// `g₂ = ½‖M − I‖²_F`. The squared norm is what makes `I + λ·C` the exact
/// stationary point.
pub fn objective(stats: &DifferenceStats, m: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    let dim = stats.dim();
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: if m.nrows() != dim {
                m.nrows()
            } else {
                m.ncols()
            },
        });
    }
    let g1 = trace_product(stats.sum_pos(), m) / stats.tr_pos()
        - trace_product(stats.sum_neg(), m) / stats.tr_neg();
    let mut g2 = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            let v = m[(r, c)] - if r == c { 1.0 } else { 0.0 };
            g2 += v * v;
        }
    }
    Ok(lambda * g1 + 0.5 * g2)
}
