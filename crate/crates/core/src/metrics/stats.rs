use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, PairSet};
use crate::linalg::symmetrize;
use crate::parallel::Execution;

/// Pairs per partial sum. Fixed so that parallel and sequential reductions
/// add the same partials in the same order.
const CHUNK: usize = 256;

/// Scatter of pair differences `d = x_i − x_j`, split by match label.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceStats {
    sum_pos: DMatrix<f64>,
    sum_neg: DMatrix<f64>,
    tr_pos: f64,
    tr_neg: f64,
    n_pos: usize,
    n_neg: usize,
}

impl DifferenceStats {
    fn zeros(dim: usize) -> Self {
        Self {
            sum_pos: DMatrix::zeros(dim, dim),
            sum_neg: DMatrix::zeros(dim, dim),
            tr_pos: 0.0,
            tr_neg: 0.0,
            n_pos: 0,
            n_neg: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.sum_pos.nrows()
    }

    /// `Σ_{y=1} d dᵀ`.
    pub fn sum_pos(&self) -> &DMatrix<f64> {
        &self.sum_pos
    }

    /// `Σ_{y=0} d dᵀ`.
    pub fn sum_neg(&self) -> &DMatrix<f64> {
        &self.sum_neg
    }

    /// `Σ_{y=1} dᵀ d`.
    pub fn tr_pos(&self) -> f64 {
        self.tr_pos
    }

    /// `Σ_{y=0} dᵀ d`.
    pub fn tr_neg(&self) -> f64 {
        self.tr_neg
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    /// Indices whose differences are not identically zero over all pairs.
    pub fn live_dims(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&k| self.sum_pos[(k, k)] > 0.0 || self.sum_neg[(k, k)] > 0.0)
            .collect()
    }

    /// Statistics restricted to the listed coordinates. Traces are
    /// recomputed from the retained diagonal.
    pub fn restrict(&self, dims: &[usize]) -> DifferenceStats {
        let pick = |m: &DMatrix<f64>| {
            DMatrix::from_fn(dims.len(), dims.len(), |r, c| m[(dims[r], dims[c])])
        };
        let sum_pos = pick(&self.sum_pos);
        let sum_neg = pick(&self.sum_neg);
        DifferenceStats {
            tr_pos: if dims.len() == self.dim() {
                self.tr_pos
            } else {
                sum_pos.trace()
            },
            tr_neg: if dims.len() == self.dim() {
                self.tr_neg
            } else {
                sum_neg.trace()
            },
            sum_pos,
            sum_neg,
            n_pos: self.n_pos,
            n_neg: self.n_neg,
        }
    }

    /// Adds another partial accumulation over disjoint pairs.
    pub fn merge(&mut self, other: &DifferenceStats) {
        self.sum_pos += &other.sum_pos;
        self.sum_neg += &other.sum_neg;
        self.tr_pos += other.tr_pos;
        self.tr_neg += other.tr_neg;
        self.n_pos += other.n_pos;
        self.n_neg += other.n_neg;
    }

    fn accumulate_chunk(features: &FeatureMatrix, pairs: &[crate::features::Pair]) -> Self {
        let dim = features.dim();
        let mut out = Self::zeros(dim);
        let n_pos = pairs.iter().filter(|p| p.matched).count();
        let n_neg = pairs.len() - n_pos;
        let mut diffs_pos = DMatrix::zeros(dim, n_pos);
        let mut diffs_neg = DMatrix::zeros(dim, n_neg);
        let (mut kp, mut kn) = (0, 0);
        for p in pairs {
            let (xi, xj) = (features.row(p.i), features.row(p.j));
            let (target, col, trace) = if p.matched {
                kp += 1;
                (&mut diffs_pos, kp - 1, &mut out.tr_pos)
            } else {
                kn += 1;
                (&mut diffs_neg, kn - 1, &mut out.tr_neg)
            };
            let mut sq = 0.0;
            for (r, (a, b)) in xi.iter().zip(xj).enumerate() {
                let d = a - b;
                target[(r, col)] = d;
                sq += d * d;
            }
            *trace += sq;
        }
        if n_pos > 0 {
            out.sum_pos = &diffs_pos * diffs_pos.transpose();
        }
        if n_neg > 0 {
            out.sum_neg = &diffs_neg * diffs_neg.transpose();
        }
        out.n_pos = n_pos;
        out.n_neg = n_neg;
        out
    }
}

/// Accumulates matched/unmatched difference scatter in a single pass.
pub fn accumulate_stats(features: &FeatureMatrix, pairs: &PairSet) -> Result<DifferenceStats> {
    accumulate_stats_with(features, pairs, Execution::default())
}

pub fn accumulate_stats_with(
    features: &FeatureMatrix,
    pairs: &PairSet,
    execution: Execution,
) -> Result<DifferenceStats> {
    pairs.validate(features.count())?;
    pairs.require_both_labels()?;
    let chunks: Vec<_> = pairs.as_slice().chunks(CHUNK).collect();
    let partials = execution.map(chunks.len(), |k| {
        DifferenceStats::accumulate_chunk(features, chunks[k])
    });
    let mut total = DifferenceStats::zeros(features.dim());
    for part in &partials {
        total.merge(part);
    }
    total.sum_pos = symmetrize(&total.sum_pos);
    total.sum_neg = symmetrize(&total.sum_neg);
    if total.n_pos == 0 || total.n_neg == 0 {
        return Err(Error::DegenerateStats("pair set lacks one label".into()));
    }
    Ok(total)
}
