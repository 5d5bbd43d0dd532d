use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mcd::{mcd, Projection};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, PairSet};
use crate::linalg::row_times;
use crate::metrics::{accumulate_stats_with, MetricLearner};
use crate::parallel::Execution;

/// Rows per work item when a stage is applied in parallel.
const ROW_BLOCK: usize = 64;

/// Group counts `[2^L, 2^(L−1), …, 2]` for stages `l = 1..=L`.
pub fn group_counts(stages: usize) -> Result<Vec<usize>> {
    if stages == 0 {
        return Err(Error::InvalidArgument("stage count must be >= 1".into()));
    }
    if stages >= usize::BITS as usize {
        return Err(Error::InvalidArgument(format!(
            "stage count {stages} overflows the group count"
        )));
    }
    Ok((1..=stages).map(|l| 1usize << (stages - l + 1)).collect())
}

#[inline]
fn signed_sqrt(v: f64) -> f64 {
    if v < 0.0 {
        -(-v).sqrt()
    } else {
        v.sqrt()
    }
}

/// Elementwise `sgn(v)·|v|^½`.
pub fn sqrt_normalize(features: &FeatureMatrix) -> FeatureMatrix {
    FeatureMatrix::from_raw(
        features.count(),
        features.dim(),
        features
            .as_slice()
            .iter()
            .map(|&v| signed_sqrt(v))
            .collect(),
    )
}

/// One fitted ensemble stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageModel {
    input_dim: usize,
    /// Output column `k` reads padded input column `permutation[k]`.
    permutation: Vec<u32>,
    group_dim: usize,
    projections: Vec<Projection>,
}

impl StageModel {
    pub(crate) fn from_parts(
        input_dim: usize,
        permutation: Vec<u32>,
        group_dim: usize,
        projections: Vec<Projection>,
    ) -> Result<Self> {
        let padded = projections.len() * group_dim;
        if projections.is_empty() || group_dim == 0 {
            return Err(Error::CorruptModel("stage has no groups".into()));
        }
        if permutation.len() != padded {
            return Err(Error::CorruptModel(format!(
                "permutation has {} entries, stage needs {padded}",
                permutation.len()
            )));
        }
        let mut seen = vec![false; padded];
        for &p in &permutation {
            let p = p as usize;
            if p >= padded || std::mem::replace(&mut seen[p], true) {
                return Err(Error::CorruptModel(
                    "stage permutation is not a bijection".into(),
                ));
            }
        }
        if input_dim > padded || padded - input_dim >= projections.len() {
            return Err(Error::CorruptModel(format!(
                "input dimension {input_dim} does not pad to {padded} with {} groups",
                projections.len()
            )));
        }
        if let Some(bad) = projections.iter().position(|p| p.dim() != group_dim) {
            return Err(Error::CorruptModel(format!(
                "projection {bad} is {0}x{0}, expected {group_dim}x{group_dim}",
                projections[bad].dim()
            )));
        }
        Ok(Self {
            input_dim,
            permutation,
            group_dim,
            projections,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Padded (and output) dimensionality `N_l · D_g`.
    pub fn output_dim(&self) -> usize {
        self.permutation.len()
    }

    pub fn group_count(&self) -> usize {
        self.projections.len()
    }

    pub fn group_dim(&self) -> usize {
        self.group_dim
    }

    pub fn permutation(&self) -> &[u32] {
        &self.permutation
    }

    pub fn projections(&self) -> &[Projection] {
        &self.projections
    }

    pub fn clamped_counts(&self) -> Vec<usize> {
        self.projections
            .iter()
            .map(Projection::clamped_count)
            .collect()
    }

    fn apply_row(&self, row: &[f64], shuffled: &mut [f64], out: &mut [f64]) {
        for (dst, &src) in shuffled.iter_mut().zip(&self.permutation) {
            let src = src as usize;
            *dst = if src < row.len() { row[src] } else { 0.0 };
        }
        let g = self.group_dim;
        for (m, proj) in self.projections.iter().enumerate() {
            let block = &mut out[m * g..(m + 1) * g];
            row_times(&shuffled[m * g..(m + 1) * g], proj.matrix(), block);
            for v in block.iter_mut() {
                *v = signed_sqrt(*v);
            }
        }
    }

    /// Replays pad → permute → per-group projection → square-root
    /// normalization. Rows are processed independently.
    pub fn apply(&self, features: &FeatureMatrix, execution: Execution) -> Result<FeatureMatrix> {
        if features.dim() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: features.dim(),
            });
        }
        let n = features.count();
        let width = self.output_dim();
        let blocks = n.div_ceil(ROW_BLOCK);
        let parts = execution.map(blocks, |b| {
            let rows = b * ROW_BLOCK..((b + 1) * ROW_BLOCK).min(n);
            let mut out = vec![0.0; rows.len() * width];
            let mut shuffled = vec![0.0; width];
            for (r, dst) in rows.zip(out.chunks_exact_mut(width)) {
                self.apply_row(features.row(r), &mut shuffled, dst);
            }
            out
        });
        FeatureMatrix::new(n, width, parts.concat())
    }
}

/// Fits one ensemble stage with `n_groups` groups; returns the stage and its
/// output on `features`.
pub fn fit_stage<L>(
    features: &FeatureMatrix,
    pairs: &PairSet,
    n_groups: usize,
    learner: &L,
    seed: u64,
) -> Result<(StageModel, FeatureMatrix)>
where
    L: MetricLearner + Sync + ?Sized,
{
    fit_stage_with(
        features,
        pairs,
        n_groups,
        learner,
        seed,
        Execution::default(),
    )
}

pub fn fit_stage_with<L>(
    features: &FeatureMatrix,
    pairs: &PairSet,
    n_groups: usize,
    learner: &L,
    seed: u64,
    execution: Execution,
) -> Result<(StageModel, FeatureMatrix)>
where
    L: MetricLearner + Sync + ?Sized,
{
    fit_stage_at(features, pairs, n_groups, learner, seed, execution, 0)
}

pub(crate) fn fit_stage_at<L>(
    features: &FeatureMatrix,
    pairs: &PairSet,
    n_groups: usize,
    learner: &L,
    seed: u64,
    execution: Execution,
    stage_index: usize,
) -> Result<(StageModel, FeatureMatrix)>
where
    L: MetricLearner + Sync + ?Sized,
{
    if n_groups == 0 {
        return Err(Error::InvalidArgument("group count must be >= 1".into()));
    }
    pairs.validate(features.count())?;
    pairs.require_both_labels()?;

    let input_dim = features.dim();
    let padded = input_dim.div_ceil(n_groups) * n_groups;
    let group_dim = padded / n_groups;
    let padded_u32 = u32::try_from(padded)
        .map_err(|_| Error::InvalidArgument(format!("padded dimension {padded} too large")))?;

    let mut permutation: Vec<u32> = (0..padded_u32).collect();
    permutation.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let projections = execution.try_map(n_groups, |m| {
        let wrap = |source: Error| Error::Stage {
            stage: stage_index,
            group: m,
            source: Box::new(source),
        };
        let cols = &permutation[m * group_dim..(m + 1) * group_dim];
        let mut data = Vec::with_capacity(features.count() * group_dim);
        for row in features.rows() {
            data.extend(cols.iter().map(|&c| {
                let c = c as usize;
                if c < input_dim {
                    row[c]
                } else {
                    0.0
                }
            }));
        }
        let group = FeatureMatrix::new(features.count(), group_dim, data).map_err(wrap)?;
        let stats = accumulate_stats_with(&group, pairs, execution).map_err(wrap)?;
        // Columns whose differences vanish on every pair (padding, constant
        // features) carry nothing to learn; they are left out of the fit and
        // mapped to zero.
        let live = stats.live_dims();
        if live.len() <= 1 {
            return Ok(Projection::identity(group_dim));
        }
        if live.len() == group_dim {
            let metric = learner.fit(&stats).map_err(wrap)?;
            return mcd(metric.matrix()).map_err(wrap);
        }
        let metric = learner.fit(&stats.restrict(&live)).map_err(wrap)?;
        let inner = mcd(metric.matrix()).map_err(wrap)?;
        let mut full = DMatrix::zeros(group_dim, group_dim);
        for (r, &lr) in live.iter().enumerate() {
            for (c, &lc) in live.iter().enumerate() {
                full[(lr, lc)] = inner.matrix()[(r, c)];
            }
        }
        Projection::from_parts(full, inner.clamped_count())
    })?;

    let stage = StageModel::from_parts(input_dim, permutation, group_dim, projections)?;
    let output = stage.apply(features, execution)?;
    Ok((stage, output))
}
