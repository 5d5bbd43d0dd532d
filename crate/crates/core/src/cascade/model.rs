use super::stage::{fit_stage_at, group_counts, StageModel};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, PairSet};
use crate::linalg::quadratic_form;
use crate::metrics::{accumulate_stats_with, Learner, MetricLearner, MetricModel};
use crate::parallel::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CascadeParams {
    /// Number of ensemble stages `L`; zero fits a single plain metric.
    pub stages: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for CascadeParams {
    fn default() -> Self {
        Self {
            stages: 3,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

/// `L` ensemble stages followed by one ungrouped metric.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    input_dim: usize,
    seed: u64,
    learner: Learner,
    stages: Vec<StageModel>,
    final_metric: MetricModel,
}

impl CascadeModel {
    pub(crate) fn from_parts(
        input_dim: usize,
        seed: u64,
        learner: Learner,
        stages: Vec<StageModel>,
        final_metric: MetricModel,
    ) -> Result<Self> {
        let mut dim = input_dim;
        for (s, stage) in stages.iter().enumerate() {
            if stage.input_dim() != dim {
                return Err(Error::CorruptModel(format!(
                    "stage {s} expects dimension {}, previous stage yields {dim}",
                    stage.input_dim()
                )));
            }
            dim = stage.output_dim();
        }
        if final_metric.dim() != dim {
            return Err(Error::CorruptModel(format!(
                "final metric is {0}x{0}, last stage yields {dim}",
                final_metric.dim()
            )));
        }
        Ok(Self {
            input_dim,
            seed,
            learner,
            stages,
            final_metric,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Dimensionality of the space the final metric lives in.
    pub fn output_dim(&self) -> usize {
        self.final_metric.dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn learner(&self) -> Learner {
        self.learner
    }

    pub fn stages(&self) -> &[StageModel] {
        &self.stages
    }

    pub fn final_metric(&self) -> &MetricModel {
        &self.final_metric
    }

    /// Squared distance between two rows already in the output space.
    pub fn output_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        quadratic_form(self.final_metric.matrix(), &d)
    }
}

/// SplitMix64 finalizer; decorrelates the per-stage shuffle seeds.
fn stage_seed(seed: u64, stage: usize) -> u64 {
    let mut z = seed.wrapping_add((stage as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fits `params.stages` ensemble stages with group counts from
/// [`group_counts`], then one final metric on the last stage's output. The
/// final metric gets no MCD, normalization or shuffle.
pub fn fit_cascade(
    features: &FeatureMatrix,
    pairs: &PairSet,
    learner: &Learner,
    params: &CascadeParams,
) -> Result<CascadeModel> {
    let counts = match params.stages {
        0 => Vec::new(),
        l => group_counts(l)?,
    };
    let mut stages = Vec::with_capacity(counts.len());
    let mut current = features.clone();
    for (s, &n_groups) in counts.iter().enumerate() {
        let (stage, output) = fit_stage_at(
            &current,
            pairs,
            n_groups,
            learner,
            stage_seed(params.seed, s),
            params.execution,
            s,
        )?;
        stages.push(stage);
        current = output;
    }
    let final_stage = counts.len();
    let wrap = |source: Error| Error::Stage {
        stage: final_stage,
        group: 0,
        source: Box::new(source),
    };
    let stats = accumulate_stats_with(&current, pairs, params.execution).map_err(wrap)?;
    let final_metric = learner.fit(&stats).map_err(wrap)?;
    CascadeModel::from_parts(features.dim(), params.seed, *learner, stages, final_metric)
}

/// Maps features into the space of the final metric.
pub fn transform(model: &CascadeModel, features: &FeatureMatrix) -> Result<FeatureMatrix> {
    transform_with(model, features, Execution::default())
}

pub fn transform_with(
    model: &CascadeModel,
    features: &FeatureMatrix,
    execution: Execution,
) -> Result<FeatureMatrix> {
    if features.dim() != model.input_dim {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim,
            actual: features.dim(),
        });
    }
    let mut current = features.clone();
    for stage in &model.stages {
        current = stage.apply(&current, execution)?;
    }
    Ok(current)
}

/// `dᵀ·M·d` on the transformed difference of `x` and `y`.
pub fn cascade_distance(model: &CascadeModel, x: &[f64], y: &[f64]) -> Result<f64> {
    for v in [x, y] {
        if v.len() != model.input_dim {
            return Err(Error::DimensionMismatch {
                expected: model.input_dim,
                actual: v.len(),
            });
        }
    }
    let both = FeatureMatrix::from_rows(&[x, y])?;
    let mapped = transform_with(model, &both, Execution::Sequential)?;
    Ok(model.output_distance(mapped.row(0), mapped.row(1)))
}
