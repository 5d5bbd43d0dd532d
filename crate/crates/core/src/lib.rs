//! Closed-form Mahalanobis metric learning with ensemble cascade stacking.
//!
//! The crate is organised around the data flow of a verification pipeline:
//!
//! * [`features`] ingests sample matrices, builds matched/unmatched pair lists,
//!   runs PCA and generates synthetic identity clouds.
//! * [`metrics`] accumulates difference-space statistics and fits the linear
//!   learners: RMML (no covariance inversion), KISSME and the genuine-pair
//!   baseline.
//! * [`cascade`] stacks grouped learners into an ensemble cascade through
//!   clamped spectral projections and square-root normalisation.
//! * [`eval`] scores pairs and reports the equal error rate and the
//!   matched/unmatched K-L divergence.
//!
//! Inner loops (pair statistics, per-group fits, pair scoring) run on rayon
//! when the `parallel` feature is enabled. Every parallel path reduces in a
//! fixed order, so results are bitwise identical to [`Execution::Sequential`].

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cascade;
pub mod error;
pub mod eval;
pub mod features;
mod linalg;
pub mod metrics;
pub mod parallel;
pub mod persist;

pub use cascade::{
    cascade_distance, fit_cascade, fit_stage, group_counts, mcd, sqrt_normalize, transform,
    CascadeModel, CascadeParams, Projection, StageModel,
};
pub use error::{Error, Result};
pub use eval::{compute_eer, kl_divergence, score_pairs, EerResult, EvalReport, ScoredPairs};
pub use features::{
    apply_pca, fit_pca, gen_synthetic, load_features, sample_pairs, save_features, zero_pad,
    FeatureFormat, FeatureMatrix, Pair, PairSet, PcaModel, SyntheticParams,
};
pub use metrics::{
    accumulate_stats, fit_genuine_baseline, fit_kissme, fit_rmml, objective, DifferenceStats,
    Learner, LearnerTag, MetricLearner, MetricModel,
};
pub use parallel::Execution;
pub use persist::ModelBundle;
