//! Difference-space statistics and the closed-form linear metric learners.

mod learners;
mod objective;
mod stats;

pub use learners::{
    fit_genuine_baseline, fit_kissme, fit_rmml, rmml_contrast, Learner, LearnerTag, MetricLearner,
    MetricModel, KISSME_MAX_CONDITION, RMML_MIN_RHO,
};
pub use objective::objective;
pub use stats::{accumulate_stats, accumulate_stats_with, DifferenceStats};
