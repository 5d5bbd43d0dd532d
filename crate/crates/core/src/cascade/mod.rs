//! Ensemble cascade metric learning.
//!
//! Each of the `L` ensemble stages pads its input, shuffles the dimensions
//! with a stored permutation, cuts them into `N_l = 2^(L−l+1)` equal groups
//! and fits one metric per group. Every group metric is factored by [`mcd`]
//! into a projection `P` with `P·Pᵀ = M₊`. The projected group features are
//! square-root normalized and concatenated. A single ungrouped metric is fitted
//! on the output of the last stage and used for scoring.

mod mcd;
mod model;
mod stage;

pub use mcd::{mcd, Projection, CLAMP_TOLERANCE};
pub use model::{
    cascade_distance, fit_cascade, transform, transform_with, CascadeModel, CascadeParams,
};
pub use stage::{fit_stage, fit_stage_with, group_counts, sqrt_normalize, StageModel};
