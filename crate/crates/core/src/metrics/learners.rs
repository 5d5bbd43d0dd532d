use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix};

use super::stats::DifferenceStats;
use crate::error::{CovarianceKind, Error, Result};
use crate::linalg::{quadratic_form, sym_eigen, symmetrize};

/// Covariances whose eigenvalue ratio exceeds this are treated as singular.
pub const KISSME_MAX_CONDITION: f64 = 1e12;

/// Below this spectral scale the RMML contrast is considered numerically zero.
pub const RMML_MIN_RHO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerTag {
    Rmml,
    Kissme,
    GenuineBaseline,
}

impl LearnerTag {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnerTag::Rmml => "rmml",
            LearnerTag::Kissme => "kissme",
            LearnerTag::GenuineBaseline => "genuine-baseline",
        }
    }
}

impl fmt::Display for LearnerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmml" => Ok(LearnerTag::Rmml),
            "kissme" => Ok(LearnerTag::Kissme),
            "genuine-baseline" | "genuine" => Ok(LearnerTag::GenuineBaseline),
            other => Err(Error::InvalidArgument(format!("unknown learner {other:?}"))),
        }
    }
}

/// A learned symmetric Mahalanobis matrix and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricModel {
    matrix: DMatrix<f64>,
    learner: LearnerTag,
    lambda: Option<f64>,
    rho: Option<f64>,
}

impl MetricModel {
    /// Symmetrizes `matrix` and checks that it is square and finite.
    pub fn new(
        matrix: DMatrix<f64>,
        learner: LearnerTag,
        lambda: Option<f64>,
        rho: Option<f64>,
    ) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        if let Some(pos) = matrix.iter().position(|v| !v.is_finite()) {
            let n = matrix.nrows();
            return Err(Error::NonFinite {
                row: pos % n,
                col: pos / n,
            });
        }
        Ok(Self {
            matrix: symmetrize(&matrix),
            learner,
            lambda,
            rho,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn learner(&self) -> LearnerTag {
        self.learner
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    /// Spectral normalizer applied to the RMML contrast.
    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    /// `(x − y)ᵀ M (x − y)`.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: if x.len() != self.dim() {
                    x.len()
                } else {
                    y.len()
                },
            });
        }
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        Ok(quadratic_form(&self.matrix, &d))
    }
}

/// Anything that turns difference statistics into a metric. Implement this
/// to plug another closed-form learner into [`crate::fit_stage`].
pub trait MetricLearner {
    fn fit(&self, stats: &DifferenceStats) -> Result<MetricModel>;
}

/// The built-in learners, with their hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Learner {
    Rmml { lambda: f64 },
    Kissme,
    GenuineBaseline,
}

impl Learner {
    pub fn tag(&self) -> LearnerTag {
        match self {
            Learner::Rmml { .. } => LearnerTag::Rmml,
            Learner::Kissme => LearnerTag::Kissme,
            Learner::GenuineBaseline => LearnerTag::GenuineBaseline,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            Learner::Rmml { lambda } => Some(*lambda),
            _ => None,
        }
    }

    /// Rebuilds a learner from a tag; `lambda` is only read for RMML.
    pub fn from_tag(tag: LearnerTag, lambda: f64) -> Self {
        match tag {
            LearnerTag::Rmml => Learner::Rmml { lambda },
            LearnerTag::Kissme => Learner::Kissme,
            LearnerTag::GenuineBaseline => Learner::GenuineBaseline,
        }
    }
}

impl MetricLearner for Learner {
    fn fit(&self, stats: &DifferenceStats) -> Result<MetricModel> {
        match *self {
            Learner::Rmml { lambda } => fit_rmml(stats, lambda),
            Learner::Kissme => fit_kissme(stats),
            Learner::GenuineBaseline => fit_genuine_baseline(stats),
        }
    }
}

/// Trace-normalized contrast `sum_neg / tr_neg − sum_pos / tr_pos`.
///
/// `I + λ·C` is the stationary point of `λ·g₁ + ½‖M − I‖²_F`.
pub fn rmml_contrast(stats: &DifferenceStats) -> Result<DMatrix<f64>> {
    if !(stats.tr_pos() > 0.0) {
        return Err(Error::DegenerateStats(
            "every matched pair has a zero difference (tr_pos = 0)".into(),
        ));
    }
    if !(stats.tr_neg() > 0.0) {
        return Err(Error::DegenerateStats(
            "every unmatched pair has a zero difference (tr_neg = 0)".into(),
        ));
    }
    Ok(stats.sum_neg() / stats.tr_neg() - stats.sum_pos() / stats.tr_pos())
}

/// RMML: `M̂ = I + λ·C/ρ`, where `ρ` is the mean absolute eigenvalue of the
/// contrast `C`.
///
/// No covariance is inverted, so highly correlated matched pairs cannot make
/// the fit fail. The plain mean eigenvalue is not usable as `ρ`: both
/// normalized scatters have unit trace, so `tr(C) = 0` always.
pub fn fit_rmml(stats: &DifferenceStats, lambda: f64) -> Result<MetricModel> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let contrast = symmetrize(&rmml_contrast(stats)?);
    let (eigenvalues, _) = sym_eigen(&contrast)?;
    let rho = eigenvalues.iter().map(|v| v.abs()).sum::<f64>() / eigenvalues.len() as f64;
    if !(rho >= RMML_MIN_RHO) {
        return Err(Error::DegenerateStats(format!(
            "matched and unmatched scatter coincide (rho = {rho:e})"
        )));
    }
    let dim = stats.dim();
    let matrix = DMatrix::identity(dim, dim) + contrast * (lambda / rho);
    MetricModel::new(matrix, LearnerTag::Rmml, Some(lambda), Some(rho))
}

/// Inverts a covariance through Cholesky after checking its conditioning.
fn invert_covariance(sigma: &DMatrix<f64>, kind: CovarianceKind) -> Result<DMatrix<f64>> {
    let (eigenvalues, _) = sym_eigen(sigma)?;
    let smallest = eigenvalues[0];
    let largest = eigenvalues[eigenvalues.len() - 1];
    let condition = if smallest > 0.0 {
        largest / smallest
    } else {
        f64::INFINITY
    };
    if !(condition <= KISSME_MAX_CONDITION) {
        return Err(Error::SingularCovariance { kind, condition });
    }
    let chol = Cholesky::new(sigma.clone()).ok_or(Error::SingularCovariance { kind, condition })?;
    Ok(symmetrize(&chol.inverse()))
}

fn mean_covariances(stats: &DifferenceStats) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if stats.n_pos() == 0 || stats.n_neg() == 0 {
        return Err(Error::DegenerateStats(
            "need matched and unmatched pairs".into(),
        ));
    }
    Ok((
        stats.sum_pos() / stats.n_pos() as f64,
        stats.sum_neg() / stats.n_neg() as f64,
    ))
}

/// KISSME: `M = Σ_pos⁻¹ − Σ_neg⁻¹` with pair-count normalized covariances.
pub fn fit_kissme(stats: &DifferenceStats) -> Result<MetricModel> {
    let (sigma_pos, sigma_neg) = mean_covariances(stats)?;
    let inv_pos = invert_covariance(&sigma_pos, CovarianceKind::Matched)?;
    let inv_neg = invert_covariance(&sigma_neg, CovarianceKind::Unmatched)?;
    MetricModel::new(inv_pos - inv_neg, LearnerTag::Kissme, None, None)
}

/// Genuine-pair baseline: `M = Σ_pos⁻¹`.
pub fn fit_genuine_baseline(stats: &DifferenceStats) -> Result<MetricModel> {
    if stats.n_pos() == 0 {
        return Err(Error::DegenerateStats("need matched pairs".into()));
    }
    let sigma_pos = stats.sum_pos() / stats.n_pos() as f64;
    let inv = invert_covariance(&sigma_pos, CovarianceKind::Matched)?;
    MetricModel::new(inv, LearnerTag::GenuineBaseline, None, None)
}
