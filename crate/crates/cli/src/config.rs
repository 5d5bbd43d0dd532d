//! Run configuration: command-line flags over an optional TOML file over
//! built-in defaults.

use std::path::{Path, PathBuf};

use ecml::LearnerTag;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_STAGES: usize = 3;
pub const DEFAULT_LAMBDA_STANDALONE: f64 = 0.5;
pub const DEFAULT_LAMBDA_CASCADE: f64 = 0.1;
pub const DEFAULT_REPEATS: usize = 5;
pub const DEFAULT_BINS: usize = ecml::eval::DEFAULT_BINS;

/// Settings that may come from flags or from the config file. `None` means
/// "not given at this layer".
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub learner: Option<String>,
    pub cascade: Option<bool>,
    pub stages: Option<usize>,
    pub lambda: Option<f64>,
    pub pca_dim: Option<usize>,
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub bins: Option<usize>,
    pub features: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Overrides {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fields set here win; the rest fall back to `lower`.
    pub fn over(self, lower: Overrides) -> Overrides {
        Overrides {
            learner: self.learner.or(lower.learner),
            cascade: self.cascade.or(lower.cascade),
            stages: self.stages.or(lower.stages),
            lambda: self.lambda.or(lower.lambda),
            pca_dim: self.pca_dim.or(lower.pca_dim),
            seed: self.seed.or(lower.seed),
            repeats: self.repeats.or(lower.repeats),
            bins: self.bins.or(lower.bins),
            features: self.features.or(lower.features),
            pairs: self.pairs.or(lower.pairs),
            model: self.model.or(lower.model),
            report: self.report.or(lower.report),
        }
    }
}

/// Fully resolved configuration for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub learner: LearnerTag,
    pub cascade: bool,
    /// Stage count `L`; only meaningful when `cascade` is set.
    pub stages: usize,
    pub lambda: f64,
    pub pca_dim: Option<usize>,
    pub seed: u64,
    pub repeats: usize,
    pub bins: usize,
    pub features: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::resolve(Overrides::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn resolve(o: Overrides) -> Result<Self, CliError> {
        let learner = match o.learner {
            Some(name) => name
                .parse()
                .map_err(|e: ecml::Error| CliError::Validation(e.to_string()))?,
            None => LearnerTag::Rmml,
        };
        let cascade = o.cascade.unwrap_or(false);
        let default_lambda = if cascade {
            DEFAULT_LAMBDA_CASCADE
        } else {
            DEFAULT_LAMBDA_STANDALONE
        };
        let config = Self {
            learner,
            cascade,
            stages: o.stages.unwrap_or(DEFAULT_STAGES),
            lambda: o.lambda.unwrap_or(default_lambda),
            pca_dim: o.pca_dim,
            seed: o.seed.unwrap_or(0),
            repeats: o.repeats.unwrap_or(DEFAULT_REPEATS),
            bins: o.bins.unwrap_or(DEFAULT_BINS),
            features: o.features,
            pairs: o.pairs,
            model: o.model,
            report: o.report,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.cascade && self.stages < 1 {
            return Err(CliError::Validation(
                "--cascade requires --stages >= 1".into(),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(CliError::Validation(format!(
                "--lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if self.repeats < 1 {
            return Err(CliError::Validation("--repeats must be >= 1".into()));
        }
        if self.bins < 1 {
            return Err(CliError::Validation("--bins must be >= 1".into()));
        }
        if self.pca_dim == Some(0) {
            return Err(CliError::Validation("--pca-dim must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of ensemble stages actually fitted.
    pub fn effective_stages(&self) -> usize {
        if self.cascade {
            self.stages
        } else {
            0
        }
    }

    pub fn learner(&self) -> ecml::Learner {
        ecml::Learner::from_tag(self.learner, self.lambda)
    }

    pub fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
        path.as_deref()
            .ok_or_else(|| CliError::Validation(format!("missing required --{flag}")))
    }
}
