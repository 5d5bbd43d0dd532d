//! Command-line front end for the `ecml` metric-learning library.
//!
//! Exit codes: 0 on success, 2 for invalid input or configuration, 3 when
//! the numerics fail (for example a singular KISSME covariance).

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ecml::SyntheticParams;

use crate::commands::SynthOutputs;
use crate::config::{Overrides, RunConfig};

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Core(ecml::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(msg) => f.write_str(msg),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ecml::Error> for CliError {
    fn from(e: ecml::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(ecml::Error::Io(e))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ecml",
    version,
    about = "Fit and evaluate cascade Mahalanobis metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by `fit` and `eval`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// rmml, kissme or genuine-baseline.
    #[arg(long)]
    pub learner: Option<String>,
    /// Stack ensemble stages before the final metric.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub cascade: Option<bool>,
    #[arg(long, value_name = "L")]
    pub stages: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub pca_dim: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub features: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub pairs: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

impl ConfigArgs {
    fn overrides(&self, model: Option<PathBuf>) -> Overrides {
        Overrides {
            learner: self.learner.clone(),
            cascade: self.cascade,
            stages: self.stages,
            lambda: self.lambda,
            pca_dim: self.pca_dim,
            seed: self.seed,
            repeats: self.repeats,
            bins: self.bins,
            features: self.features.clone(),
            pairs: self.pairs.clone(),
            model,
            report: self.report.clone(),
        }
    }

    /// Flags over config file over defaults.
    pub fn resolve(&self, model: Option<PathBuf>) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => Overrides::load(path)?,
            None => Overrides::default(),
        };
        RunConfig::resolve(self.overrides(model).over(file))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a plain or cascade metric and write the model file.
    Fit {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Score pairs under one or more models and report EER and KL.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        /// Repeat to evaluate several seed replicas together.
        #[arg(long = "model", value_name = "PATH")]
        models: Vec<PathBuf>,
        /// Write the ROC table (threshold,far,frr) of the first model.
        #[arg(long, value_name = "PATH")]
        roc: Option<PathBuf>,
    },
    /// Map features into the final metric space of a model.
    Transform {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, value_name = "PATH")]
        features: PathBuf,
        /// Output feature file; `.bin` or `.cmf` selects binary, anything else CSV.
        #[arg(long, value_name = "PATH")]
        output: PathBuf,
    },
    /// Generate Gaussian identity clouds with labels and pairs.
    Synth {
        #[arg(long, default_value_t = 20)]
        identities: usize,
        #[arg(long, default_value_t = 10)]
        samples_per_id: usize,
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        intra_spread: f64,
        #[arg(long, default_value_t = 2.0)]
        inter_spread: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0.5)]
        pos_fraction: f64,
        #[arg(long, value_name = "PATH")]
        features: PathBuf,
        #[arg(long, value_name = "PATH")]
        labels: PathBuf,
        #[arg(long, value_name = "PATH")]
        pairs: PathBuf,
    },
    /// Summarize a model file.
    Inspect {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
    },
    /// Sample matched/unmatched pairs from a label file.
    Pairs {
        #[arg(long, value_name = "PATH")]
        labels: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0.5)]
        pos_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "PATH")]
        pairs: PathBuf,
    },
}

/// Runs one parsed command. Results go to `out`, timing lines to `diag`.
pub fn run(cli: Cli, out: &mut dyn Write, diag: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Fit { config, model } => {
            let config = config.resolve(model)?;
            commands::cmd_fit(&config, out, diag)?;
        }
        Command::Eval {
            config,
            models,
            roc,
        } => {
            let resolved = config.resolve(None)?;
            let models = if models.is_empty() {
                let file = match &config.config {
                    Some(path) => Overrides::load(path)?,
                    None => Overrides::default(),
                };
                file.model.into_iter().collect()
            } else {
                models
            };
            commands::cmd_eval(&resolved, &models, roc.as_deref(), out, diag)?;
        }
        Command::Transform {
            model,
            features,
            output,
        } => {
            commands::cmd_transform(&model, &features, &output, diag)?;
        }
        Command::Synth {
            identities,
            samples_per_id,
            dim,
            intra_spread,
            inter_spread,
            seed,
            count,
            pos_fraction,
            features,
            labels,
            pairs,
        } => {
            let params = SyntheticParams {
                identities,
                samples_per_id,
                dim,
                intra_spread,
                inter_spread,
                seed,
            };
            let outputs = SynthOutputs {
                features: &features,
                labels: &labels,
                pairs: &pairs,
                pair_count: count,
                pos_fraction,
            };
            commands::cmd_synth(&params, &outputs, out)?;
        }
        Command::Inspect { model } => commands::cmd_inspect(&model, out)?,
        Command::Pairs {
            labels,
            count,
            pos_fraction,
            seed,
            pairs,
        } => commands::cmd_pairs(&labels, count, pos_fraction, seed, &pairs, out)?,
    }
    Ok(())
}
