use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ecml::eval::mean_and_std;
use ecml::features::{load_labels, load_pairs, save_labels, save_pairs};
use ecml::{
    apply_pca, fit_cascade, fit_pca, gen_synthetic, load_features, sample_pairs, save_features,
    score_pairs, transform, CascadeParams, EvalReport, FeatureFormat, FeatureMatrix, ModelBundle,
    SyntheticParams,
};

use crate::config::RunConfig;
use crate::CliError;

/// Writes `phase,seconds` lines to the diagnostics stream.
struct Timer<'a> {
    diag: &'a mut dyn Write,
    start: Instant,
}

impl<'a> Timer<'a> {
    fn new(diag: &'a mut dyn Write) -> Self {
        Self {
            diag,
            start: Instant::now(),
        }
    }

    fn lap(&mut self, phase: &str) -> Result<(), CliError> {
        writeln!(
            self.diag,
            "{phase},{:.6}",
            self.start.elapsed().as_secs_f64()
        )?;
        self.start = Instant::now();
        Ok(())
    }
}

fn read_features(path: &Path) -> Result<FeatureMatrix, CliError> {
    Ok(load_features(path, FeatureFormat::detect(path)?)?)
}

/// Path of the `r`-th seed replica written by `fit --repeats`.
pub fn replica_path(model: &Path, r: usize) -> PathBuf {
    if r == 0 {
        model.to_path_buf()
    } else {
        let mut name = model.as_os_str().to_owned();
        name.push(format!(".{r}"));
        PathBuf::from(name)
    }
}

/// Fits the configured model and writes it. Cascade fits with `repeats > 1`
/// also write seed replicas `seed + r` to `<model>.r`. Returns the paths
/// written.
pub fn cmd_fit(
    config: &RunConfig,
    out: &mut dyn Write,
    diag: &mut dyn Write,
) -> Result<Vec<PathBuf>, CliError> {
    let features_path = RunConfig::require(&config.features, "features")?;
    let pairs_path = RunConfig::require(&config.pairs, "pairs")?;
    let model_path = RunConfig::require(&config.model, "model")?;
    let mut timer = Timer::new(diag);

    let features = read_features(features_path)?;
    let pairs = load_pairs(pairs_path)?;
    pairs.validate(features.count())?;
    timer.lap("load")?;

    let pca = match config.pca_dim {
        Some(k) => Some(fit_pca(&features, k)?),
        None => None,
    };
    let features = match &pca {
        Some(model) => apply_pca(model, &features)?,
        None => features,
    };
    if pca.is_some() {
        timer.lap("pca")?;
    }

    let replicas = if config.cascade { config.repeats } else { 1 };
    let learner = config.learner();
    let mut written = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let params = CascadeParams {
            stages: config.effective_stages(),
            seed: config.seed.wrapping_add(r as u64),
            ..Default::default()
        };
        let cascade = fit_cascade(&features, &pairs, &learner, &params)?;
        timer.lap("fit")?;

        let path = replica_path(model_path, r);
        writeln!(out, "model: {}", path.display())?;
        writeln!(out, "seed: {}", params.seed)?;
        for (s, stage) in cascade.stages().iter().enumerate() {
            writeln!(out, "stage {s} clamped: {}", join(&stage.clamped_counts()))?;
        }
        ModelBundle::new(pca.clone(), cascade)?.save(&path)?;
        timer.lap("write")?;
        written.push(path);
    }
    Ok(written)
}

/// Aggregate over the evaluated models.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub reports: Vec<EvalReport>,
    pub eer_mean: f64,
    pub eer_std: f64,
}

impl EvalSummary {
    pub fn to_text(&self) -> String {
        if let [single] = self.reports.as_slice() {
            return single.to_text();
        }
        let eers: Vec<f64> = self.reports.iter().map(|r| r.eer).collect();
        let kls: Vec<f64> = self.reports.iter().map(|r| r.kl_pos_neg).collect();
        let (kl_mean, kl_std) = mean_and_std(&kls);
        let mut s = format!(
            "repeats={}\neer_mean={}\neer_std={}\nkl_mean={}\nkl_std={}\nkl_direction=pos||neg\n",
            self.reports.len(),
            self.eer_mean,
            self.eer_std,
            kl_mean,
            kl_std
        );
        for (r, eer) in eers.iter().enumerate() {
            s.push_str(&format!("eer.{r}={eer}\n"));
        }
        s
    }
}

/// Scores the configured pairs under every model in `models`.
pub fn cmd_eval(
    config: &RunConfig,
    models: &[PathBuf],
    roc: Option<&Path>,
    out: &mut dyn Write,
    diag: &mut dyn Write,
) -> Result<EvalSummary, CliError> {
    if models.is_empty() {
        return Err(CliError::Validation("missing required --model".into()));
    }
    let features_path = RunConfig::require(&config.features, "features")?;
    let pairs_path = RunConfig::require(&config.pairs, "pairs")?;
    let mut timer = Timer::new(diag);
    let features = read_features(features_path)?;
    let pairs = load_pairs(pairs_path)?;
    pairs.validate(features.count())?;
    timer.lap("load")?;

    let mut reports = Vec::with_capacity(models.len());
    for path in models {
        let bundle = ModelBundle::load(path)?;
        if features.dim() != bundle.input_dim() {
            return Err(ecml::Error::DimensionMismatch {
                expected: bundle.input_dim(),
                actual: features.dim(),
            }
            .into());
        }
        let reduced = match &bundle.pca {
            Some(pca) => apply_pca(pca, &features)?,
            None => features.clone(),
        };
        let mapped = transform(&bundle.cascade, &reduced)?;
        let cascade = &bundle.cascade;
        let scored = score_pairs(|a, b| Ok(cascade.output_distance(a, b)), &mapped, &pairs)?;
        timer.lap("score")?;
        reports.push(EvalReport::evaluate(&scored, config.bins)?);
        timer.lap("evaluate")?;
    }
    let eers: Vec<f64> = reports.iter().map(|r| r.eer).collect();
    let (eer_mean, eer_std) = mean_and_std(&eers);
    let summary = EvalSummary {
        reports,
        eer_mean,
        eer_std,
    };

    let text = summary.to_text();
    out.write_all(text.as_bytes())?;
    if let Some(path) = &config.report {
        std::fs::write(path, &text)?;
    }
    if let Some(path) = roc {
        std::fs::write(path, summary.reports[0].roc_csv())?;
    }
    Ok(summary)
}

/// Maps features through a stored model (PCA included) into the final
/// metric's space.
pub fn cmd_transform(
    model: &Path,
    features: &Path,
    output: &Path,
    diag: &mut dyn Write,
) -> Result<FeatureMatrix, CliError> {
    let mut timer = Timer::new(diag);
    let bundle = ModelBundle::load(model)?;
    let x = read_features(features)?;
    timer.lap("load")?;
    let x = match &bundle.pca {
        Some(pca) => apply_pca(pca, &x)?,
        None => x,
    };
    let mapped = transform(&bundle.cascade, &x)?;
    timer.lap("transform")?;
    save_features(output, &mapped, FeatureFormat::from_extension(output))?;
    Ok(mapped)
}

pub struct SynthOutputs<'a> {
    pub features: &'a Path,
    pub labels: &'a Path,
    pub pairs: &'a Path,
    pub pair_count: usize,
    pub pos_fraction: f64,
}

pub fn cmd_synth(
    params: &SyntheticParams,
    outputs: &SynthOutputs<'_>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (x, labels) = gen_synthetic(params)?;
    let pairs = sample_pairs(
        &labels,
        outputs.pair_count,
        outputs.pos_fraction,
        params.seed,
    )?;
    save_features(
        outputs.features,
        &x,
        FeatureFormat::from_extension(outputs.features),
    )?;
    save_labels(outputs.labels, &labels)?;
    save_pairs(outputs.pairs, &pairs)?;
    let (pos, neg) = pairs.counts();
    writeln!(out, "seed: {}", params.seed)?;
    writeln!(out, "samples: {} dim: {}", x.count(), x.dim())?;
    writeln!(out, "pairs: {pos} matched, {neg} unmatched")?;
    Ok(())
}

pub fn cmd_pairs(
    labels: &Path,
    count: usize,
    pos_fraction: f64,
    seed: u64,
    output: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let labels = load_labels(labels)?;
    let pairs = sample_pairs(&labels, count, pos_fraction, seed)?;
    save_pairs(output, &pairs)?;
    let (pos, neg) = pairs.counts();
    writeln!(out, "seed: {seed}")?;
    writeln!(out, "pairs: {pos} matched, {neg} unmatched")?;
    Ok(())
}

/// Human-readable model summary.
pub fn cmd_inspect(model: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let bundle = ModelBundle::load(model)?;
    let cascade = &bundle.cascade;
    let metric = cascade.final_metric();
    writeln!(out, "learner: {}", metric.learner())?;
    if let Some(lambda) = metric.lambda() {
        writeln!(out, "lambda: {lambda}")?;
    }
    if let Some(rho) = metric.rho() {
        writeln!(out, "rho: {rho}")?;
    }
    writeln!(out, "stages: {}", cascade.stages().len())?;
    if !cascade.stages().is_empty() {
        let counts: Vec<usize> = cascade.stages().iter().map(|s| s.group_count()).collect();
        writeln!(out, "group_counts: {}", join(&counts))?;
        for (s, stage) in cascade.stages().iter().enumerate() {
            writeln!(out, "stage {s} clamped: {}", join(&stage.clamped_counts()))?;
        }
    }
    writeln!(out, "seed: {}", cascade.seed())?;
    writeln!(out, "input_dim: {}", bundle.input_dim())?;
    if let Some(pca) = &bundle.pca {
        writeln!(out, "pca: {} -> {}", pca.input_dim(), pca.output_dim())?;
    }
    writeln!(out, "output_dim: {}", cascade.output_dim())?;
    Ok(())
}

fn join(values: &[usize]) -> String {
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}
