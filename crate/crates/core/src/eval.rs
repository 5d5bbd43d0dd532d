//! Verification scoring, equal error rate and matched/unmatched K-L
//! divergence.
//!
//! Scores are distances: a pair is accepted as matched when its score is
//! below the threshold. Orientation is never flipped.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, PairSet};
use crate::parallel::Execution;

/// Additive smoothing applied to every histogram bin count.
pub const KL_SMOOTHING: f64 = 1e-10;
pub const DEFAULT_BINS: usize = 100;

/// Per-pair distances with their match labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPairs {
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl ScoredPairs {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: scores.len(),
                actual: labels.len(),
            });
        }
        if let Some(k) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite { row: k, col: 0 });
        }
        if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
            return Err(Error::InvalidArgument(
                "scored pairs need both matched and unmatched labels".into(),
            ));
        }
        Ok(Self { scores, labels })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `(matched, unmatched)` counts.
    pub fn counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l).count();
        (pos, self.labels.len() - pos)
    }

    fn split(&self) -> (Vec<f64>, Vec<f64>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (&s, &l) in self.scores.iter().zip(&self.labels) {
            if l {
                pos.push(s)
            } else {
                neg.push(s)
            }
        }
        (pos, neg)
    }
}

/// Scores every pair with `distance_fn(x_i, x_j)`.
pub fn score_pairs<F>(
    distance_fn: F,
    features: &FeatureMatrix,
    pairs: &PairSet,
) -> Result<ScoredPairs>
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync + Send,
{
    score_pairs_with(distance_fn, features, pairs, Execution::default())
}

pub fn score_pairs_with<F>(
    distance_fn: F,
    features: &FeatureMatrix,
    pairs: &PairSet,
    execution: Execution,
) -> Result<ScoredPairs>
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync + Send,
{
    pairs.validate(features.count())?;
    let list = pairs.as_slice();
    let scores = execution.try_map(list.len(), |k| {
        distance_fn(features.row(list[k].i), features.row(list[k].j))
    })?;
    ScoredPairs::new(scores, list.iter().map(|p| p.matched).collect())
}

/// One threshold on the ROC sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    /// Fraction of unmatched pairs with score below the threshold.
    pub far: f64,
    /// Fraction of matched pairs with score at or above the threshold.
    pub frr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerResult {
    pub eer: f64,
    pub threshold: f64,
    /// All scores were identical, so no threshold separates anything.
    pub degenerate: bool,
}

/// Operating points for every distinct threshold, from accept-nothing to
/// accept-everything. Interior thresholds sit midway between consecutive
/// distinct scores.
pub fn roc_points(scored: &ScoredPairs) -> Vec<RocPoint> {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored.scores[a].total_cmp(&scored.scores[b]));
    let (n_pos, n_neg) = scored.counts();

    let first = scored.scores[order[0]];
    let mut points = vec![RocPoint {
        threshold: first,
        far: 0.0,
        frr: 1.0,
    }];
    let (mut acc_pos, mut acc_neg) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let value = scored.scores[order[k]];
        while k < order.len() && scored.scores[order[k]] == value {
            if scored.labels[order[k]] {
                acc_pos += 1;
            } else {
                acc_neg += 1;
            }
            k += 1;
        }
        let threshold = if k < order.len() {
            0.5 * (value + scored.scores[order[k]])
        } else {
            value.next_up()
        };
        points.push(RocPoint {
            threshold,
            far: acc_neg as f64 / n_neg as f64,
            frr: (n_pos - acc_pos) as f64 / n_pos as f64,
        });
    }
    points
}

fn cross(o: &RocPoint, a: &RocPoint, b: &RocPoint) -> f64 {
    (a.far - o.far) * (b.frr - o.frr) - (a.frr - o.frr) * (b.far - o.far)
}

/// Equal error rate on the convex hull of the ROC operating points.
///
/// The FAR = FRR crossing is interpolated linearly between the two hull
/// vertices that bracket it, i.e. the error of the best randomized mix of
/// two thresholds. Perfect separation gives 0 and identical scores give 0.5.
pub fn compute_eer(scored: &ScoredPairs) -> EerResult {
    let points = roc_points(scored);
    let degenerate = points.len() == 2;

    let mut sorted = points.clone();
    sorted.sort_by(|a, b| a.far.total_cmp(&b.far).then(a.frr.total_cmp(&b.frr)));
    let mut hull: Vec<RocPoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }

    let diff = |p: &RocPoint| p.far - p.frr;
    let j = hull
        .iter()
        .position(|p| diff(p) >= 0.0)
        .expect("accept-everything point has FAR = 1 >= FRR");
    let (eer, threshold) = if diff(&hull[j]) == 0.0 || j == 0 {
        (hull[j].far, hull[j].threshold)
    } else {
        let (a, b) = (&hull[j - 1], &hull[j]);
        let alpha = -diff(a) / (diff(b) - diff(a));
        (
            a.far + alpha * (b.far - a.far),
            a.threshold + alpha * (b.threshold - a.threshold),
        )
    };
    EerResult {
        eer,
        threshold,
        degenerate,
    }
}

/// `KL(Pos ‖ Neg)` in nats between histograms of matched and unmatched
/// scores over their shared range.
pub fn kl_divergence(scored: &ScoredPairs, bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be >= 1".into()));
    }
    let lo = scored.scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scored
        .scores
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::InvalidArgument(
            "K-L divergence needs at least two distinct scores".into(),
        ));
    }
    let (pos, neg) = scored.split();
    let width = hi - lo;
    let histogram = |values: &[f64]| {
        let mut h = vec![KL_SMOOTHING; bins];
        for &v in values {
            let b = (((v - lo) / width) * bins as f64) as usize;
            h[b.min(bins - 1)] += 1.0;
        }
        let total: f64 = h.iter().sum();
        h.iter_mut().for_each(|v| *v /= total);
        h
    };
    let p = histogram(&pos);
    let q = histogram(&neg);
    Ok(p.iter().zip(&q).map(|(p, q)| p * (p / q).ln()).sum())
}

/// Mean and sample standard deviation.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub eer: f64,
    pub threshold: f64,
    pub degenerate: bool,
    /// `KL(Pos ‖ Neg)` in nats.
    pub kl_pos_neg: f64,
    pub bins: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    pub roc: Vec<RocPoint>,
}

impl EvalReport {
    pub fn evaluate(scored: &ScoredPairs, bins: usize) -> Result<Self> {
        let eer = compute_eer(scored);
        let kl = kl_divergence(scored, bins)?;
        let (n_pos, n_neg) = scored.counts();
        Ok(Self {
            eer: eer.eer,
            threshold: eer.threshold,
            degenerate: eer.degenerate,
            kl_pos_neg: kl,
            bins,
            n_pos,
            n_neg,
            roc: roc_points(scored),
        })
    }

    /// Flat `key=value` document. Floats are written in shortest
    /// round-trip form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "eer={}", self.eer);
        let _ = writeln!(s, "threshold={}", self.threshold);
        let _ = writeln!(s, "degenerate={}", self.degenerate);
        let _ = writeln!(s, "kl={}", self.kl_pos_neg);
        let _ = writeln!(s, "kl_direction=pos||neg");
        let _ = writeln!(s, "bins={}", self.bins);
        let _ = writeln!(s, "n_pos={}", self.n_pos);
        let _ = writeln!(s, "n_neg={}", self.n_neg);
        s
    }

    pub fn roc_csv(&self) -> String {
        let mut s = String::from("threshold,far,frr\n");
        for p in &self.roc {
            let _ = writeln!(s, "{},{},{}", p.threshold, p.far, p.frr);
        }
        s
    }

    /// Parses [`EvalReport::to_text`] output plus an optional ROC table.
    pub fn from_text(text: &str, roc_csv: Option<&str>) -> Result<Self> {
        fn field<T: std::str::FromStr>(text: &str, key: &str) -> Result<T> {
            for (n, line) in text.lines().enumerate() {
                if let Some((k, v)) = line.split_once('=') {
                    if k.trim() == key {
                        return v.trim().parse().map_err(|_| Error::Parse {
                            line: n + 1,
                            message: format!("bad value for {key}: {v:?}"),
                        });
                    }
                }
            }
            Err(Error::Malformed(format!("report lacks key {key:?}")))
        }
        let mut roc = Vec::new();
        if let Some(csv) = roc_csv {
            for (n, line) in csv.lines().enumerate().skip(1) {
                if line.trim().is_empty() {
                    continue;
                }
                let vals: Vec<f64> = line
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Parse {
                        line: n + 1,
                        message: format!("bad roc row {line:?}"),
                    })?;
                if vals.len() != 3 {
                    return Err(Error::Parse {
                        line: n + 1,
                        message: "roc rows are threshold,far,frr".into(),
                    });
                }
                roc.push(RocPoint {
                    threshold: vals[0],
                    far: vals[1],
                    frr: vals[2],
                });
            }
        }
        Ok(Self {
            eer: field(text, "eer")?,
            threshold: field(text, "threshold")?,
            degenerate: field(text, "degenerate")?,
            kl_pos_neg: field(text, "kl")?,
            bins: field(text, "bins")?,
            n_pos: field(text, "n_pos")?,
            n_neg: field(text, "n_neg")?,
            roc,
        })
    }
}
