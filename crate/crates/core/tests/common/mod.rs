//! Reference implementations used as oracles by the integration tests.
//! Written without nalgebra's decompositions so they fail independently.

#![allow(dead_code, clippy::needless_range_loop)]

use ecml::{FeatureMatrix, Pair, PairSet};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)]).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off.sqrt() < 1e-15 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    (&a + a.transpose()) * 0.5
}

pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, rank, |_, _| gaussian(rng));
    &a * a.transpose()
}

pub fn random_features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let data = (0..n * d).map(|_| gaussian(rng)).collect();
    FeatureMatrix::new(n, d, data).unwrap()
}

/// Random pairs with both labels present and i != j.
pub fn random_pairs(rng: &mut ChaCha8Rng, samples: usize, count: usize) -> PairSet {
    (0..count)
        .map(|k| {
            let i = rng.random_range(0..samples);
            let mut j = rng.random_range(0..samples - 1);
            if j >= i {
                j += 1;
            }
            Pair::new(i, j, k % 2 == 0)
        })
        .collect()
}

pub fn diff(features: &FeatureMatrix, pair: &Pair) -> Vec<f64> {
    features
        .row(pair.i)
        .iter()
        .zip(features.row(pair.j))
        .map(|(a, b)| a - b)
        .collect()
}

pub fn quad(m: &DMatrix<f64>, d: &[f64]) -> f64 {
    let n = d.len();
    let mut total = 0.0;
    for r in 0..n {
        for c in 0..n {
            total += d[r] * m[(r, c)] * d[c];
        }
    }
    total
}

/// λ·g₁ + ½‖M−I‖²_F summed pair by pair.
pub fn brute_objective(
    features: &FeatureMatrix,
    pairs: &PairSet,
    m: &DMatrix<f64>,
    lambda: f64,
) -> f64 {
    let (mut pos, mut neg, mut tr_pos, mut tr_neg) = (0.0, 0.0, 0.0, 0.0);
    for pair in pairs.iter() {
        let d = diff(features, pair);
        let norm: f64 = d.iter().map(|v| v * v).sum();
        if pair.matched {
            pos += quad(m, &d);
            tr_pos += norm;
        } else {
            neg += quad(m, &d);
            tr_neg += norm;
        }
    }
    let n = m.nrows();
    let mut reg = 0.0;
    for r in 0..n {
        for c in 0..n {
            let e = m[(r, c)] - if r == c { 1.0 } else { 0.0 };
            reg += e * e;
        }
    }
    lambda * (pos / tr_pos - neg / tr_neg) + 0.5 * reg
}

/// Brute-force EER: every pair of ROC operating points (one per distinct
/// threshold) is joined by a chord; the EER is the smallest FAR = FRR
/// crossing on any chord, i.e. the crossing of the lower convex envelope.
pub fn brute_eer(scores: &[f64], labels: &[bool]) -> f64 {
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut cuts = vec![thresholds[0]];
    cuts.extend(thresholds.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    cuts.push(f64::INFINITY);
    let points: Vec<(f64, f64)> = cuts
        .iter()
        .map(|&t| {
            let mut far = 0.0;
            let mut frr = 0.0;
            for (s, &l) in scores.iter().zip(labels) {
                if l && *s >= t {
                    frr += 1.0;
                }
                if !l && *s < t {
                    far += 1.0;
                }
            }
            (far / n_neg, frr / n_pos)
        })
        .collect();
    let mut best = f64::INFINITY;
    for a in &points {
        for b in &points {
            let ga = a.0 - a.1;
            let gb = b.0 - b.1;
            if ga <= 0.0 && gb >= 0.0 {
                let w = if gb - ga == 0.0 { 0.0 } else { -ga / (gb - ga) };
                best = best.min(a.0 + w * (b.0 - a.0));
            }
        }
    }
    best
}

/// Features and pairs whose differences are exactly the given vectors:
/// every pair joins one listed row with a shared zero row.
pub fn from_differences(pos: &[Vec<f64>], neg: &[Vec<f64>]) -> (FeatureMatrix, PairSet) {
    let dim = pos.first().or(neg.first()).map_or(0, Vec::len);
    let mut data = vec![0.0; dim];
    let mut pairs = Vec::with_capacity(pos.len() + neg.len());
    for (k, d) in pos.iter().chain(neg).enumerate() {
        data.extend_from_slice(d);
        pairs.push(Pair::new(k + 1, 0, k < pos.len()));
    }
    let n = pos.len() + neg.len() + 1;
    (
        FeatureMatrix::new(n, dim, data).unwrap(),
        PairSet::new(pairs),
    )
}
