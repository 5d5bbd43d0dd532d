//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Every criterion is measured at its stated tolerance. Criteria listed in
//! `KNOWN_UNMET` are reported but do not fail the run; all others must pass.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::Instant;

use ecml::eval::mean_and_std;
use ecml::metrics::rmml_contrast;
use ecml::{
    accumulate_stats, cascade_distance, compute_eer, fit_cascade, fit_kissme, fit_rmml,
    gen_synthetic, group_counts, kl_divergence, mcd, objective, sample_pairs, score_pairs,
    transform, CascadeModel, CascadeParams, Error, FeatureMatrix, Learner, ModelBundle, PairSet,
    ScoredPairs, SyntheticParams,
};
use ecml_cli::commands::cmd_fit;
use ecml_cli::config::{Overrides, RunConfig};
use nalgebra::DMatrix;
use rand::Rng;

const KNOWN_UNMET: &[u32] = &[7, 10, 12];

type Check = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn closed_form_instances() -> Vec<(FeatureMatrix, PairSet, f64)> {
    (0..25u64)
        .map(|k| {
            let d = [4, 8, 16][k as usize % 3];
            let mut rng = common::rng(1000 + k);
            let x = common::random_features(&mut rng, 120, d);
            let pairs = common::random_pairs(&mut rng, 120, 200);
            let lambda = rng.random_range(0.1..2.0);
            (x, pairs, lambda)
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst_grad: f64 = 0.0;
    let mut beaten = 0;
    let h = 1e-4;
    for (k, (x, pairs, lambda)) in closed_form_instances().into_iter().enumerate() {
        let stats = accumulate_stats(&x, &pairs).unwrap();
        let d = stats.dim();
        let m = DMatrix::identity(d, d) + rmml_contrast(&stats).unwrap() * lambda;
        for r in 0..d {
            for c in 0..d {
                let mut plus = m.clone();
                let mut minus = m.clone();
                plus[(r, c)] += h;
                minus[(r, c)] -= h;
                let g = (objective(&stats, &plus, lambda).unwrap()
                    - objective(&stats, &minus, lambda).unwrap())
                    / (2.0 * h);
                worst_grad = worst_grad.max(g.abs());
            }
        }
        let best = objective(&stats, &m, lambda).unwrap();
        let mut rng = common::rng(5000 + k as u64);
        for _ in 0..100 {
            let e = common::random_symmetric(&mut rng, d);
            let e = &e * (0.1 / e.norm());
            if objective(&stats, &(&m + e), lambda).unwrap() < best {
                beaten += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_grad <= 1e-5 && beaten == 0 && secs < 30.0,
        format!("max |grad| {worst_grad:.2e} (<= 1e-5), {beaten}/2500 perturbations lower, {secs:.2}s (< 30s)"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for (k, (x, pairs, lambda)) in closed_form_instances().into_iter().enumerate() {
        let stats = accumulate_stats(&x, &pairs).unwrap();
        let d = stats.dim();
        let mut rng = common::rng(7000 + k as u64);
        let closed = DMatrix::identity(d, d) + rmml_contrast(&stats).unwrap() * lambda;
        for m in [closed, common::random_symmetric(&mut rng, d)] {
            let fast = objective(&stats, &m, lambda).unwrap();
            let slow = common::brute_objective(&x, &pairs, &m, lambda);
            worst = worst.max((fast - slow).abs() / slow.abs().max(f64::MIN_POSITIVE));
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max relative gap {worst:.2e} (<= 1e-9) over 25 instances"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = common::rng(3);
    let mut spectrum_gap: f64 = 0.0;
    let mut recon: f64 = 0.0;
    for _ in 0..100 {
        let m = common::random_symmetric(&mut rng, 32);
        let p = mcd(&m).unwrap();
        let got = common::jacobi_eigenvalues(&p.gram());
        let mut want: Vec<f64> = common::jacobi_eigenvalues(&m)
            .iter()
            .map(|v| v.max(0.0))
            .collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            spectrum_gap = spectrum_gap.max((g - w).abs());
        }
        let psd = common::random_psd(&mut rng, 32, 32);
        let p = mcd(&psd).unwrap();
        recon = recon.max((p.gram() - &psd).norm() / psd.norm());
    }
    outcome(
        spectrum_gap <= 1e-8 && recon <= 1e-8,
        format!("max eigenvalue gap {spectrum_gap:.2e} (<= 1e-8), PSD relative reconstruction {recon:.2e} (<= 1e-8)"),
    )
}

fn criterion_4() -> Outcome {
    let (d, n) = (8, 100_000);
    let mut rng = common::rng(4);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng, sd: f64| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|_| sd * common::gaussian(rng)).collect())
            .collect()
    };
    let pos = draw(&mut rng, 1.0);
    let neg = draw(&mut rng, 2.0);
    let (x, pairs) = common::from_differences(&pos, &neg);
    let m = fit_kissme(&accumulate_stats(&x, &pairs).unwrap()).unwrap();
    // Off-diagonal targets are zero, so their tolerance is taken as 5% of the
    // diagonal value.
    let tol = 0.05 * 0.75;
    let mut worst: f64 = 0.0;
    for r in 0..d {
        for c in 0..d {
            let target = if r == c { 0.75 } else { 0.0 };
            worst = worst.max((m.matrix()[(r, c)] - target).abs());
        }
    }
    outcome(
        worst <= tol,
        format!("max |M - 0.75 I| entry {worst:.4} (<= {tol:.4})"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = common::rng(5);
    let repeated: Vec<f64> = (0..10).map(|_| common::gaussian(&mut rng)).collect();
    let pos = vec![repeated; 3];
    let neg: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..10).map(|_| common::gaussian(&mut rng)).collect())
        .collect();
    let (x, pairs) = common::from_differences(&pos, &neg);
    let stats = accumulate_stats(&x, &pairs).unwrap();
    let kissme = fit_kissme(&stats);
    let rmml = fit_rmml(&stats, 0.5);
    let singular = matches!(kissme, Err(Error::SingularCovariance { .. }));
    outcome(
        singular && rmml.is_ok(),
        format!(
            "kissme: {}, rmml: {}",
            kissme.err().map_or("fitted".into(), |e| e.to_string()),
            if rmml.is_ok() { "fitted" } else { "failed" }
        ),
    )
}

fn criterion_6() -> Outcome {
    let counts = group_counts(3).unwrap();
    outcome(counts == [8, 4, 2], format!("group_counts(3) = {counts:?}"))
}

/// Train/held-out split of the trend setup: each identity's first 10
/// samples train, the last 10 are held out.
struct TrendData {
    train: FeatureMatrix,
    train_pairs: PairSet,
    test: FeatureMatrix,
    test_pairs: PairSet,
}

fn trend_data(seed: u64) -> TrendData {
    let (x, labels) = gen_synthetic(&SyntheticParams {
        identities: 50,
        samples_per_id: 20,
        dim: 64,
        intra_spread: 1.0,
        inter_spread: 2.0,
        seed,
    })
    .unwrap();
    let split = |held_out: bool| {
        let rows: Vec<usize> = (0..x.count())
            .filter(|r| (r % 20 >= 10) == held_out)
            .collect();
        let data: Vec<Vec<f64>> = rows.iter().map(|&r| x.row(r).to_vec()).collect();
        let labs: Vec<u32> = rows.iter().map(|&r| labels[r]).collect();
        (FeatureMatrix::from_rows(&data).unwrap(), labs)
    };
    let (train, train_labels) = split(false);
    let (test, test_labels) = split(true);
    TrendData {
        train_pairs: sample_pairs(&train_labels, 3000, 0.5, seed).unwrap(),
        test_pairs: sample_pairs(&test_labels, 2000, 0.5, seed.wrapping_add(1)).unwrap(),
        train,
        test,
    }
}

fn held_out_scores(model: &CascadeModel, data: &TrendData) -> ScoredPairs {
    let mapped = transform(model, &data.test).unwrap();
    score_pairs(
        |a, b| Ok(model.output_distance(a, b)),
        &mapped,
        &data.test_pairs,
    )
    .unwrap()
}

fn fit(data: &TrendData, learner: Learner, stages: usize, seed: u64) -> CascadeModel {
    let params = CascadeParams {
        stages,
        seed,
        ..Default::default()
    };
    fit_cascade(&data.train, &data.train_pairs, &learner, &params).unwrap()
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let (mut eer_wins, mut kl_wins) = (0, 0);
    let mut rows = Vec::new();
    for seed in 0..5 {
        let data = trend_data(seed);
        let ec = held_out_scores(&fit(&data, Learner::Rmml { lambda: 0.1 }, 3, seed), &data);
        let plain = held_out_scores(&fit(&data, Learner::Rmml { lambda: 0.5 }, 0, seed), &data);
        let (ec_eer, plain_eer) = (compute_eer(&ec).eer, compute_eer(&plain).eer);
        let (ec_kl, plain_kl) = (
            kl_divergence(&ec, 100).unwrap(),
            kl_divergence(&plain, 100).unwrap(),
        );
        eer_wins += usize::from(ec_eer <= plain_eer);
        kl_wins += usize::from(ec_kl >= plain_kl);
        rows.push(format!(
            "s{seed}: eer {ec_eer:.4}/{plain_eer:.4} kl {ec_kl:.2}/{plain_kl:.2}"
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        eer_wins >= 4 && kl_wins >= 4 && secs < 60.0,
        format!(
            "EC-RMML vs RMML: eer <= in {eer_wins}/5, kl >= in {kl_wins}/5, {secs:.1}s (< 60s) [{}]",
            rows.join("; ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let data = trend_data(0);
    let eers: Vec<f64> = (0..5)
        .map(|seed| {
            compute_eer(&held_out_scores(
                &fit(&data, Learner::Rmml { lambda: 0.1 }, 3, seed),
                &data,
            ))
            .eer
        })
        .collect();
    let (mean, std) = mean_and_std(&eers);
    outcome(
        std * 100.0 < 1.0,
        format!(
            "EC-RMML eer over 5 shuffle seeds: mean {:.3}%, std {:.3} pp (< 1.0)",
            mean * 100.0,
            std * 100.0
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    for set in 0..50u64 {
        let mut rng = common::rng(900 + set);
        let n = rng.random_range(2..=2000);
        let shift = rng.random_range(-0.5..3.0);
        let coarse = set % 4 == 0;
        let mut scores = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for k in 0..n {
            let matched = k == 0 || (k != 1 && rng.random_bool(0.4));
            let mut s = common::gaussian(&mut rng) + if matched { 0.0 } else { shift };
            if coarse {
                s = (s * 4.0).round();
            }
            scores.push(s);
            labels.push(matched);
        }
        let fast = compute_eer(&ScoredPairs::new(scores.clone(), labels.clone()).unwrap()).eer;
        worst = worst.max((fast - common::brute_eer(&scores, &labels)).abs());
    }
    outcome(
        worst <= 1e-9,
        format!("max |eer - brute force| {worst:.2e} (<= 1e-9) over 50 sets"),
    )
}

fn criterion_10() -> Outcome {
    let n = 100_000;
    let mut rng = common::rng(10);
    let mut draw =
        |mu: f64| -> Vec<f64> { (0..n).map(|_| mu + common::gaussian(&mut rng)).collect() };
    let pos = draw(0.0);
    let neg = draw(3.0);
    let same = draw(0.0);
    let scored = |a: &[f64], b: &[f64]| {
        let scores = a.iter().chain(b).copied().collect();
        let labels = (0..a.len() + b.len()).map(|k| k < a.len()).collect();
        ScoredPairs::new(scores, labels).unwrap()
    };
    let separated = kl_divergence(&scored(&pos, &neg), 100).unwrap();
    let identical = kl_divergence(&scored(&pos, &same), 100).unwrap();
    let rel = (separated - 4.5).abs() / 4.5;
    outcome(
        rel <= 0.15 && identical <= 0.01,
        format!("N(0,1)||N(3,1): {separated:.3} nats ({:.1}% from 4.5, <= 15%), identical: {identical:.5} (<= 0.01)", rel * 100.0),
    )
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = trend_data(11);
    let (features, pairs) = (dir.path().join("x.bin"), dir.path().join("p.csv"));
    ecml::save_features(&features, &data.train, ecml::FeatureFormat::Binary).unwrap();
    ecml::features::save_pairs(&pairs, &data.train_pairs).unwrap();
    let config = |model: &str| {
        RunConfig::resolve(Overrides {
            cascade: Some(true),
            repeats: Some(1),
            pca_dim: Some(48),
            seed: Some(7),
            features: Some(features.clone()),
            pairs: Some(pairs.clone()),
            model: Some(dir.path().join(model)),
            ..Default::default()
        })
        .unwrap()
    };
    let mut sink = Vec::new();
    cmd_fit(&config("a.ecml"), &mut sink, &mut std::io::sink()).unwrap();
    cmd_fit(&config("b.ecml"), &mut sink, &mut std::io::sink()).unwrap();
    let a = std::fs::read(dir.path().join("a.ecml")).unwrap();
    let identical = a == std::fs::read(dir.path().join("b.ecml")).unwrap();

    let original = fit(&data, Learner::Rmml { lambda: 0.1 }, 3, 7);
    let bytes = ModelBundle::new(None, original.clone())
        .unwrap()
        .to_bytes()
        .unwrap();
    let loaded = ModelBundle::from_bytes(&bytes).unwrap().cascade;
    let mut rng = common::rng(11);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let u: Vec<f64> = (0..64).map(|_| 2.0 * common::gaussian(&mut rng)).collect();
        let v: Vec<f64> = (0..64).map(|_| 2.0 * common::gaussian(&mut rng)).collect();
        let before = cascade_distance(&original, &u, &v).unwrap();
        let after = cascade_distance(&loaded, &u, &v).unwrap();
        mismatches += usize::from(before.to_bits() != after.to_bits());
    }
    outcome(
        identical && mismatches == 0,
        format!("repeated fit byte-identical: {identical} ({} bytes); round-trip distance mismatches: {mismatches}/1000", a.len()),
    )
}

fn criterion_12() -> Outcome {
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 0..5 {
        let data = trend_data(seed);
        let tuned = compute_eer(&held_out_scores(
            &fit(&data, Learner::Rmml { lambda: 0.5 }, 0, seed),
            &data,
        ))
        .eer;
        let euclid = compute_eer(&held_out_scores(
            &fit(&data, Learner::Rmml { lambda: 0.0 }, 0, seed),
            &data,
        ))
        .eer;
        wins += usize::from(tuned < euclid);
        rows.push(format!("s{seed}: {tuned:.4}/{euclid:.4}"));
    }
    outcome(
        wins >= 4,
        format!(
            "RMML eer at lambda 0.5 < lambda 0 in {wins}/5 [{}]",
            rows.join("; ")
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Check; 12] = [
        (1, "closed-form optimality", criterion_1),
        (2, "objective oracle equivalence", criterion_2),
        (3, "MCD correctness", criterion_3),
        (4, "KISSME analytic recovery", criterion_4),
        (5, "KISSME failure mode", criterion_5),
        (6, "group-count rule", criterion_6),
        (7, "cascade trend", criterion_7),
        (8, "stability", criterion_8),
        (9, "EER oracle", criterion_9),
        (10, "KL estimator sanity", criterion_10),
        (11, "determinism", criterion_11),
        (12, "lambda study shape", criterion_12),
    ];
    let mut unexpected = 0;
    let mut failed = 0;
    for (id, name, check) in criteria {
        let result = check();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("{verdict} [{id:>2}] {name}: {}", result.detail);
        if !result.pass {
            failed += 1;
            if !KNOWN_UNMET.contains(&id) {
                unexpected += 1;
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed ({unexpected} unexpected)",
        12 - failed
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
