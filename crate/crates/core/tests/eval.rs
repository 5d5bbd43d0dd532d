mod common;

use ecml::eval::score_pairs_with;
use ecml::{
    compute_eer, kl_divergence, score_pairs, EvalReport, Execution, FeatureMatrix, Pair, PairSet,
    ScoredPairs,
};
use proptest::prelude::*;
use rand::Rng;

fn scored(pos: &[f64], neg: &[f64]) -> ScoredPairs {
    let scores = pos.iter().chain(neg).copied().collect();
    let labels = pos
        .iter()
        .map(|_| true)
        .chain(neg.iter().map(|_| false))
        .collect();
    ScoredPairs::new(scores, labels).unwrap()
}

fn random_scored(seed: u64, n: usize, shift: f64, integer: bool) -> ScoredPairs {
    let mut rng = common::rng(seed);
    let mut scores = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        let matched = k % 3 == 0;
        let mut s = common::gaussian(&mut rng) + if matched { 0.0 } else { shift };
        if integer {
            s = (s * 3.0).round();
        }
        scores.push(s);
        labels.push(matched);
    }
    ScoredPairs::new(scores, labels).unwrap()
}

#[test]
fn eer_matches_brute_force_enumeration() {
    for seed in 0..30 {
        let mut rng = common::rng(seed);
        let n = rng.random_range(4..400);
        let s = random_scored(seed, n, rng.random_range(-1.0..3.0), seed % 3 == 0);
        let fast = compute_eer(&s).eer;
        let slow = common::brute_eer(s.scores(), s.labels());
        assert!((fast - slow).abs() <= 1e-9, "seed {seed}: {fast} vs {slow}");
    }
}

#[test]
fn eer_documented_examples() {
    assert_eq!(compute_eer(&scored(&[0.1, 0.2], &[0.5, 0.9])).eer, 0.0);
    let r = compute_eer(&scored(&[1.0, 3.0], &[2.0, 4.0]));
    assert!((r.eer - 0.25).abs() < 1e-12);
    let flat = compute_eer(&scored(&[2.0, 2.0], &[2.0]));
    assert!(flat.degenerate);
    assert_eq!(flat.eer, 0.5);
}

#[test]
fn random_labels_give_chance_eer() {
    let mut rng = common::rng(40);
    let scores: Vec<f64> = (0..10_000).map(|_| common::gaussian(&mut rng)).collect();
    let labels: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.5)).collect();
    let eer = compute_eer(&ScoredPairs::new(scores, labels).unwrap()).eer;
    assert!((eer - 0.5).abs() <= 0.02, "{eer}");
}

#[test]
fn inverted_scores_are_not_flipped() {
    let r = compute_eer(&scored(&[5.0, 6.0], &[1.0, 2.0]));
    assert!(r.eer >= 0.5);
}

#[test]
fn kl_identical_distributions_is_near_zero() {
    let mut rng = common::rng(41);
    let pos: Vec<f64> = (0..100_000).map(|_| common::gaussian(&mut rng)).collect();
    let neg: Vec<f64> = (0..100_000).map(|_| common::gaussian(&mut rng)).collect();
    let kl = kl_divergence(&scored(&pos, &neg), 100).unwrap();
    assert!((0.0..=0.01).contains(&kl), "{kl}");
}

#[test]
fn kl_is_asymmetric_on_skewed_data() {
    let mut rng = common::rng(42);
    let pos: Vec<f64> = (0..5000)
        .map(|_| common::gaussian(&mut rng).abs())
        .collect();
    let neg: Vec<f64> = (0..5000)
        .map(|_| 2.0 * common::gaussian(&mut rng))
        .collect();
    let forward = kl_divergence(&scored(&pos, &neg), 50).unwrap();
    let backward = kl_divergence(&scored(&neg, &pos), 50).unwrap();
    assert!((forward - backward).abs() > 0.1, "{forward} vs {backward}");
}

#[test]
fn kl_requires_distinct_scores() {
    assert!(kl_divergence(&scored(&[1.0], &[1.0]), 10).is_err());
    assert!(kl_divergence(&scored(&[1.0], &[2.0]), 0).is_err());
}

#[test]
fn score_pairs_examples() {
    let x = FeatureMatrix::from_rows(&[[0.0, 0.0], [3.0, 4.0], [3.0, 4.0]]).unwrap();
    let pairs = PairSet::new(vec![Pair::new(0, 1, false), Pair::new(1, 2, true)]);
    let sq = |a: &[f64], b: &[f64]| Ok(a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum());
    let s = score_pairs(sq, &x, &pairs).unwrap();
    assert_eq!(s.scores(), &[25.0, 0.0]);
    assert!(score_pairs(sq, &x, &PairSet::new(Vec::new())).is_err());
    assert!(score_pairs(sq, &x, &PairSet::new(vec![Pair::new(0, 1, true)])).is_err());
}

#[test]
fn parallel_scoring_matches_sequential() {
    let mut rng = common::rng(43);
    let x = common::random_features(&mut rng, 300, 10);
    let pairs = common::random_pairs(&mut rng, 300, 5000);
    let d = |a: &[f64], b: &[f64]| Ok(a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum());
    assert_eq!(
        score_pairs_with(d, &x, &pairs, Execution::Sequential).unwrap(),
        score_pairs_with(d, &x, &pairs, Execution::Parallel).unwrap()
    );
}

#[test]
fn report_round_trips_through_text() {
    let s = random_scored(44, 300, 1.5, false);
    let report = EvalReport::evaluate(&s, 100).unwrap();
    let back = EvalReport::from_text(&report.to_text(), Some(&report.roc_csv())).unwrap();
    assert_eq!(back, report);
    assert!(report.to_text().contains("kl_direction=pos||neg"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eer_agrees_with_oracle(seed in any::<u64>(), n in 2usize..300, shift in -1.0f64..3.0, integer in any::<bool>()) {
        let s = random_scored(seed, n, shift, integer);
        let fast = compute_eer(&s);
        prop_assume!(!fast.degenerate);
        prop_assert!((fast.eer - common::brute_eer(s.scores(), s.labels())).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&fast.eer));
    }

    #[test]
    fn eer_is_invariant_under_monotone_maps(seed in any::<u64>(), n in 3usize..200) {
        let s = random_scored(seed, n, 1.0, false);
        let mapped = ScoredPairs::new(
            s.scores().iter().map(|v| v.exp() * 3.0 + 1.0).collect(),
            s.labels().to_vec(),
        ).unwrap();
        prop_assert!((compute_eer(&s).eer - compute_eer(&mapped).eer).abs() <= 1e-12);
    }

    #[test]
    fn kl_is_invariant_under_shared_affine_maps(seed in any::<u64>(), scale in prop::sample::select(vec![0.5, 2.0, 8.0]), offset in prop::sample::select(vec![-4.0, 0.0, 16.0])) {
        let s = random_scored(seed, 600, 1.0, false);
        let mapped = ScoredPairs::new(
            s.scores().iter().map(|v| v * scale + offset).collect(),
            s.labels().to_vec(),
        ).unwrap();
        let a = kl_divergence(&s, 40).unwrap();
        let b = kl_divergence(&mapped, 40).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn roc_false_accepts_grow_with_threshold(seed in any::<u64>(), n in 2usize..200) {
        let s = random_scored(seed, n, 0.5, true);
        let roc = ecml::eval::roc_points(&s);
        for w in roc.windows(2) {
            prop_assert!(w[0].threshold < w[1].threshold);
            prop_assert!(w[0].far <= w[1].far && w[0].frr >= w[1].frr);
        }
    }
}
