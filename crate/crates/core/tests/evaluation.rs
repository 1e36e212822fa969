use dynrecip::eval::{auc, cross_validate, forecast_auc, reciprocity_study, CvMask};
use dynrecip::generator::{generate, GeneratorConfig};
use dynrecip::{Hyperparams, RecLag, TemporalNetwork, Variant};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pairwise_auc(scores: &[(f64, bool)]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for &(sp, lp) in scores {
        for &(sn, ln) in scores {
            if lp && !ln {
                pairs += 1.0;
                wins += if sp > sn {
                    1.0
                } else if sp == sn {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

proptest! {
    #[test]
    fn auc_matches_pair_counting(scores in prop::collection::vec((0u8..6, any::<bool>()), 2..40)) {
        let scores: Vec<(f64, bool)> = scores.into_iter().map(|(s, l)| (s as f64 / 5.0, l)).collect();
        let has_both = scores.iter().any(|s| s.1) && scores.iter().any(|s| !s.1);
        prop_assume!(has_both);
        prop_assert!((auc(&scores).unwrap() - pairwise_auc(&scores)).abs() < 1e-12);
    }

    #[test]
    fn auc_ignores_monotone_transforms(scores in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..60)) {
        prop_assume!(scores.iter().any(|s| s.1) && scores.iter().any(|s| !s.1));
        let moved: Vec<(f64, bool)> = scores.iter().map(|&(s, l)| ((3.0 * s).exp() + s * s * s, l)).collect();
        prop_assert_eq!(auc(&scores).unwrap(), auc(&moved).unwrap());
    }

    #[test]
    fn folds_partition_entries(n in 2usize..8, snaps in 1usize..4, folds in 2usize..6, seed in any::<u64>()) {
        prop_assume!(n * (n - 1) * snaps >= folds);
        let m = CvMask::new(n, snaps, folds, seed).unwrap();
        let sizes = m.fold_sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut seen = std::collections::HashSet::new();
        for f in 0..folds {
            for e in m.entries(f) {
                prop_assert!(seen.insert(e));
            }
        }
        prop_assert_eq!(seen.len(), n * (n - 1) * snaps);
    }
}

#[test]
fn random_scores_give_chance_auc() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scores: Vec<(f64, bool)> = (0..20_000).map(|_| (rng.random(), rng.random_bool(0.3))).collect();
    let a = auc(&scores).unwrap();
    // standard error of the Mann-Whitney statistic under the null
    let (p, q) = (6000.0f64, 14000.0f64);
    let se = ((p + q + 1.0) / (12.0 * p * q)).sqrt();
    assert!((a - 0.5).abs() < 4.0 * se, "{a}");
}

#[test]
fn frozen_network_is_predicted_almost_perfectly() {
    let cfg = GeneratorConfig {
        n_nodes: 60,
        avg_degree: 3.0,
        n_steps: 0,
        seed: 2,
        ..GeneratorConfig::default()
    };
    let (first, _) = generate(&cfg).unwrap();
    let frozen = TemporalNetwork::from_snapshots(vec![first.snapshot(0).clone(); 4]).unwrap();
    let h = Hyperparams {
        n_restarts: 2,
        ..Hyperparams::new(3)
    };
    let f = forecast_auc(&frozen, &h, Variant::WDyn, RecLag::Previous, 3).unwrap();
    assert!(f.auc > 0.99, "{}", f.auc);
}

fn small_benchmark(eta: f64, seed: u64) -> TemporalNetwork {
    generate(&GeneratorConfig {
        n_nodes: 120,
        avg_degree: 6.0,
        eta,
        n_steps: 3,
        seed,
        ..GeneratorConfig::default()
    })
    .unwrap()
    .0
}

#[test]
fn cross_validation_is_deterministic_and_informative() {
    let net = small_benchmark(0.5, 3);
    let h = Hyperparams {
        n_restarts: 2,
        max_iter: 200,
        ..Hyperparams::new(3)
    };
    let a = cross_validate(&net, &h, Variant::WDyn, RecLag::Previous, 3, 9).unwrap();
    let b = cross_validate(&net, &h, Variant::WDyn, RecLag::Previous, 3, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.fold_auc.len(), 3);
    assert!(a.mean_auc.unwrap() > 0.7, "{:?}", a.mean_auc);
}

#[test]
fn reciprocity_study_shapes_and_single_sample() {
    let net = small_benchmark(0.5, 1);
    let h = Hyperparams {
        n_restarts: 1,
        ..Hyperparams::new(3)
    };
    let r = reciprocity_study(&net, &h, Variant::WDyn, RecLag::Previous, 1).unwrap();
    assert_eq!(r.rows.len(), net.n_steps());
    assert!(r.rows.iter().all(|row| row.sample_std == 0.0));
    assert!(!r.beta_floored);
}

#[test]
fn ablation_underestimates_reciprocity() {
    let net = small_benchmark(1.5, 6);
    let h = Hyperparams {
        n_restarts: 2,
        eta_zero: true,
        ..Hyperparams::new(3)
    };
    let r = reciprocity_study(&net, &h, Variant::WDyn, RecLag::Previous, 5).unwrap();
    for row in r.rows.iter().skip(1) {
        assert!(row.sample_mean < row.real, "t={}: {} vs {}", row.t, row.sample_mean, row.real);
    }
}
