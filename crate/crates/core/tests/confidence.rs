use proptest::prelude::*;
use rand::Rng as _;
use transkit::confidence::{
    aggregate_word_features, aupr, confusion_network_from_words, hypothesis_weights, AvgHypReading,
    ConfidenceModel, LabeledWord, ScoreMode, TargetClass, WordFeatures, WordPieceFeatures,
};
use transkit::numcore::{finite_diff_gradient, FD_EPS};
use transkit::rng::seeded;

fn words_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..6)
        .prop_map(|v| v.into_iter().map(str::to_string).collect())
}

proptest! {
    #[test]
    fn slots_normalize(
        pivot in words_strategy().prop_filter("nonempty", |v| !v.is_empty()),
        others in prop::collection::vec(words_strategy(), 0..5),
        scores in prop::collection::vec(-20.0f64..0.0, 6),
        normalized: bool,
    ) {
        let mut hyps = vec![pivot.clone()];
        hyps.extend(others);
        let pairs: Vec<(f64, usize)> = hyps.iter().zip(&scores).map(|(h, &s)| (s, h.len())).collect();
        let mode = if normalized { ScoreMode::LengthNormalized } else { ScoreMode::Posterior };
        let weights = hypothesis_weights(&pairs, mode);
        let cn = confusion_network_from_words(&hyps, &weights).unwrap();
        prop_assert_eq!(cn.pivot_slots.len(), pivot.len());
        for slot in &cn.slots {
            prop_assert!((slot.total() - 1.0).abs() < 1e-9);
        }
        for (i, &s) in cn.pivot_slots.iter().enumerate() {
            prop_assert!(cn.slots[s].posterior(Some(&pivot[i])) > 0.0);
        }
    }

    #[test]
    fn single_hypothesis_is_its_own_best_path(h in words_strategy()) {
        let cn = confusion_network_from_words(&[h.clone()], &[1.0]).unwrap();
        prop_assert_eq!(cn.best_path(), h);
    }

    #[test]
    fn aggregation_identities(
        pieces in prop::collection::vec((-5.0f64..0.0, -2.0f64..0.0, 1usize..20), 1..5),
    ) {
        let pieces: Vec<WordPieceFeatures> = pieces
            .iter()
            .scan(0.0, |acc, &(wp, ne, n)| {
                *acc += wp;
                Some(WordPieceFeatures { wp_logp: wp, hyp_logp: *acc, neg_entropy: ne, emitted_count: n })
            })
            .collect();
        let f = aggregate_word_features(&pieces, AvgHypReading::PartialHypothesis).unwrap();
        prop_assert!(f.min_wp_prob <= f.avg_wp_prob + 1e-12);
        prop_assert!(f.min_neg_entropy <= f.avg_neg_entropy + 1e-12);
        if pieces.len() == 1 {
            prop_assert_eq!(f.min_wp_prob, f.avg_wp_prob);
            prop_assert_eq!(f.min_neg_entropy, f.avg_neg_entropy);
        }
    }

    #[test]
    fn classifier_gradient_matches_finite_differences(seed: u64, n in 2usize..10) {
        let mut rng = seeded(seed);
        let data: Vec<LabeledWord> = (0..n)
            .map(|i| {
                let mut x = [0.0f64; 7];
                for v in x.iter_mut() {
                    *v = rng.random_range(-2.0..2.0);
                }
                LabeledWord { word: format!("w{i}"), features: WordFeatures::from_array(x), label: (i % 2) as u8 }
            })
            .collect();
        let mut model = ConfidenceModel::new(4, seed).unwrap();
        model.fit_normalization(&data);
        let (_, grad) = model.loss_and_gradient(&data).unwrap();
        let analytic: Vec<f64> = grad.hidden.tensors().into_iter().chain(grad.output.tensors()).flatten().copied().collect();
        let mut probe = model.clone();
        let numeric = finite_diff_gradient(
            |p| {
                probe.set_params(p).unwrap();
                probe.loss(&data).unwrap()
            },
            &model.params(),
            FD_EPS,
        )
        .unwrap();
        for (a, b) in analytic.iter().zip(&numeric) {
            prop_assert!((a - b).abs() <= 1e-4 * a.abs().max(b.abs()).max(1e-3), "{} vs {}", a, b);
        }
    }

    #[test]
    fn aupr_ignores_monotone_transforms(
        pairs in prop::collection::vec((0.0f64..1.0, 0u8..2), 2..50),
        a in 0.1f64..5.0,
        b in -3.0f64..3.0,
    ) {
        let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let labels: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let moved: Vec<f64> = scores.iter().map(|s| (a * s + b).exp()).collect();
        for t in [TargetClass::Correct, TargetClass::Incorrect] {
            prop_assert!((aupr(&scores, &labels, t).unwrap() - aupr(&moved, &labels, t).unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn random_scores_give_prevalence() {
    let mut rng = seeded(99);
    let n = 10_000;
    let prevalence = 0.3;
    let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < prevalence)).collect();
    let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let observed = labels.iter().filter(|&&l| l == 1).count() as f64 / n as f64;
    let ap = aupr(&scores, &labels, TargetClass::Correct).unwrap();
    assert!((ap - observed).abs() < 0.03, "AP {ap} vs prevalence {observed}");
}
