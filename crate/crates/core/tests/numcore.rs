use proptest::prelude::*;
use transkit::numcore::{
    bce_loss, cross_entropy_loss, finite_diff_gradient, log_sum_exp, sgd_step, sgd_step_in_place, softmax,
    DenseLayer, Matrix, FD_EPS,
};
use transkit::rng::seeded;

proptest! {
    #[test]
    fn softmax_sums_to_one_and_ignores_shifts(
        logits in prop::collection::vec(-30.0f64..30.0, 1..12),
        shift in -50.0f64..50.0,
    ) {
        let p = softmax(&logits).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
        let q = softmax(&shifted).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn log_sum_exp_bounds_and_small_values(xs in prop::collection::vec(-5.0f64..5.0, 1..10)) {
        let lse = log_sum_exp(&xs).unwrap();
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lse >= max);
        let direct = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        prop_assert!((lse - direct).abs() < 1e-12);
    }

    #[test]
    fn losses_are_nonnegative_and_minimal_at_target(
        p in 0.0f64..=1.0,
        probs in prop::collection::vec(0.01f64..1.0, 2..6),
        target in 0usize..6,
    ) {
        for label in [0u8, 1] {
            let l = bce_loss(p, label).unwrap();
            prop_assert!(l >= 0.0);
            prop_assert!(l >= bce_loss(f64::from(label), label).unwrap());
        }
        let z: f64 = probs.iter().sum();
        let dist: Vec<f64> = probs.iter().map(|v| v / z).collect();
        let target = target % dist.len();
        let ce = cross_entropy_loss(&dist, target).unwrap();
        prop_assert!(ce >= 0.0);
        let mut onehot = vec![0.0; dist.len()];
        onehot[target] = 1.0;
        prop_assert!(ce >= cross_entropy_loss(&onehot, target).unwrap());
    }

    #[test]
    fn frozen_sgd_is_identity(
        params in prop::collection::vec(-10.0f64..10.0, 1..20),
        lr in 1e-4f64..1.0,
    ) {
        let grads: Vec<f64> = params.iter().map(|p| p.sin() * 3.0).collect();
        let out = sgd_step(&params, &grads, lr, true).unwrap();
        prop_assert!(out.iter().zip(&params).all(|(a, b)| a.to_bits() == b.to_bits()));
        let mut inplace = params.clone();
        sgd_step_in_place(&mut inplace, &grads, lr, true).unwrap();
        prop_assert_eq!(inplace, params);
    }

    #[test]
    fn dense_layer_jacobian_matches_finite_differences(seed in 0u64..500) {
        let mut rng = seeded(seed);
        let layer = DenseLayer::random(3, 4, &mut rng);
        let x = [0.3, -0.7, 1.1, 0.05];
        // d/dW of sum(y) is x repeated per row; d/db is one.
        let objective = |w: &[f64]| {
            let l = DenseLayer::new(Matrix::from_vec(3, 4, w.to_vec()).unwrap(), layer.bias.clone()).unwrap();
            l.forward(&x).unwrap().iter().sum::<f64>()
        };
        let g = finite_diff_gradient(objective, layer.weight.data(), FD_EPS).unwrap();
        for (i, gi) in g.iter().enumerate() {
            prop_assert!((gi - x[i % 4]).abs() < 1e-8);
        }
    }
}
