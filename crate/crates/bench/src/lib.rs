//! Deterministic fixtures for the kernel benchmarks.

use transkit::numcore::Matrix;
use transkit::rng::seeded;
use transkit::transducer::{PhonePosteriorgram, PosteriorLattice, TransducerConfig, TransducerModel, Vocabulary};
use transkit::word_timing::PhoneSequence;

/// Smooth pseudo-random values in [-1, 1].
fn wave(i: usize) -> f64 {
    (i as f64 * 0.7548776662).sin() * (i as f64 * 0.5698402909).cos()
}

/// A `frames x (labels + 1) x vocab` lattice and a target of `labels` non-blank ids.
pub fn lattice(frames: usize, labels: usize, vocab: usize) -> (PosteriorLattice, Vec<usize>) {
    let logits: Vec<f64> = (0..frames * (labels + 1) * vocab).map(|i| 3.0 * wave(i)).collect();
    let target = (0..labels).map(|j| 1 + j % (vocab - 1)).collect();
    (PosteriorLattice::from_logits(frames, labels, vocab, &logits).expect("valid lattice"), target)
}

/// Posteriorgram over `phones` classes with `frames` rows.
pub fn posteriorgram(frames: usize, phones: usize) -> PhonePosteriorgram {
    let rows: Vec<Vec<f64>> = (0..frames)
        .map(|t| {
            let raw: Vec<f64> = (0..phones).map(|p| wave(t * phones + p).exp()).collect();
            let z: f64 = raw.iter().sum();
            raw.iter().map(|v| v / z).collect()
        })
        .collect();
    PhonePosteriorgram::new(Matrix::from_rows(&rows).expect("rectangular")).expect("normalized rows")
}

/// `words` one-phone words cycling through phones 1.., no silence slots.
pub fn phone_sequence(words: usize, phones: usize) -> PhoneSequence {
    let ids: Vec<usize> = (0..words).map(|i| 1 + i % (phones - 1)).collect();
    PhoneSequence::from_phones(&ids)
}

/// A model of the default toy size and `frames` feature vectors.
pub fn model_and_features(frames: usize) -> (TransducerModel, Vec<Vec<f64>>) {
    let vocab = Vocabulary::new((0..10).map(|i| format!("\u{2581}w{i}"))).expect("distinct pieces");
    let config = TransducerConfig {
        input_dim: 8,
        encoder_layers: 3,
        shared_layers: 1,
        encoder_hidden: 24,
        prediction_hidden: 24,
        embed_dim: 12,
        joint_dim: 24,
        branch_hidden: 16,
        ..TransducerConfig::default()
    };
    let model = TransducerModel::new(&config, vocab, Vec::new(), &mut seeded(0)).expect("valid config");
    let features = (0..frames).map(|t| (0..8).map(|d| wave(t * 8 + d)).collect()).collect();
    (model, features)
}
