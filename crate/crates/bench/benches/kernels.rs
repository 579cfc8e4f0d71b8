use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use transkit::transducer::{beam_search, rnnt_grad, rnnt_loss, DecodeConfig};
use transkit::word_timing::viterbi_align;
use transkit_bench::{lattice, model_and_features, phone_sequence, posteriorgram};

fn rnnt(c: &mut Criterion) {
    let mut group = c.benchmark_group("rnnt_loss");
    for (t, u) in [(50, 10), (200, 40)] {
        let (lat, target) = lattice(t, u, 11);
        group.bench_with_input(BenchmarkId::new("loss", format!("{t}x{u}")), &(), |b, _| {
            b.iter(|| rnnt_loss(black_box(&lat), black_box(&target), 0).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("grad", format!("{t}x{u}")), &(), |b, _| {
            b.iter(|| rnnt_grad(black_box(&lat), black_box(&target), 0).unwrap())
        });
    }
    group.finish();
}

fn viterbi(c: &mut Criterion) {
    let mut group = c.benchmark_group("viterbi_align");
    for (frames, words) in [(100, 10), (400, 40)] {
        let pg = posteriorgram(frames, 9);
        let seq = phone_sequence(words, 9);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{frames}x{words}")), &(), |b, _| {
            b.iter(|| viterbi_align(black_box(&pg), black_box(&seq), 0.03).unwrap())
        });
    }
    group.finish();
}

fn beam(c: &mut Criterion) {
    let mut group = c.benchmark_group("beam_search");
    let (model, features) = model_and_features(40);
    for beam in [1, 4, 8] {
        let config = DecodeConfig {
            beam,
            nbest: beam.min(4),
            max_symbols_per_frame: 3,
            entropy_includes_blank: false,
        };
        group.bench_with_input(BenchmarkId::from_parameter(beam), &config, |b, config| {
            b.iter(|| beam_search("bench", black_box(&features), &model, config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, rnnt, viterbi, beam);
criterion_main!(benches);
