use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use transkit::rng::seeded;
use transkit::splicer::{
    replay, sample_segment, splice_utterance, AudioStore, Lexicon, SegmentInventory, SegmentRef, UnitLevel,
};

fn seg(unit: &str, path: &str, start: usize, end: usize) -> SegmentRef {
    SegmentRef {
        unit: unit.into(),
        audio_path: path.into(),
        start,
        end,
        utt_id: path.trim_end_matches(".wav").into(),
    }
}

/// Two recordings; words "a" (3 segments), "b" (2), "c" (1); phones for "d".
fn fixture() -> (SegmentInventory, Lexicon, AudioStore) {
    let mut store = AudioStore::new();
    store.insert("r1.wav", (0..400).map(|i| i as i16).collect());
    store.insert("r2.wav", (0..300).map(|i| -(i as i16)).collect());
    let mut inv = SegmentInventory::new(16000);
    inv.words.insert("a".into(), vec![seg("a", "r1.wav", 0, 50), seg("a", "r2.wav", 10, 90), seg("a", "r1.wav", 300, 333)]);
    inv.words.insert("b".into(), vec![seg("b", "r1.wav", 50, 170), seg("b", "r2.wav", 200, 300)]);
    inv.words.insert("c".into(), vec![seg("c", "r2.wav", 90, 95)]);
    inv.phones.insert("x".into(), vec![seg("x", "r1.wav", 170, 200), seg("x", "r2.wav", 0, 10)]);
    inv.phones.insert("y".into(), vec![seg("y", "r1.wav", 200, 260)]);
    let mut lex = Lexicon::new();
    lex.insert("d", vec!["x".into(), "y".into(), "x".into()]).unwrap();
    (inv, lex, store)
}

proptest! {
    #[test]
    fn splice_length_replay_and_bounds(
        text in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 1..10),
        seed: u64,
    ) {
        let (inv, lex, store) = fixture();
        let (audio, recipe) = splice_utterance(&text, &inv, &lex, &store, seed).unwrap();
        let total: usize = recipe.segments.iter().map(|s| s.end - s.start).sum();
        prop_assert_eq!(audio.len(), total);
        prop_assert_eq!(replay(&recipe, &store).unwrap(), audio.clone());
        let again = splice_utterance(&text, &inv, &lex, &store, seed).unwrap();
        prop_assert_eq!(again.0, audio);
        for s in &recipe.segments {
            let source_len = if s.audio_path == "r1.wav" { 400 } else { 300 };
            prop_assert!(s.start < s.end && s.end <= source_len);
        }
    }
}

#[test]
fn sampling_is_uniform_per_unit() {
    let (inv, _, _) = fixture();
    let draws = 30_000;
    let mut rng = seeded(2024);
    let critical = ChiSquared::new(2.0).unwrap().inverse_cdf(0.99);
    let mut counts = [0usize; 3];
    let segments = inv.segments(UnitLevel::Word, "a").unwrap();
    for _ in 0..draws {
        let s = sample_segment("a", UnitLevel::Word, &inv, &mut rng).unwrap();
        counts[segments.iter().position(|x| x == s).unwrap()] += 1;
    }
    let expected = draws as f64 / 3.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}, counts {counts:?}");
}
