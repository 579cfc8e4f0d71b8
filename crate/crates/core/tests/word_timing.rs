use proptest::prelude::*;
use rand::Rng as _;
use transkit::numcore::Matrix;
use transkit::rng::{seeded, Rng};
use transkit::transducer::PhonePosteriorgram;
use transkit::word_timing::{
    align_bruteforce, timing_metrics, viterbi_align, PhoneSequence, TimedWord, WordPhoneSpan,
};

fn random_pg(rng: &mut Rng, frames: usize, phones: usize) -> PhonePosteriorgram {
    let mut rows = Vec::new();
    for _ in 0..frames {
        let raw: Vec<f64> = (0..phones).map(|_| rng.random_range(0.01..1.0)).collect();
        let z: f64 = raw.iter().sum();
        rows.push(raw.iter().map(|v| v / z).collect());
    }
    PhonePosteriorgram::new(Matrix::from_rows(&rows).unwrap()).unwrap()
}

/// Words of one or two phones, with optional silence (phone 0) between them.
fn random_sequence(rng: &mut Rng, words: usize, phones: usize, silence: bool) -> PhoneSequence {
    let mut seq = PhoneSequence::default();
    let sil = |seq: &mut PhoneSequence| {
        if silence {
            seq.phones.push(0);
            seq.optional.push(true);
        }
    };
    sil(&mut seq);
    for w in 0..words {
        let first = seq.phones.len();
        for _ in 0..rng.random_range(1..=2) {
            seq.phones.push(rng.random_range(1..phones));
            seq.optional.push(false);
        }
        seq.spans.push(WordPhoneSpan {
            word: format!("w{w}"),
            first,
            last: seq.phones.len() - 1,
        });
        sil(&mut seq);
    }
    seq
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn viterbi_equals_bruteforce(seed: u64, words in 1usize..=3, extra in 0usize..4, silence: bool) {
        let mut rng = seeded(seed);
        let seq = random_sequence(&mut rng, words, 4, silence);
        let frames = seq.mandatory() + extra;
        let pg = random_pg(&mut rng, frames, 4);
        let fast = viterbi_align(&pg, &seq, 0.03).unwrap();
        let (slow, _) = align_bruteforce(&pg, &seq, 0.03).unwrap();
        prop_assert!((fast.log_prob - slow.log_prob).abs() < 1e-9);
        prop_assert_eq!(&fast.words, &slow.words);
        prop_assert_eq!(&fast.segments, &slow.segments);
        prop_assert_eq!(viterbi_align(&pg, &seq, 0.03).unwrap(), fast);
    }

    #[test]
    fn word_spans_tile_in_order(seed: u64, words in 1usize..=5, extra in 0usize..10, silence: bool) {
        let mut rng = seeded(seed);
        let seq = random_sequence(&mut rng, words, 5, silence);
        let frames = seq.mandatory() + extra;
        let pg = random_pg(&mut rng, frames, 5);
        let r = viterbi_align(&pg, &seq, 0.03).unwrap();
        prop_assert_eq!(r.words.len(), words);
        let mut next = 0;
        for w in &r.words {
            prop_assert!(w.start_frame >= next && w.start_frame <= w.end_frame && w.end_frame < frames);
            next = w.end_frame + 1;
        }
        if !silence {
            prop_assert_eq!(r.words[0].start_frame, 0);
            prop_assert_eq!(r.words.last().unwrap().end_frame, frames - 1);
        }
    }

    #[test]
    fn planted_boundaries_are_recovered(durations in prop::collection::vec(1usize..6, 1..6), seed: u64) {
        let mut rng = seeded(seed);
        let phones: Vec<usize> = durations.iter().enumerate().map(|(i, _)| 1 + (i % 3)).collect();
        let mut rows = Vec::new();
        for (&p, &d) in phones.iter().zip(&durations) {
            for _ in 0..d {
                let mut row = vec![0.0; 4];
                let dominant = rng.random_range(0.9..0.97);
                row[p] = dominant;
                for (q, v) in row.iter_mut().enumerate() {
                    if q != p {
                        *v = (1.0 - dominant) / 3.0;
                    }
                }
                rows.push(row);
            }
        }
        let pg = PhonePosteriorgram::new(Matrix::from_rows(&rows).unwrap()).unwrap();
        let r = viterbi_align(&pg, &PhoneSequence::from_phones(&phones), 0.03).unwrap();
        let mut start = 0;
        for (w, &d) in r.words.iter().zip(&durations) {
            prop_assert_eq!((w.start_frame, w.end_frame), (start, start + d - 1));
            start += d;
        }
    }

    #[test]
    fn self_metrics_are_perfect(ends in prop::collection::vec(0.01f64..5.0, 1..10)) {
        let words: Vec<TimedWord> = ends
            .iter()
            .enumerate()
            .map(|(i, &e)| TimedWord { word: format!("w{i}"), start: Some(e / 2.0), end: e })
            .collect();
        let m = timing_metrics(&words, &words).unwrap();
        prop_assert_eq!(
            (m.ave_st_ms, m.ave_et_ms, m.pct_ws_lt_200, m.pct_we_lt_200),
            (Some(0.0), 0.0, Some(100.0), 100.0)
        );
    }
}
