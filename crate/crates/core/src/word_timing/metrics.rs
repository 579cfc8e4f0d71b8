use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::align::WordTimingResult;
use crate::error::{Error, Result};
use crate::splicer::CtmRow;
use crate::text::{align_words, EditOp};
use crate::transducer::{Hypothesis, Vocabulary};

/// A word with its end time and, when estimated, its start time (seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedWord {
    pub word: String,
    pub start: Option<f64>,
    pub end: f64,
}

impl From<&WordTimingResult> for Vec<TimedWord> {
    fn from(r: &WordTimingResult) -> Self {
        r.words
            .iter()
            .map(|w| TimedWord {
                word: w.word.clone(),
                start: Some(w.start_sec),
                end: w.end_sec,
            })
            .collect()
    }
}

/// Word end = emit frame of the word's last piece × frame shift; no starts.
pub fn rnnt_baseline_end_times(hyp: &Hypothesis, vocab: &Vocabulary, frame_shift: f64) -> Result<Vec<TimedWord>> {
    Ok(vocab
        .group_words(&hyp.tokens)?
        .into_iter()
        .map(|w| TimedWord {
            word: w.word,
            start: None,
            end: hyp.emit_frames[w.last] as f64 * frame_shift,
        })
        .collect())
}

/// Averages in milliseconds; start fields are `None` when the hypothesis
/// carries no start times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingMetrics {
    pub ave_st_ms: Option<f64>,
    pub ave_et_ms: f64,
    pub pct_ws_lt_200: Option<f64>,
    pub pct_we_lt_200: f64,
    pub words: usize,
}

/// Threshold for the "within" percentages, exclusive.
pub const WITHIN_MS: f64 = 200.0;

/// `|a - b|` in ms, rounded to the microsecond so decimal times compare exactly.
fn delta_ms(a: f64, b: f64) -> f64 {
    ((a - b).abs() * 1e6).round() / 1e3
}

/// Timing errors over two identical word sequences.
pub fn timing_metrics(hyp: &[TimedWord], reference: &[TimedWord]) -> Result<TimingMetrics> {
    if hyp.len() != reference.len() || hyp.iter().zip(reference).any(|(h, r)| h.word != r.word) {
        return Err(Error::Evaluation("hypothesis and reference word sequences differ".into()));
    }
    let n = hyp.len();
    if n == 0 {
        return Err(Error::Evaluation("no words to evaluate".into()));
    }
    let with_start = hyp.iter().all(|w| w.start.is_some()) && reference.iter().all(|w| w.start.is_some());
    let ends: Vec<f64> = hyp.iter().zip(reference).map(|(h, r)| delta_ms(h.end, r.end)).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let pct = |v: &[f64]| 100.0 * v.iter().filter(|&&d| d < WITHIN_MS).count() as f64 / v.len() as f64;
    let (ave_st_ms, pct_ws_lt_200) = if with_start {
        let starts: Vec<f64> = hyp
            .iter()
            .zip(reference)
            .map(|(h, r)| delta_ms(h.start.expect("checked"), r.start.expect("checked")))
            .collect();
        (Some(mean(&starts)), Some(pct(&starts)))
    } else {
        (None, None)
    };
    Ok(TimingMetrics {
        ave_st_ms,
        ave_et_ms: mean(&ends),
        pct_ws_lt_200,
        pct_we_lt_200: pct(&ends),
        words: n,
    })
}

/// Keeps only hypothesis/reference word pairs the edit-distance alignment
/// marks as matches.
pub fn matched_words(hyp: &[TimedWord], reference: &[TimedWord]) -> (Vec<TimedWord>, Vec<TimedWord>) {
    let hw: Vec<&str> = hyp.iter().map(|w| w.word.as_str()).collect();
    let rw: Vec<&str> = reference.iter().map(|w| w.word.as_str()).collect();
    let mut h = Vec::new();
    let mut r = Vec::new();
    for op in align_words(&hw, &rw) {
        if let EditOp::Match { hyp: i, reference: j } = op {
            h.push(hyp[i].clone());
            r.push(reference[j].clone());
        }
    }
    (h, r)
}

/// Corpus-level metrics over correctly recognized words of every utterance
/// present in both maps.
pub fn evaluate_timings(
    hyp: &BTreeMap<String, Vec<TimedWord>>,
    reference: &BTreeMap<String, Vec<TimedWord>>,
) -> Result<TimingMetrics> {
    let mut all_h = Vec::new();
    let mut all_r = Vec::new();
    for (utt, h) in hyp {
        let Some(r) = reference.get(utt) else { continue };
        let (mh, mr) = matched_words(h, r);
        all_h.extend(mh);
        all_r.extend(mr);
    }
    timing_metrics(&all_h, &all_r)
}

/// CTM rows for one utterance; words without a start time get a zero
/// duration at their end time.
pub fn timings_to_ctm(utt_id: &str, words: &[TimedWord]) -> Vec<CtmRow> {
    words
        .iter()
        .map(|w| {
            let start = w.start.unwrap_or(w.end);
            CtmRow {
                utt_id: utt_id.to_string(),
                channel: "1".into(),
                start,
                duration: w.end - start,
                unit: w.word.clone(),
            }
        })
        .collect()
}

/// Groups CTM rows by utterance, keeping file order within each.
pub fn ctm_to_timings(rows: &[CtmRow], with_start: bool) -> BTreeMap<String, Vec<TimedWord>> {
    let mut out: BTreeMap<String, Vec<TimedWord>> = BTreeMap::new();
    for r in rows {
        out.entry(r.utt_id.clone()).or_default().push(TimedWord {
            word: r.unit.clone(),
            start: with_start.then_some(r.start),
            end: r.end(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tw(word: &str, start: f64, end: f64) -> TimedWord {
        TimedWord {
            word: word.into(),
            start: Some(start),
            end,
        }
    }

    #[test]
    fn identical_timings() {
        let w = vec![tw("a", 0.0, 0.3), tw("b", 0.3, 0.9)];
        let m = timing_metrics(&w, &w).unwrap();
        assert_eq!((m.ave_st_ms, m.ave_et_ms, m.pct_ws_lt_200, m.pct_we_lt_200), (Some(0.0), 0.0, Some(100.0), 100.0));
    }

    #[test]
    fn hand_deltas() {
        let m = timing_metrics(&[tw("a", 0.15, 0.75)], &[tw("a", 0.1, 0.5)]).unwrap();
        assert_eq!((m.ave_st_ms, m.ave_et_ms, m.pct_ws_lt_200, m.pct_we_lt_200), (Some(50.0), 250.0, Some(100.0), 0.0));
        let m = timing_metrics(
            &[tw("a", 0.04, 0.45), tw("b", 1.06, 1.25)],
            &[tw("a", 0.0, 0.3), tw("b", 1.0, 1.0)],
        )
        .unwrap();
        assert_eq!((m.ave_st_ms, m.ave_et_ms, m.pct_ws_lt_200, m.pct_we_lt_200), (Some(50.0), 200.0, Some(100.0), 50.0));
        assert!(timing_metrics(&[tw("a", 0.0, 1.0)], &[tw("b", 0.0, 1.0)]).is_err());
    }

    #[test]
    fn baseline_end_times() {
        let vocab = Vocabulary::new(["▁go", "ne", "▁on"]).unwrap();
        let hyp = Hypothesis {
            tokens: vec![3, 1, 2],
            emit_frames: vec![7, 9, 12],
            ..Hypothesis::default()
        };
        let t = rnnt_baseline_end_times(&hyp, &vocab, 0.03).unwrap();
        assert_eq!(t.len(), 2);
        assert!((t[0].end - 0.21).abs() < 1e-12 && t[0].start.is_none());
        assert!((t[1].end - 0.36).abs() < 1e-12);
        assert!(rnnt_baseline_end_times(&Hypothesis::default(), &vocab, 0.03).unwrap().is_empty());
        let bad = Hypothesis {
            tokens: vec![2],
            emit_frames: vec![0],
            ..Hypothesis::default()
        };
        assert!(matches!(rnnt_baseline_end_times(&bad, &vocab, 0.03), Err(Error::Tokenization(_))));
    }

    #[test]
    fn misrecognized_words_are_excluded() {
        let h = vec![tw("a", 0.0, 0.2), tw("x", 0.2, 0.4), tw("c", 0.4, 0.6)];
        let r = vec![tw("a", 0.0, 0.2), tw("b", 0.2, 0.4), tw("c", 0.5, 0.6)];
        let hm = BTreeMap::from([("u".to_string(), h)]);
        let rm = BTreeMap::from([("u".to_string(), r)]);
        let m = evaluate_timings(&hm, &rm).unwrap();
        assert_eq!(m.words, 2);
        assert_eq!(m.ave_st_ms, Some(50.0));
    }

    #[test]
    fn ctm_round_trip_of_timings() {
        let w = vec![tw("a", 0.0, 0.3), tw("b", 0.3, 0.9)];
        let rows = timings_to_ctm("u1", &w);
        let back = ctm_to_timings(&rows, true);
        assert_eq!(back["u1"].len(), 2);
        assert!((back["u1"][1].end - 0.9).abs() < 1e-12);
    }
}
