//! Forced alignment of a phone sequence to a phone posteriorgram.
//!
//! Every frame belongs to exactly one position of the sequence, positions are
//! visited in order, mandatory phones take at least one frame and optional
//! silences may take none. Among equally probable segmentations the one with
//! the latest states, compared from the last frame backwards, wins; this puts
//! every transition as early as possible.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::phones::PhoneSequence;
use crate::error::{contract_err, Error, Result};
use crate::numcore::PROB_EPS;
use crate::transducer::PhonePosteriorgram;

/// Largest number of segmentations [`align_bruteforce`] will visit.
pub const BRUTEFORCE_MAX_SEGMENTATIONS: u128 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordTiming {
    pub word: String,
    pub start_frame: usize,
    /// Last frame of the word, inclusive.
    pub end_frame: usize,
    pub start_sec: f64,
    /// End of the last frame: `(end_frame + 1) · frame_shift`.
    pub end_sec: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordTimingResult {
    pub words: Vec<WordTiming>,
    pub frame_shift: f64,
    /// Log-probability of the chosen segmentation.
    pub log_prob: f64,
    /// Frame range `[start, end)` of every sequence position.
    pub segments: Vec<(usize, usize)>,
}

fn emission(pg: &PhonePosteriorgram, t: usize, phone: usize) -> f64 {
    pg.prob(t, phone).max(PROB_EPS).ln()
}

fn check(pg: &PhonePosteriorgram, seq: &PhoneSequence) -> Result<()> {
    if let Some(&p) = seq.phones.iter().find(|&&p| p >= pg.phones()) {
        return Err(contract_err!("phone id {p} outside posteriorgram with {} phones", pg.phones()));
    }
    if seq.optional.len() != seq.phones.len() {
        return Err(contract_err!("optional flags do not match phone count"));
    }
    let required = seq.mandatory();
    if pg.frames() < required || (pg.frames() > 0 && seq.is_empty()) {
        return Err(Error::InfeasibleAlignment {
            frames: pg.frames(),
            required,
        });
    }
    Ok(())
}

fn result_from_states(seq: &PhoneSequence, states: &[usize], log_prob: f64, frame_shift: f64) -> WordTimingResult {
    let mut segments = vec![(0usize, 0usize); seq.len()];
    let mut cursor = 0;
    for (k, seg) in segments.iter_mut().enumerate() {
        let start = cursor;
        while cursor < states.len() && states[cursor] == k {
            cursor += 1;
        }
        *seg = (start, cursor);
    }
    let words = seq
        .spans
        .iter()
        .map(|s| {
            let start_frame = segments[s.first].0;
            let end_frame = segments[s.last].1 - 1;
            WordTiming {
                word: s.word.clone(),
                start_frame,
                end_frame,
                start_sec: start_frame as f64 * frame_shift,
                end_sec: (end_frame + 1) as f64 * frame_shift,
            }
        })
        .collect();
    WordTimingResult {
        words,
        frame_shift,
        log_prob,
        segments,
    }
}

/// Max-probability monotonic segmentation by dynamic programming.
pub fn viterbi_align(pg: &PhonePosteriorgram, seq: &PhoneSequence, frame_shift: f64) -> Result<WordTimingResult> {
    check(pg, seq)?;
    let (nt, ns) = (pg.frames(), seq.len());
    if nt == 0 {
        return Ok(result_from_states(seq, &[], 0.0, frame_shift));
    }
    let first_mandatory = seq.optional.iter().position(|o| !o).unwrap_or(ns);
    let last_mandatory = seq.optional.iter().rposition(|o| !o);
    let mut dp = vec![f64::NEG_INFINITY; nt * ns];
    let mut back = vec![usize::MAX; nt * ns];
    for j in 0..=first_mandatory.min(ns - 1) {
        dp[j] = emission(pg, 0, seq.phones[j]);
    }
    for t in 1..nt {
        for j in 0..ns {
            let mut best = dp[(t - 1) * ns + j];
            let mut arg = j;
            // Predecessors i < j reachable by skipping only optional slots.
            for i in (0..j).rev() {
                let v = dp[(t - 1) * ns + i];
                if v > best {
                    best = v;
                    arg = i;
                }
                if !seq.optional[i] {
                    break;
                }
            }
            if best > f64::NEG_INFINITY {
                dp[t * ns + j] = best + emission(pg, t, seq.phones[j]);
                back[t * ns + j] = arg;
            }
        }
    }
    let lowest_end = last_mandatory.unwrap_or(0);
    let mut end = ns - 1;
    for j in (lowest_end..ns).rev() {
        if dp[(nt - 1) * ns + j] > dp[(nt - 1) * ns + end] {
            end = j;
        }
    }
    let log_prob = dp[(nt - 1) * ns + end];
    if log_prob == f64::NEG_INFINITY {
        return Err(Error::InfeasibleAlignment {
            frames: nt,
            required: seq.mandatory(),
        });
    }
    let mut states = vec![0usize; nt];
    let mut j = end;
    for t in (0..nt).rev() {
        states[t] = j;
        if t > 0 {
            j = back[t * ns + j];
        }
    }
    Ok(result_from_states(seq, &states, log_prob, frame_shift))
}

/// Number of segmentations of `frames` frames over the sequence.
pub fn count_segmentations(seq: &PhoneSequence, frames: usize) -> u128 {
    // ways[n] = segmentations of n frames over the positions seen so far.
    let mut ways = vec![0u128; frames + 1];
    ways[0] = 1;
    for &opt in &seq.optional {
        let min = usize::from(!opt);
        let mut next = vec![0u128; frames + 1];
        for (n, slot) in next.iter_mut().enumerate() {
            *slot = (0..=n.saturating_sub(min))
                .filter(|&used| n - used >= min)
                .map(|used| ways[used])
                .fold(0u128, |a, b| a.saturating_add(b));
        }
        ways = next;
    }
    if seq.is_empty() {
        return u128::from(frames == 0);
    }
    ways[frames]
}

fn prefer(a: &[usize], b: &[usize]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

/// Exhaustive search over all segmentations, with the same tie rule.
pub fn align_bruteforce(pg: &PhonePosteriorgram, seq: &PhoneSequence, frame_shift: f64) -> Result<(WordTimingResult, u128)> {
    check(pg, seq)?;
    let nt = pg.frames();
    let count = count_segmentations(seq, nt);
    if count > BRUTEFORCE_MAX_SEGMENTATIONS {
        return Err(contract_err!("{count} segmentations exceed brute-force bound"));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut durations = vec![0usize; seq.len()];
    let mut visited = 0u128;
    enumerate(seq, 0, nt, &mut durations, &mut |d| {
        visited += 1;
        let states: Vec<usize> = d.iter().enumerate().flat_map(|(k, &n)| std::iter::repeat_n(k, n)).collect();
        let mut score = 0.0;
        for (t, &k) in states.iter().enumerate() {
            score += emission(pg, t, seq.phones[k]);
        }
        let better = match &best {
            None => true,
            Some((s, b)) => score > *s || (score == *s && prefer(&states, b) == Ordering::Greater),
        };
        if better {
            best = Some((score, states));
        }
    });
    let (score, states) = best.unwrap_or((0.0, Vec::new()));
    Ok((result_from_states(seq, &states, score, frame_shift), visited))
}

fn enumerate(
    seq: &PhoneSequence,
    k: usize,
    remaining: usize,
    durations: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if k == seq.len() {
        if remaining == 0 {
            visit(durations);
        }
        return;
    }
    let min = usize::from(!seq.optional[k]);
    let reserve: usize = seq.optional[k + 1..].iter().filter(|o| !**o).count();
    if remaining < min + reserve {
        return;
    }
    for d in min..=remaining - reserve {
        durations[k] = d;
        enumerate(seq, k + 1, remaining - d, durations, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Matrix;
    use crate::rng::seeded;
    use crate::word_timing::phones::WordPhoneSpan;
    use rand::Rng as _;

    fn pg(rows: Vec<Vec<f64>>) -> PhonePosteriorgram {
        PhonePosteriorgram::new(Matrix::from_rows(&rows).unwrap()).unwrap()
    }

    fn random_pg(rng: &mut crate::rng::Rng, frames: usize, phones: usize) -> PhonePosteriorgram {
        let rows: Vec<Vec<f64>> = (0..frames)
            .map(|_| {
                let raw: Vec<f64> = (0..phones).map(|_| rng.random_range(0.01..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect();
        pg(rows)
    }

    #[test]
    fn single_phone_takes_every_frame() {
        let p = pg(vec![vec![0.5, 0.5]; 3]);
        let seq = PhoneSequence::from_phones(&[1]);
        let r = viterbi_align(&p, &seq, 0.03).unwrap();
        assert_eq!((r.words[0].start_frame, r.words[0].end_frame), (0, 2));
        let (b, visited) = align_bruteforce(&p, &seq, 0.03).unwrap();
        assert_eq!(visited, 1);
        assert_eq!(b, r);
    }

    #[test]
    fn planted_boundary_is_recovered() {
        let mut rows = vec![vec![0.9, 0.1]; 5];
        rows.extend(vec![vec![0.1, 0.9]; 5]);
        let seq = PhoneSequence {
            phones: vec![0, 1],
            optional: vec![false, false],
            spans: vec![
                WordPhoneSpan { word: "a".into(), first: 0, last: 0 },
                WordPhoneSpan { word: "b".into(), first: 1, last: 1 },
            ],
        };
        let r = viterbi_align(&pg(rows), &seq, 0.03).unwrap();
        assert_eq!((r.words[0].start_frame, r.words[0].end_frame), (0, 4));
        assert_eq!((r.words[1].start_frame, r.words[1].end_frame), (5, 9));
        assert!((r.words[1].end_sec - 0.3).abs() < 1e-12);
    }

    #[test]
    fn segmentation_counts() {
        let two = PhoneSequence::from_phones(&[0, 1]);
        assert_eq!(count_segmentations(&two, 3), 2);
        assert_eq!(count_segmentations(&PhoneSequence::from_phones(&[0, 1, 2]), 8), 21);
        let with_sil = PhoneSequence {
            phones: vec![0, 1, 0],
            optional: vec![true, false, true],
            spans: vec![],
        };
        // Durations (a, b, c) with b >= 1 summing to 3: C(4, 2) = 6.
        assert_eq!(count_segmentations(&with_sil, 3), 6);
        let (_, visited) = align_bruteforce(&random_pg(&mut seeded(1), 3, 2), &two, 0.03).unwrap();
        assert_eq!(visited, 2);
    }

    #[test]
    fn too_few_frames_is_infeasible() {
        let p = pg(vec![vec![0.5, 0.5]; 2]);
        assert!(matches!(
            viterbi_align(&p, &PhoneSequence::from_phones(&[0, 1, 0]), 0.03),
            Err(Error::InfeasibleAlignment { frames: 2, required: 3 })
        ));
    }

    #[test]
    fn viterbi_matches_bruteforce_on_random_instances() {
        let mut rng = seeded(77);
        for _ in 0..300 {
            let n = rng.random_range(1..=3);
            let frames = rng.random_range(n..=8);
            let p = random_pg(&mut rng, frames, 3);
            let phones: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let mut seq = PhoneSequence::from_phones(&phones);
            if rng.random_bool(0.5) {
                seq.optional = (0..n).map(|_| rng.random_bool(0.4)).collect();
            }
            if seq.mandatory() == 0 {
                seq.optional[0] = false;
            }
            seq.spans.retain(|s| !seq.optional[s.first]);
            let v = viterbi_align(&p, &seq, 0.03).unwrap();
            let (b, _) = align_bruteforce(&p, &seq, 0.03).unwrap();
            assert!((v.log_prob - b.log_prob).abs() <= 1e-9);
            assert_eq!(v.segments, b.segments);
        }
    }

    #[test]
    fn ties_resolve_to_earliest_transition() {
        let p = pg(vec![vec![0.5, 0.5]; 4]);
        let r = viterbi_align(&p, &PhoneSequence::from_phones(&[0, 1]), 0.03).unwrap();
        assert_eq!(r.segments, vec![(0, 1), (1, 4)]);
    }
}
