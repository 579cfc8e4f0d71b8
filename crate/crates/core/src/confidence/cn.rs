use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{contract_err, Result};
use crate::numcore::softmax_unchecked;
use crate::text::{align_words, EditOp};
use crate::transducer::{NBestList, Vocabulary};

/// How each N-best entry is scored before the softmax over the list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    /// Total log posterior.
    Posterior,
    /// Total log posterior divided by the word count.
    LengthNormalized,
}

/// Competing words at one position; `None` is the empty word.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    /// Sorted by posterior, descending, then by word.
    pub entries: Vec<(Option<String>, f64)>,
}

impl Slot {
    pub fn posterior(&self, word: Option<&str>) -> f64 {
        self.entries
            .iter()
            .find(|(w, _)| w.as_deref() == word)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionNetwork {
    pub slots: Vec<Slot>,
    /// Slot holding each pivot word.
    pub pivot_slots: Vec<usize>,
    pub pivot_words: Vec<String>,
}

impl ConfusionNetwork {
    /// Highest-posterior entry of every slot, skipping empty words.
    pub fn best_path(&self) -> Vec<String> {
        self.slots
            .iter()
            .filter_map(|s| s.entries.first().and_then(|(w, _)| w.clone()))
            .collect()
    }
}

/// Weights `softmax(s_i)` of the N-best entries under `mode`.
pub fn hypothesis_weights(scores: &[(f64, usize)], mode: ScoreMode) -> Vec<f64> {
    let s: Vec<f64> = scores
        .iter()
        .map(|&(logp, words)| match mode {
            ScoreMode::Posterior => logp,
            ScoreMode::LengthNormalized => logp / words.max(1) as f64,
        })
        .collect();
    softmax_unchecked(&s)
}

/// Aligns word sequences to the first (pivot) one and accumulates weighted
/// votes per slot. Words inserted relative to the pivot open extra slots in
/// which every other hypothesis votes for the empty word.
pub fn confusion_network_from_words(hyps: &[Vec<String>], weights: &[f64]) -> Result<ConfusionNetwork> {
    let pivot = hyps.first().ok_or_else(|| contract_err!("empty N-best list"))?;
    if weights.len() != hyps.len() {
        return Err(contract_err!("{} weights for {} hypotheses", weights.len(), hyps.len()));
    }
    let n = pivot.len();
    let mut pivot_votes: Vec<BTreeMap<Option<String>, f64>> = vec![BTreeMap::new(); n];
    // gap g (before pivot word g, g = n at the end) -> k-th insertion -> (hyp, word)
    let mut gaps: Vec<Vec<Vec<(usize, String)>>> = vec![Vec::new(); n + 1];
    for (h, (words, &w)) in hyps.iter().zip(weights).enumerate() {
        let mut gap = 0;
        let mut k = 0;
        for op in align_words(words, pivot) {
            match op {
                EditOp::Match { hyp, reference } | EditOp::Sub { hyp, reference } => {
                    *pivot_votes[reference].entry(Some(words[hyp].clone())).or_default() += w;
                    gap = reference + 1;
                    k = 0;
                }
                EditOp::Del { reference } => {
                    *pivot_votes[reference].entry(None).or_default() += w;
                    gap = reference + 1;
                    k = 0;
                }
                EditOp::Ins { hyp } => {
                    if gaps[gap].len() <= k {
                        gaps[gap].push(Vec::new());
                    }
                    gaps[gap][k].push((h, words[hyp].clone()));
                    k += 1;
                }
            }
        }
    }
    let total_weight: f64 = weights.iter().sum();
    let finish = |votes: BTreeMap<Option<String>, f64>| -> Slot {
        let z: f64 = votes.values().sum();
        let mut entries: Vec<(Option<String>, f64)> = votes.into_iter().map(|(w, v)| (w, v / z)).collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Slot { entries }
    };
    let mut slots = Vec::new();
    let mut pivot_slots = Vec::with_capacity(n);
    for g in 0..=n {
        for inserted in std::mem::take(&mut gaps[g]) {
            let mut votes: BTreeMap<Option<String>, f64> = BTreeMap::new();
            let mut voted = 0.0;
            for (h, word) in inserted {
                *votes.entry(Some(word)).or_default() += weights[h];
                voted += weights[h];
            }
            let rest = total_weight - voted;
            if rest > 0.0 {
                *votes.entry(None).or_default() += rest;
            }
            slots.push(finish(votes));
        }
        if g < n {
            pivot_slots.push(slots.len());
            slots.push(finish(std::mem::take(&mut pivot_votes[g])));
        }
    }
    Ok(ConfusionNetwork {
        slots,
        pivot_slots,
        pivot_words: pivot.clone(),
    })
}

/// Confusion network over the N-best list's word sequences.
pub fn build_confusion_network(nbest: &NBestList, vocab: &Vocabulary, mode: ScoreMode) -> Result<ConfusionNetwork> {
    if nbest.hyps.is_empty() {
        return Err(contract_err!("empty N-best list for {}", nbest.utt_id));
    }
    let words: Vec<Vec<String>> = nbest
        .hyps
        .iter()
        .map(|h| vocab.words(&h.tokens))
        .collect::<Result<_>>()?;
    let scores: Vec<(f64, usize)> = nbest.hyps.iter().zip(&words).map(|(h, w)| (h.logp, w.len())).collect();
    confusion_network_from_words(&words, &hypothesis_weights(&scores, mode))
}

/// Posterior of pivot word `index` in its slot, under each network.
pub fn cn_features(index: usize, posterior: &ConfusionNetwork, normalized: &ConfusionNetwork) -> Result<(f64, f64)> {
    let get = |cn: &ConfusionNetwork| -> Result<f64> {
        let slot = cn
            .pivot_slots
            .get(index)
            .ok_or_else(|| contract_err!("word index {index} outside pivot of {} words", cn.pivot_words.len()))?;
        Ok(cn.slots[*slot].posterior(Some(&cn.pivot_words[index])))
    };
    Ok((get(posterior)?, get(normalized)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn single_hypothesis() {
        let cn = confusion_network_from_words(&[w("a b c")], &[1.0]).unwrap();
        assert_eq!(cn.slots.len(), 3);
        assert!(cn.slots.iter().all(|s| s.entries.len() == 1 && s.entries[0].1 == 1.0));
        assert_eq!(cn.best_path(), w("a b c"));
        assert_eq!(cn_features(1, &cn, &cn).unwrap(), (1.0, 1.0));
        assert!(cn_features(3, &cn, &cn).is_err());
    }

    #[test]
    fn substitution_votes() {
        let cn = confusion_network_from_words(&[w("a b"), w("a c")], &[0.6, 0.4]).unwrap();
        assert_eq!(cn.slots[0].entries, vec![(Some("a".to_string()), 1.0)]);
        assert!((cn.slots[1].posterior(Some("b")) - 0.6).abs() < 1e-12);
        assert!((cn.slots[1].posterior(Some("c")) - 0.4).abs() < 1e-12);
        assert!((cn_features(1, &cn, &cn).unwrap().0 - 0.6).abs() < 1e-12);
    }

    #[test]
    fn deletion_votes_empty_word() {
        let cn = confusion_network_from_words(&[w("a b"), w("a")], &[0.7, 0.3]).unwrap();
        assert_eq!(cn.slots.len(), 2);
        assert!((cn.slots[1].posterior(Some("b")) - 0.7).abs() < 1e-12);
        assert!((cn.slots[1].posterior(None) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn insertion_opens_slot() {
        let cn = confusion_network_from_words(&[w("a c"), w("a x c"), w("y a c")], &[0.5, 0.3, 0.2]).unwrap();
        assert_eq!(cn.slots.len(), 4);
        assert_eq!(cn.pivot_slots, vec![1, 3]);
        assert!((cn.slots[0].posterior(Some("y")) - 0.2).abs() < 1e-12);
        assert!((cn.slots[2].posterior(Some("x")) - 0.3).abs() < 1e-12);
        assert!((cn.slots[2].posterior(None) - 0.7).abs() < 1e-12);
        for s in &cn.slots {
            assert!((s.total() - 1.0).abs() < 1e-9);
        }
        assert_eq!(cn.best_path(), w("a c"));
    }

    #[test]
    fn weights_follow_score_mode() {
        let a = hypothesis_weights(&[(-1.0, 1), (-2.0, 4)], ScoreMode::Posterior);
        assert!(a[0] > a[1]);
        let b = hypothesis_weights(&[(-1.0, 1), (-2.0, 4)], ScoreMode::LengthNormalized);
        assert!(b[1] > b[0]);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
