use serde::{Deserialize, Serialize};

use crate::error::{contract_err, Result};
use crate::transducer::{Hypothesis, WordSpan};

/// Decoding features recorded when a word piece is emitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordPieceFeatures {
    pub wp_logp: f64,
    /// Log posterior of the partial hypothesis ending at this piece.
    pub hyp_logp: f64,
    pub neg_entropy: f64,
    /// Pieces plus blanks emitted so far, this piece included.
    pub emitted_count: usize,
}

/// Per-piece features of `span` within `hyp`.
pub fn piece_features(hyp: &Hypothesis, span: &WordSpan) -> Vec<WordPieceFeatures> {
    (span.first..=span.last)
        .map(|i| WordPieceFeatures {
            wp_logp: hyp.wp_logp[i],
            hyp_logp: hyp.hyp_logp[i],
            neg_entropy: hyp.neg_entropy[i],
            emitted_count: hyp.emitted_counts[i],
        })
        .collect()
}

/// How `avg_hyp_prob` divides by the token count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AvgHypReading {
    /// Partial-hypothesis log posterior at the last piece over tokens emitted.
    #[default]
    PartialHypothesis,
    /// The last piece's own log posterior over tokens emitted.
    LastPiece,
}

/// The five word-level features aggregated from decoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingFeatures {
    pub avg_hyp_prob: f64,
    pub min_wp_prob: f64,
    pub avg_wp_prob: f64,
    pub min_neg_entropy: f64,
    pub avg_neg_entropy: f64,
}

pub fn aggregate_word_features(pieces: &[WordPieceFeatures], reading: AvgHypReading) -> Result<DecodingFeatures> {
    let last = pieces.last().ok_or_else(|| contract_err!("word has no pieces"))?;
    let n = pieces.len() as f64;
    let numerator = match reading {
        AvgHypReading::PartialHypothesis => last.hyp_logp,
        AvgHypReading::LastPiece => last.wp_logp,
    };
    let min = |f: fn(&WordPieceFeatures) -> f64| pieces.iter().map(f).fold(f64::INFINITY, f64::min);
    let avg = |f: fn(&WordPieceFeatures) -> f64| pieces.iter().map(f).sum::<f64>() / n;
    Ok(DecodingFeatures {
        avg_hyp_prob: numerator / last.emitted_count.max(1) as f64,
        min_wp_prob: min(|p| p.wp_logp),
        avg_wp_prob: avg(|p| p.wp_logp),
        min_neg_entropy: min(|p| p.neg_entropy),
        avg_neg_entropy: avg(|p| p.neg_entropy),
    })
}

pub const FEATURE_COUNT: usize = 7;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "avg_hyp_prob",
    "min_wp_prob",
    "avg_wp_prob",
    "min_neg_entropy",
    "avg_neg_entropy",
    "cn_prob",
    "cn_norm_prob",
];

/// The classifier input for one word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordFeatures {
    pub avg_hyp_prob: f64,
    pub min_wp_prob: f64,
    pub avg_wp_prob: f64,
    pub min_neg_entropy: f64,
    pub avg_neg_entropy: f64,
    pub cn_prob: f64,
    pub cn_norm_prob: f64,
}

impl WordFeatures {
    pub fn new(d: DecodingFeatures, cn_prob: f64, cn_norm_prob: f64) -> Self {
        WordFeatures {
            avg_hyp_prob: d.avg_hyp_prob,
            min_wp_prob: d.min_wp_prob,
            avg_wp_prob: d.avg_wp_prob,
            min_neg_entropy: d.min_neg_entropy,
            avg_neg_entropy: d.avg_neg_entropy,
            cn_prob,
            cn_norm_prob,
        }
    }

    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.avg_hyp_prob,
            self.min_wp_prob,
            self.avg_wp_prob,
            self.min_neg_entropy,
            self.avg_neg_entropy,
            self.cn_prob,
            self.cn_norm_prob,
        ]
    }

    pub fn from_array(a: [f64; FEATURE_COUNT]) -> Self {
        WordFeatures {
            avg_hyp_prob: a[0],
            min_wp_prob: a[1],
            avg_wp_prob: a[2],
            min_neg_entropy: a[3],
            avg_neg_entropy: a[4],
            cn_prob: a[5],
            cn_norm_prob: a[6],
        }
    }
}

/// A word with its features and correctness label (1 correct, 0 error).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledWord {
    pub word: String,
    pub features: WordFeatures,
    pub label: u8,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn piece(wp: f64, hyp: f64, ne: f64, n: usize) -> WordPieceFeatures {
        WordPieceFeatures {
            wp_logp: wp,
            hyp_logp: hyp,
            neg_entropy: ne,
            emitted_count: n,
        }
    }

    #[test]
    fn singleton_aggregation() {
        let f = aggregate_word_features(&[piece(-0.1, -0.5, -0.2, 5)], AvgHypReading::PartialHypothesis).unwrap();
        assert_eq!(f.avg_hyp_prob, -0.1);
        assert_eq!((f.min_wp_prob, f.avg_wp_prob), (-0.1, -0.1));
        assert_eq!((f.min_neg_entropy, f.avg_neg_entropy), (-0.2, -0.2));
        let g = aggregate_word_features(&[piece(-0.1, -0.5, -0.2, 5)], AvgHypReading::LastPiece).unwrap();
        assert!((g.avg_hyp_prob - -0.02).abs() < 1e-15);
    }

    #[test]
    fn two_piece_aggregation() {
        let f = aggregate_word_features(
            &[piece(-0.2, -1.0, -0.1, 3), piece(-0.6, -1.6, -0.3, 4)],
            AvgHypReading::PartialHypothesis,
        )
        .unwrap();
        assert_eq!(f.min_wp_prob, -0.6);
        assert!((f.avg_wp_prob - -0.4).abs() < 1e-15);
        assert_eq!(f.min_neg_entropy, -0.3);
        assert!((f.avg_neg_entropy - -0.2).abs() < 1e-15);
        assert!((f.avg_hyp_prob - -0.4).abs() < 1e-15);
        assert!(aggregate_word_features(&[], AvgHypReading::PartialHypothesis).is_err());
    }
}
