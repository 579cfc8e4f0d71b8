//! N-best lists as JSON lines, one utterance per line.

use serde::{Deserialize, Serialize};

use super::decode::{Hypothesis, NBestList};
use super::vocab::Vocabulary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    pub tokens: Vec<String>,
    pub token_ids: Vec<usize>,
    pub logp: f64,
    pub emit_frames: Vec<usize>,
    pub wp_logp: Vec<f64>,
    pub neg_entropy: Vec<f64>,
    pub hyp_logp: Vec<f64>,
    pub emitted_counts: Vec<usize>,
    pub emitted_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBestRecord {
    pub utt_id: String,
    pub hyps: Vec<HypothesisRecord>,
}

impl NBestRecord {
    pub fn from_list(list: &NBestList, vocab: &Vocabulary) -> Self {
        NBestRecord {
            utt_id: list.utt_id.clone(),
            hyps: list
                .hyps
                .iter()
                .map(|h| HypothesisRecord {
                    tokens: h.tokens.iter().map(|&k| vocab.token(k).unwrap_or("").to_string()).collect(),
                    token_ids: h.tokens.clone(),
                    logp: h.logp,
                    emit_frames: h.emit_frames.clone(),
                    wp_logp: h.wp_logp.clone(),
                    neg_entropy: h.neg_entropy.clone(),
                    hyp_logp: h.hyp_logp.clone(),
                    emitted_counts: h.emitted_counts.clone(),
                    emitted_count: h.emitted_count,
                })
                .collect(),
        }
    }

    /// Rebuilds the list, checking per-token fields are length-aligned.
    pub fn to_list(&self) -> Result<NBestList> {
        let mut hyps = Vec::with_capacity(self.hyps.len());
        for (i, r) in self.hyps.iter().enumerate() {
            let n = r.token_ids.len();
            let lens = [
                r.tokens.len(),
                r.emit_frames.len(),
                r.wp_logp.len(),
                r.neg_entropy.len(),
                r.hyp_logp.len(),
                r.emitted_counts.len(),
            ];
            if lens.iter().any(|&l| l != n) {
                return Err(Error::Data(format!(
                    "utterance {} hypothesis {i}: per-token fields differ in length",
                    self.utt_id
                )));
            }
            hyps.push(Hypothesis {
                tokens: r.token_ids.clone(),
                logp: r.logp,
                emit_frames: r.emit_frames.clone(),
                wp_logp: r.wp_logp.clone(),
                neg_entropy: r.neg_entropy.clone(),
                hyp_logp: r.hyp_logp.clone(),
                emitted_counts: r.emitted_counts.clone(),
                emitted_count: r.emitted_count,
            });
        }
        Ok(NBestList {
            utt_id: self.utt_id.clone(),
            hyps,
        })
    }
}

/// Serializes lists as JSON lines.
pub fn write_nbest_jsonl(lists: &[NBestList], vocab: &Vocabulary) -> Result<String> {
    let mut out = String::new();
    for list in lists {
        let line = serde_json::to_string(&NBestRecord::from_list(list, vocab))
            .map_err(|e| Error::Data(format!("cannot serialize n-best: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_nbest_jsonl(text: &str) -> Result<Vec<NBestList>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let rec: NBestRecord = serde_json::from_str(l)
                .map_err(|e| Error::Data(format!("n-best line {}: {e}", i + 1)))?;
            rec.to_list()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_lines_round_trip() {
        let vocab = Vocabulary::new(["▁a", "b"]).unwrap();
        let hyp = Hypothesis {
            tokens: vec![1, 2],
            logp: -1.25,
            emit_frames: vec![0, 3],
            wp_logp: vec![-0.5, -0.25],
            neg_entropy: vec![-0.1, -0.2],
            hyp_logp: vec![-0.75, -1.0],
            emitted_counts: vec![1, 5],
            emitted_count: 6,
        };
        let lists = vec![NBestList {
            utt_id: "u1".into(),
            hyps: vec![hyp],
        }];
        let text = write_nbest_jsonl(&lists, &vocab).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.contains("\"tokens\":[\"▁a\",\"b\"]"));
        assert_eq!(parse_nbest_jsonl(&text).unwrap(), lists);
        let broken = text.replace("\"emit_frames\":[0,3]", "\"emit_frames\":[0]");
        assert!(parse_nbest_jsonl(&broken).is_err());
    }
}
