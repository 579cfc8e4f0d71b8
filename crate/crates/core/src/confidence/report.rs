use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::aupr::{aupr, TargetClass};
use super::classifier::ConfidenceModel;
use super::cn::{build_confusion_network, cn_features, ScoreMode};
use super::features::{
    aggregate_word_features, piece_features, AvgHypReading, LabeledWord, WordFeatures, FEATURE_COUNT, FEATURE_NAMES,
};
use super::labels::label_words;
use crate::error::{contract_err, Error, Result};
use crate::transducer::{NBestList, Vocabulary};

/// One word of a decoded utterance with its features and, when a reference
/// is known, its label.
#[derive(Debug, Clone, PartialEq)]
pub struct WordRecord {
    pub utt_id: String,
    pub word_index: usize,
    pub word: String,
    pub features: WordFeatures,
    pub label: Option<u8>,
}

impl WordRecord {
    pub fn labeled(&self) -> Option<LabeledWord> {
        self.label.map(|label| LabeledWord {
            word: self.word.clone(),
            features: self.features,
            label,
        })
    }
}

/// Features of every word in the top hypothesis, labelled against
/// `reference` when given.
pub fn word_confidence_features(
    nbest: &NBestList,
    vocab: &Vocabulary,
    reading: AvgHypReading,
    reference: Option<&[String]>,
) -> Result<Vec<WordRecord>> {
    let best = nbest
        .hyps
        .first()
        .ok_or_else(|| contract_err!("empty N-best list for {}", nbest.utt_id))?;
    let spans = vocab.group_words(&best.tokens)?;
    let cn = build_confusion_network(nbest, vocab, ScoreMode::Posterior)?;
    let cn_norm = build_confusion_network(nbest, vocab, ScoreMode::LengthNormalized)?;
    let words: Vec<String> = spans.iter().map(|s| s.word.clone()).collect();
    let labels = reference.map(|r| label_words(&words, r));
    spans
        .iter()
        .enumerate()
        .map(|(i, span)| {
            let decoding = aggregate_word_features(&piece_features(best, span), reading)?;
            let (p, p_norm) = cn_features(i, &cn, &cn_norm)?;
            Ok(WordRecord {
                utt_id: nbest.utt_id.clone(),
                word_index: i,
                word: span.word.clone(),
                features: WordFeatures::new(decoding, p, p_norm),
                label: labels.as_ref().map(|l| l[i]),
            })
        })
        .collect()
}

pub const FEATURE_CSV_HEADER: [&str; 11] = [
    "utt_id",
    "word_index",
    "word",
    "avg_hyp_prob",
    "min_wp_prob",
    "avg_wp_prob",
    "min_neg_entropy",
    "avg_neg_entropy",
    "cn_prob",
    "cn_norm_prob",
    "label",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("feature CSV: {e}"))
}

/// Feature dump with an empty label column for unlabelled words.
pub fn format_feature_csv(rows: &[WordRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FEATURE_CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        let mut fields = vec![r.utt_id.clone(), r.word_index.to_string(), r.word.clone()];
        fields.extend(r.features.to_array().iter().map(|v| v.to_string()));
        fields.push(r.label.map(|l| l.to_string()).unwrap_or_default());
        w.write_record(&fields).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(format!("feature CSV: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(format!("feature CSV: {e}")))
}

pub fn parse_feature_csv(text: &str) -> Result<Vec<WordRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().ne(FEATURE_CSV_HEADER) {
        return Err(Error::Data(format!("unexpected feature CSV header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse()
                .map_err(|_| Error::Data(format!("feature CSV line {line}: bad {} '{}'", FEATURE_CSV_HEADER[k], &rec[k])))
        };
        let mut x = [0.0; FEATURE_COUNT];
        for (k, v) in x.iter_mut().enumerate() {
            *v = num(3 + k)?;
        }
        let label = match &rec[10] {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            other => return Err(Error::Data(format!("feature CSV line {line}: label '{other}' is not 0 or 1"))),
        };
        rows.push(WordRecord {
            utt_id: rec[0].to_string(),
            word_index: rec[1]
                .parse()
                .map_err(|_| Error::Data(format!("feature CSV line {line}: bad word_index '{}'", &rec[1])))?,
            word: rec[2].to_string(),
            features: WordFeatures::from_array(x),
            label,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuprPair {
    pub aupr_correct: f64,
    pub aupr_incorrect: f64,
}

/// Classifier AUPR next to the AUPR of each raw feature used as a score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub aupr_correct: f64,
    pub aupr_incorrect: f64,
    pub per_feature: BTreeMap<String, AuprPair>,
    pub words: usize,
    pub incorrect_words: usize,
}

fn pair(scores: &[f64], labels: &[u8]) -> Result<AuprPair> {
    Ok(AuprPair {
        aupr_correct: aupr(scores, labels, TargetClass::Correct)?,
        aupr_incorrect: aupr(scores, labels, TargetClass::Incorrect)?,
    })
}

pub fn evaluate_confidence(model: &ConfidenceModel, words: &[LabeledWord]) -> Result<EvaluationReport> {
    let labels: Vec<u8> = words.iter().map(|w| w.label).collect();
    let scores: Vec<f64> = words.iter().map(|w| model.predict(&w.features)).collect::<Result<_>>()?;
    let overall = pair(&scores, &labels)?;
    let mut per_feature = BTreeMap::new();
    for (k, name) in FEATURE_NAMES.iter().enumerate() {
        let s: Vec<f64> = words.iter().map(|w| w.features.to_array()[k]).collect();
        per_feature.insert(name.to_string(), pair(&s, &labels)?);
    }
    Ok(EvaluationReport {
        aupr_correct: overall.aupr_correct,
        aupr_incorrect: overall.aupr_incorrect,
        per_feature,
        words: words.len(),
        incorrect_words: labels.iter().filter(|&&l| l == 0).count(),
    })
}
