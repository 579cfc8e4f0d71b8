//! Word confidence: decoding features aggregated per word, confusion-network
//! posteriors from the N-best list, a small feed-forward classifier and AUPR
//! evaluation.

mod aupr;
mod classifier;
mod cn;
mod features;
mod labels;
mod report;

pub use aupr::{aupr, TargetClass};
pub use classifier::{predict_confidence, train_classifier, ClassifierConfig, ClassifierGradient, ConfidenceModel};
pub use cn::{
    build_confusion_network, cn_features, confusion_network_from_words, hypothesis_weights, ConfusionNetwork,
    ScoreMode, Slot,
};
pub use features::{
    aggregate_word_features, piece_features, AvgHypReading, DecodingFeatures, LabeledWord, WordFeatures,
    WordPieceFeatures, FEATURE_COUNT, FEATURE_NAMES,
};
pub use labels::label_words;
pub use report::{
    evaluate_confidence, format_feature_csv, parse_feature_csv, word_confidence_features, AuprPair,
    EvaluationReport, WordRecord, FEATURE_CSV_HEADER,
};
