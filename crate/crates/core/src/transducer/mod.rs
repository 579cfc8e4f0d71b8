//! Toy recurrent transducer: model, loss, decoding, training and adaptation.

mod checkpoint;
mod decode;
mod lattice;
mod loss;
mod model;
mod nbest;
mod train;
mod vocab;

pub use decode::{
    beam_search, beam_search_scored, greedy_decode, greedy_search, neg_entropy, DecodeConfig, Hypothesis,
    LatticeScorer, ModelScorer, ModelState, NBestList, StepScorer,
};
pub use lattice::PosteriorLattice;
pub use loss::{rnnt_grad, rnnt_loss, rnnt_loss_bruteforce, BruteForceLoss, RnntGradient, BRUTEFORCE_MAX_STEPS};
pub use model::{
    EncoderActivations, ParamGroup, PhoneBranch, PhonePosteriorgram, PredictionState, TensorView, TransducerConfig,
    TransducerModel,
};
pub use vocab::{Vocabulary, WordSpan, BLANK_SYMBOL, WORD_START};
pub use train::{
    adapt, batch_loss, loss_and_gradient, mtl_loss, train, train_step, AdaptConfig, Freeze, Losses, StepConfig,
    TrainConfig, TrainExample, TrainMode,
};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest, TensorEntry, MANIFEST_FILE};
pub use nbest::{parse_nbest_jsonl, write_nbest_jsonl, HypothesisRecord, NBestRecord};
