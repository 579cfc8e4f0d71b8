//! Adaptation audio built by concatenating word (or, for out-of-inventory
//! words, phone) segments cut from an aligned corpus.

mod ctm;
mod inventory;
mod lexicon;
mod manifest;
mod splice;

pub use ctm::{format_ctm, parse_ctm, CtmRow};
pub use inventory::{build_inventory, sample_segment, time_to_samples, SegmentInventory, SegmentRef, UnitLevel};
pub use lexicon::Lexicon;
pub use manifest::{
    build_adaptation_set, format_manifest, parse_manifest, AdaptationSet, ManifestRow, Origin, UnresolvedPolicy,
    SPLICED_DIR,
};
pub use splice::{replay, splice_utterance, unresolvable_words, AudioStore, SpliceRecipe};
