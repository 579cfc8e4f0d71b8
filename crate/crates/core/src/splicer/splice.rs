use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::inventory::{sample_segment, SegmentInventory, SegmentRef, UnitLevel};
use super::lexicon::Lexicon;
use crate::audio::read_wav;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Which segments built an utterance, enough to rebuild it exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpliceRecipe {
    pub text: Vec<String>,
    pub segments: Vec<SegmentRef>,
    pub seed: u64,
}

/// Source recordings held in memory, keyed by path.
#[derive(Debug, Clone, Default)]
pub struct AudioStore {
    audio: HashMap<String, Vec<i16>>,
}

impl AudioStore {
    pub fn new() -> Self {
        AudioStore::default()
    }

    /// Loads every recording the inventory references.
    pub fn load(inventory: &SegmentInventory) -> Result<Self> {
        let mut store = AudioStore::new();
        for seg in inventory.words.values().chain(inventory.phones.values()).flatten() {
            if !store.audio.contains_key(&seg.audio_path) {
                let (samples, rate) = read_wav(seg.audio_path.as_ref())?;
                if rate != inventory.sample_rate {
                    return Err(Error::Data(format!("{} has rate {rate}", seg.audio_path)));
                }
                store.audio.insert(seg.audio_path.clone(), samples);
            }
        }
        Ok(store)
    }

    pub fn insert(&mut self, path: impl Into<String>, samples: Vec<i16>) {
        self.audio.insert(path.into(), samples);
    }

    /// The samples `[start, end)` of a segment.
    pub fn extract(&self, seg: &SegmentRef) -> Result<&[i16]> {
        let audio = self
            .audio
            .get(&seg.audio_path)
            .ok_or_else(|| Error::Data(format!("audio {} not loaded", seg.audio_path)))?;
        if seg.start >= seg.end || seg.end > audio.len() {
            return Err(Error::Data(format!(
                "segment [{}, {}) outside {} ({} samples)",
                seg.start,
                seg.end,
                seg.audio_path,
                audio.len()
            )));
        }
        Ok(&audio[seg.start..seg.end])
    }
}

/// Words that can be neither spliced whole nor rebuilt from phones.
pub fn unresolvable_words<S: AsRef<str>>(text: &[S], inventory: &SegmentInventory, lexicon: &Lexicon) -> Vec<String> {
    let mut missing: Vec<String> = Vec::new();
    for w in text {
        let w = w.as_ref();
        if inventory.words.contains_key(w) {
            continue;
        }
        let ok = lexicon
            .pronunciation(w)
            .is_some_and(|p| p.iter().all(|ph| inventory.phones.contains_key(ph)));
        if !ok && !missing.iter().any(|m| m == w) {
            missing.push(w.to_string());
        }
    }
    missing
}

/// Concatenates one randomly chosen segment per word (or per phone of the
/// word's primary pronunciation when the word has no segments).
pub fn splice_utterance<S: AsRef<str>>(
    text: &[S],
    inventory: &SegmentInventory,
    lexicon: &Lexicon,
    store: &AudioStore,
    seed: u64,
) -> Result<(Vec<i16>, SpliceRecipe)> {
    let missing = unresolvable_words(text, inventory, lexicon);
    if !missing.is_empty() {
        return Err(Error::UnresolvableWords(missing));
    }
    let mut rng = seeded(seed);
    let mut segments = Vec::new();
    for w in text {
        let w = w.as_ref();
        if inventory.words.contains_key(w) {
            segments.push(sample_segment(w, UnitLevel::Word, inventory, &mut rng)?.clone());
        } else {
            for ph in lexicon.pronunciation(w).expect("checked above") {
                segments.push(sample_segment(ph, UnitLevel::Phone, inventory, &mut rng)?.clone());
            }
        }
    }
    let recipe = SpliceRecipe {
        text: text.iter().map(|w| w.as_ref().to_string()).collect(),
        segments,
        seed,
    };
    let audio = replay(&recipe, store)?;
    Ok((audio, recipe))
}

/// Rebuilds audio from a recipe.
pub fn replay(recipe: &SpliceRecipe, store: &AudioStore) -> Result<Vec<i16>> {
    let mut out = Vec::with_capacity(recipe.segments.iter().map(SegmentRef::len).sum());
    for seg in &recipe.segments {
        out.extend_from_slice(store.extract(seg)?);
    }
    Ok(out)
}
