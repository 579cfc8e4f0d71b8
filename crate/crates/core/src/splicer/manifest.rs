use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::inventory::SegmentInventory;
use super::lexicon::Lexicon;
use super::splice::{splice_utterance, unresolvable_words, AudioStore, SpliceRecipe};
use crate::audio::write_wav;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Spliced,
    Real,
}

/// One dataset utterance. `audio_path` is relative to the manifest's directory
/// unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub utt_id: String,
    pub audio_path: String,
    pub text: String,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<SpliceRecipe>,
}

impl ManifestRow {
    pub fn words(&self) -> Vec<&str> {
        self.text.split_whitespace().collect()
    }
}

pub fn format_manifest(rows: &[ManifestRow]) -> Result<String> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Data(format!("manifest row {}: {e}", r.utt_id)))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRow>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Data(format!("manifest line {}: {e}", i + 1))))
        .collect()
}

/// What to do with texts containing unresolvable words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnresolvedPolicy {
    Abort,
    SkipWithReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationSet {
    pub rows: Vec<ManifestRow>,
    /// Index of each skipped text with its unresolvable words.
    pub skipped: Vec<(usize, Vec<String>)>,
    /// Spliced audio keyed by its path relative to the output directory.
    pub audio: Vec<(String, Vec<i16>)>,
    pub sample_rate: u32,
}

impl AdaptationSet {
    /// Writes every spliced WAV under `out_dir`.
    pub fn write_audio(&self, out_dir: &Path) -> Result<()> {
        let wav_dir = out_dir.join(SPLICED_DIR);
        std::fs::create_dir_all(&wav_dir).map_err(|e| Error::io(&wav_dir, e))?;
        for (rel, audio) in &self.audio {
            write_wav(&out_dir.join(rel), audio, self.sample_rate)?;
        }
        Ok(())
    }
}

/// Directory (under the output directory) receiving spliced WAVs.
pub const SPLICED_DIR: &str = "spliced";

/// Splices every text (audio paths under `spliced/`), draws
/// `round(ratio · |spliced|)` real rows (capped by the corpus size) and
/// returns all rows in a seeded shuffled order.
#[allow(clippy::too_many_arguments)]
pub fn build_adaptation_set(
    texts: &[Vec<String>],
    inventory: &SegmentInventory,
    lexicon: &Lexicon,
    store: &AudioStore,
    real: &[ManifestRow],
    ratio: f64,
    seed: u64,
    policy: UnresolvedPolicy,
) -> Result<AdaptationSet> {
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::Config(format!("mix ratio must be a finite value >= 0, got {ratio}")));
    }
    let mut skipped = Vec::new();
    for (i, t) in texts.iter().enumerate() {
        let missing = unresolvable_words(t, inventory, lexicon);
        if !missing.is_empty() {
            skipped.push((i, missing));
        }
    }
    if policy == UnresolvedPolicy::Abort && !skipped.is_empty() {
        let mut all: Vec<String> = skipped.iter().flat_map(|(_, w)| w.clone()).collect();
        all.dedup();
        return Err(Error::UnresolvableWords(all));
    }
    let mut rows = Vec::new();
    let mut audio_out = Vec::new();
    for (i, t) in texts.iter().enumerate() {
        if skipped.iter().any(|(j, _)| *j == i) {
            continue;
        }
        let (audio, recipe) = splice_utterance(t, inventory, lexicon, store, derive_seed(seed, "splice", i as u64))?;
        let utt_id = format!("spliced_{i:05}");
        let rel = format!("{SPLICED_DIR}/{utt_id}.wav");
        audio_out.push((rel.clone(), audio));
        rows.push(ManifestRow {
            utt_id,
            audio_path: rel,
            text: t.join(" "),
            origin: Origin::Spliced,
            recipe: Some(recipe),
        });
    }
    let n_real = ((ratio * rows.len() as f64).round() as usize).min(real.len());
    let mut pick: Vec<usize> = (0..real.len()).collect();
    pick.shuffle(&mut stream(seed, "mix", 0));
    let mut chosen: Vec<usize> = pick[..n_real].to_vec();
    chosen.sort_unstable();
    rows.extend(chosen.into_iter().map(|i| ManifestRow {
        origin: Origin::Real,
        recipe: None,
        ..real[i].clone()
    }));
    rows.shuffle(&mut stream(seed, "shuffle", 0));
    Ok(AdaptationSet {
        rows,
        skipped,
        audio: audio_out,
        sample_rate: inventory.sample_rate,
    })
}
