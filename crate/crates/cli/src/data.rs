//! Loading manifests, audio features, vocabularies and frame-level phone
//! targets for the pipeline commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use transkit::audio::featurize;
use transkit::splicer::{parse_ctm, parse_manifest, CtmRow, ManifestRow};
use transkit::transducer::{TrainExample, Vocabulary};

use crate::io::{parent_dir, read_audio, read_text, resolve};

/// Manifest rows plus the directory their audio paths are relative to.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub rows: Vec<ManifestRow>,
}

impl Dataset {
    pub fn load(path: &Path) -> Result<Dataset> {
        let rows = parse_manifest(&read_text(path)?).with_context(|| format!("parsing manifest {}", path.display()))?;
        Ok(Dataset {
            dir: parent_dir(path),
            rows,
        })
    }

    pub fn audio_path(&self, row: &ManifestRow) -> PathBuf {
        resolve(&self.dir, &row.audio_path)
    }

    /// Features of every row, computed in parallel, in manifest order.
    pub fn features(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        self.rows
            .par_iter()
            .map(|r| Ok(featurize(&read_audio(&self.audio_path(r))?)))
            .collect()
    }

    pub fn references(&self) -> BTreeMap<String, Vec<String>> {
        self.rows
            .iter()
            .map(|r| (r.utt_id.clone(), r.words().into_iter().map(str::to_string).collect()))
            .collect()
    }
}

/// One entry per non-empty line.
pub fn read_list(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    Vocabulary::new(read_list(path)?).with_context(|| format!("building vocabulary from {}", path.display()))
}

/// Per-frame phone ids from a phone CTM whose times fall on frame boundaries.
pub fn frame_targets(rows: &[CtmRow], phones: &[String], frame_shift: f64) -> Result<BTreeMap<String, Vec<usize>>> {
    let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for r in rows {
        let id = phones
            .iter()
            .position(|p| *p == r.unit)
            .with_context(|| format!("phone '{}' in {} is not in the phone list", r.unit, r.utt_id))?;
        let start = (r.start / frame_shift).round() as usize;
        let end = (r.end() / frame_shift).round() as usize;
        let seq = out.entry(r.utt_id.clone()).or_default();
        if start != seq.len() {
            bail!("phone alignment of {} is not contiguous at {:.3}s", r.utt_id, r.start);
        }
        seq.extend(std::iter::repeat_n(id, end - start));
    }
    Ok(out)
}

pub fn load_frame_targets(ctm: &Path, phones: &[String], frame_shift: f64) -> Result<BTreeMap<String, Vec<usize>>> {
    let rows = parse_ctm(&read_text(ctm)?).with_context(|| format!("parsing {}", ctm.display()))?;
    frame_targets(&rows, phones, frame_shift)
}

/// Training examples for every manifest row; phone targets are attached
/// when given and must cover every frame.
pub fn examples(
    ds: &Dataset,
    features: Vec<Vec<Vec<f64>>>,
    vocab: &Vocabulary,
    targets: Option<&BTreeMap<String, Vec<usize>>>,
) -> Result<Vec<TrainExample>> {
    ds.rows
        .iter()
        .zip(features)
        .map(|(r, f)| {
            let phone_targets = match targets {
                None => None,
                Some(t) => {
                    let seq = t.get(&r.utt_id).with_context(|| format!("no phone alignment for {}", r.utt_id))?;
                    if seq.len() != f.len() {
                        bail!("{}: phone alignment has {} frames, audio has {}", r.utt_id, seq.len(), f.len());
                    }
                    Some(seq.clone())
                }
            };
            Ok(TrainExample {
                targets: vocab
                    .encode_words(&r.words())
                    .with_context(|| format!("tokenizing transcript of {}", r.utt_id))?,
                features: f,
                phone_targets,
            })
        })
        .collect()
}
