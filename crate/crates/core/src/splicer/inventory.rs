use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ctm::{parse_ctm, CtmRow};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// A stretch `[start, end)` of samples in one source recording.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRef {
    pub unit: String,
    pub audio_path: String,
    pub start: usize,
    pub end: usize,
    pub utt_id: String,
}

impl SegmentRef {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitLevel {
    Word,
    Phone,
}

/// Extractable segments per word and per phone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentInventory {
    pub sample_rate: u32,
    pub words: BTreeMap<String, Vec<SegmentRef>>,
    pub phones: BTreeMap<String, Vec<SegmentRef>>,
}

/// Tolerance absorbing decimal-to-binary error in CTM times.
const TIME_TOL: f64 = 1e-6;

/// `[floor(start·rate), ceil(end·rate))`, never trimming the segment.
pub fn time_to_samples(start: f64, end: f64, rate: u32) -> (usize, usize) {
    let r = f64::from(rate);
    let s = (start * r + TIME_TOL).floor().max(0.0) as usize;
    let e = (end * r - TIME_TOL).ceil().max(0.0) as usize;
    (s, e)
}

impl SegmentInventory {
    pub fn new(sample_rate: u32) -> Self {
        SegmentInventory {
            sample_rate,
            words: BTreeMap::new(),
            phones: BTreeMap::new(),
        }
    }

    pub fn map(&self, level: UnitLevel) -> &BTreeMap<String, Vec<SegmentRef>> {
        match level {
            UnitLevel::Word => &self.words,
            UnitLevel::Phone => &self.phones,
        }
    }

    fn map_mut(&mut self, level: UnitLevel) -> &mut BTreeMap<String, Vec<SegmentRef>> {
        match level {
            UnitLevel::Word => &mut self.words,
            UnitLevel::Phone => &mut self.phones,
        }
    }

    pub fn segments(&self, level: UnitLevel, unit: &str) -> Option<&[SegmentRef]> {
        self.map(level).get(unit).map(Vec::as_slice)
    }

    pub fn segment_count(&self) -> usize {
        self.words.values().chain(self.phones.values()).map(Vec::len).sum()
    }

    /// Adds one segment per row. Audio for utterance `u` is `audio_dir/u.wav`;
    /// rows outside the audio or with non-positive duration are reported
    /// together as a data error.
    pub fn add_rows(&mut self, rows: &[CtmRow], audio_dir: &Path, level: UnitLevel) -> Result<()> {
        let mut lengths: HashMap<&str, (PathBuf, usize)> = HashMap::new();
        let mut bad = Vec::new();
        let mut added = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if !lengths.contains_key(row.utt_id.as_str()) {
                let path = audio_dir.join(format!("{}.wav", row.utt_id));
                let reader = hound::WavReader::open(&path).map_err(|e| match e {
                    hound::Error::IoError(io) => Error::io(&path, io),
                    other => Error::Wav {
                        path: path.clone(),
                        source: other,
                    },
                })?;
                if reader.spec().sample_rate != self.sample_rate {
                    return Err(Error::Data(format!(
                        "{} has rate {}, inventory uses {}",
                        path.display(),
                        reader.spec().sample_rate,
                        self.sample_rate
                    )));
                }
                lengths.insert(&row.utt_id, (path, reader.duration() as usize));
            }
            let (path, len) = &lengths[row.utt_id.as_str()];
            let (start, end) = time_to_samples(row.start, row.end(), self.sample_rate);
            if row.start < 0.0 || row.duration <= 0.0 || start >= end || end > *len {
                bad.push(format!(
                    "row {} ({} {:.3}+{:.3} {})",
                    i + 1,
                    row.utt_id,
                    row.start,
                    row.duration,
                    row.unit
                ));
                continue;
            }
            added.push(SegmentRef {
                unit: row.unit.clone(),
                audio_path: path.to_string_lossy().into_owned(),
                start,
                end,
                utt_id: row.utt_id.clone(),
            });
        }
        if !bad.is_empty() {
            return Err(Error::Data(format!("alignment rows outside audio: {}", bad.join("; "))));
        }
        for seg in added {
            self.map_mut(level).entry(seg.unit.clone()).or_default().push(seg);
        }
        Ok(())
    }
}

/// Inventory of one level from a CTM alignment file.
pub fn build_inventory(alignment: &Path, audio_dir: &Path, level: UnitLevel, sample_rate: u32) -> Result<SegmentInventory> {
    let text = std::fs::read_to_string(alignment).map_err(|e| Error::io(alignment, e))?;
    let rows = parse_ctm(&text)?;
    let mut inv = SegmentInventory::new(sample_rate);
    inv.add_rows(&rows, audio_dir, level)?;
    Ok(inv)
}

/// Uniform draw among the unit's segments.
pub fn sample_segment<'a>(
    unit: &str,
    level: UnitLevel,
    inventory: &'a SegmentInventory,
    rng: &mut Rng,
) -> Result<&'a SegmentRef> {
    match inventory.segments(level, unit) {
        Some(segs) if !segs.is_empty() => Ok(&segs[rng.random_range(0..segs.len())]),
        _ => Err(Error::LookupMiss(unit.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::write_wav;
    use crate::rng::seeded;

    fn fixture(rows: &str) -> (tempfile::TempDir, Result<SegmentInventory>) {
        let dir = tempfile::tempdir().unwrap();
        write_wav(&dir.path().join("u1.wav"), &vec![1i16; 8000], 16_000).unwrap();
        let ctm = dir.path().join("a.ctm");
        std::fs::write(&ctm, rows).unwrap();
        let inv = build_inventory(&ctm, dir.path(), UnitLevel::Word, 16_000);
        (dir, inv)
    }

    #[test]
    fn empty_alignment_gives_empty_inventory() {
        let (_d, inv) = fixture("");
        assert_eq!(inv.unwrap().segment_count(), 0);
    }

    #[test]
    fn seconds_convert_to_sample_range() {
        let (_d, inv) = fixture("u1 1 0.10 0.20 cat\n");
        let inv = inv.unwrap();
        let seg = &inv.words["cat"][0];
        assert_eq!((seg.start, seg.end), (1600, 4800));
        assert_eq!(time_to_samples(0.00003, 0.00009, 16_000), (0, 2));
    }

    #[test]
    fn duplicate_rows_accumulate() {
        let (_d, inv) = fixture("u1 1 0.0 0.1 cat\nu1 1 0.2 0.1 cat\n");
        assert_eq!(inv.unwrap().words["cat"].len(), 2);
    }

    #[test]
    fn out_of_range_rows_are_listed() {
        let (_d, inv) = fixture("u1 1 0.4 0.2 cat\nu1 1 0.0 0.1 ok\nu1 1 0.6 0.1 dog\n");
        let msg = inv.unwrap_err().to_string();
        assert!(msg.contains("row 1") && msg.contains("row 3") && !msg.contains("row 2"));
    }

    #[test]
    fn missing_audio_is_io_error() {
        let (_d, inv) = fixture("u2 1 0.0 0.1 cat\n");
        assert!(matches!(inv, Err(Error::Io { .. })));
    }

    #[test]
    fn sampling_is_deterministic_and_checks_presence() {
        let (_d, inv) = fixture("u1 1 0.0 0.1 cat\nu1 1 0.1 0.1 cat\nu1 1 0.2 0.1 cat\nu1 1 0.3 0.1 dog\n");
        let inv = inv.unwrap();
        let a = sample_segment("cat", UnitLevel::Word, &inv, &mut seeded(5)).unwrap();
        let b = sample_segment("cat", UnitLevel::Word, &inv, &mut seeded(5)).unwrap();
        assert_eq!(a, b);
        let d = sample_segment("dog", UnitLevel::Word, &inv, &mut seeded(1)).unwrap();
        assert_eq!(d, &inv.words["dog"][0]);
        assert!(matches!(
            sample_segment("cow", UnitLevel::Word, &inv, &mut seeded(1)),
            Err(Error::LookupMiss(_))
        ));
    }
}
