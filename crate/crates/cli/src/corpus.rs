//! Synthetic speech-like corpus: every phone emits noisy copies of a
//! prototype feature vector, rendered to 16 kHz audio, with exact word and
//! phone alignments.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use transkit::audio::{synthesize, AMPLITUDE, FEATURE_DIM, FRAME_SHIFT};
use transkit::rng::{stream, Rng};
use transkit::splicer::{CtmRow, Lexicon};
use transkit::{Error, Result};

pub const SILENCE: &str = "sil";

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ru", "te", "sa", "no", "pi", "ve", "da", "zu", "fo", "ne", "bi", "gu", "ho", "ja", "ke",
    "li", "mo", "pa", "ri", "so", "tu",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    /// Non-silence phones.
    pub phones: usize,
    pub words: usize,
    /// Standard deviation of the per-frame feature noise.
    pub noise: f64,
    pub min_words: usize,
    pub max_words: usize,
    pub min_phone_frames: usize,
    pub max_phone_frames: usize,
    /// Probability of a pause between two words.
    pub pause_prob: f64,
    /// Probability that the next word follows the domain's preferred successor.
    pub domain_bias: f64,
    pub source_train: usize,
    pub source_test: usize,
    pub target_texts: usize,
    /// Target-domain utterances with audio for confidence training.
    pub target_dev: usize,
    pub target_test: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            phones: 8,
            words: 10,
            noise: 0.15,
            min_words: 2,
            max_words: 4,
            min_phone_frames: 2,
            max_phone_frames: 4,
            pause_prob: 0.3,
            domain_bias: 0.85,
            source_train: 300,
            source_test: 40,
            target_texts: 300,
            target_dev: 100,
            target_test: 40,
            seed: 0,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("corpus: {m}")));
        if self.phones < 2 || self.phones > 64 {
            return bad("phones must be in 2..=64");
        }
        if self.words < 2 || self.words > SYLLABLES.len() * SYLLABLES.len() {
            return bad("words must be at least 2");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("noise must be >= 0");
        }
        if self.min_words == 0 || self.min_words > self.max_words {
            return bad("need 1 <= min_words <= max_words");
        }
        if self.min_phone_frames == 0 || self.min_phone_frames > self.max_phone_frames {
            return bad("need 1 <= min_phone_frames <= max_phone_frames");
        }
        for (name, p) in [("pause_prob", self.pause_prob), ("domain_bias", self.domain_bias)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must be in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// A contiguous run of frames carrying one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub unit: String,
    pub start: usize,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub words: Vec<String>,
    pub frames: Vec<Vec<f64>>,
    pub phones: Vec<Segment>,
    pub word_segments: Vec<Segment>,
}

impl Utterance {
    pub fn audio(&self) -> Result<Vec<i16>> {
        synthesize(&self.frames)
    }

    pub fn phone_ctm(&self) -> Vec<CtmRow> {
        ctm(&self.id, &self.phones)
    }

    pub fn word_ctm(&self) -> Vec<CtmRow> {
        ctm(&self.id, &self.word_segments)
    }
}

fn ctm(utt: &str, segs: &[Segment]) -> Vec<CtmRow> {
    segs.iter()
        .map(|s| CtmRow {
            utt_id: utt.to_string(),
            channel: "1".into(),
            start: s.start as f64 * FRAME_SHIFT,
            duration: s.frames as f64 * FRAME_SHIFT,
            unit: s.unit.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub name: String,
    pub utterances: Vec<Utterance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub spec: CorpusSpec,
    /// Silence first, then the spoken phones.
    pub phones: Vec<String>,
    pub prototypes: Vec<Vec<f64>>,
    pub words: Vec<String>,
    pub lexicon: Lexicon,
    pub source_successor: Vec<usize>,
    pub target_successor: Vec<usize>,
    pub splits: Vec<Split>,
    /// Target-domain texts without audio, for adaptation.
    pub target_texts: Vec<Vec<String>>,
}

impl Corpus {
    pub fn split(&self, name: &str) -> Option<&Split> {
        self.splits.iter().find(|s| s.name == name)
    }
}

pub const SOURCE_TRAIN: &str = "source_train";
pub const SOURCE_TEST: &str = "source_test";
pub const TARGET_DEV: &str = "target_dev";
pub const TARGET_TEST: &str = "target_test";

fn quantize(v: f64) -> f64 {
    (v * AMPLITUDE).round() / AMPLITUDE
}

fn prototypes(n: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    const MIN_DIST: f64 = 0.3;
    let mut out = vec![vec![0.0; FEATURE_DIM]];
    let mut attempts = 0;
    while out.len() < n + 1 {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::Config(format!("cannot place {n} distinct phone prototypes")));
        }
        let cand: Vec<f64> = (0..FEATURE_DIM).map(|_| quantize(rng.random_range(-0.6..0.6))).collect();
        let far = out
            .iter()
            .all(|p| p.iter().zip(&cand).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() >= MIN_DIST);
        if far {
            out.push(cand);
        }
    }
    Ok(out)
}

fn word_names(n: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(n);
    'outer: for a in SYLLABLES {
        for b in SYLLABLES {
            if names.len() == n {
                break 'outer;
            }
            if a != b {
                names.push(format!("{a}{b}"));
            }
        }
    }
    names
}

/// A permutation of word indices; with `avoid`, no index keeps its image.
fn successor(n: usize, avoid: Option<&[usize]>, rng: &mut Rng) -> Vec<usize> {
    loop {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        let clash = avoid.is_some_and(|a| a.iter().zip(&p).any(|(x, y)| x == y));
        if !clash {
            return p;
        }
    }
}

fn text(spec: &CorpusSpec, succ: &[usize], words: &[String], rng: &mut Rng) -> Vec<String> {
    let len = rng.random_range(spec.min_words..=spec.max_words);
    let mut ids = vec![rng.random_range(0..words.len())];
    while ids.len() < len {
        let prev = *ids.last().expect("nonempty");
        let next = if rng.random::<f64>() < spec.domain_bias {
            succ[prev]
        } else {
            rng.random_range(0..words.len())
        };
        ids.push(next);
    }
    ids.into_iter().map(|i| words[i].clone()).collect()
}

struct Renderer<'a> {
    spec: &'a CorpusSpec,
    phones: &'a [String],
    prototypes: &'a [Vec<f64>],
    lexicon: &'a Lexicon,
}

impl Renderer<'_> {
    fn render(&self, id: String, words: Vec<String>, rng: &mut Rng) -> Result<Utterance> {
        let noise = Normal::new(0.0, self.spec.noise).map_err(|e| Error::Config(format!("noise: {e}")))?;
        let mut utt = Utterance {
            id,
            words: Vec::new(),
            frames: Vec::new(),
            phones: Vec::new(),
            word_segments: Vec::new(),
        };
        let emit = |utt: &mut Utterance, phone: usize, frames: usize, rng: &mut Rng| {
            utt.phones.push(Segment {
                unit: self.phones[phone].clone(),
                start: utt.frames.len(),
                frames,
            });
            for _ in 0..frames {
                let f = self.prototypes[phone].iter().map(|&v| quantize(v + noise.sample(rng))).collect();
                utt.frames.push(f);
            }
        };
        emit(&mut utt, 0, rng.random_range(1..=2), rng);
        for (i, w) in words.iter().enumerate() {
            if i > 0 && rng.random::<f64>() < self.spec.pause_prob {
                emit(&mut utt, 0, rng.random_range(1..=3), rng);
            }
            let start = utt.frames.len();
            let pron = self.lexicon.pronunciation(w).ok_or_else(|| Error::Lexicon(w.clone()))?;
            for p in pron {
                let id = self.phones.iter().position(|q| q == p).expect("lexicon uses corpus phones");
                let d = rng.random_range(self.spec.min_phone_frames..=self.spec.max_phone_frames);
                emit(&mut utt, id, d, rng);
            }
            utt.word_segments.push(Segment {
                unit: w.clone(),
                start,
                frames: utt.frames.len() - start,
            });
        }
        emit(&mut utt, 0, rng.random_range(1..=2), rng);
        utt.words = words;
        Ok(utt)
    }
}

/// Builds the whole corpus from `spec`; every utterance draws from its own
/// stream so split sizes do not change earlier utterances.
pub fn generate(spec: &CorpusSpec) -> Result<Corpus> {
    spec.validate()?;
    let seed = spec.seed;
    let mut rng = stream(seed, "corpus-units", 0);
    let phones: Vec<String> = std::iter::once(SILENCE.to_string())
        .chain((0..spec.phones).map(|i| format!("p{i}")))
        .collect();
    let prototypes = prototypes(spec.phones, &mut rng)?;
    let words = word_names(spec.words);
    let mut lexicon = Lexicon::new();
    let mut used = std::collections::BTreeSet::new();
    for w in &words {
        let pron = loop {
            let n = rng.random_range(2..=3);
            let pron: Vec<String> = (0..n).map(|_| phones[rng.random_range(1..phones.len())].clone()).collect();
            if used.insert(pron.clone()) {
                break pron;
            }
        };
        lexicon.insert(w, pron)?;
    }
    let source_successor = successor(words.len(), None, &mut rng);
    let target_successor = successor(words.len(), Some(&source_successor), &mut rng);
    let renderer = Renderer {
        spec,
        phones: &phones,
        prototypes: &prototypes,
        lexicon: &lexicon,
    };
    let mut splits = Vec::new();
    for (name, count, succ) in [
        (SOURCE_TRAIN, spec.source_train, &source_successor),
        (SOURCE_TEST, spec.source_test, &source_successor),
        (TARGET_DEV, spec.target_dev, &target_successor),
        (TARGET_TEST, spec.target_test, &target_successor),
    ] {
        let utterances = (0..count)
            .map(|i| {
                let mut rng = stream(seed, name, i as u64);
                let t = text(spec, succ, &words, &mut rng);
                renderer.render(format!("{name}_{i:04}"), t, &mut rng)
            })
            .collect::<Result<_>>()?;
        splits.push(Split {
            name: name.to_string(),
            utterances,
        });
    }
    let target_texts = (0..spec.target_texts)
        .map(|i| text(spec, &target_successor, &words, &mut stream(seed, "target_texts", i as u64)))
        .collect();
    Ok(Corpus {
        spec: spec.clone(),
        phones,
        prototypes,
        words,
        lexicon,
        source_successor,
        target_successor,
        splits,
        target_texts,
    })
}
