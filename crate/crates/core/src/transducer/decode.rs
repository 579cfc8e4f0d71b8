//! Frame-synchronous greedy and beam decoding.
//!
//! At each frame a hypothesis either emits blank (and advances) or emits a
//! word piece and stays on the frame, up to `max_symbols_per_frame` pieces;
//! after the cap it advances without a blank. Every emitted piece records the
//! decoding features used downstream for word confidence.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::lattice::PosteriorLattice;
use super::model::{PredictionState, TransducerModel};
use crate::error::{contract_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub beam: usize,
    pub nbest: usize,
    pub max_symbols_per_frame: usize,
    /// Compute negative entropy over all outputs instead of word pieces only.
    pub entropy_includes_blank: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beam: 8,
            nbest: 4,
            max_symbols_per_frame: 3,
            entropy_includes_blank: false,
        }
    }
}

/// A decoded token sequence with per-token decoding features.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Hypothesis {
    pub tokens: Vec<usize>,
    /// Total log posterior of the path, blanks included.
    pub logp: f64,
    pub emit_frames: Vec<usize>,
    pub wp_logp: Vec<f64>,
    pub neg_entropy: Vec<f64>,
    /// Path log posterior right after each token was emitted.
    pub hyp_logp: Vec<f64>,
    /// Pieces plus blanks emitted up to and including each token.
    pub emitted_counts: Vec<usize>,
    /// Pieces plus blanks emitted over the whole utterance.
    pub emitted_count: usize,
}

impl Hypothesis {
    fn emit_blank(&mut self, log_probs: &[f64], blank: usize) {
        self.logp += log_probs[blank];
        self.emitted_count += 1;
    }

    fn emit_token(&mut self, t: usize, k: usize, log_probs: &[f64], blank: usize, with_blank: bool) {
        self.logp += log_probs[k];
        self.emitted_count += 1;
        self.tokens.push(k);
        self.emit_frames.push(t);
        self.wp_logp.push(log_probs[k]);
        self.neg_entropy.push(neg_entropy(log_probs, blank, with_blank));
        self.hyp_logp.push(self.logp);
        self.emitted_counts.push(self.emitted_count);
    }
}

/// Hypotheses for one utterance, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBestList {
    pub utt_id: String,
    pub hyps: Vec<Hypothesis>,
}

impl NBestList {
    pub fn best(&self) -> Option<&Hypothesis> {
        self.hyps.first()
    }
}

/// `Σ_k q_k ln q_k`; over word pieces only (renormalized) unless
/// `include_blank` is set.
pub fn neg_entropy(log_probs: &[f64], blank: usize, include_blank: bool) -> f64 {
    if include_blank {
        return log_probs.iter().map(|&l| if l == f64::NEG_INFINITY { 0.0 } else { l.exp() * l }).sum();
    }
    let mass: f64 = log_probs
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != blank)
        .map(|(_, l)| l.exp())
        .sum();
    if mass <= 0.0 {
        return 0.0;
    }
    let log_mass = mass.ln();
    log_probs
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != blank)
        .map(|(_, &l)| {
            if l == f64::NEG_INFINITY {
                0.0
            } else {
                let lq = l - log_mass;
                lq.exp() * lq
            }
        })
        .sum()
}

/// Source of `ln P(k | t, state)` for the search routines.
pub trait StepScorer {
    type State: Clone;

    fn frames(&self) -> usize;
    fn blank(&self) -> usize;
    fn initial(&self) -> Self::State;
    fn extend(&self, state: &Self::State, token: usize) -> Self::State;
    fn log_probs(&self, t: usize, state: &Self::State) -> Vec<f64>;
}

/// Scores from a trained model, with the encoder pass done once up front.
pub struct ModelScorer<'a> {
    model: &'a TransducerModel,
    enc_proj: Vec<Vec<f64>>,
}

impl<'a> ModelScorer<'a> {
    pub fn new(model: &'a TransducerModel, features: &[Vec<f64>]) -> Result<Self> {
        let acts = model.encode_all(features)?;
        Ok(Self::from_encoder_states(model, acts.top()))
    }

    pub fn from_encoder_states(model: &'a TransducerModel, h_enc: &[Vec<f64>]) -> Self {
        ModelScorer {
            model,
            enc_proj: model.project_encoder(h_enc),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelState {
    pred: PredictionState,
    pred_proj: Vec<f64>,
}

impl StepScorer for ModelScorer<'_> {
    type State = ModelState;

    fn frames(&self) -> usize {
        self.enc_proj.len()
    }

    fn blank(&self) -> usize {
        self.model.blank()
    }

    fn initial(&self) -> ModelState {
        let pred = self.model.initial_prediction_state();
        let pred_proj = self.model.project_prediction(pred.output());
        ModelState { pred, pred_proj }
    }

    fn extend(&self, state: &ModelState, token: usize) -> ModelState {
        let pred = self.model.advance_prediction(&state.pred, token);
        let pred_proj = self.model.project_prediction(pred.output());
        ModelState { pred, pred_proj }
    }

    fn log_probs(&self, t: usize, state: &ModelState) -> Vec<f64> {
        self.model.log_probs_from_projections(&self.enc_proj[t], &state.pred_proj)
    }
}

/// Scores read from a fixed lattice where the distribution depends only on
/// the frame and the number of labels emitted so far (clamped to `U`).
pub struct LatticeScorer<'a> {
    lattice: &'a PosteriorLattice,
    blank: usize,
}

impl<'a> LatticeScorer<'a> {
    pub fn new(lattice: &'a PosteriorLattice, blank: usize) -> Self {
        LatticeScorer { lattice, blank }
    }
}

impl StepScorer for LatticeScorer<'_> {
    type State = usize;

    fn frames(&self) -> usize {
        self.lattice.frames()
    }

    fn blank(&self) -> usize {
        self.blank
    }

    fn initial(&self) -> usize {
        0
    }

    fn extend(&self, state: &usize, _token: usize) -> usize {
        state + 1
    }

    fn log_probs(&self, t: usize, state: &usize) -> Vec<f64> {
        self.lattice.slice(t, (*state).min(self.lattice.labels())).to_vec()
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Greedy search over any scorer.
pub fn greedy_search<S: StepScorer>(scorer: &S, max_symbols: usize, entropy_with_blank: bool) -> Result<Hypothesis> {
    if max_symbols == 0 {
        return Err(contract_err!("max symbols per frame must be at least 1"));
    }
    let blank = scorer.blank();
    let mut hyp = Hypothesis::default();
    let mut state = scorer.initial();
    for t in 0..scorer.frames() {
        for _ in 0..max_symbols {
            let lp = scorer.log_probs(t, &state);
            let k = argmax(&lp);
            if k == blank {
                hyp.emit_blank(&lp, blank);
                break;
            }
            hyp.emit_token(t, k, &lp, blank, entropy_with_blank);
            state = scorer.extend(&state, k);
        }
    }
    Ok(hyp)
}

/// Greedy decoding of one utterance.
pub fn greedy_decode(features: &[Vec<f64>], model: &TransducerModel, max_symbols: usize) -> Result<Hypothesis> {
    let scorer = ModelScorer::new(model, features)?;
    greedy_search(&scorer, max_symbols, false)
}

struct Entry<St> {
    hyp: Hypothesis,
    state: St,
}

enum Candidate {
    /// Already finished this frame; index into the `done` list.
    Done(usize),
    Blank { parent: usize, score: f64 },
    Label { parent: usize, token: usize, score: f64 },
}

fn rank(a: (f64, &[usize]), b: (f64, &[usize])) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Frame-synchronous beam search returning the `n` best distinct token
/// sequences. Identical sequences reached through different alignments are
/// merged by keeping the higher-scoring path.
pub fn beam_search_scored<S: StepScorer>(scorer: &S, config: &DecodeConfig) -> Result<Vec<Hypothesis>> {
    if config.nbest == 0 || config.beam < config.nbest {
        return Err(contract_err!(
            "need beam >= n >= 1, got beam {} and n {}",
            config.beam,
            config.nbest
        ));
    }
    if config.max_symbols_per_frame == 0 {
        return Err(contract_err!("max symbols per frame must be at least 1"));
    }
    let blank = scorer.blank();
    let with_blank = config.entropy_includes_blank;
    let mut beam = vec![Entry {
        hyp: Hypothesis::default(),
        state: scorer.initial(),
    }];
    for t in 0..scorer.frames() {
        let mut done: Vec<Entry<S::State>> = Vec::new();
        let mut active = beam;
        for _ in 0..config.max_symbols_per_frame {
            if active.is_empty() {
                break;
            }
            let scores: Vec<Vec<f64>> = active.iter().map(|e| scorer.log_probs(t, &e.state)).collect();
            let mut pool: Vec<Candidate> = (0..done.len()).map(Candidate::Done).collect();
            for (i, (e, lp)) in active.iter().zip(&scores).enumerate() {
                pool.push(Candidate::Blank {
                    parent: i,
                    score: e.hyp.logp + lp[blank],
                });
                for (k, l) in lp.iter().enumerate() {
                    if k != blank && *l > f64::NEG_INFINITY {
                        pool.push(Candidate::Label {
                            parent: i,
                            token: k,
                            score: e.hyp.logp + l,
                        });
                    }
                }
            }
            let key = |c: &Candidate| -> (f64, Vec<usize>, u8) {
                match c {
                    Candidate::Done(i) => (done[*i].hyp.logp, done[*i].hyp.tokens.clone(), 0),
                    Candidate::Blank { parent, score } => (*score, active[*parent].hyp.tokens.clone(), 0),
                    Candidate::Label { parent, token, score } => {
                        let mut toks = active[*parent].hyp.tokens.clone();
                        toks.push(*token);
                        (*score, toks, 1)
                    }
                }
            };
            let mut keyed: Vec<((f64, Vec<usize>, u8), Candidate)> = pool.into_iter().map(|c| (key(&c), c)).collect();
            keyed.sort_by(|(a, _), (b, _)| rank((a.0, &a.1), (b.0, &b.1)).then(a.2.cmp(&b.2)));
            keyed.truncate(config.beam);

            let mut prev_done: Vec<Option<Entry<S::State>>> = done.into_iter().map(Some).collect();
            let mut next_done = Vec::new();
            let mut next_active = Vec::new();
            for (_, c) in keyed {
                match c {
                    Candidate::Done(i) => next_done.push(prev_done[i].take().expect("candidate used once")),
                    Candidate::Blank { parent, .. } => {
                        let mut hyp = active[parent].hyp.clone();
                        hyp.emit_blank(&scores[parent], blank);
                        next_done.push(Entry {
                            hyp,
                            state: active[parent].state.clone(),
                        });
                    }
                    Candidate::Label { parent, token, .. } => {
                        let mut hyp = active[parent].hyp.clone();
                        hyp.emit_token(t, token, &scores[parent], blank, with_blank);
                        next_active.push(Entry {
                            hyp,
                            state: scorer.extend(&active[parent].state, token),
                        });
                    }
                }
            }
            done = next_done;
            active = next_active;
        }
        // Hypotheses still inside the frame at the symbol cap advance as they are.
        done.extend(active);
        done.sort_by(|a, b| rank((a.hyp.logp, &a.hyp.tokens), (b.hyp.logp, &b.hyp.tokens)));
        let mut seen = std::collections::HashSet::new();
        done.retain(|e| seen.insert(e.hyp.tokens.clone()));
        done.truncate(config.beam);
        beam = done;
    }
    let mut hyps: Vec<Hypothesis> = beam.into_iter().map(|e| e.hyp).collect();
    hyps.truncate(config.nbest);
    Ok(hyps)
}

/// Beam search for one utterance.
pub fn beam_search(
    utt_id: &str,
    features: &[Vec<f64>],
    model: &TransducerModel,
    config: &DecodeConfig,
) -> Result<NBestList> {
    let scorer = ModelScorer::new(model, features)?;
    Ok(NBestList {
        utt_id: utt_id.to_string(),
        hyps: beam_search_scored(&scorer, config)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::transducer::{TransducerConfig, Vocabulary};
    use rand::Rng;

    fn lattice(frames: usize, labels: usize, probs: &[[f64; 3]]) -> PosteriorLattice {
        let flat: Vec<f64> = probs.iter().flatten().copied().collect();
        PosteriorLattice::from_probs(frames, labels, 3, &flat).unwrap()
    }

    #[test]
    fn always_blank_gives_empty_hypothesis() {
        let lat = lattice(3, 0, &[[0.8, 0.1, 0.1]; 3]);
        let hyp = greedy_search(&LatticeScorer::new(&lat, 0), 3, false).unwrap();
        assert!(hyp.tokens.is_empty());
        assert_eq!(hyp.emitted_count, 3);
        assert!((hyp.logp - 3.0 * 0.8f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn hand_lattice_forces_token_on_second_frame() {
        // u = 0: blank at frame 0, label 1 at frame 1; u = 1: blank everywhere.
        let lat = lattice(
            2,
            1,
            &[[0.9, 0.05, 0.05], [0.9, 0.05, 0.05], [0.2, 0.7, 0.1], [0.9, 0.05, 0.05]],
        );
        let hyp = greedy_search(&LatticeScorer::new(&lat, 0), 3, false).unwrap();
        assert_eq!(hyp.tokens, vec![1]);
        assert_eq!(hyp.emit_frames, vec![1]);
        assert_eq!(hyp.emitted_count, 3);
        assert_eq!(hyp.emitted_counts, vec![2]);
        assert!((hyp.wp_logp[0] - 0.7f64.ln()).abs() < 1e-12);
        // Over pieces only: q = (0.875, 0.125).
        let ne = 0.875 * 0.875f64.ln() + 0.125 * 0.125f64.ln();
        assert!((hyp.neg_entropy[0] - ne).abs() < 1e-12);
        assert!((hyp.hyp_logp[0] - (0.9f64.ln() + 0.7f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn symbol_cap_limits_emissions_per_frame() {
        let lat = lattice(1, 0, &[[0.1, 0.8, 0.1]]);
        let hyp = greedy_search(&LatticeScorer::new(&lat, 0), 1, false).unwrap();
        assert_eq!(hyp.tokens, vec![1]);
        let hyp = greedy_search(&LatticeScorer::new(&lat, 0), 3, false).unwrap();
        assert_eq!(hyp.tokens, vec![1, 1, 1]);
        assert!(greedy_search(&LatticeScorer::new(&lat, 0), 0, false).is_err());
    }

    #[test]
    fn beam_of_one_is_greedy() {
        let mut rng = seeded(17);
        let vocab = Vocabulary::new(["▁a", "▁b", "c"]).unwrap();
        let cfg = TransducerConfig {
            input_dim: 3,
            encoder_hidden: 6,
            prediction_hidden: 6,
            embed_dim: 4,
            joint_dim: 6,
            ..TransducerConfig::default()
        };
        for _ in 0..10 {
            let mut model = TransducerModel::new(&cfg, vocab.clone(), vec![], &mut rng).unwrap();
            for b in &mut model.output.bias[1..] {
                *b += 1.0;
            }
            let feats: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let g = greedy_decode(&feats, &model, 3).unwrap();
            let conf = DecodeConfig {
                beam: 1,
                nbest: 1,
                ..DecodeConfig::default()
            };
            let nb = beam_search("u", &feats, &model, &conf).unwrap();
            assert_eq!(nb.hyps[0].tokens, g.tokens);
            assert_eq!(nb.hyps[0], g);
        }
    }

    #[test]
    fn nbest_sequences_are_distinct_and_sorted() {
        let lat = lattice(2, 1, &[[0.4, 0.35, 0.25]; 4]);
        let conf = DecodeConfig {
            beam: 8,
            nbest: 4,
            max_symbols_per_frame: 2,
            entropy_includes_blank: false,
        };
        let hyps = beam_search_scored(&LatticeScorer::new(&lat, 0), &conf).unwrap();
        assert_eq!(hyps.len(), 4);
        for w in hyps.windows(2) {
            assert!(w[0].logp >= w[1].logp);
            assert_ne!(w[0].tokens, w[1].tokens);
        }
        let two = DecodeConfig { nbest: 2, ..conf.clone() };
        let hyps = beam_search_scored(&LatticeScorer::new(&lat, 0), &two).unwrap();
        assert_eq!(hyps.len(), 2);
        assert_ne!(hyps[0].tokens, hyps[1].tokens);
        assert!(beam_search_scored(&LatticeScorer::new(&lat, 0), &DecodeConfig { beam: 1, nbest: 2, ..conf }).is_err());
    }

    /// Best single-path score per token sequence, by walking every path.
    fn enumerate_paths<S: StepScorer>(
        scorer: &S,
        t: usize,
        emitted: usize,
        cap: usize,
        state: S::State,
        tokens: &mut Vec<usize>,
        logp: f64,
        best: &mut std::collections::BTreeMap<Vec<usize>, f64>,
    ) {
        if t == scorer.frames() {
            let e = best.entry(tokens.clone()).or_insert(f64::NEG_INFINITY);
            *e = e.max(logp);
            return;
        }
        if emitted == cap {
            enumerate_paths(scorer, t + 1, 0, cap, state, tokens, logp, best);
            return;
        }
        let lp = scorer.log_probs(t, &state);
        let blank = scorer.blank();
        enumerate_paths(scorer, t + 1, 0, cap, state.clone(), tokens, logp + lp[blank], best);
        for k in (0..lp.len()).filter(|&k| k != blank) {
            tokens.push(k);
            let next = scorer.extend(&state, k);
            enumerate_paths(scorer, t, emitted + 1, cap, next, tokens, logp + lp[k], best);
            tokens.pop();
        }
    }

    #[test]
    fn wide_beam_finds_exact_best_path() {
        let mut rng = seeded(99);
        for trial in 0..40 {
            let frames = rng.random_range(1..=3);
            let labels = rng.random_range(0..=2);
            let logits: Vec<f64> = (0..frames * (labels + 1) * 3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let lat = PosteriorLattice::from_logits(frames, labels, 3, &logits).unwrap();
            let scorer = LatticeScorer::new(&lat, 0);
            let cap = 1 + trial % 2;
            let mut best = std::collections::BTreeMap::new();
            enumerate_paths(&scorer, 0, 0, cap, scorer.initial(), &mut Vec::new(), 0.0, &mut best);
            let (oracle_tokens, oracle_logp) = best
                .iter()
                .max_by(|a, b| a.1.total_cmp(b.1).then_with(|| b.0.cmp(a.0)))
                .unwrap();
            let conf = DecodeConfig {
                beam: 4096,
                nbest: 1,
                max_symbols_per_frame: cap,
                entropy_includes_blank: false,
            };
            let hyp = &beam_search_scored(&scorer, &conf).unwrap()[0];
            assert_eq!(&hyp.tokens, oracle_tokens);
            assert!((hyp.logp - oracle_logp).abs() < 1e-12);
        }
    }

    #[test]
    fn neg_entropy_bounds() {
        let lp: Vec<f64> = [0.5f64, 0.25, 0.25].iter().map(|p| p.ln()).collect();
        let ne = neg_entropy(&lp, 0, false);
        assert!((ne - 0.5f64.ln()).abs() < 1e-12);
        let ne_all = neg_entropy(&lp, 0, true);
        assert!(ne_all >= -(3f64.ln()) && ne_all <= 0.0);
    }
}
