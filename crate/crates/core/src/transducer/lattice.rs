use crate::error::{shape_err, Error, Result};
use crate::numcore::log_softmax_unchecked;

/// `P(k | t, u)` for every frame `t < T`, label position `u <= U` and token
/// `k < K`, stored as log-probabilities in `(t, u, k)` row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorLattice {
    frames: usize,
    labels: usize,
    vocab: usize,
    log_probs: Vec<f64>,
}

impl PosteriorLattice {
    /// Normalizes every `(t, u)` slice of raw logits with a softmax.
    pub fn from_logits(frames: usize, labels: usize, vocab: usize, logits: &[f64]) -> Result<Self> {
        let n = frames * (labels + 1) * vocab;
        if logits.len() != n || vocab == 0 {
            return Err(shape_err!(
                "{} logits for lattice {frames}x{}x{vocab}",
                logits.len(),
                labels + 1
            ));
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite lattice logits".into()));
        }
        let log_probs = logits.chunks_exact(vocab).flat_map(log_softmax_unchecked).collect();
        Ok(PosteriorLattice {
            frames,
            labels,
            vocab,
            log_probs,
        })
    }

    /// Wraps already-normalized probabilities; each slice must sum to 1.
    pub fn from_probs(frames: usize, labels: usize, vocab: usize, probs: &[f64]) -> Result<Self> {
        let n = frames * (labels + 1) * vocab;
        if probs.len() != n || vocab == 0 {
            return Err(shape_err!(
                "{} probabilities for lattice {frames}x{}x{vocab}",
                probs.len(),
                labels + 1
            ));
        }
        for (i, slice) in probs.chunks_exact(vocab).enumerate() {
            let sum: f64 = slice.iter().sum();
            if slice.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Numeric(format!(
                    "lattice slice {i} is not a distribution (sum {sum})"
                )));
            }
        }
        Ok(PosteriorLattice {
            frames,
            labels,
            vocab,
            log_probs: probs.iter().map(|p| p.ln()).collect(),
        })
    }

    pub(crate) fn from_log_probs_unchecked(
        frames: usize,
        labels: usize,
        vocab: usize,
        log_probs: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(log_probs.len(), frames * (labels + 1) * vocab);
        PosteriorLattice {
            frames,
            labels,
            vocab,
            log_probs,
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    #[inline]
    pub(crate) fn offset(&self, t: usize, u: usize) -> usize {
        (t * (self.labels + 1) + u) * self.vocab
    }

    #[inline]
    pub fn log_prob(&self, t: usize, u: usize, k: usize) -> f64 {
        self.log_probs[self.offset(t, u) + k]
    }

    #[inline]
    pub fn prob(&self, t: usize, u: usize, k: usize) -> f64 {
        self.log_prob(t, u, k).exp()
    }

    pub fn slice(&self, t: usize, u: usize) -> &[f64] {
        let o = self.offset(t, u);
        &self.log_probs[o..o + self.vocab]
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_logits_are_uniform() {
        let lat = PosteriorLattice::from_logits(2, 1, 2, &[0.0; 8]).unwrap();
        for t in 0..2 {
            for u in 0..2 {
                for k in 0..2 {
                    assert!((lat.prob(t, u, k) - 0.5).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_shapes_and_distributions() {
        assert!(PosteriorLattice::from_logits(1, 0, 3, &[0.0; 2]).is_err());
        assert!(PosteriorLattice::from_probs(1, 0, 2, &[0.5, 0.6]).is_err());
    }
}
