//! Word-level Levenshtein alignment and word error rate.

/// One step of an alignment between a hypothesis and a reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match { hyp: usize, reference: usize },
    Sub { hyp: usize, reference: usize },
    /// Hypothesis word with no reference counterpart.
    Ins { hyp: usize },
    /// Reference word missing from the hypothesis.
    Del { reference: usize },
}

impl EditOp {
    pub fn is_error(self) -> bool {
        !matches!(self, EditOp::Match { .. })
    }
}

fn table<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> Vec<Vec<usize>> {
    let (n, m) = (hyp.len(), reference.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = d[i - 1][j - 1] + usize::from(hyp[i - 1].as_ref() != reference[j - 1].as_ref());
            d[i][j] = diag.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d
}

/// Minimum edit-distance alignment (unit costs). Tracing back from the end,
/// ties prefer match, then substitution, then insertion, then deletion.
pub fn align_words<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> Vec<EditOp> {
    let d = table(hyp, reference);
    let (mut i, mut j) = (hyp.len(), reference.len());
    let mut ops = Vec::with_capacity(i.max(j));
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = hyp[i - 1].as_ref() == reference[j - 1].as_ref();
            if same && d[i][j] == d[i - 1][j - 1] {
                ops.push(EditOp::Match { hyp: i - 1, reference: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
            if !same && d[i][j] == d[i - 1][j - 1] + 1 {
                ops.push(EditOp::Sub { hyp: i - 1, reference: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            ops.push(EditOp::Ins { hyp: i - 1 });
            i -= 1;
        } else {
            ops.push(EditOp::Del { reference: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

pub fn edit_distance<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> usize {
    table(hyp, reference)[hyp.len()][reference.len()]
}

/// Corpus-level error counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WerStats {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ref_words: usize,
    pub wer: f64,
}

impl WerStats {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    pub fn add<S: AsRef<str>>(&mut self, hyp: &[S], reference: &[S]) {
        for op in align_words(hyp, reference) {
            match op {
                EditOp::Sub { .. } => self.substitutions += 1,
                EditOp::Ins { .. } => self.insertions += 1,
                EditOp::Del { .. } => self.deletions += 1,
                EditOp::Match { .. } => {}
            }
        }
        self.ref_words += reference.len();
        self.wer = if self.ref_words == 0 {
            if self.errors() == 0 { 0.0 } else { f64::INFINITY }
        } else {
            self.errors() as f64 / self.ref_words as f64
        };
    }
}

/// Word error rate over utterance pairs: total edits / total reference words.
pub fn wer<S: AsRef<str>>(pairs: &[(Vec<S>, Vec<S>)]) -> WerStats {
    let mut stats = WerStats::default();
    for (h, r) in pairs {
        stats.add(h, r);
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_alignments() {
        assert_eq!(
            align_words(&["a", "x"], &["a", "b"]),
            vec![EditOp::Match { hyp: 0, reference: 0 }, EditOp::Sub { hyp: 1, reference: 1 }]
        );
        assert_eq!(
            align_words(&["a", "b", "c"], &["a", "c"]),
            vec![
                EditOp::Match { hyp: 0, reference: 0 },
                EditOp::Ins { hyp: 1 },
                EditOp::Match { hyp: 2, reference: 1 }
            ]
        );
        let empty: [&str; 0] = [];
        assert_eq!(align_words(&empty, &["a"]), vec![EditOp::Del { reference: 0 }]);
    }

    #[test]
    fn wer_hand_case() {
        let s = wer(&[(vec!["a", "x"], vec!["a", "b", "c"])]);
        assert_eq!(s.errors(), 2);
        assert!((s.wer - 2.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn alignment_cost_is_edit_distance(
            hyp in prop::collection::vec("[abc]", 0..7),
            reference in prop::collection::vec("[abc]", 0..7),
        ) {
            let ops = align_words(&hyp, &reference);
            let errors = ops.iter().filter(|o| o.is_error()).count();
            prop_assert_eq!(errors, edit_distance(&hyp, &reference));
            let hyp_ops = ops.iter().filter(|o| !matches!(o, EditOp::Del { .. })).count();
            prop_assert_eq!(hyp_ops, hyp.len());
        }
    }
}
