use crate::text::{align_words, EditOp};

/// 1 for each hypothesis word aligned to an equal reference word, 0 for
/// substitutions and insertions. Deletions carry no label.
pub fn label_words<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> Vec<u8> {
    let mut labels = vec![0u8; hyp.len()];
    for op in align_words(hyp, reference) {
        if let EditOp::Match { hyp: h, .. } = op {
            labels[h] = 1;
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::edit_distance;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(label_words(&["a", "b"], &["a", "b"]), vec![1, 1]);
        assert_eq!(label_words(&["a", "x"], &["a", "b"]), vec![1, 0]);
        assert_eq!(label_words(&["a", "b", "c"], &["a", "c"]), vec![1, 0, 1]);
        assert_eq!(label_words::<&str>(&[], &["a"]), Vec::<u8>::new());
    }

    proptest! {
        #[test]
        fn one_label_per_word(
            hyp in prop::collection::vec(0u8..4, 0..8),
            reference in prop::collection::vec(0u8..4, 0..8),
        ) {
            let h: Vec<String> = hyp.iter().map(|c| c.to_string()).collect();
            let r: Vec<String> = reference.iter().map(|c| c.to_string()).collect();
            let labels = label_words(&h, &r);
            prop_assert_eq!(labels.len(), h.len());
            let ops = align_words(&h, &r);
            let errors = ops.iter().filter(|op| op.is_error()).count();
            prop_assert_eq!(errors, edit_distance(&h, &r));
            let sub_ins = ops
                .iter()
                .filter(|op| matches!(op, EditOp::Sub { .. } | EditOp::Ins { .. }))
                .count();
            prop_assert_eq!(labels.iter().filter(|&&l| l == 0).count(), sub_ins);
        }
    }
}
