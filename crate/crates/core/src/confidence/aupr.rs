use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which class counts as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetClass {
    Correct,
    Incorrect,
}

/// Average precision of `scores` (confidence that a word is correct) for
/// retrieving the target class. For `Incorrect` the ranking score is
/// `1 - score`. Tied scores form one threshold step.
pub fn aupr(scores: &[f64], labels: &[u8], target: TargetClass) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Evaluation(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) || labels.iter().any(|&l| l > 1) {
        return Err(Error::Evaluation("scores must be finite and labels binary".into()));
    }
    let positive = |l: u8| (l == 1) == (target == TargetClass::Correct);
    let n_pos = labels.iter().filter(|&&l| positive(l)).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::Evaluation("AUPR needs both classes present".into()));
    }
    let rank: Vec<f64> = scores
        .iter()
        .map(|&s| if target == TargetClass::Correct { s } else { 1.0 - s })
        .collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| rank[b].total_cmp(&rank[a]));
    let (mut tp, mut fp, mut ap) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut group_pos = 0;
        while j < order.len() && rank[order[j]] == rank[order[i]] {
            if positive(labels[order[j]]) {
                group_pos += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        tp += group_pos;
        if group_pos > 0 {
            ap += group_pos as f64 / n_pos as f64 * (tp as f64 / (tp + fp) as f64);
        }
        i = j;
    }
    Ok(ap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_case() {
        let ap = aupr(&[0.9, 0.8, 0.7], &[1, 0, 1], TargetClass::Correct).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-12);
        // Incorrect: ranking by 1 - score puts the 0.8 word second.
        let ap = aupr(&[0.9, 0.8, 0.7], &[1, 0, 1], TargetClass::Incorrect).unwrap();
        assert!((ap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn perfect_separation_and_errors() {
        let s = [0.9, 0.8, 0.2, 0.1];
        let l = [1, 1, 0, 0];
        assert_eq!(aupr(&s, &l, TargetClass::Correct).unwrap(), 1.0);
        assert_eq!(aupr(&s, &l, TargetClass::Incorrect).unwrap(), 1.0);
        assert!(aupr(&s, &[1, 1, 1, 1], TargetClass::Correct).is_err());
        assert!(aupr(&s, &[1, 1], TargetClass::Correct).is_err());
    }

    #[test]
    fn ties_form_one_step() {
        // All tied: precision is the prevalence.
        let ap = aupr(&[0.5; 4], &[1, 0, 0, 0], TargetClass::Correct).unwrap();
        assert!((ap - 0.25).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn invariant_under_monotone_transform(
            pairs in prop::collection::vec((0.0f64..1.0, 0u8..2), 2..40),
        ) {
            let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let labels: Vec<u8> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let squashed: Vec<f64> = scores.iter().map(|s| s * s * s * 0.5 + 0.1).collect();
            for target in [TargetClass::Correct, TargetClass::Incorrect] {
                let a = aupr(&scores, &labels, target).unwrap();
                let b = aupr(&squashed, &labels, target).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
    }
}
