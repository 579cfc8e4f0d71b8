use crate::error::{Error, Result};
use crate::splicer::Lexicon;

/// A word's extent over phone positions, inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPhoneSpan {
    pub word: String,
    pub first: usize,
    pub last: usize,
}

/// Phone ids to align, with optional (skippable) silence slots.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhoneSequence {
    pub phones: Vec<usize>,
    pub optional: Vec<bool>,
    pub spans: Vec<WordPhoneSpan>,
}

impl PhoneSequence {
    /// A sequence of mandatory phones forming one word per phone.
    pub fn from_phones(phones: &[usize]) -> Self {
        PhoneSequence {
            phones: phones.to_vec(),
            optional: vec![false; phones.len()],
            spans: phones
                .iter()
                .enumerate()
                .map(|(i, p)| WordPhoneSpan {
                    word: p.to_string(),
                    first: i,
                    last: i,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phones.is_empty()
    }

    pub fn mandatory(&self) -> usize {
        self.optional.iter().filter(|o| !**o).count()
    }

    pub fn optional_positions(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.optional[i]).collect()
    }
}

/// Concatenates primary pronunciations. With `silence`, an optional slot of
/// that phone goes before, between and after the words.
pub fn expand_to_phones<S: AsRef<str>>(
    words: &[S],
    lexicon: &Lexicon,
    phone_set: &[String],
    silence: Option<&str>,
) -> Result<PhoneSequence> {
    let id = |p: &str| -> Result<usize> {
        phone_set
            .iter()
            .position(|q| q == p)
            .ok_or_else(|| Error::Data(format!("phone '{p}' not in the phone set")))
    };
    let sil = silence.map(id).transpose()?;
    let mut seq = PhoneSequence::default();
    let push_sil = |seq: &mut PhoneSequence| {
        if let Some(s) = sil {
            seq.phones.push(s);
            seq.optional.push(true);
        }
    };
    if words.is_empty() {
        return Ok(seq);
    }
    push_sil(&mut seq);
    for w in words {
        let w = w.as_ref();
        let pron = lexicon.pronunciation(w).ok_or_else(|| Error::Lexicon(w.to_string()))?;
        let first = seq.phones.len();
        for p in pron {
            seq.phones.push(id(p)?);
            seq.optional.push(false);
        }
        seq.spans.push(WordPhoneSpan {
            word: w.to_string(),
            first,
            last: seq.phones.len() - 1,
        });
        push_sil(&mut seq);
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phones() -> Vec<String> {
        ["sil", "AH", "G", "OW", "AA", "N"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn expansion_examples() {
        let lex = Lexicon::parse("a AH\ngo G OW\non AA N\n").unwrap();
        let s = expand_to_phones(&["a"], &lex, &phones(), None).unwrap();
        assert_eq!(s.phones, vec![1]);
        assert_eq!((s.spans[0].first, s.spans[0].last), (0, 0));
        let s = expand_to_phones(&["go", "on"], &lex, &phones(), None).unwrap();
        assert_eq!(s.phones, vec![2, 3, 4, 5]);
        assert_eq!((s.spans[1].first, s.spans[1].last), (2, 3));
        let empty: [&str; 0] = [];
        assert!(expand_to_phones(&empty, &lex, &phones(), Some("sil")).unwrap().is_empty());
        let s = expand_to_phones(&["go", "on"], &lex, &phones(), Some("sil")).unwrap();
        assert_eq!(s.phones, vec![0, 2, 3, 0, 4, 5, 0]);
        assert_eq!(s.optional_positions(), vec![0, 3, 6]);
        assert_eq!(s.mandatory(), 4);
        assert!(matches!(
            expand_to_phones(&["zzz"], &lex, &phones(), None),
            Err(Error::Lexicon(w)) if w == "zzz"
        ));
    }
}
