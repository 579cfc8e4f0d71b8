use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Word pronunciations; the first listed pronunciation is the primary one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<Vec<String>>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Lexicon::default()
    }

    /// Parses `WORD ph1 ph2 ...` lines; repeated words add variants.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = Lexicon::new();
        for (n, line) in text.lines().enumerate() {
            let mut f = line.split_whitespace();
            let Some(word) = f.next() else { continue };
            let phones: Vec<String> = f.map(str::to_string).collect();
            if phones.is_empty() {
                return Err(Error::Data(format!("lexicon line {}: '{word}' has no phones", n + 1)));
            }
            lex.insert(word, phones)?;
        }
        Ok(lex)
    }

    pub fn insert(&mut self, word: &str, phones: Vec<String>) -> Result<()> {
        if phones.is_empty() {
            return Err(Error::Data(format!("empty pronunciation for '{word}'")));
        }
        self.entries.entry(word.to_string()).or_default().push(phones);
        Ok(())
    }

    pub fn pronunciation(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).and_then(|v| v.first()).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every phone used by any pronunciation.
    pub fn phone_set(&self) -> BTreeSet<&str> {
        self.entries.values().flatten().flatten().map(String::as_str).collect()
    }

    /// Fails naming the first phone not in `phones`.
    pub fn check_phones<S: AsRef<str>>(&self, phones: &[S]) -> Result<()> {
        for (w, prons) in &self.entries {
            for p in prons.iter().flatten() {
                if !phones.iter().any(|q| q.as_ref() == p) {
                    return Err(Error::Data(format!("lexicon word '{w}' uses unknown phone '{p}'")));
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (w, prons) in &self.entries {
            for p in prons {
                let _ = writeln!(out, "{w} {}", p.join(" "));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_variants_and_round_trip() {
        let lex = Lexicon::parse("go G OW\non AA N\non AO N\n\n").unwrap();
        assert_eq!(lex.pronunciation("on").unwrap(), ["AA", "N"]);
        assert_eq!(lex.len(), 2);
        assert_eq!(Lexicon::parse(&lex.to_text()).unwrap(), lex);
        assert!(Lexicon::parse("bad\n").is_err());
        assert!(lex.check_phones(&["G", "OW", "AA", "N"]).is_err());
        assert!(lex.check_phones(&["G", "OW", "AA", "AO", "N"]).is_ok());
    }
}
