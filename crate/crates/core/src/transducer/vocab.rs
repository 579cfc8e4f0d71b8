use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{contract_err, Error, Result};

/// Prefix marking a word-initial piece.
pub const WORD_START: char = '\u{2581}';

pub const BLANK_SYMBOL: &str = "<blank>";

/// Word-piece inventory plus the blank symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    blank_id: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    blank_id: usize,
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabularyRepr) -> Result<Self> {
        Vocabulary::from_tokens(r.tokens, r.blank_id)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            tokens: v.tokens,
            blank_id: v.blank_id,
        }
    }
}

/// A word recovered from a piece sequence: `pieces` indexes the token list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSpan {
    pub word: String,
    pub first: usize,
    pub last: usize,
}

impl Vocabulary {
    /// Blank goes to id 0, pieces follow in the given order.
    pub fn new<S: Into<String>>(pieces: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut tokens = vec![BLANK_SYMBOL.to_string()];
        tokens.extend(pieces.into_iter().map(Into::into));
        Vocabulary::from_tokens(tokens, 0)
    }

    pub fn from_tokens(tokens: Vec<String>, blank_id: usize) -> Result<Self> {
        if blank_id >= tokens.len() {
            return Err(contract_err!(
                "blank id {blank_id} outside vocabulary of {}",
                tokens.len()
            ));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if i != blank_id && (t.is_empty() || t == BLANK_SYMBOL) {
                return Err(contract_err!("invalid word piece {t:?} at id {i}"));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(contract_err!("duplicate word piece {t:?}"));
            }
        }
        Ok(Vocabulary {
            tokens,
            blank_id,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn blank(&self) -> usize {
        self.blank_id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn id(&self, piece: &str) -> Option<usize> {
        self.index.get(piece).copied()
    }

    pub fn is_word_start(&self, id: usize) -> bool {
        id != self.blank_id && self.tokens.get(id).is_some_and(|t| t.starts_with(WORD_START))
    }

    /// Greedy longest-match segmentation of words into pieces.
    pub fn encode_words<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<usize>> {
        let mut ids = Vec::new();
        for w in words {
            let w = w.as_ref();
            let text: Vec<char> = std::iter::once(WORD_START).chain(w.chars()).collect();
            let mut pos = 0;
            while pos < text.len() {
                let found = (pos + 1..=text.len()).rev().find_map(|end| {
                    let cand: String = text[pos..end].iter().collect();
                    self.id(&cand).filter(|&id| id != self.blank_id).map(|id| (id, end))
                });
                // The first piece of a word must carry the marker; later pieces must not.
                match found {
                    Some((id, end)) if (pos == 0) == self.is_word_start(id) => {
                        ids.push(id);
                        pos = end;
                    }
                    _ => {
                        return Err(Error::Tokenization(format!(
                            "word {w:?} cannot be segmented into vocabulary pieces"
                        )))
                    }
                }
            }
        }
        Ok(ids)
    }

    /// Groups a piece sequence into words using the word-start marker.
    pub fn group_words(&self, ids: &[usize]) -> Result<Vec<WordSpan>> {
        let mut words: Vec<WordSpan> = Vec::new();
        for (i, &id) in ids.iter().enumerate() {
            let piece = self
                .token(id)
                .filter(|_| id != self.blank_id)
                .ok_or_else(|| Error::Tokenization(format!("token id {id} is not a word piece")))?;
            if let Some(rest) = piece.strip_prefix(WORD_START) {
                words.push(WordSpan {
                    word: rest.to_string(),
                    first: i,
                    last: i,
                });
            } else {
                let cur = words.last_mut().ok_or_else(|| {
                    Error::Tokenization(format!("sequence starts with continuation piece {piece:?}"))
                })?;
                cur.word.push_str(piece);
                cur.last = i;
            }
        }
        Ok(words)
    }

    pub fn words(&self, ids: &[usize]) -> Result<Vec<String>> {
        Ok(self.group_words(ids)?.into_iter().map(|w| w.word).collect())
    }
}
