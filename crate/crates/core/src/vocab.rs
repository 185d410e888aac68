//! Token vocabularies and query binarization.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vector::{SparseVector, TokenId};

/// Bijection between token strings and dense [`TokenId`]s.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    lookup: BTreeMap<String, TokenId>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vocabulary from an ordered list of unique terms.
    pub fn from_terms<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self::new();
        for term in terms {
            let term = term.into();
            if vocab.lookup.contains_key(&term) {
                return Err(Error::DuplicateTerm(term));
            }
            vocab.push(term);
        }
        Ok(vocab)
    }

    /// Returns the id of `term`, adding it at the end if unseen.
    pub fn intern(&mut self, term: &str) -> TokenId {
        if let Some(&id) = self.lookup.get(term) {
            return id;
        }
        self.push(String::from(term))
    }

    fn push(&mut self, term: String) -> TokenId {
        let id = TokenId(self.terms.len() as u32);
        self.lookup.insert(term.clone(), id);
        self.terms.push(term);
        id
    }

    pub fn id(&self, term: &str) -> Option<TokenId> {
        self.lookup.get(term).copied()
    }

    pub fn term(&self, id: TokenId) -> Option<&str> {
        self.terms.get(id.index()).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, id: TokenId) -> bool {
        id.index() < self.terms.len()
    }
}

/// Whitespace split plus lowercasing. Only meant for fixtures; real
/// inputs arrive pre-tokenized.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(|w| w.to_lowercase()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarizedQuery {
    pub vector: SparseVector,
    /// Number of input tokens (with repetition) missing from the vocabulary.
    pub oov: usize,
}

/// Maps query tokens onto a binary vector, dropping out-of-vocabulary tokens.
pub fn binarize_query<I, S>(tokens: I, vocab: &Vocabulary) -> BinarizedQuery
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut ids = Vec::new();
    let mut oov = 0;
    for tok in tokens {
        match vocab.id(tok.as_ref()) {
            Some(id) => ids.push(id),
            None => oov += 1,
        }
    }
    BinarizedQuery {
        vector: SparseVector::binary(ids),
        oov,
    }
}
