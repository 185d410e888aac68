//! In-memory inverted index over learned sparse document vectors.
//!
//! Postings are kept per token in ingestion (document ordinal) order with
//! `f32` weights. Documents with an empty vector are still registered and
//! count towards the corpus size.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scoring::DocumentFrequency;
use crate::vector::{SparseVector, TokenId};
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posting {
    pub doc: u32,
    pub weight: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    vocabulary: Vocabulary,
    doc_ids: Vec<String>,
    postings: Vec<Vec<Posting>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexStats {
    pub corpus_size: u64,
    /// Tokens with at least one posting.
    pub distinct_tokens: u64,
    pub total_postings: u64,
    pub mean_nnz_per_doc: f64,
}

impl InvertedIndex {
    /// Assembles an index from raw parts, checking every invariant.
    /// `postings` must hold one list per vocabulary token.
    pub fn from_parts(vocabulary: Vocabulary, doc_ids: Vec<String>, postings: Vec<Vec<Posting>>) -> Result<Self> {
        if postings.len() != vocabulary.len() {
            return Err(Error::InvalidIndex(format!(
                "{} postings lists for a vocabulary of {}",
                postings.len(),
                vocabulary.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for id in &doc_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateDocId(id.clone()));
            }
        }
        let n = doc_ids.len() as u64;
        for (t, list) in postings.iter().enumerate() {
            let mut prev: Option<u32> = None;
            for p in list {
                if u64::from(p.doc) >= n {
                    return Err(Error::InvalidIndex(format!("token {t}: doc ordinal {} >= corpus size {n}", p.doc)));
                }
                if prev.is_some_and(|d| d >= p.doc) {
                    return Err(Error::InvalidIndex(format!("token {t}: postings not strictly increasing")));
                }
                if !(p.weight.is_finite() && p.weight > 0.0) {
                    return Err(Error::InvalidIndex(format!("token {t}: non-positive weight {}", p.weight)));
                }
                prev = Some(p.doc);
            }
        }
        Ok(Self {
            vocabulary,
            doc_ids,
            postings,
        })
    }

    pub fn into_parts(self) -> (Vocabulary, Vec<String>, Vec<Vec<Posting>>) {
        (self.vocabulary, self.doc_ids, self.postings)
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// Postings of `token`, empty for tokens outside the vocabulary.
    pub fn postings(&self, token: TokenId) -> &[Posting] {
        self.postings.get(token.index()).map_or(&[], Vec::as_slice)
    }

    pub fn postings_lists(&self) -> &[Vec<Posting>] {
        &self.postings
    }

    pub fn df(&self, token: TokenId) -> u64 {
        self.postings(token).len() as u64
    }

    pub fn doc_frequencies(&self) -> Vec<u64> {
        self.postings.iter().map(|l| l.len() as u64).collect()
    }

    pub fn corpus_size(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_id(&self, ordinal: u32) -> &str {
        &self.doc_ids[ordinal as usize]
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn ordinal_of(&self, doc_id: &str) -> Option<u32> {
        self.doc_ids.iter().position(|d| d == doc_id).map(|p| p as u32)
    }

    /// Stored weight of `token` in document `ordinal`.
    pub fn weight(&self, token: TokenId, ordinal: u32) -> Option<f32> {
        let list = self.postings(token);
        list.binary_search_by_key(&ordinal, |p| p.doc).ok().map(|i| list[i].weight)
    }

    /// Reconstructs every stored document vector (one pass over all postings).
    pub fn documents(&self) -> Vec<SparseVector> {
        let mut pairs: Vec<Vec<(TokenId, f64)>> = vec![Vec::new(); self.doc_ids.len()];
        for (t, list) in self.postings.iter().enumerate() {
            for p in list {
                pairs[p.doc as usize].push((TokenId(t as u32), f64::from(p.weight)));
            }
        }
        pairs
            .into_iter()
            .map(|p| SparseVector::from_pairs(p).expect("index invariants guarantee valid vectors"))
            .collect()
    }

    pub fn stats(&self) -> IndexStats {
        let total: u64 = self.postings.iter().map(|l| l.len() as u64).sum();
        let n = self.doc_ids.len() as u64;
        IndexStats {
            corpus_size: n,
            distinct_tokens: self.postings.iter().filter(|l| !l.is_empty()).count() as u64,
            total_postings: total,
            mean_nnz_per_doc: if n == 0 { 0.0 } else { total as f64 / n as f64 },
        }
    }
}

impl DocumentFrequency for InvertedIndex {
    fn df(&self, token: TokenId) -> u64 {
        InvertedIndex::df(self, token)
    }
}

/// A document refused during ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub doc_id: String,
    pub reason: String,
}

/// Single-writer index builder. Ingestion order defines document ordinals.
#[derive(Debug)]
pub struct IndexBuilder {
    vocabulary: Vocabulary,
    doc_ids: Vec<String>,
    postings: Vec<Vec<Posting>>,
    seen: BTreeSet<String>,
    rejected: Vec<Rejection>,
}

impl IndexBuilder {
    pub fn new(vocabulary: Vocabulary) -> Self {
        let postings = vec![Vec::new(); vocabulary.len()];
        Self {
            vocabulary,
            doc_ids: Vec::new(),
            postings,
            seen: BTreeSet::new(),
            rejected: Vec::new(),
        }
    }

    pub fn add(&mut self, doc_id: &str, vector: &SparseVector) -> Result<()> {
        self.add_raw(doc_id, vector.iter())
    }

    /// Adds a document from unvalidated `(token, weight)` entries.
    ///
    /// A repeated `doc_id` is a hard error. Documents with a weight that
    /// is non-positive, non-finite, or vanishes in `f32` storage, or that
    /// reference tokens outside the vocabulary, are rejected and recorded.
    pub fn add_raw<I>(&mut self, doc_id: &str, entries: I) -> Result<()>
    where
        I: IntoIterator<Item = (TokenId, f64)>,
    {
        if !self.seen.insert(doc_id.to_string()) {
            return Err(Error::DuplicateDocId(doc_id.to_string()));
        }
        let mut stored: Vec<(TokenId, f32)> = Vec::new();
        for (t, w) in entries {
            let reason = if !self.vocabulary.contains(t) {
                Some(format!("token id {t} outside vocabulary of {}", self.vocabulary.len()))
            } else if !(w.is_finite() && w > 0.0) {
                Some(format!("token {t}: weight {w} is not positive"))
            } else if !((w as f32).is_finite() && (w as f32) > 0.0) {
                Some(format!("token {t}: weight {w} not representable as f32"))
            } else {
                None
            };
            if let Some(reason) = reason {
                self.rejected.push(Rejection {
                    doc_id: doc_id.to_string(),
                    reason,
                });
                return Ok(());
            }
            stored.push((t, w as f32));
        }
        stored.sort_unstable_by_key(|&(t, _)| t);
        if let Some(w) = stored.windows(2).find(|w| w[0].0 == w[1].0) {
            self.rejected.push(Rejection {
                doc_id: doc_id.to_string(),
                reason: format!("token {} appears twice", w[0].0),
            });
            return Ok(());
        }
        let ordinal = u32::try_from(self.doc_ids.len())
            .map_err(|_| Error::InvalidIndex("more than u32::MAX documents".to_string()))?;
        self.doc_ids.push(doc_id.to_string());
        for (t, w) in stored {
            self.postings[t.index()].push(Posting { doc: ordinal, weight: w });
        }
        Ok(())
    }

    pub fn finish(self) -> BuildOutput {
        BuildOutput {
            index: InvertedIndex {
                vocabulary: self.vocabulary,
                doc_ids: self.doc_ids,
                postings: self.postings,
            },
            rejected: self.rejected,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub index: InvertedIndex,
    pub rejected: Vec<Rejection>,
}

/// Builds an index from `(doc_id, vector)` pairs in order.
pub fn build_index<I, S>(docs: I, vocabulary: Vocabulary) -> Result<BuildOutput>
where
    I: IntoIterator<Item = (S, SparseVector)>,
    S: AsRef<str>,
{
    let mut builder = IndexBuilder::new(vocabulary);
    for (id, v) in docs {
        builder.add(id.as_ref(), &v)?;
    }
    Ok(builder.finish())
}
