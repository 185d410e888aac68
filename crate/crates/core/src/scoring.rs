//! Match scores, the FLOPS regularizer and the theoretical FLOPS metric.
//!
//! Scores always accumulate in `f64`, in ascending token order, so the
//! inverted-index traversal and the pairwise scorer agree bit for bit on
//! identical weights.

use alloc::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::idf::IdfTable;
use crate::vector::{SparseVector, TokenId};

/// How query and document weights combine into a match score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreMode {
    /// `Σ_t q_t · d_t`
    Plain,
    /// `Σ_t idf(t) · q_t · d_t`
    #[default]
    IdfWeighted,
}

impl ScoreMode {
    /// Resolves the IDF table a scorer needs for this mode.
    pub(crate) fn idf_for(self, idf: Option<&IdfTable>) -> Result<Option<&IdfTable>> {
        match self {
            ScoreMode::Plain => Ok(None),
            ScoreMode::IdfWeighted => idf.map(Some).ok_or(Error::MissingIdf),
        }
    }
}

/// Contribution of one matching token. Shared by every scorer so the
/// floating-point evaluation order is identical everywhere.
#[inline]
pub(crate) fn term_score(query_weight: f64, doc_weight: f64, idf: Option<f64>) -> f64 {
    match idf {
        Some(m) => m * query_weight * doc_weight,
        None => query_weight * doc_weight,
    }
}

/// Additive match score between a query and a document vector.
pub fn match_score(
    query: &SparseVector,
    doc: &SparseVector,
    mode: ScoreMode,
    idf: Option<&IdfTable>,
) -> Result<f64> {
    let idf = mode.idf_for(idf)?;
    let (q, d) = (query.entries(), doc.entries());
    let (mut i, mut j) = (0, 0);
    let mut score = 0.0;
    while i < q.len() && j < d.len() {
        match q[i].0.cmp(&d[j].0) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                let t = q[i].0;
                score += term_score(q[i].1, d[j].1, idf.map(|tab| tab.get(t)));
                i += 1;
                j += 1;
            }
        }
    }
    Ok(score)
}

/// `Σ_j ((1/N) Σ_i w_j(d_i))²` over a batch of `N` document vectors.
pub fn flops_regularizer(batch: &[SparseVector]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut sums: BTreeMap<TokenId, f64> = BTreeMap::new();
    for doc in batch {
        for (t, w) in doc.iter() {
            *sums.entry(t).or_insert(0.0) += w;
        }
    }
    let n = batch.len() as f64;
    Ok(sums
        .values()
        .map(|s| {
            let mean = s / n;
            mean * mean
        })
        .sum())
}

/// Source of per-token document frequencies.
pub trait DocumentFrequency {
    fn df(&self, token: TokenId) -> u64;
}

impl DocumentFrequency for [u64] {
    fn df(&self, token: TokenId) -> u64 {
        self.get(token.index()).copied().unwrap_or(0)
    }
}

impl DocumentFrequency for alloc::vec::Vec<u64> {
    fn df(&self, token: TokenId) -> u64 {
        self.as_slice().df(token)
    }
}

impl DocumentFrequency for BTreeMap<TokenId, u64> {
    fn df(&self, token: TokenId) -> u64 {
        self.get(&token).copied().unwrap_or(0)
    }
}

/// Expected number of multiply-accumulates per (query, document) pair:
/// the mean over queries of `Σ_{t∈q} df(t) / corpus_size`.
///
/// Averages uniformly over queries; query weights are ignored (only token
/// presence costs an operation).
pub fn theoretical_flops<D>(queries: &[SparseVector], df: &D, corpus_size: u64) -> Result<f64>
where
    D: DocumentFrequency + ?Sized,
{
    if corpus_size == 0 {
        return Err(Error::EmptyCorpus);
    }
    if queries.is_empty() {
        return Ok(0.0);
    }
    let n = corpus_size as f64;
    let total: f64 = queries
        .iter()
        .map(|q| q.tokens().map(|t| df.df(t) as f64 / n).sum::<f64>())
        .sum();
    Ok(total / queries.len() as f64)
}
