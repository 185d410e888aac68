//! Exact top-k retrieval and the two-phase high-IDF prefilter.
//!
//! Traversal is document-at-a-time: the query's postings lists are merged
//! through a min-heap of cursors keyed on `(doc ordinal, query position)`,
//! so each document's score is accumulated in ascending token order. The
//! best `k` documents are kept in a bounded heap whose top is the current
//! worst entry. There is no dynamic pruning.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::error::{Error, Result};
use crate::idf::IdfTable;
use crate::index::InvertedIndex;
use crate::ranking::{rank_cmp, ScoredDoc};
use crate::scoring::{term_score, ScoreMode};
use crate::vector::{SparseVector, TokenId};

/// Phase-1 settings for [`search_two_phase`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhase {
    /// Minimum IDF for a query token to take part in phase 1. `None`
    /// uses the median IDF of the query's tokens.
    pub idf_threshold: Option<f64>,
    /// Number of phase-1 candidates rescored in phase 2. Must be `>= k`.
    pub window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub k: usize,
    pub mode: ScoreMode,
    pub two_phase: Option<TwoPhase>,
}

impl SearchParams {
    pub fn new(k: usize, mode: ScoreMode) -> Self {
        Self { k, mode, two_phase: None }
    }

    pub fn with_two_phase(mut self, window: usize, idf_threshold: Option<f64>) -> Self {
        self.two_phase = Some(TwoPhase { idf_threshold, window });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be positive".to_string()));
        }
        if let Some(tp) = &self.two_phase {
            if tp.window < self.k {
                return Err(Error::InvalidConfig(format!("window {} is smaller than k {}", tp.window, self.k)));
            }
            if let Some(th) = tp.idf_threshold {
                if !th.is_finite() {
                    return Err(Error::InvalidConfig("idf_threshold must be finite".to_string()));
                }
            }
        }
        Ok(())
    }
}

/// One scored query token: its id, query weight and optional IDF factor.
#[derive(Debug, Clone, Copy)]
struct QueryTerm {
    token: TokenId,
    weight: f64,
    idf: Option<f64>,
}

fn query_terms(query: &SparseVector, idf: Option<&IdfTable>, keep: impl Fn(TokenId) -> bool) -> Vec<QueryTerm> {
    query
        .iter()
        .filter(|&(t, _)| keep(t))
        .map(|(token, weight)| QueryTerm {
            token,
            weight,
            idf: idf.map(|tab| tab.get(token)),
        })
        .collect()
}

/// Heap entry for the bounded result set; the greatest entry ranks worst.
struct Candidate<'a> {
    score: f64,
    ordinal: u32,
    doc_id: &'a str,
}

impl Ord for Candidate<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        rank_cmp(self.score, self.doc_id, other.score, other.doc_id)
    }
}

impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate<'_> {}

/// Top `limit` documents by score over the given terms, in ranking order.
/// Documents with a non-positive score are never returned.
fn top_docs<'a>(index: &'a InvertedIndex, terms: &[QueryTerm], limit: usize) -> Vec<Candidate<'a>> {
    if limit == 0 || terms.is_empty() {
        return Vec::new();
    }
    let lists: Vec<_> = terms.iter().map(|t| index.postings(t.token)).collect();
    // Cursor heap: (doc ordinal, term position, offset into list).
    let mut cursors: BinaryHeap<Reverse<(u32, usize, usize)>> = lists
        .iter()
        .enumerate()
        .filter_map(|(pos, list)| list.first().map(|p| Reverse((p.doc, pos, 0))))
        .collect();
    let mut best: BinaryHeap<Candidate<'a>> = BinaryHeap::with_capacity(limit + 1);
    while let Some(&Reverse((doc, _, _))) = cursors.peek() {
        let mut score = 0.0;
        while let Some(&Reverse((d, pos, off))) = cursors.peek() {
            if d != doc {
                break;
            }
            cursors.pop();
            let term = &terms[pos];
            score += term_score(term.weight, f64::from(lists[pos][off].weight), term.idf);
            if let Some(next) = lists[pos].get(off + 1) {
                cursors.push(Reverse((next.doc, pos, off + 1)));
            }
        }
        if score > 0.0 {
            let cand = Candidate {
                score,
                ordinal: doc,
                doc_id: index.doc_id(doc),
            };
            if best.len() < limit {
                best.push(cand);
            } else if best.peek().is_some_and(|worst| cand < *worst) {
                best.pop();
                best.push(cand);
            }
        }
    }
    best.into_sorted_vec()
}

fn to_results(cands: Vec<Candidate<'_>>) -> Vec<ScoredDoc> {
    cands.into_iter().map(|c| ScoredDoc::new(c.doc_id, c.score)).collect()
}

/// Exact top-k search. Results are sorted by score descending, ties by
/// doc id ascending; fewer than `k` come back only when fewer documents
/// have a positive score. `params.two_phase` is ignored here.
pub fn search(
    index: &InvertedIndex,
    query: &SparseVector,
    params: &SearchParams,
    idf: Option<&IdfTable>,
) -> Result<Vec<ScoredDoc>> {
    params.validate()?;
    let idf = params.mode.idf_for(idf)?;
    let terms = query_terms(query, idf, |_| true);
    Ok(to_results(top_docs(index, &terms, params.k)))
}

/// Diagnostics from a two-phase search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TwoPhaseStats {
    /// IDF threshold actually applied.
    pub threshold: f64,
    /// Query tokens whose postings were read in phase 1.
    pub phase1_tokens: Vec<TokenId>,
    /// Size of the phase-1 candidate set.
    pub candidates: usize,
    /// The threshold excluded every query token; exact search was used.
    pub fell_back: bool,
    /// `window >= corpus_size`: phase 1 cannot prune, exact search was used.
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhaseOutcome {
    pub hits: Vec<ScoredDoc>,
    pub stats: TwoPhaseStats,
}

/// Two-phase retrieval: score only query tokens with `idf >= threshold`,
/// keep the best `window` documents, rescore them with every query token
/// and return the top `k`.
pub fn search_two_phase(
    index: &InvertedIndex,
    query: &SparseVector,
    params: &SearchParams,
    idf: &IdfTable,
) -> Result<TwoPhaseOutcome> {
    params.validate()?;
    let tp = params
        .two_phase
        .ok_or_else(|| Error::InvalidConfig("two-phase search needs two_phase settings".to_string()))?;
    let scoring_idf = params.mode.idf_for(Some(idf))?;
    let all_terms = query_terms(query, scoring_idf, |_| true);

    let threshold = match tp.idf_threshold {
        Some(t) => t,
        None => idf.median_of(query.tokens()).unwrap_or(0.0),
    };
    let mut stats = TwoPhaseStats {
        threshold,
        ..TwoPhaseStats::default()
    };

    if tp.window >= index.corpus_size() {
        stats.exhaustive = true;
        stats.candidates = index.corpus_size();
        let hits = to_results(top_docs(index, &all_terms, params.k));
        return Ok(TwoPhaseOutcome { hits, stats });
    }

    let phase1 = query_terms(query, scoring_idf, |t| idf.get(t) >= threshold);
    if phase1.is_empty() {
        stats.fell_back = !all_terms.is_empty();
        let hits = to_results(top_docs(index, &all_terms, params.k));
        return Ok(TwoPhaseOutcome { hits, stats });
    }
    stats.phase1_tokens = phase1.iter().map(|t| t.token).collect();

    let candidates = top_docs(index, &phase1, tp.window);
    stats.candidates = candidates.len();

    let mut rescored: Vec<Candidate<'_>> = candidates
        .into_iter()
        .map(|c| {
            let mut score = 0.0;
            for term in &all_terms {
                if let Some(w) = index.weight(term.token, c.ordinal) {
                    score += term_score(term.weight, f64::from(w), term.idf);
                }
            }
            Candidate { score, ..c }
        })
        .collect();
    rescored.sort_unstable();
    rescored.truncate(params.k);
    Ok(TwoPhaseOutcome {
        hits: to_results(rescored),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_index;
    use crate::vocab::Vocabulary;
    use alloc::string::String;
    use alloc::vec;

    fn sv(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().map(|&(t, w)| (TokenId(t), w))).unwrap()
    }

    fn small_index() -> InvertedIndex {
        let vocab = Vocabulary::from_terms(["a", "b", "c"]).unwrap();
        build_index([("d1", sv(&[(0, 2.0)])), ("d2", sv(&[(0, 1.0), (1, 5.0)]))], vocab)
            .unwrap()
            .index
    }

    fn ids(hits: &[ScoredDoc]) -> Vec<(String, f64)> {
        hits.iter().map(|h| (h.doc_id.clone(), h.score)).collect()
    }

    #[test]
    fn single_token_query() {
        let hits = search(&small_index(), &sv(&[(0, 1.0)]), &SearchParams::new(2, ScoreMode::Plain), None).unwrap();
        assert_eq!(ids(&hits), vec![("d1".into(), 2.0), ("d2".into(), 1.0)]);
    }

    #[test]
    fn two_token_query_top1() {
        let hits = search(
            &small_index(),
            &sv(&[(0, 1.0), (1, 1.0)]),
            &SearchParams::new(1, ScoreMode::Plain),
            None,
        )
        .unwrap();
        assert_eq!(ids(&hits), vec![("d2".into(), 6.0)]);
    }

    #[test]
    fn unindexed_and_empty_queries() {
        let p = SearchParams::new(3, ScoreMode::Plain);
        assert!(search(&small_index(), &sv(&[(2, 1.0)]), &p, None).unwrap().is_empty());
        assert!(search(&small_index(), &SparseVector::new(), &p, None).unwrap().is_empty());
    }

    #[test]
    fn idf_mode_without_table() {
        let p = SearchParams::new(1, ScoreMode::IdfWeighted);
        assert_eq!(search(&small_index(), &sv(&[(0, 1.0)]), &p, None), Err(Error::MissingIdf));
    }

    #[test]
    fn window_smaller_than_k_is_invalid() {
        let p = SearchParams::new(5, ScoreMode::Plain).with_two_phase(2, None);
        assert!(p.validate().is_err());
    }

    fn rare_the_fixture() -> (InvertedIndex, IdfTable) {
        let vocab = Vocabulary::from_terms(["rare", "the"]).unwrap();
        let docs = [
            ("d1", sv(&[(0, 1.0), (1, 1.0)])),
            ("d2", sv(&[(1, 3.0)])),
            ("d3", sv(&[(1, 2.0)])),
            ("d4", sv(&[(0, 0.5)])),
        ];
        let index = build_index(docs, vocab).unwrap().index;
        let mut idf = IdfTable::new("t");
        idf.insert(TokenId(0), 5.0).unwrap();
        idf.insert(TokenId(1), 0.1).unwrap();
        (index, idf)
    }

    #[test]
    fn phase_one_reads_only_high_idf_postings() {
        let (index, idf) = rare_the_fixture();
        let q = sv(&[(0, 1.0), (1, 1.0)]);
        let p = SearchParams::new(1, ScoreMode::IdfWeighted).with_two_phase(2, Some(1.0));
        let out = search_two_phase(&index, &q, &p, &idf).unwrap();
        assert_eq!(out.stats.phase1_tokens, vec![TokenId(0)]);
        assert_eq!(out.stats.candidates, 2);
        assert!(!out.stats.fell_back && !out.stats.exhaustive);
        assert_eq!(out.hits[0].doc_id, "d1");
        assert!((out.hits[0].score - 5.1).abs() < 1e-12);
    }

    #[test]
    fn threshold_excluding_everything_falls_back() {
        let (index, idf) = rare_the_fixture();
        let q = sv(&[(0, 1.0), (1, 1.0)]);
        let p = SearchParams::new(3, ScoreMode::IdfWeighted).with_two_phase(3, Some(100.0));
        let out = search_two_phase(&index, &q, &p, &idf).unwrap();
        assert!(out.stats.fell_back);
        assert_eq!(out.hits, search(&index, &q, &p, Some(&idf)).unwrap());
    }

    #[test]
    fn exhaustive_window_matches_exact() {
        let (index, idf) = rare_the_fixture();
        let q = sv(&[(0, 1.0), (1, 1.0)]);
        let p = SearchParams::new(4, ScoreMode::IdfWeighted).with_two_phase(4, Some(1.0));
        let out = search_two_phase(&index, &q, &p, &idf).unwrap();
        assert!(out.stats.exhaustive);
        assert_eq!(out.hits, search(&index, &q, &p, Some(&idf)).unwrap());
        assert_eq!(out.hits.len(), 4);
    }

    #[test]
    fn default_threshold_is_query_median() {
        let (index, idf) = rare_the_fixture();
        let q = sv(&[(0, 1.0), (1, 1.0)]);
        let p = SearchParams::new(1, ScoreMode::IdfWeighted).with_two_phase(2, None);
        let out = search_two_phase(&index, &q, &p, &idf).unwrap();
        // lower median of {0.1, 5.0}
        assert_eq!(out.stats.threshold, 0.1);
        assert_eq!(out.stats.phase1_tokens, vec![TokenId(0), TokenId(1)]);
    }

    #[test]
    fn ties_are_broken_by_doc_id() {
        let vocab = Vocabulary::from_terms(["a"]).unwrap();
        let docs = [("z", sv(&[(0, 1.0)])), ("m", sv(&[(0, 1.0)])), ("a", sv(&[(0, 1.0)]))];
        let index = build_index(docs, vocab).unwrap().index;
        let hits = search(&index, &sv(&[(0, 1.0)]), &SearchParams::new(2, ScoreMode::Plain), None).unwrap();
        let got: Vec<&str> = hits.iter().map(|h| h.doc_id.as_str()).collect();
        assert_eq!(got, ["a", "m"]);
    }

    #[test]
    fn k_larger_than_matches() {
        let hits = search(&small_index(), &sv(&[(1, 1.0)]), &SearchParams::new(10, ScoreMode::Plain), None).unwrap();
        assert_eq!(hits.len(), 1);
    }
}
