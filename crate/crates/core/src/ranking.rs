//! Scored results and the deterministic ranking order.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

impl ScoredDoc {
    pub fn new(doc_id: impl Into<String>, score: f64) -> Self {
        Self {
            doc_id: doc_id.into(),
            score,
        }
    }
}

/// Score descending, then doc id ascending. `Less` means `a` ranks first.
#[inline]
pub fn rank_cmp(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

/// Sorts results into ranking order.
pub fn sort_ranked(docs: &mut [ScoredDoc]) {
    docs.sort_by(|a, b| rank_cmp(a.score, &a.doc_id, b.score, &b.doc_id));
}

/// Keeps the best `k` results in ranking order.
pub fn top_k(mut docs: Vec<ScoredDoc>, k: usize) -> Vec<ScoredDoc> {
    sort_ranked(&mut docs);
    docs.truncate(k);
    docs
}
