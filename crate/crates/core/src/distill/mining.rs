use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::Result;
use crate::idf::IdfTable;
use crate::index::InvertedIndex;
use crate::retrieval::{search, SearchParams};
use crate::scoring::ScoreMode;
use crate::vector::SparseVector;

#[derive(Debug, Clone, PartialEq)]
pub struct MiningQuery {
    pub query_id: String,
    pub query: SparseVector,
    pub positive_id: String,
}

/// Mined candidate list for one query; the labelled positive is first.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedCandidates {
    pub query_id: String,
    pub positive_id: String,
    pub doc_ids: Vec<String>,
    /// 1-based rank of the positive in the miner's top-M, `None` if it
    /// was not retrieved.
    pub positive_rank: Option<usize>,
}

/// Retrieves the top `m` documents for each query with exact search and
/// moves the labelled positive to the front, prepending it (and dropping
/// the last candidate) when the miner missed it.
pub fn mine_hard_negatives(
    index: &InvertedIndex,
    queries: &[MiningQuery],
    m: usize,
    mode: ScoreMode,
    idf: Option<&IdfTable>,
) -> Result<Vec<MinedCandidates>> {
    let params = SearchParams::new(m, mode);
    queries
        .iter()
        .map(|q| {
            let hits = search(index, &q.query, &params, idf)?;
            let mut doc_ids: Vec<String> = hits.into_iter().map(|h| h.doc_id).collect();
            let positive_rank = match doc_ids.iter().position(|d| *d == q.positive_id) {
                Some(pos) => {
                    let p = doc_ids.remove(pos);
                    doc_ids.insert(0, p);
                    Some(pos + 1)
                }
                None => {
                    doc_ids.insert(0, q.positive_id.clone());
                    doc_ids.truncate(m);
                    None
                }
            };
            Ok(MinedCandidates {
                query_id: q.query_id.to_string(),
                positive_id: q.positive_id.clone(),
                doc_ids,
                positive_rank,
            })
        })
        .collect()
}

/// Keeps the queries whose labelled positive was retrieved within the top `k`.
pub fn consistency_filter(mined: &[MinedCandidates], k: usize) -> Vec<MinedCandidates> {
    mined
        .iter()
        .filter(|m| m.positive_rank.is_some_and(|r| r <= k))
        .cloned()
        .collect()
}
