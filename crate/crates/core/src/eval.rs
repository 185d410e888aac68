//! Ranking-quality metrics (NDCG@k, MRR@k, Recall@k) and efficiency
//! helpers.
//!
//! Conventions: gain is `2^rel − 1` with a `log2(rank + 1)` discount; a
//! document is relevant when its grade is positive; queries with no
//! relevant judgments are excluded; judged queries missing from the run
//! score zero.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::ranking::ScoredDoc;
use crate::vector::SparseVector;

/// Relevance judgments: query id → doc id → grade.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) -> Result<()> {
        let per_query = self.judgments.entry(query_id.to_string()).or_default();
        if per_query.contains_key(doc_id) {
            return Err(Error::DuplicateJudgment {
                query_id: query_id.to_string(),
                doc_id: doc_id.to_string(),
            });
        }
        per_query.insert(doc_id.to_string(), grade);
        Ok(())
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> u32 {
        self.judgments
            .get(query_id)
            .and_then(|m| m.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    pub fn query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, u32>)> {
        self.judgments.iter().map(|(q, m)| (q.as_str(), m))
    }

    /// Queries with at least one positive grade.
    pub fn judged_queries(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, u32>)> {
        self.iter().filter(|(_, m)| m.values().any(|&g| g > 0))
    }
}

/// Ranked results per query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    rankings: BTreeMap<String, Vec<ScoredDoc>>,
}

impl Run {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a query's ranking. Scores must be non-increasing and doc ids unique.
    pub fn insert(&mut self, query_id: &str, ranking: Vec<ScoredDoc>) -> Result<()> {
        if ranking.windows(2).any(|w| w[1].score > w[0].score) {
            return Err(Error::InvalidRun(format!("scores increase with rank for query {query_id}")));
        }
        let mut ids: Vec<&str> = ranking.iter().map(|d| d.doc_id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidRun(format!("doc {} ranked twice for query {query_id}", w[0])));
        }
        if self.rankings.contains_key(query_id) {
            return Err(Error::InvalidRun(format!("query {query_id} appears twice")));
        }
        self.rankings.insert(query_id.to_string(), ranking);
        Ok(())
    }

    pub fn ranking(&self, query_id: &str) -> Option<&[ScoredDoc]> {
        self.rankings.get(query_id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[ScoredDoc])> {
        self.rankings.iter().map(|(q, r)| (q.as_str(), r.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidConfig("k must be >= 1".to_string()))
    } else {
        Ok(())
    }
}

/// Mean of `per_query` over judged queries; judged queries absent from
/// the run contribute 0.
fn mean_over_judged<F>(run: &Run, qrels: &Qrels, per_query: F) -> Result<f64>
where
    F: Fn(&[ScoredDoc], &BTreeMap<String, u32>) -> f64,
{
    let mut total = 0.0;
    let mut count = 0usize;
    let mut overlap = false;
    for (qid, judged) in qrels.judged_queries() {
        count += 1;
        if let Some(ranking) = run.ranking(qid) {
            overlap = true;
            total += per_query(ranking, judged);
        }
    }
    if !overlap {
        return Err(Error::NoOverlap);
    }
    Ok(total / count as f64)
}

#[inline]
fn gain(grade: u32) -> f64 {
    math::pow(2.0, f64::from(grade)) - 1.0
}

#[inline]
fn discount(rank: usize) -> f64 {
    1.0 / math::log2(rank as f64 + 1.0)
}

fn ndcg_query(ranking: &[ScoredDoc], judged: &BTreeMap<String, u32>, k: usize) -> f64 {
    let dcg: f64 = ranking
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, d)| gain(judged.get(&d.doc_id).copied().unwrap_or(0)) * discount(i + 1))
        .sum();
    let mut ideal: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal.iter().take(k).enumerate().map(|(i, &g)| gain(g) * discount(i + 1)).sum();
    if idcg > 0.0 {
        dcg / idcg
    } else {
        0.0
    }
}

pub fn ndcg_at_k(run: &Run, qrels: &Qrels, k: usize) -> Result<f64> {
    check_k(k)?;
    mean_over_judged(run, qrels, |r, j| ndcg_query(r, j, k))
}

pub fn mrr_at_k(run: &Run, qrels: &Qrels, k: usize) -> Result<f64> {
    check_k(k)?;
    mean_over_judged(run, qrels, |ranking, judged| {
        ranking
            .iter()
            .take(k)
            .position(|d| judged.get(&d.doc_id).is_some_and(|&g| g > 0))
            .map_or(0.0, |p| 1.0 / (p + 1) as f64)
    })
}

pub fn recall_at_k(run: &Run, qrels: &Qrels, k: usize) -> Result<f64> {
    check_k(k)?;
    mean_over_judged(run, qrels, |ranking, judged| {
        let relevant = judged.values().filter(|&&g| g > 0).count();
        let found = ranking
            .iter()
            .take(k)
            .filter(|d| judged.get(&d.doc_id).is_some_and(|&g| g > 0))
            .count();
        found as f64 / relevant as f64
    })
}

/// Mean number of non-zero tokens per document.
pub fn expansion_rate<'a, I>(vectors: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a SparseVector>,
{
    let (mut n, mut total) = (0usize, 0usize);
    for v in vectors {
        n += 1;
        total += v.nnz();
    }
    if n == 0 {
        return Err(Error::EmptyStream);
    }
    Ok(total as f64 / n as f64)
}

/// Nearest-rank percentile (`p` in (0, 100]) of an ascending-sorted slice.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() || !(p > 0.0 && p <= 100.0) {
        return None;
    }
    let rank = libm::ceil(p / 100.0 * sorted.len() as f64) as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}
