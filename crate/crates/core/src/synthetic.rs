//! Seeded toy corpus and synthetic heterogeneous teachers.
//!
//! Every document carries all filler tokens (high document frequency,
//! low IDF) plus a few tokens of its topic. Each query names two topic
//! tokens and some filler; its positive is the best-overlapping document
//! of the same topic. Two teachers score candidates on very different
//! scales: a dense-like scorer driven by graded relevance plus noise and
//! a sparse-overlap scorer.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distill::{TeacherScores, TeacherSource, TrainingExample};
use crate::error::Result;
use crate::eval::Qrels;
use crate::idf::{compute_idf, IdfTable};
use crate::math;
use crate::vector::{SparseVector, TokenId};
use crate::vocab::Vocabulary;

const FILLER_WORDS: [&str; 8] = ["the", "a", "of", "and", "to", "in", "is", "for"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureConfig {
    pub topics: usize,
    pub tokens_per_topic: usize,
    pub filler_tokens: usize,
    pub docs: usize,
    pub queries: usize,
    pub seed: u64,
}

impl FixtureConfig {
    /// Vocabulary 30, 20 documents, 8 queries.
    pub fn small(seed: u64) -> Self {
        Self {
            topics: 5,
            tokens_per_topic: 5,
            filler_tokens: 5,
            docs: 20,
            queries: 8,
            seed,
        }
    }

    /// Vocabulary 50, 40 documents, 16 queries.
    pub fn standard(seed: u64) -> Self {
        Self {
            topics: 9,
            tokens_per_topic: 5,
            filler_tokens: 5,
            docs: 40,
            queries: 16,
            seed,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.filler_tokens + self.topics * self.tokens_per_topic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyFixture {
    pub config: FixtureConfig,
    pub vocab: Vocabulary,
    pub filler: Vec<TokenId>,
    pub doc_ids: Vec<String>,
    /// Token-count vectors.
    pub docs: Vec<SparseVector>,
    pub doc_topic: Vec<usize>,
    pub query_ids: Vec<String>,
    /// Binary query vectors.
    pub queries: Vec<SparseVector>,
    pub query_topic: Vec<usize>,
    /// Index into `docs` of each query's labelled positive.
    pub positives: Vec<usize>,
}

impl ToyFixture {
    pub fn generate(config: FixtureConfig) -> Self {
        assert!(config.topics > 0 && config.tokens_per_topic >= 3 && config.docs >= config.topics);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut vocab = Vocabulary::new();
        let filler: Vec<TokenId> = (0..config.filler_tokens)
            .map(|i| match FILLER_WORDS.get(i) {
                Some(w) => vocab.intern(w),
                None => vocab.intern(&format!("filler{i}")),
            })
            .collect();
        let topic_tokens: Vec<Vec<TokenId>> = (0..config.topics)
            .map(|t| {
                (0..config.tokens_per_topic)
                    .map(|k| vocab.intern(&format!("topic{t}_{k}")))
                    .collect()
            })
            .collect();

        let mut docs = Vec::with_capacity(config.docs);
        let mut doc_topic = Vec::with_capacity(config.docs);
        for d in 0..config.docs {
            let topic = d % config.topics;
            let mut tokens = Vec::new();
            for &f in &filler {
                for _ in 0..rng.gen_range(1..=3) {
                    tokens.push(f);
                }
            }
            for &t in topic_tokens[topic].choose_multiple(&mut rng, 3) {
                for _ in 0..rng.gen_range(1..=2) {
                    tokens.push(t);
                }
            }
            if rng.gen_bool(0.3) {
                let other = rng.gen_range(0..config.topics);
                if other != topic {
                    tokens.push(*topic_tokens[other].choose(&mut rng).expect("non-empty topic"));
                }
            }
            docs.push(SparseVector::counts(tokens));
            doc_topic.push(topic);
        }

        let mut queries = Vec::with_capacity(config.queries);
        let mut query_topic = Vec::with_capacity(config.queries);
        let mut positives = Vec::with_capacity(config.queries);
        for q in 0..config.queries {
            let topic = q % config.topics;
            let mut tokens: Vec<TokenId> = topic_tokens[topic].choose_multiple(&mut rng, 2).copied().collect();
            let n_filler = rng.gen_range(1..=2).min(filler.len());
            tokens.extend(filler.choose_multiple(&mut rng, n_filler).copied());
            let query = SparseVector::binary(tokens);
            let same_topic: Vec<usize> = (0..config.docs).filter(|&d| doc_topic[d] == topic).collect();
            let overlap = |d: usize| {
                query
                    .tokens()
                    .filter(|t| !filler.contains(t) && docs[d].get(*t) > 0.0)
                    .count()
            };
            let best = same_topic.iter().map(|&d| overlap(d)).max().unwrap_or(0);
            let tied: Vec<usize> = same_topic.into_iter().filter(|&d| overlap(d) == best).collect();
            positives.push(*tied.choose(&mut rng).expect("topic has documents"));
            queries.push(query);
            query_topic.push(topic);
        }

        Self {
            config,
            vocab,
            filler,
            doc_ids: (0..config.docs).map(|d| format!("doc{d}")).collect(),
            docs,
            doc_topic,
            query_ids: (0..config.queries).map(|q| format!("q{q}")).collect(),
            queries,
            query_topic,
            positives,
        }
    }

    /// 2 for the labelled positive, 1 for other same-topic documents, 0 otherwise.
    pub fn relevance(&self, query: usize, doc: usize) -> u32 {
        if self.positives[query] == doc {
            2
        } else if self.doc_topic[doc] == self.query_topic[query] {
            1
        } else {
            0
        }
    }

    pub fn idf(&self) -> IdfTable {
        compute_idf(self.docs.iter().map(SparseVector::tokens), &self.vocab, "fixture").expect("fixture corpus is non-empty")
    }

    pub fn qrels(&self) -> Qrels {
        let mut q = Qrels::new();
        for (qi, qid) in self.query_ids.iter().enumerate() {
            for (di, did) in self.doc_ids.iter().enumerate() {
                let g = self.relevance(qi, di);
                if g > 0 {
                    q.insert(qid, did, g).expect("unique pairs");
                }
            }
        }
        q
    }

    /// Training examples without mined negatives.
    pub fn examples(&self) -> Vec<TrainingExample> {
        self.queries
            .iter()
            .zip(&self.positives)
            .map(|(q, &p)| TrainingExample {
                query: q.clone(),
                positive: p,
                hard_negatives: Vec::new(),
            })
            .collect()
    }

    pub fn teachers(&self, seed: u64) -> SyntheticTeachers {
        let relevance = (0..self.queries.len())
            .map(|q| {
                (0..self.docs.len())
                    .filter_map(|d| match self.relevance(q, d) {
                        0 => None,
                        g => Some((d, g)),
                    })
                    .collect()
            })
            .collect();
        SyntheticTeachers::new(self.queries.clone(), self.docs.clone(), relevance, self.idf(), seed)
    }
}

/// Two seeded oracle teachers over a labelled corpus.
///
/// `dense`: `100 + 60·rel + 20·cos(q, d) + U(−8, 8)` noise, deterministic
/// per (example, document). `sparse`: `Σ_{t∈q∩d} idf(t)·ln(1 + count_t)`.
#[derive(Debug, Clone)]
pub struct SyntheticTeachers {
    queries: Vec<SparseVector>,
    docs: Vec<SparseVector>,
    relevance: Vec<BTreeMap<usize, u32>>,
    idf: IdfTable,
    seed: u64,
}

impl SyntheticTeachers {
    /// `relevance[example]` maps document index to a graded label (absent = 0).
    pub fn new(
        queries: Vec<SparseVector>,
        docs: Vec<SparseVector>,
        relevance: Vec<BTreeMap<usize, u32>>,
        idf: IdfTable,
        seed: u64,
    ) -> Self {
        Self {
            queries,
            docs,
            relevance,
            idf,
            seed,
        }
    }

    fn noise(&self, example: usize, doc: usize) -> f64 {
        let key = self.seed
            ^ (example as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (doc as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        ChaCha8Rng::seed_from_u64(key).gen_range(-8.0..8.0)
    }

    pub fn dense_score(&self, example: usize, doc: usize) -> f64 {
        let q = &self.queries[example];
        let d = &self.docs[doc];
        let dot: f64 = q.iter().map(|(t, w)| w * d.get(t)).sum();
        let norm = |v: &SparseVector| math::sqrt(v.iter().map(|(_, w)| w * w).sum::<f64>());
        let denom = norm(q) * norm(d);
        let cos = if denom > 0.0 { dot / denom } else { 0.0 };
        let rel = self.relevance[example].get(&doc).copied().unwrap_or(0);
        100.0 + 60.0 * f64::from(rel) + 20.0 * cos + self.noise(example, doc)
    }

    pub fn sparse_score(&self, example: usize, doc: usize) -> f64 {
        let d = &self.docs[doc];
        self.queries[example]
            .tokens()
            .map(|t| {
                let c = d.get(t);
                if c > 0.0 {
                    self.idf.get(t) * math::ln_1p(c)
                } else {
                    0.0
                }
            })
            .sum()
    }
}

impl TeacherSource for SyntheticTeachers {
    fn teacher_scores(&self, example: usize, candidates: &[usize]) -> Result<TeacherScores> {
        TeacherScores::equal_weights([
            ("dense", candidates.iter().map(|&d| self.dense_score(example, d)).collect()),
            ("sparse", candidates.iter().map(|&d| self.sparse_score(example, d)).collect()),
        ])
    }
}

/// Fraction of total activation mass carried by `tokens`.
pub fn activation_share(vectors: &[SparseVector], tokens: &[TokenId]) -> f64 {
    let total: f64 = vectors.iter().map(SparseVector::l1).sum();
    if total == 0.0 {
        return 0.0;
    }
    let part: f64 = vectors
        .iter()
        .flat_map(|v| tokens.iter().map(move |&t| v.get(t)))
        .sum();
    part / total
}

/// The `ceil(n / 4)` tokens with the lowest IDF among those the table
/// stores (ties by token id).
pub fn bottom_quartile_idf(idf: &IdfTable) -> Vec<TokenId> {
    let mut all: Vec<(TokenId, f64)> = idf.iter().collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let n = all.len().div_ceil(4);
    all.into_iter().take(n).map(|(t, _)| t).collect()
}
