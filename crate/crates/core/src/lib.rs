//! Core of an inference-free learned-sparse retrieval engine.
//!
//! Documents are represented as [`SparseVector`]s over a [`Vocabulary`];
//! queries are binary bags of tokens. The crate covers the whole
//! pipeline that does not need an operating system:
//!
//! - corpus statistics ([`IdfTable`], [`compute_idf`])
//! - match scores, the FLOPS regularizer and the theoretical FLOPS metric ([`scoring`])
//! - an in-memory inverted index ([`InvertedIndex`]) with exact
//!   document-at-a-time top-k retrieval and a two-phase high-IDF prefilter ([`retrieval`])
//! - a toy sparse document encoder trained by distillation ([`distill`])
//! - ranking metrics ([`eval`]) and a seeded synthetic fixture ([`synthetic`])
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the
//! benchmark harness and the command line live in the companion `lsr-cli` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod distill;
pub mod eval;
pub mod idf;
pub mod index;
pub mod ranking;
pub mod retrieval;
pub mod scoring;
pub mod synthetic;
pub mod vector;
pub mod vocab;

pub use error::{Error, Result};
pub use idf::{compute_idf, IdfTable};
pub use index::{build_index, BuildOutput, IndexBuilder, IndexStats, InvertedIndex, Posting, Rejection};
pub use ranking::ScoredDoc;
pub use retrieval::{search, search_two_phase, SearchParams, TwoPhase, TwoPhaseOutcome};
pub use scoring::{flops_regularizer, match_score, theoretical_flops, DocumentFrequency, ScoreMode};
pub use vector::{SparseVector, TokenId};
pub use vocab::{binarize_query, tokenize, BinarizedQuery, Vocabulary};
