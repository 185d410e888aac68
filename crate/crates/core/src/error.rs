use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty stream")]
    EmptyStream,
    #[error("invalid weight {weight} for token {token}")]
    InvalidWeight { token: u32, weight: f64 },
    #[error("duplicate token id {0} in sparse vector")]
    DuplicateToken(u32),
    #[error("duplicate vocabulary term: {0}")]
    DuplicateTerm(String),
    #[error("token id {token} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { token: u32, vocab_size: usize },
    #[error("duplicate doc_id: {0}")]
    DuplicateDocId(String),
    #[error("IDF-weighted scoring requires an IDF table")]
    MissingIdf,
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid training batch: {0}")]
    InvalidBatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error("duplicate judgment for query {query_id}, doc {doc_id}")]
    DuplicateJudgment { query_id: String, doc_id: String },
    #[error("no overlap between run and qrels")]
    NoOverlap,
}
