//! JSON and JSON-lines records: sparse vectors, IDF tables, queries and
//! training pairs, replayed teacher scores and mined candidate lists.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use lsr_core::{IdfTable, TokenId, Vocabulary};
use serde::de::{DeserializeOwned, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::FormatError;

/// `token → weight` entries in file order; duplicate tokens are an error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenWeights(pub Vec<(String, f64)>);

impl Serialize for TokenWeights {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (t, w) in &self.0 {
            map.serialize_entry(t, w)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for TokenWeights {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = TokenWeights;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object mapping tokens to weights")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<TokenWeights, A::Error> {
                let mut seen = BTreeSet::new();
                let mut out = Vec::new();
                while let Some((token, weight)) = access.next_entry::<String, f64>()? {
                    if !seen.insert(token.clone()) {
                        return Err(serde::de::Error::custom(format!("duplicate token {token:?}")));
                    }
                    out.push((token, weight));
                }
                Ok(TokenWeights(out))
            }
        }
        deserializer.deserialize_map(V)
    }
}

/// One line of a sparse-vector file: `{"id": ..., "vector": {token: weight}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorRecord {
    pub id: String,
    pub vector: TokenWeights,
}

/// IDF table file: `{"source": ..., "default": 1.0, "values": {token: idf}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdfFile {
    pub source: String,
    pub default: f64,
    pub values: BTreeMap<String, f64>,
}

impl IdfFile {
    pub fn from_table(table: &IdfTable, vocab: &Vocabulary) -> Self {
        let values = table
            .iter()
            .map(|(t, v)| (vocab.term(t).expect("idf token in vocabulary").to_string(), v))
            .collect();
        Self { source: table.source().to_string(), default: table.default_value(), values }
    }

    /// Binds the table to `vocab`; tokens the vocabulary lacks are ignored
    /// since no query against it can contain them.
    pub fn to_table(&self, vocab: &Vocabulary) -> Result<IdfTable, FormatError> {
        let mut table = IdfTable::new(self.source.clone()).with_default(self.default)?;
        for (term, &v) in &self.values {
            if let Some(t) = vocab.id(term) {
                table.insert(t, v)?;
            }
        }
        Ok(table)
    }
}

/// Queries file line; training pairs additionally carry `positive_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    pub query_id: String,
    pub query_tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherEntry {
    pub id: String,
    pub weight: f64,
    pub scores: Vec<f64>,
}

/// Replayed teacher scores for one query, aligned with `doc_ids`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherRecord {
    pub query_id: String,
    pub doc_ids: Vec<String>,
    pub teachers: Vec<TeacherEntry>,
}

/// Mined candidates for one query, positive first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinedRecord {
    pub query_id: String,
    pub positive_id: String,
    pub doc_ids: Vec<String>,
    pub positive_rank: Option<usize>,
}

impl From<&lsr_core::distill::MinedCandidates> for MinedRecord {
    fn from(m: &lsr_core::distill::MinedCandidates) -> Self {
        Self {
            query_id: m.query_id.clone(),
            positive_id: m.positive_id.clone(),
            doc_ids: m.doc_ids.clone(),
            positive_rank: m.positive_rank,
        }
    }
}

impl From<MinedRecord> for lsr_core::distill::MinedCandidates {
    fn from(m: MinedRecord) -> Self {
        Self { query_id: m.query_id, positive_id: m.positive_id, doc_ids: m.doc_ids, positive_rank: m.positive_rank }
    }
}

/// Parses one JSON value per non-blank line.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, FormatError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| FormatError::line(i + 1, e)))
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Vocabulary of every token in `records`, in order of first appearance.
pub fn corpus_vocabulary(records: &[VectorRecord]) -> Vocabulary {
    let mut vocab = Vocabulary::new();
    for r in records {
        for (t, _) in &r.vector.0 {
            vocab.intern(t);
        }
    }
    vocab
}

/// Maps a record onto `vocab`; returns the entries and the number of
/// out-of-vocabulary tokens dropped.
pub fn bind_record(record: &VectorRecord, vocab: &Vocabulary) -> (Vec<(TokenId, f64)>, usize) {
    let mut oov = 0;
    let entries = record
        .vector
        .0
        .iter()
        .filter_map(|(t, w)| match vocab.id(t) {
            Some(id) => Some((id, *w)),
            None => {
                oov += 1;
                None
            }
        })
        .collect();
    (entries, oov)
}
