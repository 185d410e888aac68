//! Binary inverted-index file.
//!
//! Payload sections, each `u64`-length-prefixed: effective config text,
//! vocabulary (`u32` count, then `u32`-length UTF-8 terms), doc table
//! (same shape), df array (`u32` count, `u64` each), postings (per token
//! a `u32` count then `(u32 doc ordinal, f32 weight)` pairs).

use lsr_core::{InvertedIndex, Posting, Vocabulary};

use super::binary::{frame, unframe, ByteReader, ByteWriter};
use crate::error::FormatError;

pub const INDEX_MAGIC: &[u8; 8] = b"LSRINDX\0";
pub const INDEX_VERSION: u32 = 1;

/// An index together with the configuration text that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexFile {
    pub index: InvertedIndex,
    pub config: String,
}

pub fn encode_index(file: &IndexFile) -> Vec<u8> {
    let index = &file.index;
    let mut w = ByteWriter::new();

    let mut s = ByteWriter::new();
    s.str(&file.config);
    w.section(s);

    let mut s = ByteWriter::new();
    s.strings(index.vocabulary().terms());
    w.section(s);

    let mut s = ByteWriter::new();
    s.strings(index.doc_ids());
    w.section(s);

    let mut s = ByteWriter::new();
    let df = index.doc_frequencies();
    s.len_u32(df.len());
    for d in df {
        s.u64(d);
    }
    w.section(s);

    let mut s = ByteWriter::new();
    for list in index.postings_lists() {
        s.len_u32(list.len());
        for p in list {
            s.u32(p.doc);
            s.f32(p.weight);
        }
    }
    w.section(s);

    frame(INDEX_MAGIC, INDEX_VERSION, &w.into_bytes())
}

pub fn decode_index(bytes: &[u8]) -> Result<IndexFile, FormatError> {
    let payload = unframe(bytes, INDEX_MAGIC, INDEX_VERSION, FormatError::NotAnIndexFile)?;
    let mut r = ByteReader::new(payload, "index file");

    let mut s = r.section("config section")?;
    let config = s.str()?;
    s.finish()?;

    let mut s = r.section("vocabulary section")?;
    let vocabulary = Vocabulary::from_terms(s.strings()?)?;
    s.finish()?;

    let mut s = r.section("doc table")?;
    let doc_ids = s.strings()?;
    s.finish()?;

    let mut s = r.section("df section")?;
    let n = s.len_u32()?;
    if n != vocabulary.len() {
        return Err(FormatError::malformed("df section", format!("{n} entries for vocabulary of {}", vocabulary.len())));
    }
    let df = (0..n).map(|_| s.u64()).collect::<Result<Vec<_>, _>>()?;
    s.finish()?;

    let mut s = r.section("postings section")?;
    let mut postings = Vec::with_capacity(vocabulary.len());
    for (token, &expected) in df.iter().enumerate() {
        let len = s.len_u32()?;
        if len as u64 != expected {
            return Err(FormatError::malformed(
                "postings section",
                format!("token {token} has {len} postings but df {expected}"),
            ));
        }
        let list = (0..len)
            .map(|_| Ok(Posting { doc: s.u32()?, weight: s.f32()? }))
            .collect::<Result<Vec<_>, FormatError>>()?;
        postings.push(list);
    }
    s.finish()?;
    r.finish()?;

    let index = InvertedIndex::from_parts(vocabulary, doc_ids, postings)?;
    Ok(IndexFile { index, config })
}
