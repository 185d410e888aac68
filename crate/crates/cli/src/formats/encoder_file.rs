//! Binary trained-encoder file.
//!
//! Payload sections, each `u64`-length-prefixed: effective config text,
//! vocabulary, then the parameter block: `u32` CRC-32 of the vocabulary
//! section (the vocab hash), `u32` vocab size V, V·V expansion weights
//! (row-major, input token by output token) and V biases, all `f64`.

use lsr_core::distill::EncoderParams;
use lsr_core::Vocabulary;

use super::binary::{frame, unframe, ByteReader, ByteWriter};
use crate::error::FormatError;

pub const ENCODER_MAGIC: &[u8; 8] = b"LSRENCD\0";
pub const ENCODER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderFile {
    pub vocabulary: Vocabulary,
    pub params: EncoderParams,
    pub config: String,
}

fn vocab_bytes(vocab: &Vocabulary) -> Vec<u8> {
    let mut s = ByteWriter::new();
    s.strings(vocab.terms());
    s.into_bytes()
}

pub fn vocab_hash(vocab: &Vocabulary) -> u32 {
    crc32fast::hash(&vocab_bytes(vocab))
}

pub fn encode_encoder(file: &EncoderFile) -> Vec<u8> {
    assert_eq!(file.vocabulary.len(), file.params.vocab_size(), "encoder vocabulary and parameters disagree");
    let mut w = ByteWriter::new();

    let mut s = ByteWriter::new();
    s.str(&file.config);
    w.section(s);

    let mut s = ByteWriter::new();
    s.strings(file.vocabulary.terms());
    w.section(s);

    let mut s = ByteWriter::new();
    s.u32(vocab_hash(&file.vocabulary));
    s.len_u32(file.params.vocab_size());
    for &x in file.params.expansion() {
        s.f64(x);
    }
    for &x in file.params.bias() {
        s.f64(x);
    }
    w.section(s);

    frame(ENCODER_MAGIC, ENCODER_VERSION, &w.into_bytes())
}

pub fn decode_encoder(bytes: &[u8]) -> Result<EncoderFile, FormatError> {
    let payload = unframe(bytes, ENCODER_MAGIC, ENCODER_VERSION, FormatError::NotAnEncoderFile)?;
    let mut r = ByteReader::new(payload, "encoder file");

    let mut s = r.section("config section")?;
    let config = s.str()?;
    s.finish()?;

    let mut s = r.section("vocabulary section")?;
    let vocabulary = Vocabulary::from_terms(s.strings()?)?;
    s.finish()?;

    let mut s = r.section("parameter section")?;
    let stored = s.u32()?;
    let computed = vocab_hash(&vocabulary);
    if stored != computed {
        return Err(FormatError::malformed("parameter section", format!("vocab hash {stored:#010x} does not match vocabulary {computed:#010x}")));
    }
    let v = s.len_u32()?;
    if v != vocabulary.len() {
        return Err(FormatError::malformed("parameter section", format!("{v} rows for vocabulary of {}", vocabulary.len())));
    }
    let expansion = (0..v * v).map(|_| s.f64()).collect::<Result<Vec<_>, _>>()?;
    let bias = (0..v).map(|_| s.f64()).collect::<Result<Vec<_>, _>>()?;
    s.finish()?;
    r.finish()?;

    let params = EncoderParams::from_parts(v, expansion, bias)?;
    Ok(EncoderFile { vocabulary, params, config })
}
