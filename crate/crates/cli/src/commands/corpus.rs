use std::io::Write;
use std::path::{Path, PathBuf};

use lsr_core::distill::encode_document;
use lsr_core::eval::expansion_rate;
use lsr_core::{compute_idf, theoretical_flops, Error, IndexBuilder, SparseVector};
use serde_json::json;

use super::io::{emit_text, load_index, load_queries, optional, println, read_bytes, read_jsonl, require, with_path, write_file};
use crate::config::Config;
use crate::error::{CliError, CliResult, FormatError};
use crate::formats::jsonl::{bind_record, corpus_vocabulary, to_jsonl, IdfFile, TokenWeights, VectorRecord};
use crate::formats::{decode_encoder, encode_index, IndexFile};

pub fn idf(mut cfg: Config, corpus: Option<PathBuf>, source: &str, dest: Option<PathBuf>, out: &mut dyn Write) -> CliResult<()> {
    let path = require(corpus, &mut cfg.paths.corpus, "corpus")?;
    let records: Vec<VectorRecord> = read_jsonl(&path)?;
    let vocab = corpus_vocabulary(&records);
    let docs = records.iter().map(|r| {
        r.vector.0.iter().filter(|(_, w)| w.is_finite() && *w > 0.0).map(|(t, _)| vocab.id(t).expect("interned"))
    });
    let table = compute_idf(docs, &vocab, source)?;
    let mut text = serde_json::to_string(&IdfFile::from_table(&table, &vocab)).expect("idf serializes");
    text.push('\n');
    emit_text(dest.as_deref(), &text, &cfg, out)
}

pub fn index(mut cfg: Config, corpus: Option<PathBuf>, dest: &Path, stats: bool, out: &mut dyn Write) -> CliResult<()> {
    let path = require(corpus, &mut cfg.paths.corpus, "corpus")?;
    let records: Vec<VectorRecord> = read_jsonl(&path)?;
    let vocab = corpus_vocabulary(&records);
    let mut builder = IndexBuilder::new(vocab.clone());
    for r in &records {
        let (entries, _) = bind_record(r, &vocab);
        builder.add_raw(&r.id, entries).map_err(|e| match e {
            Error::DuplicateDocId(_) => CliError::format(&path, FormatError::Core(e)),
            e => CliError::Core(e),
        })?;
    }
    let built = builder.finish();
    for r in &built.rejected {
        eprintln!("{}: skipped document {}: {}", path.display(), r.doc_id, r.reason);
    }
    let file = IndexFile { index: built.index, config: cfg.to_toml() };
    write_file(dest, &encode_index(&file))?;
    if stats {
        let s = file.index.stats();
        let v = json!({
            "corpus_size": s.corpus_size,
            "distinct_tokens": s.distinct_tokens,
            "total_postings": s.total_postings,
            "mean_nnz_per_doc": s.mean_nnz_per_doc,
        });
        println(out, &v.to_string())?;
    }
    Ok(())
}

pub fn encode(mut cfg: Config, encoder: Option<PathBuf>, corpus: Option<PathBuf>, dest: Option<PathBuf>, out: &mut dyn Write) -> CliResult<()> {
    let enc_path = require(encoder, &mut cfg.paths.encoder, "encoder")?;
    let corpus_path = require(corpus, &mut cfg.paths.corpus, "corpus")?;
    let enc = with_path(&enc_path, decode_encoder(&read_bytes(&enc_path)?))?;
    let records: Vec<VectorRecord> = read_jsonl(&corpus_path)?;
    let mut oov = 0;
    let mut encoded = Vec::with_capacity(records.len());
    for r in &records {
        let (entries, missed) = bind_record(r, &enc.vocabulary);
        oov += missed;
        let counts = SparseVector::from_pairs(entries)
            .map_err(|e| CliError::format(&corpus_path, FormatError::malformed("token counts", format!("document {}: {e}", r.id))))?;
        let v = encode_document(&enc.params, &counts);
        let weights = v.iter().map(|(t, w)| (enc.vocabulary.term(t).expect("encoder token").to_string(), w)).collect();
        encoded.push(VectorRecord { id: r.id.clone(), vector: TokenWeights(weights) });
    }
    if oov > 0 {
        eprintln!("{}: {oov} tokens outside the encoder vocabulary were dropped", corpus_path.display());
    }
    emit_text(dest.as_deref(), &to_jsonl(&encoded), &cfg, out)
}

pub fn stats(mut cfg: Config, index: Option<PathBuf>, queries: Option<PathBuf>, out: &mut dyn Write) -> CliResult<()> {
    let path = require(index, &mut cfg.paths.index, "index")?;
    let file = load_index(&path)?;
    let s = file.index.stats();
    let docs = file.index.documents();
    let mut v = json!({
        "corpus_size": s.corpus_size,
        "distinct_tokens": s.distinct_tokens,
        "total_postings": s.total_postings,
        "mean_nnz_per_doc": s.mean_nnz_per_doc,
        "expansion_rate": expansion_rate(&docs).ok(),
    });
    if let Some(qpath) = optional(queries, &mut cfg.paths.queries) {
        let (_, qs) = load_queries(&qpath, file.index.vocabulary())?;
        v["theoretical_flops"] = json!(theoretical_flops(&qs, &file.index, file.index.corpus_size() as u64)?);
    }
    println(out, &v.to_string())
}
