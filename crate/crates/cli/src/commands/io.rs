use std::io::Write;
use std::path::{Path, PathBuf};

use lsr_core::{binarize_query, IdfTable, SparseVector, Vocabulary};
use serde::de::DeserializeOwned;

use crate::config::Config;
use crate::error::{CliError, CliResult, FormatError};
use crate::formats::jsonl::{parse_jsonl, IdfFile, QueryRecord};
use crate::formats::{decode_index, IndexFile};

/// Picks the flag value, else the config value, records the choice in
/// the config and fails with a usage error when neither is set.
pub fn require(flag: Option<PathBuf>, slot: &mut Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
    if flag.is_some() {
        *slot = flag;
    }
    slot.clone().ok_or_else(|| CliError::Usage(format!("missing --{name} (or [paths] {name} in the config)")))
}

/// Like [`require`] but the input may be absent.
pub fn optional(flag: Option<PathBuf>, slot: &mut Option<PathBuf>) -> Option<PathBuf> {
    if flag.is_some() {
        *slot = flag;
    }
    slot.clone()
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    parse_jsonl(&read_text(path)?).map_err(|e| CliError::format(path, e))
}

pub fn with_path<T>(path: &Path, r: Result<T, impl Into<FormatError>>) -> CliResult<T> {
    r.map_err(|e| CliError::format(path, e.into()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.toml");
    PathBuf::from(s)
}

/// Writes a text artifact to `dest` with its config sidecar, or to `out`.
pub fn emit_text(dest: Option<&Path>, text: &str, cfg: &Config, out: &mut dyn Write) -> CliResult<()> {
    match dest {
        Some(p) => {
            write_file(p, text.as_bytes())?;
            write_file(&sidecar_path(p), cfg.to_toml().as_bytes())
        }
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

pub fn println(out: &mut dyn Write, text: &str) -> CliResult<()> {
    writeln!(out, "{text}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

pub fn load_index(path: &Path) -> CliResult<IndexFile> {
    with_path(path, decode_index(&read_bytes(path)?))
}

pub fn load_idf(path: &Path, vocab: &Vocabulary) -> CliResult<IdfTable> {
    let file: IdfFile = with_path(path, serde_json::from_str(&read_text(path)?).map_err(|e| FormatError::line(e.line(), e)))?;
    with_path(path, file.to_table(vocab))
}

/// Binarized queries against `vocab`, with the total OOV count reported
/// on standard error. Query ids must be unique.
pub fn load_queries(path: &Path, vocab: &Vocabulary) -> CliResult<(Vec<QueryRecord>, Vec<SparseVector>)> {
    let records: Vec<QueryRecord> = read_jsonl(path)?;
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = records.iter().find(|r| !seen.insert(r.query_id.as_str())) {
        return Err(CliError::format(path, FormatError::malformed("queries", format!("query_id {} appears twice", dup.query_id))));
    }
    let mut oov = 0;
    let vectors = records
        .iter()
        .map(|r| {
            let b = binarize_query(&r.query_tokens, vocab);
            oov += b.oov;
            b.vector
        })
        .collect();
    if oov > 0 {
        eprintln!("{}: {oov} query tokens outside the vocabulary were dropped", path.display());
    }
    Ok((records, vectors))
}
