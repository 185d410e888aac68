use std::io::Write;
use std::path::{Path, PathBuf};

use lsr_core::eval::{mrr_at_k, ndcg_at_k, recall_at_k};
use lsr_core::{IdfTable, SearchParams};
use serde_json::json;

use super::io::{emit_text, load_idf, load_index, load_queries, optional, println, read_text, require, sidecar_path, with_path, write_file};
use crate::bench::{bench_search, render_table, run_query, BenchOptions};
use crate::config::Config;
use crate::error::CliResult;
use crate::formats::trec::{parse_qrels, parse_run, push_run_lines};

fn load_optional_idf(flag: Option<PathBuf>, cfg: &mut Config, vocab: &lsr_core::Vocabulary) -> CliResult<Option<IdfTable>> {
    optional(flag, &mut cfg.paths.idf).map(|p| load_idf(&p, vocab)).transpose()
}

/// Writes `text` plus its sidecar when a destination is given.
fn save_copy(dest: Option<&Path>, text: &str, cfg: &Config) -> CliResult<()> {
    if let Some(p) = dest {
        write_file(p, text.as_bytes())?;
        write_file(&sidecar_path(p), cfg.to_toml().as_bytes())?;
    }
    Ok(())
}

pub fn search(
    mut cfg: Config,
    index: Option<PathBuf>,
    queries: Option<PathBuf>,
    idf: Option<PathBuf>,
    dest: Option<PathBuf>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let index_path = require(index, &mut cfg.paths.index, "index")?;
    let query_path = require(queries, &mut cfg.paths.queries, "queries")?;
    let params = cfg.search.params()?;
    let file = load_index(&index_path)?;
    let idf = load_optional_idf(idf, &mut cfg, file.index.vocabulary())?;
    let (records, vectors) = load_queries(&query_path, file.index.vocabulary())?;
    let mut text = String::new();
    for (r, q) in records.iter().zip(&vectors) {
        let hits = run_query(&file.index, q, &params, idf.as_ref())?;
        push_run_lines(&mut text, &r.query_id, &hits, &cfg.search.run_tag);
    }
    emit_text(dest.as_deref(), &text, &cfg, out)
}

pub fn eval(mut cfg: Config, run: Option<PathBuf>, qrels: Option<PathBuf>, dest: Option<PathBuf>, out: &mut dyn Write) -> CliResult<()> {
    let run_path = require(run, &mut cfg.paths.run, "run")?;
    let qrels_path = require(qrels, &mut cfg.paths.qrels, "qrels")?;
    let run = with_path(&run_path, parse_run(&read_text(&run_path)?))?;
    let qrels = with_path(&qrels_path, parse_qrels(&read_text(&qrels_path)?))?;
    let k = cfg.search.k;
    let metrics = [
        (format!("mrr@{k}"), mrr_at_k(&run, &qrels, k)?),
        (format!("ndcg@{k}"), ndcg_at_k(&run, &qrels, k)?),
        (format!("recall@{k}"), recall_at_k(&run, &qrels, k)?),
    ];
    let obj: serde_json::Map<String, serde_json::Value> = metrics.iter().map(|(n, v)| (n.clone(), json!(v))).collect();
    let line = serde_json::Value::Object(obj).to_string();
    println(out, &line)?;
    for (name, v) in &metrics {
        println(out, &format!("{name:<12} {v:.4}"))?;
    }
    save_copy(dest.as_deref(), &format!("{line}\n"), &cfg)
}

#[allow(clippy::too_many_arguments)]
pub fn bench(
    mut cfg: Config,
    index: Option<PathBuf>,
    queries: Option<PathBuf>,
    idf: Option<PathBuf>,
    opts: BenchOptions,
    compare_two_phase: bool,
    dest: Option<PathBuf>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let index_path = require(index, &mut cfg.paths.index, "index")?;
    let query_path = require(queries, &mut cfg.paths.queries, "queries")?;
    let params = cfg.search.params()?;
    let file = load_index(&index_path)?;
    let idf = load_optional_idf(idf, &mut cfg, file.index.vocabulary())?;
    let (_, vectors) = load_queries(&query_path, file.index.vocabulary())?;
    let mut rows = Vec::new();
    if compare_two_phase {
        let exact = SearchParams { two_phase: None, ..params };
        let two = exact.with_two_phase(cfg.search.window, cfg.search.idf_threshold);
        rows.extend(bench_search(&file.index, &vectors, &exact, idf.as_ref(), "exact", &opts)?);
        rows.extend(bench_search(&file.index, &vectors, &two, idf.as_ref(), "two_phase", &opts)?);
    } else {
        let label = if params.two_phase.is_some() { "two_phase" } else { "exact" };
        rows.extend(bench_search(&file.index, &vectors, &params, idf.as_ref(), label, &opts)?);
    }
    let line = serde_json::to_string(&rows).expect("rows serialize");
    println(out, &line)?;
    write!(out, "{}", render_table(&rows)).map_err(|e| crate::error::CliError::io(Path::new("<stdout>"), e))?;
    save_copy(dest.as_deref(), &format!("{line}\n"), &cfg)
}
