use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use lsr_core::distill::{
    consistency_filter, mine_hard_negatives, train as train_encoder, EncoderParams, MinedCandidates, MiningQuery, TeacherScores,
    TeacherSource, Teacher, TrainingExample,
};
use lsr_core::synthetic::{FixtureConfig, SyntheticTeachers, ToyFixture};
use lsr_core::{binarize_query, compute_idf, Error, SparseVector, Vocabulary};

use super::io::{emit_text, load_idf, load_index, optional, println, read_jsonl, read_text, require, sidecar_path, with_path, write_file};
use super::FixtureSize;
use crate::config::Config;
use crate::demo::{render_table, run_demo};
use crate::error::{CliError, CliResult, FormatError};
use crate::formats::jsonl::{
    bind_record, corpus_vocabulary, to_jsonl, MinedRecord, QueryRecord, TeacherEntry, TeacherRecord, TokenWeights, VectorRecord,
};
use crate::formats::trec::{format_qrels, parse_qrels};
use crate::formats::{encode_encoder, training_log_csv, EncoderFile};

pub struct TrainInputs {
    pub corpus: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub teachers: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub mined: Option<PathBuf>,
    pub idf: Option<PathBuf>,
}

/// Replayed teacher scores: one record per training example, looked up
/// by corpus index.
struct ReplayTeachers {
    records: Vec<(TeacherScores, HashMap<usize, usize>)>,
}

impl TeacherSource for ReplayTeachers {
    fn teacher_scores(&self, example: usize, candidates: &[usize]) -> lsr_core::Result<TeacherScores> {
        let (scores, position) = &self.records[example];
        let positions = candidates
            .iter()
            .map(|d| position.get(d).copied().ok_or_else(|| Error::InvalidBatch(format!("document {d} has no teacher score"))))
            .collect::<lsr_core::Result<Vec<_>>>()?;
        scores.select(&positions)
    }
}

fn data(path: &Path, detail: String) -> CliError {
    CliError::Data(format!("{}: {detail}", path.display()))
}

struct Pair {
    query_id: String,
    query: SparseVector,
    positive: usize,
}

fn load_pairs(path: &Path, vocab: &Vocabulary, doc_index: &HashMap<&str, usize>) -> CliResult<Vec<Pair>> {
    let records: Vec<QueryRecord> = read_jsonl(path)?;
    let mut oov = 0;
    let mut pairs = Vec::with_capacity(records.len());
    for r in records {
        let pos_id = r.positive_id.as_deref().ok_or_else(|| data(path, format!("pair {} has no positive_id", r.query_id)))?;
        let positive = *doc_index.get(pos_id).ok_or_else(|| data(path, format!("positive {pos_id} of {} is not in the corpus", r.query_id)))?;
        let b = binarize_query(&r.query_tokens, vocab);
        oov += b.oov;
        pairs.push(Pair { query_id: r.query_id, query: b.vector, positive });
    }
    if oov > 0 {
        eprintln!("{}: {oov} query tokens outside the vocabulary were dropped", path.display());
    }
    Ok(pairs)
}

pub fn train(mut cfg: Config, inputs: TrainInputs, dest: &Path, log: Option<PathBuf>) -> CliResult<()> {
    let corpus_path = require(inputs.corpus, &mut cfg.paths.corpus, "corpus")?;
    let pairs_path = require(inputs.pairs, &mut cfg.paths.pairs, "pairs")?;
    let teachers_path = optional(inputs.teachers, &mut cfg.paths.teachers);
    let qrels_path = optional(inputs.qrels, &mut cfg.paths.qrels);
    let mined_path = optional(inputs.mined, &mut cfg.paths.mined);
    let idf_path = optional(inputs.idf, &mut cfg.paths.idf);
    let loss = cfg.loss.loss_config()?;
    let schedule = cfg.schedule();

    let records: Vec<VectorRecord> = read_jsonl(&corpus_path)?;
    let vocab = corpus_vocabulary(&records);
    let mut doc_index = HashMap::new();
    let mut docs = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if doc_index.insert(r.id.as_str(), i).is_some() {
            return Err(CliError::format(&corpus_path, FormatError::Core(Error::DuplicateDocId(r.id.clone()))));
        }
        let (entries, _) = bind_record(r, &vocab);
        docs.push(
            SparseVector::from_pairs(entries)
                .map_err(|e| CliError::format(&corpus_path, FormatError::malformed("token counts", format!("document {}: {e}", r.id))))?,
        );
    }

    let mut pairs = load_pairs(&pairs_path, &vocab, &doc_index)?;
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); pairs.len()];
    if let Some(path) = &mined_path {
        let mined: Vec<MinedRecord> = read_jsonl(path)?;
        let by_query: HashMap<&str, &MinedRecord> = mined.iter().map(|m| (m.query_id.as_str(), m)).collect();
        let total = pairs.len();
        let mut kept = Vec::new();
        let mut kept_pools = Vec::new();
        for p in pairs {
            let Some(m) = by_query.get(p.query_id.as_str()) else { continue };
            let pool = m
                .doc_ids
                .iter()
                .map(|d| doc_index.get(d.as_str()).copied().ok_or_else(|| data(path, format!("document {d} is not in the corpus"))))
                .collect::<CliResult<Vec<_>>>()?;
            kept_pools.push(pool.into_iter().filter(|&d| d != p.positive).collect());
            kept.push(p);
        }
        eprintln!("{}: training on {} of {total} pairs", path.display(), kept.len());
        pairs = kept;
        pools = kept_pools;
    }

    let idf = match &idf_path {
        Some(p) => load_idf(p, &vocab)?,
        None => compute_idf(docs.iter().map(SparseVector::tokens), &vocab, "corpus")?,
    };

    let teachers: Box<dyn TeacherSource> = match &teachers_path {
        Some(path) => {
            let (source, narrowed) = replay_teachers(path, &pairs, &pools, &doc_index, schedule.negatives_per_query)?;
            pools = narrowed;
            Box::new(source)
        }
        None => {
            let grades = match &qrels_path {
                Some(p) => Some(with_path(p, parse_qrels(&read_text(p)?))?),
                None => None,
            };
            let relevance = pairs
                .iter()
                .map(|p| {
                    let mut rel: BTreeMap<usize, u32> = BTreeMap::new();
                    if let Some(judged) = grades.as_ref().and_then(|q| q.query(&p.query_id)) {
                        for (doc, &g) in judged {
                            if let Some(&d) = doc_index.get(doc.as_str()) {
                                rel.insert(d, g);
                            }
                        }
                    }
                    let g = rel.entry(p.positive).or_insert(0);
                    *g = (*g).max(2);
                    rel
                })
                .collect();
            let queries = pairs.iter().map(|p| p.query.clone()).collect();
            Box::new(SyntheticTeachers::new(queries, docs.clone(), relevance, idf.clone(), cfg.seed))
        }
    };

    let examples: Vec<TrainingExample> = pairs
        .iter()
        .zip(pools)
        .map(|(p, pool)| TrainingExample { query: p.query.clone(), positive: p.positive, hard_negatives: pool })
        .collect();
    let outcome = train_encoder(&docs, &examples, teachers.as_ref(), &idf, &loss, &schedule, EncoderParams::identity_init(vocab.len()))?;
    let file = EncoderFile { vocabulary: vocab, params: outcome.params, config: cfg.to_toml() };
    write_file(dest, &encode_encoder(&file))?;
    if let Some(p) = log {
        write_file(&p, training_log_csv(&outcome.log).as_bytes())?;
        write_file(&sidecar_path(&p), file.config.as_bytes())?;
    }
    Ok(())
}

/// Binds replayed teacher records to the training pairs. Each pair's
/// negative pool becomes the teacher's candidate list (intersected with
/// the mined pool when there is one) and must hold at least
/// `negatives` documents, so sampling never leaves the scored set.
fn replay_teachers(
    path: &Path,
    pairs: &[Pair],
    pools: &[Vec<usize>],
    doc_index: &HashMap<&str, usize>,
    negatives: usize,
) -> CliResult<(ReplayTeachers, Vec<Vec<usize>>)> {
    let records: Vec<TeacherRecord> = read_jsonl(path)?;
    let by_query: HashMap<&str, &TeacherRecord> = records.iter().map(|r| (r.query_id.as_str(), r)).collect();
    let mut out = Vec::with_capacity(pairs.len());
    let mut narrowed = Vec::with_capacity(pairs.len());
    for (p, mined) in pairs.iter().zip(pools) {
        let r = by_query.get(p.query_id.as_str()).ok_or_else(|| data(path, format!("no teacher scores for query {}", p.query_id)))?;
        let mut position = HashMap::new();
        for (i, d) in r.doc_ids.iter().enumerate() {
            let doc = *doc_index.get(d.as_str()).ok_or_else(|| data(path, format!("query {}: document {d} is not in the corpus", p.query_id)))?;
            if position.insert(doc, i).is_some() {
                return Err(data(path, format!("query {}: document {d} listed twice", p.query_id)));
            }
        }
        if !position.contains_key(&p.positive) {
            return Err(data(path, format!("query {}: the positive has no teacher score", p.query_id)));
        }
        let scores = TeacherScores::new(
            r.teachers.iter().map(|t| Teacher { id: t.id.clone(), scores: t.scores.clone(), weight: t.weight }).collect(),
        )
        .map_err(|e| data(path, format!("query {}: {e}", p.query_id)))?;
        if scores.num_candidates() != r.doc_ids.len() {
            return Err(data(path, format!("query {}: {} doc_ids but {} scores", p.query_id, r.doc_ids.len(), scores.num_candidates())));
        }
        let mut pool: Vec<usize> = r.doc_ids.iter().map(|d| doc_index[d.as_str()]).filter(|&d| d != p.positive).collect();
        if !mined.is_empty() {
            pool.retain(|d| mined.contains(d));
        }
        if pool.len() < negatives {
            return Err(data(
                path,
                format!("query {}: {} scored negatives, fewer than negatives_per_query = {negatives}", p.query_id, pool.len()),
            ));
        }
        out.push((scores, position));
        narrowed.push(pool);
    }
    Ok((ReplayTeachers { records: out }, narrowed))
}

pub fn mine(mut cfg: Config, index: Option<PathBuf>, pairs: Option<PathBuf>, idf: Option<PathBuf>, dest: Option<PathBuf>, out: &mut dyn Write) -> CliResult<()> {
    let index_path = require(index, &mut cfg.paths.index, "index")?;
    let pairs_path = require(pairs, &mut cfg.paths.pairs, "pairs")?;
    let file = load_index(&index_path)?;
    let idf = optional(idf, &mut cfg.paths.idf).map(|p| load_idf(&p, file.index.vocabulary())).transpose()?;
    let records: Vec<QueryRecord> = read_jsonl(&pairs_path)?;
    let mut queries = Vec::with_capacity(records.len());
    for r in records {
        let positive_id = r.positive_id.ok_or_else(|| data(&pairs_path, format!("pair {} has no positive_id", r.query_id)))?;
        if file.index.ordinal_of(&positive_id).is_none() {
            return Err(data(&pairs_path, format!("positive {positive_id} of {} is not in the index", r.query_id)));
        }
        let query = binarize_query(&r.query_tokens, file.index.vocabulary()).vector;
        queries.push(MiningQuery { query_id: r.query_id, query, positive_id });
    }
    if cfg.mining.m == 0 {
        return Err(CliError::Usage("m must be positive".into()));
    }
    let mined = mine_hard_negatives(&file.index, &queries, cfg.mining.m, cfg.search.mode.into(), idf.as_ref())?;
    let records: Vec<MinedRecord> = mined.iter().map(MinedRecord::from).collect();
    emit_text(dest.as_deref(), &to_jsonl(&records), &cfg, out)
}

pub fn filter(mut cfg: Config, mined: Option<PathBuf>, dest: Option<PathBuf>, out: &mut dyn Write) -> CliResult<()> {
    let path = require(mined, &mut cfg.paths.mined, "mined")?;
    let records: Vec<MinedRecord> = read_jsonl(&path)?;
    let all: Vec<MinedCandidates> = records.into_iter().map(Into::into).collect();
    let kept = consistency_filter(&all, cfg.mining.filter_k);
    eprintln!("kept {} of {} pairs", kept.len(), all.len());
    let records: Vec<MinedRecord> = kept.iter().map(MinedRecord::from).collect();
    emit_text(dest.as_deref(), &to_jsonl(&records), &cfg, out)
}

pub fn fixture(mut cfg: Config, dir: &Path, size: FixtureSize, out: &mut dyn Write) -> CliResult<()> {
    let fc = match size {
        FixtureSize::Small => FixtureConfig::small(cfg.seed),
        FixtureSize::Standard => FixtureConfig::standard(cfg.seed),
    };
    let f = ToyFixture::generate(fc);
    let term = |t| f.vocab.term(t).expect("fixture token").to_string();

    let corpus: Vec<VectorRecord> = f
        .doc_ids
        .iter()
        .zip(&f.docs)
        .map(|(id, d)| VectorRecord { id: id.clone(), vector: TokenWeights(d.iter().map(|(t, w)| (term(t), w)).collect()) })
        .collect();
    let query = |qi: usize, positive: bool| QueryRecord {
        query_id: f.query_ids[qi].clone(),
        query_tokens: f.queries[qi].tokens().map(term).collect(),
        positive_id: positive.then(|| f.doc_ids[f.positives[qi]].clone()),
    };
    let queries: Vec<QueryRecord> = (0..f.queries.len()).map(|q| query(q, false)).collect();
    let pairs: Vec<QueryRecord> = (0..f.queries.len()).map(|q| query(q, true)).collect();
    let synth = f.teachers(cfg.seed);
    let teachers: Vec<TeacherRecord> = (0..f.queries.len())
        .map(|q| {
            let all: Vec<usize> = (0..f.docs.len()).collect();
            let scores = synth.teacher_scores(q, &all).expect("fixture teachers");
            TeacherRecord {
                query_id: f.query_ids[q].clone(),
                doc_ids: f.doc_ids.clone(),
                teachers: scores
                    .teachers()
                    .iter()
                    .map(|t| TeacherEntry { id: t.id.clone(), weight: t.weight, scores: t.scores.clone() })
                    .collect(),
            }
        })
        .collect();

    let files = [
        ("corpus.jsonl", to_jsonl(&corpus)),
        ("queries.jsonl", to_jsonl(&queries)),
        ("pairs.jsonl", to_jsonl(&pairs)),
        ("qrels.trec", format_qrels(&f.qrels())),
        ("teachers.jsonl", to_jsonl(&teachers)),
    ];
    for (name, text) in &files {
        write_file(&dir.join(name), text.as_bytes())?;
    }
    cfg.paths.corpus = Some(dir.join("corpus.jsonl"));
    cfg.paths.queries = Some(dir.join("queries.jsonl"));
    cfg.paths.pairs = Some(dir.join("pairs.jsonl"));
    cfg.paths.qrels = Some(dir.join("qrels.trec"));
    write_file(&dir.join("config.toml"), cfg.to_toml().as_bytes())?;
    println(
        out,
        &format!("wrote {} documents, {} queries and a vocabulary of {} tokens to {}", f.docs.len(), f.queries.len(), f.vocab.len(), dir.display()),
    )
}

pub fn demo(cfg: Config, steps: usize, dest: Option<PathBuf>, out: &mut dyn Write) -> CliResult<()> {
    let rows = run_demo(cfg.seed, steps)?;
    write!(out, "{}", render_table(&rows)).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    if let Some(p) = dest {
        let json = serde_json::to_string_pretty(&rows).expect("rows serialize");
        write_file(&p, format!("{json}\n").as_bytes())?;
        write_file(&sidecar_path(&p), cfg.to_toml().as_bytes())?;
    }
    Ok(())
}
