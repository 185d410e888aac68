//! Argument parsing and subcommand dispatch.

mod corpus;
mod io;
mod retrieve;
mod training;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Config, Ensemble, Mode, Preset};
use crate::error::CliResult;

const VECTOR_FORMAT: &str = "Sparse-vector files are JSON lines: {\"id\": \"<doc_id>\", \"vector\": {\"<token>\": <weight>, ...}}.";
const QUERY_FORMAT: &str = "Query files are JSON lines: {\"query_id\": \"..\", \"query_tokens\": [\"..\", ..]}; training pairs add \"positive_id\".";
const IDF_FORMAT: &str = "IDF files are JSON: {\"source\": \"<label>\", \"default\": 1.0, \"values\": {\"<token>\": <idf>, ...}}.";
const TREC_FORMAT: &str = "Runs are TREC lines `<query_id> Q0 <doc_id> <rank> <score> <run_tag>`; qrels are `<query_id> 0 <doc_id> <grade>`.";
const CONFIG_NOTE: &str = "A --config TOML file (sections [paths], [search], [loss], [schedule], [mining] plus top-level seed) sets defaults; flags override it. Text outputs written to a file get a `<file>.config.toml` sidecar holding the effective configuration.";

#[derive(Debug, Parser)]
#[command(name = "lsr", version, about = "Inference-free learned sparse retrieval: IDF, indexing, search, distillation training, evaluation and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Random seed; overrides `seed` in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> CliResult<Config> {
        let mut cfg = Config::load(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SearchArgs {
    /// Results per query.
    #[arg(long)]
    pub k: Option<usize>,
    /// Match score: plain dot product or IDF-weighted.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Prefilter with high-IDF query tokens, then rescore a candidate window.
    #[arg(long)]
    pub two_phase: bool,
    /// Phase-1 candidate window (must be >= k).
    #[arg(long)]
    pub window: Option<usize>,
    /// Phase-1 IDF threshold; default is the median IDF of each query's tokens.
    #[arg(long)]
    pub idf_threshold: Option<f64>,
}

impl SearchArgs {
    fn apply(&self, cfg: &mut Config) {
        let s = &mut cfg.search;
        if let Some(k) = self.k {
            s.k = k;
        }
        if let Some(m) = self.mode {
            s.mode = m;
        }
        if self.two_phase {
            s.two_phase = true;
        }
        if let Some(w) = self.window {
            s.window = w;
        }
        if self.idf_threshold.is_some() {
            s.idf_threshold = self.idf_threshold;
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct LossArgs {
    /// Hyperparameter preset supplying lambda_d and scale_s.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// FLOPS regularization coefficient.
    #[arg(long)]
    pub lambda_d: Option<f64>,
    /// Scale applied to the ensembled teacher scores.
    #[arg(long)]
    pub scale_s: Option<f64>,
    /// Use IDF-weighted student scores (true/false).
    #[arg(long)]
    pub idf_aware: Option<bool>,
    /// How teacher scores are combined.
    #[arg(long, value_enum)]
    pub ensemble: Option<Ensemble>,
}

impl LossArgs {
    fn apply(&self, cfg: &mut Config) {
        let l = &mut cfg.loss;
        if let Some(p) = self.preset {
            l.preset = p;
        }
        if self.lambda_d.is_some() {
            l.lambda_d = self.lambda_d;
        }
        if self.scale_s.is_some() {
            l.scale_s = self.scale_s;
        }
        if let Some(a) = self.idf_aware {
            l.idf_aware = a;
        }
        if let Some(e) = self.ensemble {
            l.ensemble = e;
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScheduleArgs {
    /// Gradient steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Queries per step.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Negatives sampled per query.
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Gradient-descent step size.
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

impl ScheduleArgs {
    fn apply(&self, cfg: &mut Config) {
        let s = &mut cfg.schedule;
        if let Some(v) = self.steps {
            s.steps = v;
        }
        if let Some(v) = self.batch_size {
            s.batch_size = v;
        }
        if let Some(v) = self.negatives {
            s.negatives_per_query = v;
        }
        if let Some(v) = self.learning_rate {
            s.learning_rate = v;
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a smoothed IDF table from a sparse-vector corpus.
    #[command(after_help = format!("{VECTOR_FORMAT}\n{IDF_FORMAT}\nIDF is ln((N - df + 0.5) / (df + 0.5) + 1); tokens absent from the corpus use the default 1.0.\n{CONFIG_NOTE}"))]
    Idf {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Sparse-vector corpus (JSON lines).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Label stored as the table's source.
        #[arg(long, default_value = "corpus")]
        source: String,
        /// Output IDF JSON file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a binary inverted index from a sparse-vector corpus.
    #[command(after_help = format!("{VECTOR_FORMAT}\nThe index file is little-endian binary: magic, version, length-prefixed sections (config, vocabulary, doc table, df, postings) and a CRC-32 of the payload; the effective configuration is embedded.\nDocuments with non-positive or non-finite weights are skipped with a diagnostic; a repeated doc id is an error.\n{CONFIG_NOTE}"))]
    Index {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Sparse-vector corpus (JSON lines).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Output index file.
        #[arg(long)]
        out: PathBuf,
        /// Print {corpus_size, distinct_tokens, total_postings, mean_nnz_per_doc} as JSON.
        #[arg(long)]
        stats: bool,
    },
    /// Retrieve the top-k documents for each query.
    #[command(after_help = format!("{QUERY_FORMAT}\n{IDF_FORMAT}\n{TREC_FORMAT}\nIDF-weighted mode requires --idf. Query tokens missing from the index vocabulary are dropped and counted on standard error.\n{CONFIG_NOTE}"))]
    Search {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Index file written by `lsr index`.
        #[arg(long)]
        index: Option<PathBuf>,
        /// Queries (JSON lines).
        #[arg(long)]
        queries: Option<PathBuf>,
        /// IDF table (JSON).
        #[arg(long)]
        idf: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
        /// Run tag written in the last TREC column.
        #[arg(long)]
        run_tag: Option<String>,
        /// Output run file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode token-count documents with a trained encoder.
    #[command(after_help = format!("{VECTOR_FORMAT} Input weights are token counts; output weights are encoder activations ln(1 + max(0, z)).\nTokens outside the encoder vocabulary are dropped and counted on standard error.\n{CONFIG_NOTE}"))]
    Encode {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Encoder file written by `lsr train`.
        #[arg(long)]
        encoder: Option<PathBuf>,
        /// Token-count corpus (JSON lines).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Output sparse-vector file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the toy sparse document encoder by teacher distillation.
    #[command(after_help = format!("{VECTOR_FORMAT} Corpus weights are token counts and define the encoder vocabulary.\n{QUERY_FORMAT}\nTeacher files are JSON lines {{\"query_id\", \"doc_ids\": [..], \"teachers\": [{{\"id\", \"weight\", \"scores\": [..]}}]}}; without one, two seeded synthetic teachers (dense-like and sparse-overlap) score candidates using the pairs and optional --qrels grades.\nMined files (from `lsr mine`/`lsr filter`) restrict training to their queries and supply hard negatives.\nThe encoder file is little-endian binary with magic, version, config, vocabulary, vocab hash, matrix, bias and a CRC-32. The log is CSV: step,loss_total,loss_rank,loss_flops,mean_nnz.\n{CONFIG_NOTE}"))]
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Token-count corpus (JSON lines).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Training pairs (JSON lines with positive_id).
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Replayed teacher scores (JSON lines).
        #[arg(long)]
        teachers: Option<PathBuf>,
        /// Graded judgments for the synthetic teachers (TREC qrels).
        #[arg(long)]
        qrels: Option<PathBuf>,
        /// Mined or filtered candidates (JSON lines).
        #[arg(long)]
        mined: Option<PathBuf>,
        /// IDF table (JSON); default is computed from the corpus.
        #[arg(long)]
        idf: Option<PathBuf>,
        #[command(flatten)]
        loss: LossArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Output encoder file.
        #[arg(long)]
        out: PathBuf,
        /// Output training log (CSV).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Mine hard negatives: the top-M documents per training query.
    #[command(after_help = format!("{QUERY_FORMAT}\nOutput is JSON lines {{\"query_id\", \"positive_id\", \"doc_ids\": [positive first, ..], \"positive_rank\": <1-based rank or null>}}.\n{CONFIG_NOTE}"))]
    Mine {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Index file written by `lsr index`.
        #[arg(long)]
        index: Option<PathBuf>,
        /// Training pairs (JSON lines with positive_id).
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// IDF table (JSON).
        #[arg(long)]
        idf: Option<PathBuf>,
        /// Candidates retrieved per query.
        #[arg(long)]
        m: Option<usize>,
        /// Match score used for mining.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Keep only pairs whose positive was retrieved within the top k.
    #[command(after_help = format!("Input and output are the JSON-lines format written by `lsr mine`.\n{CONFIG_NOTE}"))]
    Filter {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Mined candidates (JSON lines).
        #[arg(long)]
        mined: Option<PathBuf>,
        /// Rank cutoff.
        #[arg(long)]
        k: Option<usize>,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a run against qrels: NDCG@k, MRR@k and Recall@k.
    #[command(after_help = format!("{TREC_FORMAT}\nPrints a JSON object {{metric: value}} on the first line, then an aligned table. Queries without relevant judgments are excluded; judged queries missing from the run score 0.\n{CONFIG_NOTE}"))]
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Run file (TREC).
        #[arg(long)]
        run: Option<PathBuf>,
        /// Relevance judgments (TREC qrels).
        #[arg(long)]
        qrels: Option<PathBuf>,
        /// Metric cutoff.
        #[arg(long)]
        k: Option<usize>,
        /// Also write the JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure search latency (P50/P99) and throughput per concurrency level.
    #[command(after_help = format!("{QUERY_FORMAT}\nPrints a JSON array of rows {{label, concurrency, queries, p50_ms, p99_ms, mean_ms, throughput_qps}} on the first line, then a table. Latency is wall-clock per query inside the process.\n{CONFIG_NOTE}"))]
    Bench {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Index file written by `lsr index`.
        #[arg(long)]
        index: Option<PathBuf>,
        /// Queries (JSON lines).
        #[arg(long)]
        queries: Option<PathBuf>,
        /// IDF table (JSON).
        #[arg(long)]
        idf: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
        /// Comma-separated worker counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        concurrency: Vec<usize>,
        /// Passes over the query set per level.
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        /// Untimed passes before each level.
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        /// Interleaved rounds: the levels take turns on equal slices of the jobs.
        #[arg(long, default_value_t = 5)]
        rounds: usize,
        /// Benchmark exact and two-phase search on the same query set.
        #[arg(long)]
        compare_two_phase: bool,
        /// Also write the JSON rows to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Index statistics, expansion rate and theoretical FLOPS.
    #[command(after_help = format!("{QUERY_FORMAT}\nPrints JSON {{corpus_size, distinct_tokens, total_postings, mean_nnz_per_doc, expansion_rate}}; with --queries adds theoretical_flops, the mean over queries of sum_t df(t)/N."))]
    Stats {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Index file written by `lsr index`.
        #[arg(long)]
        index: Option<PathBuf>,
        /// Queries (JSON lines).
        #[arg(long)]
        queries: Option<PathBuf>,
    },
    /// Write the seeded synthetic fixture: corpus, queries, pairs, qrels, teacher scores and a config.
    #[command(after_help = format!("{VECTOR_FORMAT}\n{QUERY_FORMAT}\n{TREC_FORMAT}"))]
    Fixture {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Directory to write into (created if missing).
        #[arg(long)]
        out_dir: PathBuf,
        /// Fixture size: small (vocab 30, 20 docs, 8 queries) or standard (vocab 50, 40 docs, 16 queries).
        #[arg(long, value_enum, default_value = "standard")]
        size: FixtureSize,
    },
    /// Toy-scale ablation report: IDF-aware scoring, IDF source, FLOPS sweep, teacher ensembling.
    Demo {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Training steps per variant.
        #[arg(long, default_value_t = 300)]
        steps: usize,
        /// Also write the JSON rows to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FixtureSize {
    Small,
    Standard,
}

pub fn dispatch(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Idf { cfg, corpus, source, out: dest } => corpus::idf(cfg.load()?, corpus, &source, dest, out),
        Command::Index { cfg, corpus, out: dest, stats } => corpus::index(cfg.load()?, corpus, &dest, stats, out),
        Command::Search { cfg, index, queries, idf, search, run_tag, out: dest } => {
            let mut c = cfg.load()?;
            search.apply(&mut c);
            if let Some(t) = run_tag {
                c.search.run_tag = t;
            }
            retrieve::search(c, index, queries, idf, dest, out)
        }
        Command::Encode { cfg, encoder, corpus, out: dest } => corpus::encode(cfg.load()?, encoder, corpus, dest, out),
        Command::Train { cfg, corpus, pairs, teachers, qrels, mined, idf, loss, schedule, out: dest, log } => {
            let mut c = cfg.load()?;
            loss.apply(&mut c);
            schedule.apply(&mut c);
            let inputs = training::TrainInputs { corpus, pairs, teachers, qrels, mined, idf };
            training::train(c, inputs, &dest, log)
        }
        Command::Mine { cfg, index, pairs, idf, m, mode, out: dest } => {
            let mut c = cfg.load()?;
            if let Some(m) = m {
                c.mining.m = m;
            }
            if let Some(mode) = mode {
                c.search.mode = mode;
            }
            training::mine(c, index, pairs, idf, dest, out)
        }
        Command::Filter { cfg, mined, k, out: dest } => {
            let mut c = cfg.load()?;
            if let Some(k) = k {
                c.mining.filter_k = k;
            }
            training::filter(c, mined, dest, out)
        }
        Command::Eval { cfg, run, qrels, k, out: dest } => {
            let mut c = cfg.load()?;
            if let Some(k) = k {
                c.search.k = k;
            }
            retrieve::eval(c, run, qrels, dest, out)
        }
        Command::Bench { cfg, index, queries, idf, search, concurrency, repetitions, warmup, rounds, compare_two_phase, out: dest } => {
            let mut c = cfg.load()?;
            search.apply(&mut c);
            let opts = crate::bench::BenchOptions { concurrency, repetitions, warmup, rounds, seed: c.seed };
            retrieve::bench(c, index, queries, idf, opts, compare_two_phase, dest, out)
        }
        Command::Stats { cfg, index, queries } => corpus::stats(cfg.load()?, index, queries, out),
        Command::Fixture { cfg, out_dir, size } => training::fixture(cfg.load()?, &out_dir, size, out),
        Command::Demo { cfg, steps, out: dest } => training::demo(cfg.load()?, steps, dest, out),
    }
}
