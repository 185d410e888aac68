//! In-process search benchmark: per-query wall-clock latency and
//! throughput at several concurrency levels over a shared index.
//!
//! Each level replays the query set `repetitions` times in an order
//! shuffled per repetition from the seed. The job list is split into
//! `rounds` chunks and the levels take turns on each chunk, so slow drift
//! in machine speed spreads over every level instead of landing on one.
//! Workers pull jobs from a shared counter; latencies are merged and
//! sorted after the run, so the report does not depend on thread
//! scheduling beyond the timings themselves.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use lsr_core::eval::percentile;
use lsr_core::{search, search_two_phase, IdfTable, InvertedIndex, ScoredDoc, SearchParams, SparseVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub concurrency: Vec<usize>,
    pub repetitions: usize,
    /// Untimed single-threaded passes over the query set before each level.
    pub warmup: usize,
    /// Interleaved passes over the levels; the job list is split evenly.
    pub rounds: usize,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { concurrency: vec![1, 2, 4], repetitions: 10, warmup: 1, rounds: 5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub label: String,
    pub concurrency: usize,
    pub queries: usize,
    pub p50_ms: f64,
    pub p99_ms: f64,
    pub mean_ms: f64,
    pub throughput_qps: f64,
}

/// Runs one query with exact or two-phase search as `params` says.
pub fn run_query(index: &InvertedIndex, q: &SparseVector, params: &SearchParams, idf: Option<&IdfTable>) -> CliResult<Vec<ScoredDoc>> {
    if params.two_phase.is_some() {
        let idf = idf.ok_or_else(|| CliError::Usage("two-phase search needs an IDF table (--idf)".into()))?;
        Ok(search_two_phase(index, q, params, idf)?.hits)
    } else {
        Ok(search(index, q, params, idf)?)
    }
}

/// Deterministic job order: `repetitions` seeded shuffles of the query ids.
pub fn job_order(n_queries: usize, repetitions: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(n_queries * repetitions);
    for _ in 0..repetitions {
        let mut order: Vec<usize> = (0..n_queries).collect();
        order.shuffle(&mut rng);
        jobs.extend(order);
    }
    jobs
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn bench_search(
    index: &InvertedIndex,
    queries: &[SparseVector],
    params: &SearchParams,
    idf: Option<&IdfTable>,
    label: &str,
    opts: &BenchOptions,
) -> CliResult<Vec<BenchRow>> {
    if queries.is_empty() {
        return Err(CliError::Usage("bench needs at least one query".into()));
    }
    if opts.repetitions == 0 || opts.concurrency.contains(&0) {
        return Err(CliError::Usage("repetitions and concurrency levels must be positive".into()));
    }
    params.validate()?;
    let jobs = job_order(queries.len(), opts.repetitions, opts.seed);
    let rounds = opts.rounds.clamp(1, jobs.len());
    let chunk = jobs.len().div_ceil(rounds);
    let mut latencies: Vec<Vec<f64>> = vec![Vec::with_capacity(jobs.len()); opts.concurrency.len()];
    let mut wall = vec![Duration::ZERO; opts.concurrency.len()];
    for (round, part) in jobs.chunks(chunk).enumerate() {
        for (level, &workers) in opts.concurrency.iter().enumerate() {
            if round == 0 {
                for _ in 0..opts.warmup {
                    for q in queries {
                        run_query(index, q, params, idf)?;
                    }
                }
            }
            let (lat, elapsed) = run_level(index, queries, params, idf, part, workers)?;
            latencies[level].extend(lat);
            wall[level] += elapsed;
        }
    }
    let mut rows = Vec::with_capacity(opts.concurrency.len());
    for ((&workers, mut lat), wall) in opts.concurrency.iter().zip(latencies).zip(wall) {
        lat.sort_by(f64::total_cmp);
        rows.push(BenchRow {
            label: label.to_string(),
            concurrency: workers,
            queries: lat.len(),
            p50_ms: percentile(&lat, 50.0).expect("non-empty"),
            p99_ms: percentile(&lat, 99.0).expect("non-empty"),
            mean_ms: lat.iter().sum::<f64>() / lat.len() as f64,
            throughput_qps: lat.len() as f64 / wall.as_secs_f64().max(f64::MIN_POSITIVE),
        });
    }
    Ok(rows)
}

/// Runs `jobs` on `workers` threads; returns per-query latencies in
/// milliseconds and the wall-clock time of the whole batch.
fn run_level(
    index: &InvertedIndex,
    queries: &[SparseVector],
    params: &SearchParams,
    idf: Option<&IdfTable>,
    jobs: &[usize],
    workers: usize,
) -> CliResult<(Vec<f64>, Duration)> {
    let next = AtomicUsize::new(0);
    let started = Instant::now();
    let per_worker: Vec<CliResult<Vec<Duration>>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut lat = Vec::new();
                    loop {
                        let j = next.fetch_add(1, Ordering::Relaxed);
                        let Some(&qi) = jobs.get(j) else { break };
                        let t = Instant::now();
                        run_query(index, &queries[qi], params, idf)?;
                        lat.push(t.elapsed());
                    }
                    Ok(lat)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("bench worker panicked")).collect()
    });
    let wall = started.elapsed();
    let mut out = Vec::with_capacity(jobs.len());
    for r in per_worker {
        out.extend(r?.into_iter().map(ms));
    }
    Ok((out, wall))
}

pub fn render_table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:<12} {:>11} {:>8} {:>10} {:>10} {:>10} {:>14}\n",
        "label", "concurrency", "queries", "p50_ms", "p99_ms", "mean_ms", "throughput_qps"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:>11} {:>8} {:>10.4} {:>10.4} {:>10.4} {:>14.1}\n",
            r.label, r.concurrency, r.queries, r.p50_ms, r.p99_ms, r.mean_ms, r.throughput_qps
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use lsr_core::synthetic::{FixtureConfig, ToyFixture};
    use lsr_core::{build_index, ScoreMode};

    fn fixture() -> (InvertedIndex, Vec<SparseVector>, IdfTable) {
        let f = ToyFixture::generate(FixtureConfig::standard(3));
        let idf = f.idf();
        let index = build_index(f.doc_ids.iter().map(String::as_str).zip(f.docs.iter().cloned()), f.vocab.clone())
            .unwrap()
            .index;
        (index, f.queries, idf)
    }

    #[test]
    fn job_order_is_seeded_permutations() {
        let a = job_order(5, 3, 1);
        assert_eq!(a, job_order(5, 3, 1));
        assert_ne!(a, job_order(5, 3, 2));
        for chunk in a.chunks(5) {
            let mut c = chunk.to_vec();
            c.sort();
            assert_eq!(c, vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn rows_are_consistent() {
        let (index, queries, idf) = fixture();
        let opts = BenchOptions { concurrency: vec![1, 2], repetitions: 3, warmup: 0, rounds: 2, seed: 0 };
        let p = SearchParams::new(10, ScoreMode::IdfWeighted);
        let rows = bench_search(&index, &queries, &p, Some(&idf), "exact", &opts).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert_eq!(r.queries, 3 * queries.len());
            assert!(r.p99_ms >= r.p50_ms);
            assert!(r.throughput_qps > 0.0);
        }
        assert!(render_table(&rows).lines().count() == 3);
    }

    #[test]
    fn single_worker_throughput_matches_latency() {
        let (index, queries, idf) = fixture();
        let one = vec![queries[0].clone()];
        let opts = BenchOptions { concurrency: vec![1], repetitions: 2000, warmup: 5, rounds: 1, seed: 0 };
        let rows = bench_search(&index, &one, &SearchParams::new(10, ScoreMode::IdfWeighted), Some(&idf), "x", &opts).unwrap();
        let implied = 1000.0 / rows[0].mean_ms;
        let ratio = rows[0].throughput_qps / implied;
        assert!((0.8..=1.2).contains(&ratio), "throughput/implied = {ratio}");
    }

    #[test]
    fn two_phase_without_idf_is_a_usage_error() {
        let (index, queries, _) = fixture();
        let p = SearchParams::new(10, ScoreMode::Plain).with_two_phase(20, None);
        let r = bench_search(&index, &queries, &p, None, "x", &BenchOptions::default());
        assert!(matches!(r, Err(CliError::Usage(_))));
    }
}
