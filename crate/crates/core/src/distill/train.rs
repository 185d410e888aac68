use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::encoder::EncoderParams;
use super::loss::TeacherScores;
use super::objective::{step_loss_and_grad, LossConfig, TrainingBatch};
use crate::error::{Error, Result};
use crate::idf::IdfTable;
use crate::vector::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub steps: usize,
    /// Queries per step.
    pub batch_size: usize,
    pub negatives_per_query: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            steps: 300,
            batch_size: 8,
            negatives_per_query: 7,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

/// A query with its labelled positive and an optional pool of mined
/// hard negatives (indices into the training corpus).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub query: SparseVector,
    pub positive: usize,
    pub hard_negatives: Vec<usize>,
}

/// Supplies teacher scores for a sampled candidate list.
pub trait TeacherSource {
    /// Scores of `candidates` (corpus indices) for training example `example`.
    fn teacher_scores(&self, example: usize, candidates: &[usize]) -> Result<TeacherScores>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainLogRow {
    pub step: usize,
    pub loss_total: f64,
    pub loss_rank: f64,
    pub loss_flops: f64,
    pub mean_nnz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    pub log: Vec<TrainLogRow>,
}

fn sample_candidates(rng: &mut ChaCha8Rng, example: &TrainingExample, corpus_len: usize, wanted: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(wanted + 1);
    out.push(example.positive);
    let mut pool: Vec<usize> = example.hard_negatives.iter().copied().filter(|&d| d != example.positive).collect();
    pool.sort_unstable();
    pool.dedup();
    let take = wanted.min(pool.len());
    for i in sample(rng, pool.len(), take) {
        out.push(pool[i]);
    }
    if out.len() <= wanted {
        let rest: Vec<usize> = (0..corpus_len).filter(|d| !out.contains(d)).collect();
        let take = (wanted + 1 - out.len()).min(rest.len());
        for i in sample(rng, rest.len(), take) {
            out.push(rest[i]);
        }
    }
    out
}

/// Plain gradient descent on the distillation objective.
///
/// Each step samples `batch_size` examples without replacement; every
/// example contributes its positive (first) and `negatives_per_query`
/// negatives drawn from its hard-negative pool, topped up with random
/// corpus documents. Deterministic for a given `schedule.seed`. The log
/// records the loss of each step before its update.
pub fn train(
    corpus: &[SparseVector],
    examples: &[TrainingExample],
    teachers: &dyn TeacherSource,
    idf: &IdfTable,
    cfg: &LossConfig,
    schedule: &Schedule,
    init: EncoderParams,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::InvalidConfig(String::from("no training pairs")));
    }
    if corpus.len() < 2 {
        return Err(Error::InvalidConfig(format!("corpus of {} documents has no negatives", corpus.len())));
    }
    if let Some(e) = examples.iter().find(|e| e.positive >= corpus.len()) {
        return Err(Error::InvalidConfig(format!("positive {} outside corpus of {}", e.positive, corpus.len())));
    }
    if let Some(&d) = examples.iter().flat_map(|e| &e.hard_negatives).find(|&&d| d >= corpus.len()) {
        return Err(Error::InvalidConfig(format!("hard negative {d} outside corpus of {}", corpus.len())));
    }
    if !(schedule.learning_rate.is_finite() && schedule.learning_rate > 0.0) {
        return Err(Error::InvalidConfig(String::from("learning rate must be positive")));
    }
    if schedule.batch_size == 0 || schedule.negatives_per_query == 0 {
        return Err(Error::InvalidConfig(String::from("batch_size and negatives_per_query must be positive")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut params = init;
    let mut log = Vec::with_capacity(schedule.steps);
    let per_step = schedule.batch_size.min(examples.len());

    for step in 0..schedule.steps {
        let mut batches = Vec::with_capacity(per_step);
        for ex_idx in sample(&mut rng, examples.len(), per_step) {
            let ex = &examples[ex_idx];
            let cands = sample_candidates(&mut rng, ex, corpus.len(), schedule.negatives_per_query);
            let teacher = teachers.teacher_scores(ex_idx, &cands)?;
            let docs = cands.iter().map(|&d| corpus[d].clone()).collect();
            batches.push(TrainingBatch::new(ex.query.clone(), docs, teacher, 0)?);
        }
        let (loss, grad) = step_loss_and_grad(&params, &batches, idf, cfg)?;
        params.apply_gradient(&grad, schedule.learning_rate)?;
        log.push(TrainLogRow {
            step,
            loss_total: loss.total,
            loss_rank: loss.rank,
            loss_flops: loss.flops,
            mean_nnz: loss.mean_nnz,
        });
    }
    Ok(TrainOutcome { params, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::TokenId;
    use alloc::vec;

    struct Flat;

    impl TeacherSource for Flat {
        fn teacher_scores(&self, _example: usize, candidates: &[usize]) -> Result<TeacherScores> {
            let scores = candidates.iter().enumerate().map(|(i, _)| if i == 0 { 5.0 } else { 0.0 }).collect();
            TeacherScores::equal_weights([("t", scores)])
        }
    }

    fn corpus() -> Vec<SparseVector> {
        (0..6u32).map(|i| SparseVector::counts([TokenId(i), TokenId((i + 1) % 6)])).collect()
    }

    #[test]
    fn zero_steps_returns_init() {
        let ex = vec![TrainingExample { query: SparseVector::binary([TokenId(0)]), positive: 0, hard_negatives: vec![] }];
        let sched = Schedule { steps: 0, ..Schedule::default() };
        let init = EncoderParams::identity_init(6);
        let out = train(&corpus(), &ex, &Flat, &IdfTable::new("x"), &LossConfig::finetune(), &sched, init.clone()).unwrap();
        assert_eq!(out.params, init);
        assert!(out.log.is_empty());
    }

    #[test]
    fn empty_pairs_rejected() {
        let r = train(&corpus(), &[], &Flat, &IdfTable::new("x"), &LossConfig::finetune(), &Schedule::default(), EncoderParams::identity_init(6));
        assert!(r.is_err());
    }

    #[test]
    fn candidates_put_positive_first_and_prefer_pool() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ex = TrainingExample { query: SparseVector::new(), positive: 2, hard_negatives: vec![2, 4, 5] };
        let c = sample_candidates(&mut rng, &ex, 10, 3);
        assert_eq!(c[0], 2);
        assert_eq!(c.len(), 4);
        assert!(c[1..3].iter().all(|d| [4, 5].contains(d)));
        let mut uniq = c.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 4);
        // more negatives requested than exist
        let c = sample_candidates(&mut rng, &ex, 6, 10);
        assert_eq!(c.len(), 6);
    }

    #[test]
    fn training_is_deterministic() {
        let ex = vec![
            TrainingExample { query: SparseVector::binary([TokenId(0)]), positive: 0, hard_negatives: vec![] },
            TrainingExample { query: SparseVector::binary([TokenId(3)]), positive: 3, hard_negatives: vec![] },
        ];
        let sched = Schedule { steps: 20, batch_size: 2, negatives_per_query: 3, learning_rate: 0.1, seed: 9 };
        let run = || train(&corpus(), &ex, &Flat, &IdfTable::new("x"), &LossConfig::finetune(), &sched, EncoderParams::identity_init(6)).unwrap();
        assert_eq!(run(), run());
    }
}
