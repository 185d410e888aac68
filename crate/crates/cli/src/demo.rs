//! Toy-scale ablation report over the synthetic fixture: IDF-aware
//! scoring on and off, IDF source, FLOPS coefficient sweep and teacher
//! ensembling mode. Each row trains from the same initialization and
//! seed, encodes the corpus, indexes it and evaluates the fixture queries.

use lsr_core::distill::{encode_document, train, EncoderParams, EnsembleMode, LossConfig, Schedule};
use lsr_core::eval::{mrr_at_k, ndcg_at_k, Run};
use lsr_core::synthetic::{activation_share, bottom_quartile_idf, FixtureConfig, ToyFixture};
use lsr_core::{build_index, search, theoretical_flops, IdfTable, ScoreMode, SearchParams, SparseVector};
use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoRow {
    pub axis: String,
    pub setting: String,
    pub ndcg_at_10: f64,
    pub mrr_at_10: f64,
    pub mean_nnz: f64,
    pub theoretical_flops: f64,
    pub filler_share: f64,
    pub final_loss_rank: f64,
}

struct Variant {
    axis: &'static str,
    setting: String,
    loss: LossConfig,
    idf: IdfTable,
}

pub fn run_demo(seed: u64, steps: usize) -> CliResult<Vec<DemoRow>> {
    let f = ToyFixture::generate(FixtureConfig::standard(seed));
    let own_idf = f.idf();
    // "fixed" IDF from an unrelated corpus drawn from the same generator
    let fixed_idf = ToyFixture::generate(FixtureConfig::standard(seed.wrapping_add(1000))).idf();
    let base = LossConfig::finetune();

    let mut variants = vec![
        Variant { axis: "baseline", setting: "idf_aware, λ=0.02, norm_and_add".into(), loss: base, idf: own_idf.clone() },
        Variant { axis: "idf_aware", setting: "off".into(), loss: LossConfig { idf_aware: false, ..base }, idf: own_idf.clone() },
        Variant { axis: "idf_source", setting: "fixed (other corpus)".into(), loss: base, idf: fixed_idf },
    ];
    for lambda in [0.0, 1e-4, 1e-2, 1e-1] {
        variants.push(Variant { axis: "lambda_d", setting: format!("{lambda:e}"), loss: LossConfig { lambda_d: lambda, ..base }, idf: own_idf.clone() });
    }
    variants.push(Variant {
        axis: "ensemble",
        setting: "simply_add".into(),
        loss: LossConfig { ensemble: EnsembleMode::SimplyAdd, ..base },
        idf: own_idf.clone(),
    });

    let teachers = f.teachers(seed);
    let qrels = f.qrels();
    let filler = bottom_quartile_idf(&own_idf);
    let schedule = Schedule { steps, seed, ..Schedule::default() };
    let mut rows = Vec::with_capacity(variants.len());
    for v in variants {
        let out = train(&f.docs, &f.examples(), &teachers, &v.idf, &v.loss, &schedule, EncoderParams::identity_init(f.vocab.len()))?;
        let encoded: Vec<SparseVector> = f.docs.iter().map(|d| encode_document(&out.params, d)).collect();
        let index = build_index(f.doc_ids.iter().map(String::as_str).zip(encoded.iter().cloned()), f.vocab.clone())?.index;
        let mode = if v.loss.idf_aware { ScoreMode::IdfWeighted } else { ScoreMode::Plain };
        let params = SearchParams::new(10, mode);
        let mut run = Run::new();
        for (qid, q) in f.query_ids.iter().zip(&f.queries) {
            run.insert(qid, search(&index, q, &params, Some(&v.idf))?)?;
        }
        rows.push(DemoRow {
            axis: v.axis.into(),
            setting: v.setting,
            ndcg_at_10: ndcg_at_k(&run, &qrels, 10)?,
            mrr_at_10: mrr_at_k(&run, &qrels, 10)?,
            mean_nnz: encoded.iter().map(SparseVector::nnz).sum::<usize>() as f64 / encoded.len() as f64,
            theoretical_flops: theoretical_flops(&f.queries, &index, index.corpus_size() as u64)?,
            filler_share: activation_share(&encoded, &filler),
            final_loss_rank: out.log.last().map_or(f64::NAN, |r| r.loss_rank),
        });
    }
    Ok(rows)
}

pub fn render_table(rows: &[DemoRow]) -> String {
    let mut out = format!(
        "{:<11} {:<32} {:>8} {:>8} {:>9} {:>8} {:>8} {:>10}\n",
        "axis", "setting", "ndcg@10", "mrr@10", "mean_nnz", "flops", "filler", "loss_rank"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<11} {:<32} {:>8.4} {:>8.4} {:>9.2} {:>8.3} {:>8.3} {:>10.4}\n",
            r.axis, r.setting, r.ndcg_at_10, r.mrr_at_10, r.mean_nnz, r.theoretical_flops, r.filler_share, r.final_loss_rank
        ));
    }
    out
}
