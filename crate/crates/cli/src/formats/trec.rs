//! TREC qrels (`<query_id> 0 <doc_id> <grade>`) and run files
//! (`<query_id> Q0 <doc_id> <rank> <score> <run_tag>`).

use lsr_core::eval::{Qrels, Run};
use lsr_core::ScoredDoc;

use crate::error::FormatError;

pub fn parse_qrels(text: &str) -> Result<Qrels, FormatError> {
    let mut qrels = Qrels::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            [] => continue,
            [q, _iteration, d, grade] => {
                let grade: u32 = grade
                    .parse()
                    .map_err(|_| FormatError::line(i + 1, format!("grade {grade:?} is not a non-negative integer")))?;
                qrels.insert(q, d, grade).map_err(|e| FormatError::line(i + 1, e))?;
            }
            _ => return Err(FormatError::line(i + 1, format!("expected 4 fields, found {}", fields.len()))),
        }
    }
    Ok(qrels)
}

pub fn format_qrels(qrels: &Qrels) -> String {
    let mut out = String::new();
    for (q, judged) in qrels.iter() {
        for (d, g) in judged {
            out.push_str(&format!("{q} 0 {d} {g}\n"));
        }
    }
    out
}

/// Parses a run; each query's lines must be contiguous with ranks
/// 1, 2, ... and non-increasing scores.
pub fn parse_run(text: &str) -> Result<Run, FormatError> {
    let mut run = Run::new();
    let mut current: Option<(String, Vec<ScoredDoc>)> = None;
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let (q, d, rank, score) = match fields.as_slice() {
            [] => continue,
            [q, _q0, d, rank, score, _tag] => (*q, *d, *rank, *score),
            _ => return Err(FormatError::line(i + 1, format!("expected 6 fields, found {}", fields.len()))),
        };
        let rank: usize = rank.parse().map_err(|_| FormatError::line(i + 1, format!("rank {rank:?} is not an integer")))?;
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| FormatError::line(i + 1, format!("score {score:?} is not a finite number")))?;
        if current.as_ref().is_some_and(|(cq, _)| cq != q) {
            let (cq, docs) = current.take().expect("checked above");
            run.insert(&cq, docs).map_err(|e| FormatError::line(i, e))?;
        }
        let (_, docs) = current.get_or_insert_with(|| (q.to_string(), Vec::new()));
        if rank != docs.len() + 1 {
            return Err(FormatError::line(i + 1, format!("rank {rank} for query {q}, expected {}", docs.len() + 1)));
        }
        docs.push(ScoredDoc::new(d, score));
    }
    if let Some((q, docs)) = current {
        run.insert(&q, docs).map_err(|e| FormatError::line(text.lines().count(), e))?;
    }
    Ok(run)
}

/// Appends one query's ranking to a run file body.
pub fn push_run_lines(out: &mut String, query_id: &str, hits: &[ScoredDoc], run_tag: &str) {
    for (i, h) in hits.iter().enumerate() {
        out.push_str(&format!("{query_id} Q0 {} {} {} {run_tag}\n", h.doc_id, i + 1, h.score));
    }
}
