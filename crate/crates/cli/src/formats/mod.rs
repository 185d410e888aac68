//! On-disk formats. Binary artifacts (index, encoder) use a checksummed
//! little-endian container; everything else is JSON, JSON-lines, TREC
//! text or CSV.

mod binary;
pub mod encoder_file;
pub mod index_file;
pub mod jsonl;
pub mod trec;

use lsr_core::distill::TrainLogRow;

pub use encoder_file::{decode_encoder, encode_encoder, EncoderFile};
pub use index_file::{decode_index, encode_index, IndexFile};

/// Training log as CSV: `step,loss_total,loss_rank,loss_flops,mean_nnz`.
pub fn training_log_csv(rows: &[TrainLogRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["step", "loss_total", "loss_rank", "loss_flops", "mean_nnz"]).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.loss_total.to_string(),
            r.loss_rank.to_string(),
            r.loss_flops.to_string(),
            r.mean_nnz.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}
