//! Desk-scale distillation of an inference-free sparse document encoder.
//!
//! The student is a linear token-expansion encoder with `log(1 + ReLU)`
//! saturation ([`EncoderParams`], [`encode_document`]). It is trained to
//! match an ensembled teacher score distribution under a KL ranking loss,
//! optionally IDF-weighted, plus a FLOPS sparsity penalty
//! ([`total_loss_and_grad`]). Gradients are exact and closed-form.

mod encoder;
mod loss;
mod mining;
mod objective;
mod train;

pub use encoder::{encode_document, pre_activations, EncoderParams, ParamGrad};
pub use loss::{ensemble_teacher, ensemble_teacher_with, ranking_loss, ranking_loss_grad, EnsembleMode, Teacher, TeacherScores};
pub use mining::{consistency_filter, mine_hard_negatives, MinedCandidates, MiningQuery};
pub use objective::{
    flops_activation_grad, ranking_activation_grad, step_loss, step_loss_and_grad, student_scores, total_loss_and_grad,
    LossBreakdown, LossConfig, TrainingBatch,
};
pub use train::{train, Schedule, TeacherSource, TrainLogRow, TrainOutcome, TrainingExample};
