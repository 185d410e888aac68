//! Total loss `L_rank + λ_d · L_FLOPS` and its exact gradient.
//!
//! The gradient is assembled in two stages. At the activation level,
//! `∂L_rank/∂w_{i,t} = m_t · q_t · (softmax(s_stu)_i − softmax(s_tea)_i)`
//! where `m_t = idf(t)` for IDF-aware training and 1 otherwise, and
//! `∂L_FLOPS/∂w_{i,j} = (2/N²) · Σ_{i'} w_{i',j}`. These are then pushed
//! through the `log(1 + ReLU)` encoder to the expansion matrix and bias.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::encoder::{activation, activation_grad, encode_document, pre_activations, EncoderParams, ParamGrad};
use super::loss::{ensemble_teacher_with, ranking_loss_grad, EnsembleMode, TeacherScores};
use crate::error::{Error, Result};
use crate::idf::IdfTable;
use crate::scoring::{match_score, term_score, ScoreMode};
use crate::vector::SparseVector;

/// One query, its candidate documents (token counts) and teacher scores.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    query: SparseVector,
    candidates: Vec<SparseVector>,
    teacher: TeacherScores,
    positive_index: usize,
}

impl TrainingBatch {
    pub fn new(query: SparseVector, candidates: Vec<SparseVector>, teacher: TeacherScores, positive_index: usize) -> Result<Self> {
        if candidates.len() < 2 {
            return Err(Error::InvalidBatch(String::from("need at least one positive and one negative")));
        }
        if positive_index >= candidates.len() {
            return Err(Error::InvalidBatch(format!(
                "positive index {positive_index} out of {} candidates",
                candidates.len()
            )));
        }
        if teacher.num_candidates() != candidates.len() {
            return Err(Error::LengthMismatch {
                expected: candidates.len(),
                found: teacher.num_candidates(),
            });
        }
        Ok(Self {
            query,
            candidates,
            teacher,
            positive_index,
        })
    }

    pub fn query(&self) -> &SparseVector {
        &self.query
    }

    pub fn candidates(&self) -> &[SparseVector] {
        &self.candidates
    }

    pub fn teacher(&self) -> &TeacherScores {
        &self.teacher
    }

    pub fn positive_index(&self) -> usize {
        self.positive_index
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// FLOPS coefficient λ_d.
    pub lambda_d: f64,
    /// Scale S applied to the ensembled teacher scores.
    pub scale_s: f64,
    /// Score candidates with IDF-weighted match scores.
    pub idf_aware: bool,
    pub ensemble: EnsembleMode,
}

impl LossConfig {
    /// Pre-training preset: λ_d = 1e-7, S = 10.
    pub fn pretrain() -> Self {
        Self {
            lambda_d: 1e-7,
            scale_s: 10.0,
            idf_aware: true,
            ensemble: EnsembleMode::NormAndAdd,
        }
    }

    /// Fine-tuning preset: λ_d = 0.02, S = 30.
    pub fn finetune() -> Self {
        Self {
            lambda_d: 0.02,
            scale_s: 30.0,
            idf_aware: true,
            ensemble: EnsembleMode::NormAndAdd,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_d.is_finite() && self.lambda_d >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda_d must be >= 0, got {}", self.lambda_d)));
        }
        if !(self.scale_s.is_finite() && self.scale_s > 0.0) {
            return Err(Error::InvalidConfig(format!("scale_s must be > 0, got {}", self.scale_s)));
        }
        Ok(())
    }

    fn score_mode(&self) -> ScoreMode {
        if self.idf_aware {
            ScoreMode::IdfWeighted
        } else {
            ScoreMode::Plain
        }
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self::finetune()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub rank: f64,
    pub flops: f64,
    /// Mean number of non-zero activations over the encoded candidates.
    pub mean_nnz: f64,
}

/// Student match scores of every candidate under the current encoder.
pub fn student_scores(params: &EncoderParams, batch: &TrainingBatch, idf: &IdfTable, idf_aware: bool) -> Vec<f64> {
    let mode = if idf_aware { ScoreMode::IdfWeighted } else { ScoreMode::Plain };
    batch
        .candidates
        .iter()
        .map(|c| match_score(&batch.query, &encode_document(params, c), mode, Some(idf)).expect("table supplied"))
        .collect()
}

/// Score of dense activations; same evaluation order as [`match_score`].
fn dense_score(query: &SparseVector, activations: &[f64], idf: Option<&IdfTable>) -> f64 {
    let mut score = 0.0;
    for (t, qw) in query.iter() {
        let w = activations.get(t.index()).copied().unwrap_or(0.0);
        if w > 0.0 {
            score += term_score(qw, w, idf.map(|tab| tab.get(t)));
        }
    }
    score
}

/// Ranking loss of dense candidate activations against ensembled teacher
/// scores, with `∂L_rank/∂w_{i,j}` for every candidate `i` and token `j`.
///
/// `idf = None` uses plain match scores.
pub fn ranking_activation_grad(
    activations: &[Vec<f64>],
    query: &SparseVector,
    teacher_target: &[f64],
    idf: Option<&IdfTable>,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let scores: Vec<f64> = activations.iter().map(|w| dense_score(query, w, idf)).collect();
    let (loss, dscore) = ranking_loss_grad(&scores, teacher_target)?;
    let grads = activations
        .iter()
        .zip(&dscore)
        .map(|(w, &ds)| {
            let mut g = vec![0.0; w.len()];
            for (t, qw) in query.iter() {
                if let Some(slot) = g.get_mut(t.index()) {
                    *slot = term_score(qw, ds, idf.map(|tab| tab.get(t)));
                }
            }
            g
        })
        .collect();
    Ok((loss, grads))
}

/// FLOPS regularizer of dense activations and `∂L_FLOPS/∂w_{i,j}`, which
/// is the same for every document `i` and is returned once.
pub fn flops_activation_grad(activations: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let first = activations.first().ok_or(Error::EmptyBatch)?;
    let n = activations.len() as f64;
    let mut sums = vec![0.0; first.len()];
    for w in activations {
        if w.len() != sums.len() {
            return Err(Error::LengthMismatch {
                expected: sums.len(),
                found: w.len(),
            });
        }
        for (s, x) in sums.iter_mut().zip(w) {
            *s += x;
        }
    }
    let mut loss = 0.0;
    let grad = sums
        .iter()
        .map(|s| {
            let mean = s / n;
            loss += mean * mean;
            2.0 * mean / n
        })
        .collect();
    Ok((loss, grad))
}

struct Forward {
    /// Per batch, per candidate dense pre-activations.
    pre: Vec<Vec<Vec<f64>>>,
    act: Vec<Vec<Vec<f64>>>,
    targets: Vec<Vec<f64>>,
}

fn forward(params: &EncoderParams, batches: &[TrainingBatch], cfg: &LossConfig) -> Forward {
    let mut fwd = Forward {
        pre: Vec::with_capacity(batches.len()),
        act: Vec::with_capacity(batches.len()),
        targets: Vec::with_capacity(batches.len()),
    };
    for b in batches {
        let pre: Vec<Vec<f64>> = b.candidates.iter().map(|c| pre_activations(params, c)).collect();
        let act = pre.iter().map(|z| z.iter().map(|&x| activation(x)).collect()).collect();
        fwd.pre.push(pre);
        fwd.act.push(act);
        fwd.targets.push(ensemble_teacher_with(&b.teacher, cfg.scale_s, cfg.ensemble));
    }
    fwd
}

/// Per-batch, per-candidate activation gradients.
type ActGrads = Vec<Vec<Vec<f64>>>;

fn losses(
    fwd: &Forward,
    batches: &[TrainingBatch],
    idf: &IdfTable,
    cfg: &LossConfig,
) -> Result<(LossBreakdown, ActGrads, Vec<f64>)> {
    let rank_idf = match cfg.score_mode() {
        ScoreMode::IdfWeighted => Some(idf),
        ScoreMode::Plain => None,
    };
    let nb = batches.len() as f64;
    let mut rank = 0.0;
    let mut rank_grads = Vec::with_capacity(batches.len());
    for ((b, act), target) in batches.iter().zip(&fwd.act).zip(&fwd.targets) {
        let (l, g) = ranking_activation_grad(act, &b.query, target, rank_idf)?;
        rank += l;
        rank_grads.push(g);
    }
    rank /= nb;
    let pooled: Vec<Vec<f64>> = fwd.act.iter().flatten().cloned().collect();
    let (flops, flops_grad) = flops_activation_grad(&pooled)?;
    let nnz: usize = pooled.iter().map(|w| w.iter().filter(|&&x| x > 0.0).count()).sum();
    let breakdown = LossBreakdown {
        total: rank + cfg.lambda_d * flops,
        rank,
        flops,
        mean_nnz: nnz as f64 / pooled.len() as f64,
    };
    if !breakdown.total.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    Ok((breakdown, rank_grads, flops_grad))
}

fn check_inputs(params: &EncoderParams, batches: &[TrainingBatch], cfg: &LossConfig) -> Result<()> {
    cfg.validate()?;
    if batches.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !params.is_finite() {
        return Err(Error::NonFinite("encoder parameters"));
    }
    Ok(())
}

/// Loss of one optimisation step over several queries: the mean of the
/// per-query ranking losses plus `λ_d` times the FLOPS regularizer over
/// all candidate documents of the step.
pub fn step_loss(params: &EncoderParams, batches: &[TrainingBatch], idf: &IdfTable, cfg: &LossConfig) -> Result<LossBreakdown> {
    check_inputs(params, batches, cfg)?;
    let fwd = forward(params, batches, cfg);
    losses(&fwd, batches, idf, cfg).map(|(b, _, _)| b)
}

/// [`step_loss`] together with its exact gradient.
pub fn step_loss_and_grad(
    params: &EncoderParams,
    batches: &[TrainingBatch],
    idf: &IdfTable,
    cfg: &LossConfig,
) -> Result<(LossBreakdown, ParamGrad)> {
    check_inputs(params, batches, cfg)?;
    let fwd = forward(params, batches, cfg);
    let (breakdown, rank_grads, flops_grad) = losses(&fwd, batches, idf, cfg)?;

    let v = params.vocab_size();
    let nb = batches.len() as f64;
    let mut grad = ParamGrad::zeros(v);
    let mut dz = vec![0.0; v];
    for (bi, b) in batches.iter().enumerate() {
        for (ci, cand) in b.candidates.iter().enumerate() {
            let z = &fwd.pre[bi][ci];
            let g_rank = &rank_grads[bi][ci];
            for j in 0..v {
                let dw = g_rank[j] / nb + cfg.lambda_d * flops_grad[j];
                dz[j] = dw * activation_grad(z[j]);
            }
            for (g, d) in grad.bias.iter_mut().zip(&dz) {
                *g += d;
            }
            for (t, count) in cand.iter() {
                if t.index() >= v {
                    continue;
                }
                let row = &mut grad.expansion[t.index() * v..(t.index() + 1) * v];
                for (g, d) in row.iter_mut().zip(&dz) {
                    *g += count * d;
                }
            }
        }
    }
    if !grad.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    Ok((breakdown, grad))
}

/// Loss and gradient for a single query batch.
pub fn total_loss_and_grad(
    params: &EncoderParams,
    batch: &TrainingBatch,
    idf: &IdfTable,
    cfg: &LossConfig,
) -> Result<(LossBreakdown, ParamGrad)> {
    step_loss_and_grad(params, core::slice::from_ref(batch), idf, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::flops_regularizer;
    use crate::vector::TokenId;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sv(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().map(|&(t, w)| (TokenId(t), w))).unwrap()
    }

    fn random_batch(rng: &mut ChaCha8Rng, v: usize, n: usize) -> TrainingBatch {
        let query = SparseVector::binary((0..3).map(|_| TokenId(rng.gen_range(0..v as u32))));
        let candidates: Vec<SparseVector> = (0..n)
            .map(|_| SparseVector::counts((0..5).map(|_| TokenId(rng.gen_range(0..v as u32)))))
            .collect();
        let dense: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..150.0)).collect();
        let sparse: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..8.0)).collect();
        let teacher = TeacherScores::equal_weights([("dense", dense), ("sparse", sparse)]).unwrap();
        TrainingBatch::new(query, candidates, teacher, 0).unwrap()
    }

    fn random_params(rng: &mut ChaCha8Rng, v: usize) -> EncoderParams {
        let expansion = (0..v * v).map(|_| rng.gen_range(-0.3..1.0)).collect();
        let bias = (0..v).map(|_| rng.gen_range(-0.5..0.5)).collect();
        EncoderParams::from_parts(v, expansion, bias).unwrap()
    }

    fn random_idf(rng: &mut ChaCha8Rng, v: usize) -> IdfTable {
        let mut t = IdfTable::new("r");
        for i in 0..v {
            t.insert(TokenId(i as u32), rng.gen_range(0.05..4.0)).unwrap();
        }
        t
    }

    #[test]
    fn batch_validation() {
        let t2 = TeacherScores::equal_weights([("a", vec![1.0, 2.0])]).unwrap();
        assert!(TrainingBatch::new(sv(&[(0, 1.0)]), vec![sv(&[(0, 1.0)])], t2.clone(), 0).is_err());
        assert!(TrainingBatch::new(sv(&[(0, 1.0)]), vec![sv(&[(0, 1.0)]); 2], t2.clone(), 2).is_err());
        assert!(TrainingBatch::new(sv(&[(0, 1.0)]), vec![sv(&[(0, 1.0)]); 3], t2, 0).is_err());
    }

    #[test]
    fn presets() {
        let p = LossConfig::pretrain();
        assert_eq!((p.lambda_d, p.scale_s), (1e-7, 10.0));
        let f = LossConfig::finetune();
        assert_eq!((f.lambda_d, f.scale_s), (0.02, 30.0));
        assert!(LossConfig { scale_s: 0.0, ..f }.validate().is_err());
        assert!(LossConfig { lambda_d: -1.0, ..f }.validate().is_err());
    }

    #[test]
    fn zero_params_give_zero_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_batch(&mut rng, 8, 4);
        let idf = random_idf(&mut rng, 8);
        let s = student_scores(&EncoderParams::zeros(8), &b, &idf, true);
        assert!(s.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unit_idf_paths_are_bitwise_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = 10;
        let p = random_params(&mut rng, v);
        let b = random_batch(&mut rng, v, 5);
        let ones = IdfTable::new("ones");
        assert_eq!(student_scores(&p, &b, &ones, true), student_scores(&p, &b, &ones, false));
        let aware = LossConfig { idf_aware: true, ..LossConfig::finetune() };
        let plain = LossConfig { idf_aware: false, ..aware };
        let (la, ga) = total_loss_and_grad(&p, &b, &ones, &aware).unwrap();
        let (lp, gp) = total_loss_and_grad(&p, &b, &ones, &plain).unwrap();
        assert_eq!(la.total.to_bits(), lp.total.to_bits());
        assert_eq!(ga, gp);
    }

    #[test]
    fn forward_matches_scoring_module() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = 12;
        let p = random_params(&mut rng, v);
        let b = random_batch(&mut rng, v, 6);
        let idf = random_idf(&mut rng, v);
        for aware in [true, false] {
            let cfg = LossConfig { idf_aware: aware, lambda_d: 0.3, ..LossConfig::finetune() };
            let scores = student_scores(&p, &b, &idf, aware);
            let target = ensemble_teacher_with(b.teacher(), cfg.scale_s, cfg.ensemble);
            let expected_rank = crate::distill::ranking_loss(&scores, &target).unwrap();
            let encoded: Vec<SparseVector> = b.candidates().iter().map(|c| encode_document(&p, c)).collect();
            let expected_flops = flops_regularizer(&encoded).unwrap();
            let got = step_loss(&p, core::slice::from_ref(&b), &idf, &cfg).unwrap();
            assert!((got.rank - expected_rank).abs() < 1e-12);
            assert!((got.flops - expected_flops).abs() < 1e-12);
            assert!((got.total - (expected_rank + 0.3 * expected_flops)).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_minimum_has_zero_rank_gradient() {
        // Teacher target equals the student scores exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = 6;
        let p = random_params(&mut rng, v);
        let b = random_batch(&mut rng, v, 4);
        let idf = random_idf(&mut rng, v);
        let acts: Vec<Vec<f64>> = b
            .candidates()
            .iter()
            .map(|c| pre_activations(&p, c).iter().map(|&z| activation(z)).collect())
            .collect();
        let scores: Vec<f64> = acts.iter().map(|w| dense_score(b.query(), w, Some(&idf))).collect();
        let (loss, grad) = ranking_activation_grad(&acts, b.query(), &scores, Some(&idf)).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().flatten().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn flops_gradient_is_two_over_n_squared_times_sum() {
        let acts = vec![vec![1.0, 0.0, 2.0], vec![3.0, 0.0, 0.0]];
        let (loss, grad) = flops_activation_grad(&acts).unwrap();
        assert_eq!(loss, 4.0 + 0.0 + 1.0);
        assert_eq!(grad, vec![2.0 / 4.0 * 4.0, 0.0, 2.0 / 4.0 * 2.0]);
        assert_eq!(flops_activation_grad(&[]), Err(Error::EmptyBatch));
    }

    #[test]
    fn non_finite_params_are_rejected() {
        let teacher = TeacherScores::equal_weights([("a", vec![1.0, 2.0])]).unwrap();
        let b = TrainingBatch::new(sv(&[(0, 1.0)]), vec![sv(&[(0, 4.0)]), sv(&[(1, 1.0)])], teacher, 0).unwrap();
        let idf = IdfTable::new("ones");
        let mut p = EncoderParams::identity_init(2);
        // pre-activation 4e308 overflows to +inf
        p.set_weight(0, 0, 1e308);
        let r = total_loss_and_grad(&p, &b, &idf, &LossConfig::finetune());
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
