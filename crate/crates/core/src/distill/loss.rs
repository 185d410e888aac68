use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Scores from one teacher over a candidate list.
#[derive(Debug, Clone, PartialEq)]
pub struct Teacher {
    pub id: String,
    pub scores: Vec<f64>,
    pub weight: f64,
}

/// Aligned scores from a set of heterogeneous teachers.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherScores {
    teachers: Vec<Teacher>,
}

impl TeacherScores {
    /// Checks that score lists share one length, values are finite,
    /// weights are non-negative and sum to something positive.
    pub fn new(teachers: Vec<Teacher>) -> Result<Self> {
        let first = teachers
            .first()
            .ok_or_else(|| Error::InvalidBatch(String::from("no teachers")))?;
        let len = first.scores.len();
        let mut weight_sum = 0.0;
        for t in &teachers {
            if t.scores.len() != len {
                return Err(Error::LengthMismatch {
                    expected: len,
                    found: t.scores.len(),
                });
            }
            if !t.scores.iter().all(|s| s.is_finite()) {
                return Err(Error::NonFinite("teacher scores"));
            }
            if !(t.weight.is_finite() && t.weight >= 0.0) {
                return Err(Error::InvalidBatch(format!("teacher {} has invalid weight {}", t.id, t.weight)));
            }
            weight_sum += t.weight;
        }
        if weight_sum <= 0.0 {
            return Err(Error::InvalidBatch(String::from("teacher weights sum to zero")));
        }
        Ok(Self { teachers })
    }

    /// Equal-weight ensemble of the given `(id, scores)` lists.
    pub fn equal_weights<I, S>(lists: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        Self::new(
            lists
                .into_iter()
                .map(|(id, scores)| Teacher {
                    id: id.into(),
                    scores,
                    weight: 1.0,
                })
                .collect(),
        )
    }

    pub fn teachers(&self) -> &[Teacher] {
        &self.teachers
    }

    pub fn num_candidates(&self) -> usize {
        self.teachers[0].scores.len()
    }

    /// Keeps only the candidates at `positions`, in that order.
    pub fn select(&self, positions: &[usize]) -> Result<Self> {
        let n = self.num_candidates();
        if let Some(&p) = positions.iter().find(|&&p| p >= n) {
            return Err(Error::LengthMismatch { expected: n, found: p + 1 });
        }
        Self::new(
            self.teachers
                .iter()
                .map(|t| Teacher {
                    id: t.id.clone(),
                    scores: positions.iter().map(|&p| t.scores[p]).collect(),
                    weight: t.weight,
                })
                .collect(),
        )
    }
}

/// How teacher score lists are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnsembleMode {
    /// Min-max normalise each teacher to [0, 1], take the weighted sum, scale by S.
    #[default]
    NormAndAdd,
    /// Weighted sum of the raw scores, scaled by S. Ablation baseline:
    /// the teacher with the widest score range dominates.
    SimplyAdd,
}

fn min_max(scores: &[f64]) -> Vec<f64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range > 0.0 {
        scores.iter().map(|s| (s - lo) / range).collect()
    } else {
        // constant teacher: neutral contribution
        vec![0.5; scores.len()]
    }
}

/// Min-max normalise each teacher, combine with weights normalised to sum
/// to one, and multiply by `scale_s`. Output lies in `[0, scale_s]`.
pub fn ensemble_teacher(teacher: &TeacherScores, scale_s: f64) -> Vec<f64> {
    ensemble_teacher_with(teacher, scale_s, EnsembleMode::NormAndAdd)
}

pub fn ensemble_teacher_with(teacher: &TeacherScores, scale_s: f64, mode: EnsembleMode) -> Vec<f64> {
    let total: f64 = teacher.teachers.iter().map(|t| t.weight).sum();
    let mut out = vec![0.0; teacher.num_candidates()];
    for t in &teacher.teachers {
        let w = t.weight / total;
        let scores = match mode {
            EnsembleMode::NormAndAdd => min_max(&t.scores),
            EnsembleMode::SimplyAdd => t.scores.clone(),
        };
        for (o, s) in out.iter_mut().zip(scores) {
            *o += w * s;
        }
    }
    for o in &mut out {
        *o *= scale_s;
    }
    out
}

fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let lse = math::log_sum_exp(xs);
    xs.iter().map(|x| x - lse).collect()
}

fn check_pair(student: &[f64], teacher: &[f64]) -> Result<()> {
    if student.len() != teacher.len() {
        return Err(Error::LengthMismatch {
            expected: teacher.len(),
            found: student.len(),
        });
    }
    if student.len() < 2 {
        return Err(Error::InvalidBatch(String::from("ranking loss needs at least two candidates")));
    }
    Ok(())
}

/// `KL(softmax(teacher) ‖ softmax(student))`, computed in log space.
pub fn ranking_loss(student_scores: &[f64], teacher_scores: &[f64]) -> Result<f64> {
    ranking_loss_grad(student_scores, teacher_scores).map(|(loss, _)| loss)
}

/// Ranking loss and its gradient with respect to the student scores,
/// `softmax(student) - softmax(teacher)`.
pub fn ranking_loss_grad(student_scores: &[f64], teacher_scores: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_pair(student_scores, teacher_scores)?;
    let log_p = log_softmax(teacher_scores);
    let log_q = log_softmax(student_scores);
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(log_p.len());
    for (&lp, &lq) in log_p.iter().zip(&log_q) {
        let p = math::exp(lp);
        loss += p * (lp - lq);
        grad.push(math::exp(lq) - p);
    }
    // rounding can leave a tiny negative value at the minimum
    let loss = loss.max(0.0);
    if !loss.is_finite() || !grad.iter().all(|g| g.is_finite()) {
        return Err(Error::NonFinite("ranking loss"));
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn single_teacher_hand_value() {
        let t = TeacherScores::equal_weights([("dense", vec![1.0, 3.0, 5.0])]).unwrap();
        assert!(close(&ensemble_teacher(&t, 10.0), &[0.0, 5.0, 10.0]));
    }

    #[test]
    fn opposite_teachers_cancel() {
        let t = TeacherScores::equal_weights([("a", vec![0.0, 10.0]), ("b", vec![100.0, 0.0])]).unwrap();
        assert!(close(&ensemble_teacher(&t, 10.0), &[5.0, 5.0]));
    }

    #[test]
    fn constant_teacher_is_neutral() {
        let t = TeacherScores::equal_weights([("c", vec![7.0, 7.0, 7.0])]).unwrap();
        assert!(close(&ensemble_teacher(&t, 1.0), &[0.5, 0.5, 0.5]));
    }

    #[test]
    fn weights_are_normalised() {
        let t = TeacherScores::new(vec![
            Teacher { id: "a".into(), scores: vec![0.0, 1.0], weight: 3.0 },
            Teacher { id: "b".into(), scores: vec![1.0, 0.0], weight: 1.0 },
        ])
        .unwrap();
        assert!(close(&ensemble_teacher(&t, 4.0), &[1.0, 3.0]));
    }

    #[test]
    fn teacher_validation() {
        assert!(TeacherScores::equal_weights([("a", vec![1.0]), ("b", vec![1.0, 2.0])]).is_err());
        assert!(TeacherScores::new(vec![Teacher { id: "a".into(), scores: vec![1.0], weight: 0.0 }]).is_err());
        assert!(TeacherScores::equal_weights([("a", vec![f64::NAN])]).is_err());
        let none: [(&str, Vec<f64>); 0] = [];
        assert!(TeacherScores::equal_weights(none).is_err());
    }

    #[test]
    fn kl_hand_values() {
        assert_eq!(ranking_loss(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        let kl = ranking_loss(&[0.0, math::ln(3.0)], &[0.0, 0.0]).unwrap();
        assert!((kl - 0.143_841_036_225_890_4).abs() < 1e-12);
        let big = ranking_loss(&[0.0, 100.0], &[100.0, 0.0]).unwrap();
        assert!(big.is_finite() && big > 0.0);
        assert!(ranking_loss(&[0.0], &[0.0, 1.0]).is_err());
        assert!(ranking_loss(&[0.0], &[0.0]).is_err());
    }

    proptest! {
        #[test]
        fn ensemble_bounds_and_affine_invariance(
            raw in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 5), 1..4),
            a in 0.01f64..100.0, b in -100.0f64..100.0, which in 0usize..4, s in 0.1f64..40.0,
        ) {
            let which = which % raw.len();
            let t = TeacherScores::equal_weights(raw.iter().enumerate().map(|(i, r)| (format!("t{i}"), r.clone()))).unwrap();
            let out = ensemble_teacher(&t, s);
            for &o in &out {
                prop_assert!(o >= -1e-12 && o <= s * (1.0 + 1e-12));
            }
            let mut moved = raw.clone();
            for x in &mut moved[which] {
                *x = a * *x + b;
            }
            let t2 = TeacherScores::equal_weights(moved.iter().enumerate().map(|(i, r)| (format!("t{i}"), r.clone()))).unwrap();
            let out2 = ensemble_teacher(&t2, s);
            for (x, y) in out.iter().zip(&out2) {
                prop_assert!((x - y).abs() <= 1e-9 * s);
            }
        }

        #[test]
        fn kl_is_nonnegative(xs in prop::collection::vec(-30.0f64..30.0, 2..8), shift in -5.0f64..5.0) {
            let ys: Vec<f64> = xs.iter().rev().copied().collect();
            prop_assert!(ranking_loss(&xs, &ys).unwrap() >= 0.0);
            // same softmax, shifted logits: zero loss
            let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
            prop_assert!(ranking_loss(&shifted, &xs).unwrap() < 1e-12);
        }
    }
}
