//! Binary classification scores and inter-annotator agreement.

mod alpha;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{
    detect_degenerate, validate_coverage, CoverageReport, DegenerateWarning, ModelId, PredictionSet,
};
use crate::corpus::Dataset;
use crate::{Label, SubtaskId};

pub use alpha::{coincidences, krippendorff_alpha, AlphaError, Coincidences, RatingsMatrix};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("predictions of model {model} do not cover the gold set: {report}")]
    Coverage { model: ModelId, report: CoverageReport },
    #[error("gold comment `{id}` has no {subtask} label")]
    UnlabeledComment { id: String, subtask: SubtaskId },
    #[error("model {model} predicts {found}, evaluation is for {expected}")]
    SubtaskMismatch { model: ModelId, expected: SubtaskId, found: SubtaskId },
}

/// Counts with label 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, predicted: Label, gold: Label) {
        match (predicted, gold) {
            (Label::Positive, Label::Positive) => self.tp += 1,
            (Label::Positive, Label::Negative) => self.fp += 1,
            (Label::Negative, Label::Positive) => self.fn_ += 1,
            (Label::Negative, Label::Negative) => self.tn += 1,
        }
    }

    /// Same matrix with class 0 treated as positive.
    pub fn swapped(&self) -> Self {
        Self { tp: self.tn, fp: self.fn_, fn_: self.fp, tn: self.tp }
    }
}

pub fn confusion(
    predictions: &PredictionSet,
    gold: &Dataset,
    subtask: SubtaskId,
) -> Result<ConfusionMatrix, MetricsError> {
    if predictions.subtask() != subtask {
        return Err(MetricsError::SubtaskMismatch {
            model: predictions.model_id(),
            expected: subtask,
            found: predictions.subtask(),
        });
    }
    let report = validate_coverage(predictions, gold);
    if !report.is_exact() {
        return Err(MetricsError::Coverage { model: predictions.model_id(), report });
    }
    let mut cm = ConfusionMatrix::default();
    for c in gold.comments() {
        let truth =
            c.label(subtask).ok_or_else(|| MetricsError::UnlabeledComment { id: c.id().to_string(), subtask })?;
        let predicted = predictions.get(c.id()).expect("coverage checked").label;
        cm.record(predicted, truth);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub class_0: ClassScores,
    pub class_1: ClassScores,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_scores(tp: u64, fp: u64, fn_: u64) -> ClassScores {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    ClassScores { precision, recall, f1 }
}

/// Per-class and macro-averaged precision, recall and F1. Any 0/0 is 0.
pub fn classification_scores(cm: &ConfusionMatrix) -> ClassificationScores {
    let class_1 = class_scores(cm.tp, cm.fp, cm.fn_);
    let class_0 = class_scores(cm.tn, cm.fn_, cm.fp);
    ClassificationScores {
        class_0,
        class_1,
        macro_precision: (class_0.precision + class_1.precision) / 2.0,
        macro_recall: (class_0.recall + class_1.recall) / 2.0,
        macro_f1: (class_0.f1 + class_1.f1) / 2.0,
    }
}

/// Scores for one prediction set against gold labels, with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    pub model_id: ModelId,
    pub subtask: SubtaskId,
    pub confusion: ConfusionMatrix,
    pub scores: ClassificationScores,
    pub coverage: CoverageReport,
    pub warnings: Vec<DegenerateWarning>,
}

pub fn evaluate(
    predictions: &PredictionSet,
    gold: &Dataset,
    subtask: SubtaskId,
    min_class_fraction: f64,
) -> Result<EvalEntry, MetricsError> {
    let confusion = confusion(predictions, gold, subtask)?;
    Ok(EvalEntry {
        model_id: predictions.model_id(),
        subtask,
        confusion,
        scores: classification_scores(&confusion),
        coverage: validate_coverage(predictions, gold),
        warnings: detect_degenerate(predictions, min_class_fraction).into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{Prediction, DEFAULT_MIN_CLASS_FRACTION};
    use crate::corpus::{Comment, DatasetRole};

    fn gold(labels: &[u8]) -> Dataset {
        let comments = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                Comment::new(format!("g{i}"), "x").unwrap().with_label(SubtaskId::Toxic, Label::from_u8(*l).unwrap())
            })
            .collect();
        Dataset::new(comments, DatasetRole::Test).unwrap()
    }

    fn preds(labels: &[u8]) -> PredictionSet {
        PredictionSet::new(
            ModelId(1),
            SubtaskId::Toxic,
            "t",
            labels.iter().enumerate().map(|(i, l)| (format!("g{i}"), Prediction::hard(Label::from_u8(*l).unwrap()))),
        )
        .unwrap()
    }

    const GOLD: [u8; 10] = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1];

    #[test]
    fn perfect_and_all_negative_predictors() {
        assert_eq!(confusion(&preds(&GOLD), &gold(&GOLD), SubtaskId::Toxic).unwrap(), ConfusionMatrix::new(4, 0, 0, 6));
        assert_eq!(
            confusion(&preds(&[0; 10]), &gold(&GOLD), SubtaskId::Toxic).unwrap(),
            ConfusionMatrix::new(0, 0, 4, 6)
        );
    }

    #[test]
    fn hand_tallied_fixture() {
        let gold_labels = [1, 0, 1, 1, 0, 0, 1, 0, 0, 1];
        let predicted = [1, 1, 0, 1, 0, 0, 1, 0, 1, 0];
        // pairs (p,g): (1,1) (1,0) (0,1) (1,1) (0,0) (0,0) (1,1) (0,0) (1,0) (0,1)
        // tp=3 fp=2 fn=2 tn=3
        let cm = confusion(&preds(&predicted), &gold(&gold_labels), SubtaskId::Toxic).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(3, 2, 2, 3));
        assert_eq!(cm.total(), 10);
    }

    #[test]
    fn coverage_and_label_errors() {
        let err = confusion(&preds(&[0; 9]), &gold(&GOLD), SubtaskId::Toxic).unwrap_err();
        assert!(matches!(err, MetricsError::Coverage { .. }));
        let unlabeled = Dataset::new(vec![Comment::new("g0", "x").unwrap()], DatasetRole::Test).unwrap();
        assert!(matches!(
            confusion(&preds(&[0]), &unlabeled, SubtaskId::Toxic),
            Err(MetricsError::UnlabeledComment { .. })
        ));
        assert!(matches!(
            confusion(&preds(&[0]), &gold(&[0]), SubtaskId::Engaging),
            Err(MetricsError::SubtaskMismatch { .. })
        ));
    }

    #[test]
    fn perfect_scores() {
        let s = classification_scores(&ConfusionMatrix::new(4, 0, 0, 6));
        for v in [
            s.class_0.precision,
            s.class_0.recall,
            s.class_0.f1,
            s.class_1.f1,
            s.macro_precision,
            s.macro_recall,
            s.macro_f1,
        ] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn worked_example_scores() {
        let s = classification_scores(&ConfusionMatrix::new(2, 1, 1, 6));
        assert!((s.class_1.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.class_0.f1 - 6.0 / 7.0).abs() < 1e-12);
        assert!((s.macro_f1 - 16.0 / 21.0).abs() < 1e-12);
    }

    #[test]
    fn zero_over_zero_is_zero() {
        let s = classification_scores(&ConfusionMatrix::new(0, 0, 4, 6));
        assert_eq!((s.class_1.precision, s.class_1.recall, s.class_1.f1), (0.0, 0.0, 0.0));
        assert_eq!(s.macro_f1, s.class_0.f1 / 2.0);
        let empty_pred = classification_scores(&ConfusionMatrix::new(0, 0, 0, 5));
        assert_eq!(empty_pred.class_1.f1, 0.0);
        assert_eq!(empty_pred.class_0.f1, 1.0);
    }

    #[test]
    fn evaluate_bundles_warnings() {
        let perfect = evaluate(&preds(&GOLD), &gold(&GOLD), SubtaskId::Toxic, DEFAULT_MIN_CLASS_FRACTION).unwrap();
        assert_eq!(perfect.scores.macro_f1, 1.0);
        assert!(perfect.warnings.is_empty());
        assert!(perfect.coverage.is_exact());

        let degenerate =
            evaluate(&preds(&[0; 10]), &gold(&GOLD), SubtaskId::Toxic, DEFAULT_MIN_CLASS_FRACTION).unwrap();
        assert_eq!(degenerate.warnings.len(), 1);
        // all-negative on 6/4 gold: f1_0 = 2*0.6*1/1.6 = 0.75, macro = 0.375
        assert!((degenerate.scores.macro_f1 - 0.375).abs() < 1e-12);
        assert!(degenerate.scores.macro_f1 < 0.5);
    }

    proptest::proptest! {
        #[test]
        fn swap_symmetry_and_bounds(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500, tn in 0u64..500) {
            proptest::prop_assume!(tp + fp + fn_ + tn > 0);
            let cm = ConfusionMatrix::new(tp, fp, fn_, tn);
            let a = classification_scores(&cm);
            let b = classification_scores(&cm.swapped());
            proptest::prop_assert_eq!(a.class_0, b.class_1);
            proptest::prop_assert_eq!(a.class_1, b.class_0);
            proptest::prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-15);
            proptest::prop_assert_eq!(a.macro_f1, (a.class_0.f1 + a.class_1.f1) / 2.0);
            for v in [a.class_0.precision, a.class_0.recall, a.class_0.f1, a.class_1.precision, a.class_1.recall, a.class_1.f1, a.macro_f1] {
                proptest::prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
