use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelId, PredictionSet, ThresholdProfile};
use crate::corpus::Dataset;
use crate::{Label, SubtaskId};

/// Warn when the minority predicted class is below 1% of predictions.
pub const DEFAULT_MIN_CLASS_FRACTION: f64 = 0.01;

/// Ids the prediction set is missing, and ids it has that the dataset lacks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub missing: Vec<String>,
    pub extraneous: Vec<String>,
}

impl CoverageReport {
    pub fn is_exact(&self) -> bool {
        self.missing.is_empty() && self.extraneous.is_empty()
    }
}

impl fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn preview(ids: &[String]) -> String {
            let head: Vec<&str> = ids.iter().take(5).map(String::as_str).collect();
            let more = if ids.len() > 5 { format!(", ... ({} total)", ids.len()) } else { String::new() };
            format!("{}{more}", head.join(", "))
        }
        match (self.missing.is_empty(), self.extraneous.is_empty()) {
            (true, true) => f.write_str("exact cover"),
            (false, true) => write!(f, "missing {}", preview(&self.missing)),
            (true, false) => write!(f, "extraneous {}", preview(&self.extraneous)),
            (false, false) => {
                write!(f, "missing {}; extraneous {}", preview(&self.missing), preview(&self.extraneous))
            }
        }
    }
}

pub fn validate_coverage(pset: &PredictionSet, dataset: &Dataset) -> CoverageReport {
    let expected: BTreeSet<&str> = dataset.ids().collect();
    let got: BTreeSet<&str> = pset.ids().collect();
    CoverageReport {
        missing: expected.difference(&got).map(|s| s.to_string()).collect(),
        extraneous: got.difference(&expected).map(|s| s.to_string()).collect(),
    }
}

/// A predictor that (nearly) always emits one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateWarning {
    pub model_id: ModelId,
    pub subtask: SubtaskId,
    pub dominant: Label,
    /// Fraction of predictions in the minority class.
    pub minority_fraction: f64,
    pub threshold: f64,
}

impl fmt::Display for DegenerateWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "degenerate predictor: model {} ({}) predicts class {} for {:.2}% of comments (minority fraction {:.4} < {})",
            self.model_id,
            self.subtask,
            self.dominant,
            100.0 * (1.0 - self.minority_fraction),
            self.minority_fraction,
            self.threshold
        )
    }
}

pub fn detect_degenerate(pset: &PredictionSet, min_class_fraction: f64) -> Option<DegenerateWarning> {
    if pset.is_empty() {
        return None;
    }
    let positives = pset.positives();
    let negatives = pset.len() - positives;
    let (dominant, minority) =
        if positives > negatives { (Label::Positive, negatives) } else { (Label::Negative, positives) };
    let fraction = minority as f64 / pset.len() as f64;
    (fraction < min_class_fraction).then(|| DegenerateWarning {
        model_id: pset.model_id(),
        subtask: pset.subtask(),
        dominant,
        minority_fraction: fraction,
        threshold: min_class_fraction,
    })
}

/// Comment ids whose score disagrees with their label under `profile`.
pub fn threshold_inconsistencies(pset: &PredictionSet, profile: &ThresholdProfile) -> Vec<String> {
    pset.iter()
        .filter(|(_, p)| p.score.is_some_and(|s| profile.label_for(s) != p.label))
        .map(|(id, _)| id.to_string())
        .collect()
}
