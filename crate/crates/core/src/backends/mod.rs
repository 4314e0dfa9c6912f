//! Classifier backends as seen by the harness: the model registry, the
//! prediction sets they produce, and the two ways of obtaining them
//! (interchange files and the wire protocol).

mod diagnostics;
mod interchange;
mod wire;

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Label, SubtaskId};

pub use diagnostics::{
    detect_degenerate, threshold_inconsistencies, validate_coverage, CoverageReport, DegenerateWarning,
    DEFAULT_MIN_CLASS_FRACTION,
};
pub use interchange::{load_predictions, parse_predictions, write_predictions, write_predictions_to, FORMAT_TAG};
pub use wire::{
    fetch_predictions, WireClient, WireError, WireItem, WirePrediction, WireRequest, WireResponse, PREDICT_PATH,
    PROTOCOL_VERSION,
};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("line {line}: label `{value}` is not 0 or 1")]
    LabelOutOfRange { line: usize, value: String },
    #[error("{field} mismatch: expected {expected}, found {found}")]
    MetadataMismatch { field: &'static str, expected: String, found: String },
    #[error("duplicate comment id `{0}`")]
    DuplicateCommentId(String),
    #[error("score {score} for `{id}` is outside [0, 1]")]
    ScoreOutOfRange { id: String, score: f64 },
    #[error("service unavailable after {attempts} attempt(s): {reason}")]
    ServiceUnavailable { attempts: u32, reason: String },
    #[error("response has {got} prediction(s) for {expected} request item(s){detail}")]
    ShapeMismatch { expected: usize, got: usize, detail: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("usage error: {0}")]
    Usage(String),
}

/// Registry ordinal of a model. Ids from [`ModelId::ENSEMBLE_BASE`] up are
/// reserved for ensemble outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelId(pub u32);

impl ModelId {
    pub const ENSEMBLE_BASE: u32 = 1000;

    pub fn for_ensemble(run_id: u32) -> Self {
        ModelId(Self::ENSEMBLE_BASE + run_id)
    }

    pub fn is_ensemble(self) -> bool {
        self.0 >= Self::ENSEMBLE_BASE
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    GermanMonolingual,
    Multilingual,
    TwitterBased,
    EnglishMonolingual,
}

/// Which text a model reads: the original comment or its translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputLanguage {
    German,
    English,
}

impl fmt::Display for InputLanguage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputLanguage::German => "German",
            InputLanguage::English => "English",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model_id: ModelId,
    pub name: String,
    pub family: ModelFamily,
    pub input_language: InputLanguage,
    #[serde(default)]
    pub notes: String,
}

/// The ten-classifier roster. Three checkpoints appear twice, once per
/// input language (2/3, 7/8, 9/10).
pub fn default_registry() -> Vec<ModelSpec> {
    use InputLanguage::*;
    use ModelFamily::*;
    let rows: [(u32, &str, ModelFamily, InputLanguage, &str); 10] = [
        (1, "BERT-base uncased", EnglishMonolingual, English, "checkpoint bert-base-uncased"),
        (2, "mBERT-base cased", Multilingual, English, "checkpoint bert-base-multilingual-cased"),
        (3, "mBERT-base cased", Multilingual, German, "checkpoint bert-base-multilingual-cased"),
        (4, "DBMDZ GermanBERT", GermanMonolingual, German, "checkpoint dbmdz/bert-base-german-cased"),
        (5, "Deepset.AI GermanBERT", GermanMonolingual, German, "checkpoint deepset/gbert-base"),
        (6, "BERTweet", TwitterBased, English, "checkpoint vinai/bertweet-base"),
        (7, "XLM-T", TwitterBased, English, "checkpoint cardiffnlp/twitter-xlm-roberta-base"),
        (8, "XLM-T", TwitterBased, German, "checkpoint cardiffnlp/twitter-xlm-roberta-base"),
        (9, "XLM-R-base", Multilingual, English, "checkpoint xlm-roberta-base"),
        (
            10,
            "XLM-R-base",
            Multilingual,
            German,
            "checkpoint xlm-roberta-base; known to collapse to all-negative predictions",
        ),
    ];
    rows.into_iter()
        .map(|(id, name, family, input_language, notes)| ModelSpec {
            model_id: ModelId(id),
            name: name.to_string(),
            family,
            input_language,
            notes: notes.to_string(),
        })
        .collect()
}

/// Score-to-label rule: `label = 1` iff `score >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProfile {
    pub threshold: f64,
}

impl Default for ThresholdProfile {
    fn default() -> Self {
        Self { threshold: 0.5 }
    }
}

impl ThresholdProfile {
    pub fn label_for(&self, score: f64) -> Label {
        Label::from(score >= self.threshold)
    }
}

impl fmt::Display for ThresholdProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "threshold>={}", self.threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub score: Option<f64>,
}

impl Prediction {
    pub fn hard(label: Label) -> Self {
        Self { label, score: None }
    }

    pub fn scored(label: Label, score: f64) -> Self {
        Self { label, score: Some(score) }
    }
}

/// One model's verdicts for one subtask, keyed by comment id.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    model_id: ModelId,
    subtask: SubtaskId,
    predictions: BTreeMap<String, Prediction>,
    provenance: String,
}

impl PredictionSet {
    pub fn new<I, S>(
        model_id: ModelId,
        subtask: SubtaskId,
        provenance: impl Into<String>,
        predictions: I,
    ) -> Result<Self, BackendError>
    where
        I: IntoIterator<Item = (S, Prediction)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (id, p) in predictions {
            let id = id.into();
            if let Some(score) = p.score {
                if !(0.0..=1.0).contains(&score) {
                    return Err(BackendError::ScoreOutOfRange { id, score });
                }
            }
            if map.insert(id.clone(), p).is_some() {
                return Err(BackendError::DuplicateCommentId(id));
            }
        }
        Ok(Self { model_id, subtask, predictions: map, provenance: provenance.into() })
    }

    pub fn model_id(&self) -> ModelId {
        self.model_id
    }

    pub fn subtask(&self) -> SubtaskId {
        self.subtask
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn get(&self, comment_id: &str) -> Option<&Prediction> {
        self.predictions.get(comment_id)
    }

    /// Predictions in ascending comment-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Prediction)> {
        self.predictions.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.predictions.keys().map(String::as_str)
    }

    pub fn positives(&self) -> usize {
        self.predictions.values().filter(|p| p.label.is_positive()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_matches_roster() {
        let reg = default_registry();
        let ids: Vec<u32> = reg.iter().map(|s| s.model_id.0).collect();
        assert_eq!(ids, (1..=10).collect::<Vec<_>>());

        let english: Vec<u32> =
            reg.iter().filter(|s| s.input_language == InputLanguage::English).map(|s| s.model_id.0).collect();
        assert_eq!(english, vec![1, 2, 6, 7, 9]);

        let six = &reg[5];
        assert!(six.name.contains("BERTweet"));
        assert_eq!(six.input_language, InputLanguage::English);
        let ten = &reg[9];
        assert_eq!(ten.family, ModelFamily::Multilingual);
        assert_eq!(ten.input_language, InputLanguage::German);

        let mut pairs: Vec<(&str, InputLanguage)> = reg.iter().map(|s| (s.name.as_str(), s.input_language)).collect();
        pairs.sort_by_key(|(n, l)| (n.to_string(), *l as u8));
        pairs.dedup();
        assert_eq!(pairs.len(), 10);
        assert_eq!(default_registry(), reg);
    }

    #[test]
    fn prediction_set_rejects_duplicates_and_bad_scores() {
        let dup = PredictionSet::new(
            ModelId(1),
            SubtaskId::Toxic,
            "t",
            [("a", Prediction::hard(Label::Positive)), ("a", Prediction::hard(Label::Negative))],
        );
        assert!(matches!(dup, Err(BackendError::DuplicateCommentId(id)) if id == "a"));
        let bad =
            PredictionSet::new(ModelId(1), SubtaskId::Toxic, "t", [("a", Prediction::scored(Label::Positive, 1.5))]);
        assert!(matches!(bad, Err(BackendError::ScoreOutOfRange { .. })));
    }

    #[test]
    fn threshold_ties_go_positive() {
        let t = ThresholdProfile::default();
        assert_eq!(t.label_for(0.5), Label::Positive);
        assert_eq!(t.label_for(0.4999999), Label::Negative);
    }

    #[test]
    fn ensemble_ids_are_reserved() {
        assert!(ModelId::for_ensemble(1).is_ensemble());
        assert!(!ModelId(10).is_ensemble());
    }
}
