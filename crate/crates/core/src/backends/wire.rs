//! Client side of the prediction wire protocol (`docs/wire-protocol.md`).

use std::collections::{BTreeMap, HashSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendError, ModelId, Prediction, PredictionSet, ThresholdProfile};
use crate::retry::{Attempt, RetryError, RetryPolicy};
use crate::{Label, SubtaskId};

pub const PROTOCOL_VERSION: &str = "1";
pub const PREDICT_PATH: &str = "/v1/predict";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireItem {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub protocol_version: String,
    pub subtask: SubtaskId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<ModelId>,
    pub items: Vec<WireItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePrediction {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub protocol_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<ModelId>,
    #[serde(default)]
    pub predictions: Vec<WirePrediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
}

#[derive(Debug, Clone)]
pub struct WireClient {
    pub endpoint: String,
    pub batch_size: usize,
    pub retry: RetryPolicy,
    pub timeout: Duration,
    pub threshold: ThresholdProfile,
}

impl WireClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            batch_size: 64,
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(60),
            threshold: ThresholdProfile::default(),
        }
    }

    fn url(&self) -> String {
        format!("{}{}", self.endpoint.trim_end_matches('/'), PREDICT_PATH)
    }

    fn agent(&self) -> ureq::Agent {
        ureq::Agent::config_builder().timeout_global(Some(self.timeout)).http_status_as_error(false).build().into()
    }

    fn post_batch(&self, agent: &ureq::Agent, request: &WireRequest) -> Result<WireResponse, BackendError> {
        let url = self.url();
        let outcome = self.retry.run(|_| {
            let mut resp = agent.post(&url).send_json(request).map_err(|e| Attempt::Transient(e.to_string()))?;
            let status = resp.status().as_u16();
            let body = resp.body_mut().read_to_string().map_err(|e| Attempt::Transient(e.to_string()))?;
            if status == 429 || status >= 500 {
                return Err(Attempt::Transient(format!("HTTP {status}")));
            }
            Ok((status, body))
        });
        let (status, body) = match outcome {
            Ok(v) => v,
            Err(RetryError::Exhausted { attempts, last }) => {
                return Err(BackendError::ServiceUnavailable { attempts, reason: last });
            }
            Err(RetryError::Fatal(reason)) => return Err(BackendError::ServiceUnavailable { attempts: 1, reason }),
        };
        let parsed: Result<WireResponse, _> = serde_json::from_str(&body);
        match parsed {
            Ok(r) if r.protocol_version != PROTOCOL_VERSION => Err(BackendError::Protocol(format!(
                "server speaks protocol version {}, client {}",
                r.protocol_version, PROTOCOL_VERSION
            ))),
            Ok(WireResponse { error: Some(e), .. }) => {
                Err(BackendError::Protocol(format!("server error {} (HTTP {status}): {}", e.code, e.message)))
            }
            Ok(r) if (200..300).contains(&status) => Ok(r),
            Ok(_) => Err(BackendError::Protocol(format!("HTTP {status} without error body"))),
            Err(e) => Err(BackendError::Protocol(format!("unparseable response (HTTP {status}): {e}"))),
        }
    }
}

/// Requests predictions for `texts` from a model server in batches of
/// `client.batch_size`. The result is keyed by comment id.
pub fn fetch_predictions(
    client: &WireClient,
    model_id: ModelId,
    texts: &[(String, String)],
    subtask: SubtaskId,
) -> Result<PredictionSet, BackendError> {
    if texts.is_empty() {
        return Err(BackendError::Usage("fetch_predictions needs at least one text".into()));
    }
    if client.batch_size == 0 {
        return Err(BackendError::Usage("batch_size must be at least 1".into()));
    }
    let agent = client.agent();
    let mut collected: BTreeMap<String, Prediction> = BTreeMap::new();
    for batch in texts.chunks(client.batch_size) {
        let request = WireRequest {
            protocol_version: PROTOCOL_VERSION.to_string(),
            subtask,
            model_id: Some(model_id),
            items: batch.iter().map(|(id, text)| WireItem { id: id.clone(), text: text.clone() }).collect(),
        };
        let response = client.post_batch(&agent, &request)?;
        if let Some(found) = response.model_id {
            if found != model_id {
                return Err(BackendError::MetadataMismatch {
                    field: "model_id",
                    expected: model_id.to_string(),
                    found: found.to_string(),
                });
            }
        }
        if response.predictions.len() != batch.len() {
            return Err(BackendError::ShapeMismatch {
                expected: batch.len(),
                got: response.predictions.len(),
                detail: String::new(),
            });
        }
        let requested: HashSet<&str> = batch.iter().map(|(id, _)| id.as_str()).collect();
        let mut answered = HashSet::new();
        for p in response.predictions {
            if !requested.contains(p.id.as_str()) || !answered.insert(p.id.clone()) {
                return Err(BackendError::ShapeMismatch {
                    expected: batch.len(),
                    got: batch.len(),
                    detail: format!(" (unexpected or repeated id `{}`)", p.id),
                });
            }
            let label = match (p.label, p.score) {
                (Some(l), _) => {
                    Label::from_u8(l).map_err(|_| BackendError::LabelOutOfRange { line: 0, value: l.to_string() })?
                }
                (None, Some(s)) => client.threshold.label_for(s),
                (None, None) => {
                    return Err(BackendError::Protocol(format!(
                        "prediction for `{}` has neither label nor score",
                        p.id
                    )));
                }
            };
            collected.insert(p.id, Prediction { label, score: p.score });
        }
    }
    let provenance = format!("{} ({})", client.url(), client.threshold);
    PredictionSet::new(model_id, subtask, provenance, collected)
}
