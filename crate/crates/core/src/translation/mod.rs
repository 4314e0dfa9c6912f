//! Machine translation of comments, with a persistent cache, retry and
//! rate limiting.

mod cache;
mod client;

use std::collections::{HashMap, HashSet};
use std::io;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::corpus::Dataset;
use crate::retry::{Attempt, RetryError, RetryPolicy};

pub use cache::{TranslationCache, TranslationRecord};
pub use client::{ClientError, DisabledClient, HttpClient, HttpProfile, ReplayClient, TranslationClient};

#[derive(Debug, Error)]
pub enum TranslationError {
    #[error("translation service unavailable after {attempts} attempt(s) for {preview:?}: {reason}")]
    ServiceUnavailable { preview: String, attempts: u32, reason: String },
    #[error("service returned an empty translation for {source_text:?}")]
    InvalidResponse { source_text: String },
    #[error("{path}: line {line}: corrupt cache record: {reason}")]
    CacheCorrupt { path: PathBuf, line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("translation config: {0}")]
    Config(String),
    #[error("nothing to translate: dataset is empty")]
    EmptyDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslatorConfig {
    /// `replay`, `http`, or any other provider name (recorded in the cache key).
    pub provider: String,
    /// URL of the HTTP service.
    pub endpoint: Option<String>,
    /// JSON map of source text to translation, for the replay provider.
    pub fixture: Option<PathBuf>,
    pub source_lang: String,
    pub target_lang: String,
    pub max_retries: u32,
    #[serde(with = "crate::retry::millis", rename = "backoff_base_ms")]
    pub backoff_base: Duration,
    /// Requests in flight at once.
    pub batch_size: usize,
    /// Requests per second.
    pub rate_limit: f64,
    pub http: HttpProfile,
    /// Environment variable holding the service credential.
    pub api_key_env: String,
}

impl Default for TranslatorConfig {
    fn default() -> Self {
        Self {
            provider: "replay".into(),
            endpoint: None,
            fixture: None,
            source_lang: "de".into(),
            target_lang: "en".into(),
            max_retries: 3,
            backoff_base: Duration::from_millis(1000),
            batch_size: 8,
            rate_limit: 1.0,
            http: HttpProfile::default(),
            api_key_env: "VOTE_HARNESS_TRANSLATE_KEY".into(),
        }
    }
}

impl TranslatorConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.batch_size == 0 {
            errors.push("translation.batch_size must be at least 1".to_string());
        }
        if !(self.rate_limit.is_finite() && self.rate_limit > 0.0) {
            errors.push(format!("translation.rate_limit must be positive, got {}", self.rate_limit));
        }
        if self.source_lang.is_empty() || self.target_lang.is_empty() {
            errors.push("translation languages must be non-empty".to_string());
        }
        match self.provider.as_str() {
            "replay" if self.fixture.is_none() => errors.push("translation provider `replay` needs `fixture`".into()),
            "replay" => {}
            _ if self.endpoint.is_none() => {
                errors.push(format!("translation provider `{}` needs `endpoint`", self.provider))
            }
            _ => {}
        }
        errors
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy { max_retries: self.max_retries, backoff_base: self.backoff_base }
    }

    /// Builds the configured client. The credential comes from the
    /// `api_key_env` environment variable when it is set.
    pub fn build_client(&self) -> Result<Box<dyn TranslationClient>, TranslationError> {
        if self.provider == "replay" {
            let path =
                self.fixture.as_ref().ok_or_else(|| TranslationError::Config("replay without fixture".into()))?;
            return Ok(Box::new(ReplayClient::from_fixture(path)?));
        }
        let endpoint = self
            .endpoint
            .clone()
            .ok_or_else(|| TranslationError::Config(format!("provider `{}` without endpoint", self.provider)))?;
        let key = std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(Box::new(HttpClient::new(self.provider.clone(), endpoint, self.http.clone(), key)))
    }
}

/// Token bucket of capacity 1 refilled at `rate` tokens per second.
struct RateLimiter {
    rate: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    fn new(rate: f64) -> Self {
        Self { rate, state: Mutex::new((1.0, Instant::now())) }
    }

    fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().expect("limiter lock");
                let now = Instant::now();
                let (tokens, last) = *state;
                let tokens = (tokens + now.duration_since(last).as_secs_f64() * self.rate).min(1.0);
                if tokens >= 1.0 {
                    *state = (tokens - 1.0, now);
                    return;
                }
                *state = (tokens, now);
                Duration::from_secs_f64((1.0 - tokens) / self.rate)
            };
            std::thread::sleep(wait);
        }
    }
}

fn preview(text: &str) -> String {
    let mut p: String = text.chars().take(40).collect();
    if p.len() < text.len() {
        p.push('…');
    }
    p
}

fn fetch_one(
    text: &str,
    config: &TranslatorConfig,
    client: &dyn TranslationClient,
    limiter: &RateLimiter,
    cache: &TranslationCache,
    clock: &dyn Clock,
) -> Result<String, TranslationError> {
    let result = config.retry_policy().run(|_| {
        limiter.acquire();
        client.translate(text, &config.source_lang, &config.target_lang).map_err(|e| match e {
            ClientError::Transient(m) => Attempt::Transient(m),
            ClientError::Fatal(m) => Attempt::Fatal(m),
        })
    });
    let translated = match result {
        Ok(t) => t,
        Err(RetryError::Exhausted { attempts, last }) => {
            return Err(TranslationError::ServiceUnavailable { preview: preview(text), attempts, reason: last });
        }
        Err(RetryError::Fatal(reason)) => {
            return Err(TranslationError::ServiceUnavailable { preview: preview(text), attempts: 1, reason });
        }
    };
    if translated.trim().is_empty() {
        return Err(TranslationError::InvalidResponse { source_text: text.to_string() });
    }
    cache.insert(TranslationRecord {
        source_lang: config.source_lang.clone(),
        target_lang: config.target_lang.clone(),
        provider: client.provider().to_string(),
        source_text: text.to_string(),
        target_text: translated.clone(),
        retrieved_at: clock.now(),
    })?;
    Ok(translated)
}

/// Fills `translated_text` for every comment.
///
/// Each distinct text is looked up in the cache first; misses are fetched
/// `batch_size` at a time in parallel, each stored as soon as it arrives,
/// so an error part-way keeps the finished translations cached. The
/// original text, ids and order are untouched.
pub fn translate_corpus(
    dataset: &Dataset,
    config: &TranslatorConfig,
    cache: &TranslationCache,
    client: &dyn TranslationClient,
    clock: &dyn Clock,
) -> Result<Dataset, TranslationError> {
    if dataset.is_empty() {
        return Err(TranslationError::EmptyDataset);
    }
    if config.batch_size == 0 || !(config.rate_limit.is_finite() && config.rate_limit > 0.0) {
        return Err(TranslationError::Config(config.validate().join("; ")));
    }
    let provider = client.provider();
    let mut translations: HashMap<&str, String> = HashMap::new();
    let mut misses: Vec<&str> = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for c in dataset.comments() {
        let text = c.text();
        if !seen.insert(text) {
            continue;
        }
        match cache.lookup(text, &config.source_lang, &config.target_lang, provider) {
            Some(record) => {
                translations.insert(text, record.target_text);
            }
            None => misses.push(text),
        }
    }
    log::info!("translation: {} cached, {} to fetch", translations.len(), misses.len());

    let limiter = RateLimiter::new(config.rate_limit);
    for batch in misses.chunks(config.batch_size) {
        let results: Vec<Result<String, TranslationError>> = std::thread::scope(|s| {
            let handles: Vec<_> = batch
                .iter()
                .map(|text| {
                    let limiter = &limiter;
                    s.spawn(move || fetch_one(text, config, client, limiter, cache, clock))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("translation worker panicked")).collect()
        });
        for (text, result) in batch.iter().zip(results) {
            translations.insert(text, result?);
        }
    }

    Ok(dataset.map_translations(|c| translations.get(c.text()).cloned()))
}
