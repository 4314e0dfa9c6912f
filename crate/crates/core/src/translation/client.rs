use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::TranslationError;

/// Failure of one translation request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClientError {
    /// Network trouble, rate limiting, 5xx: retried.
    Transient(String),
    /// Rejected request or disabled client: not retried.
    Fatal(String),
}

/// A translation service. `provider` names it in the cache key.
pub trait TranslationClient: Send + Sync {
    fn provider(&self) -> &str;

    fn translate(&self, text: &str, source_lang: &str, target_lang: &str) -> Result<String, ClientError>;
}

/// Answers from a fixed source-to-target map. Counts calls and can be told
/// to fail transiently a number of times first.
#[derive(Debug, Default)]
pub struct ReplayClient {
    provider: String,
    map: HashMap<String, String>,
    calls: AtomicUsize,
    failures_left: AtomicUsize,
    log: Mutex<Vec<String>>,
}

impl ReplayClient {
    pub fn new<I, K, V>(entries: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self {
            provider: "replay".into(),
            map: entries.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
            ..Self::default()
        }
    }

    /// Reads a JSON object mapping source text to translation.
    pub fn from_fixture(path: &Path) -> Result<Self, TranslationError> {
        let text =
            fs::read_to_string(path).map_err(|source| TranslationError::Io { path: path.to_path_buf(), source })?;
        let map: HashMap<String, String> = serde_json::from_str(&text)
            .map_err(|e| TranslationError::Config(format!("{}: bad replay fixture: {e}", path.display())))?;
        Ok(Self::new(map))
    }

    pub fn with_provider(mut self, provider: impl Into<String>) -> Self {
        self.provider = provider.into();
        self
    }

    /// The next `n` calls fail with a transient error.
    pub fn failing_first(self, n: usize) -> Self {
        self.failures_left.store(n, Ordering::SeqCst);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Source texts in call order.
    pub fn requested(&self) -> Vec<String> {
        self.log.lock().expect("log lock").clone()
    }
}

impl TranslationClient for ReplayClient {
    fn provider(&self) -> &str {
        &self.provider
    }

    fn translate(&self, text: &str, _source_lang: &str, _target_lang: &str) -> Result<String, ClientError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.log.lock().expect("log lock").push(text.to_string());
        let failing = self.failures_left.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1)).is_ok();
        if failing {
            return Err(ClientError::Transient("scripted failure".into()));
        }
        self.map.get(text).cloned().ok_or_else(|| ClientError::Fatal(format!("no replay entry for {text:?}")))
    }
}

/// Stands in for the network in offline runs; every call fails.
#[derive(Debug)]
pub struct DisabledClient {
    provider: String,
}

impl DisabledClient {
    pub fn new(provider: impl Into<String>) -> Self {
        Self { provider: provider.into() }
    }
}

impl TranslationClient for DisabledClient {
    fn provider(&self) -> &str {
        &self.provider
    }

    fn translate(&self, _: &str, _: &str, _: &str) -> Result<String, ClientError> {
        Err(ClientError::Fatal("network client disabled (offline run)".into()))
    }
}

/// JSON request/response shape of an HTTP translation service.
///
/// The defaults fit LibreTranslate-style APIs: `POST {"q", "source",
/// "target"}` answered by `{"translatedText": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpProfile {
    pub text_field: String,
    pub source_field: String,
    pub target_field: String,
    /// JSON pointer to the translation in the response body.
    pub response_pointer: String,
    /// Body field that carries the API key when one is configured.
    pub api_key_field: String,
    /// Extra constant string fields added to every request body.
    pub extra_fields: BTreeMap<String, String>,
}

impl Default for HttpProfile {
    fn default() -> Self {
        Self {
            text_field: "q".into(),
            source_field: "source".into(),
            target_field: "target".into(),
            response_pointer: "/translatedText".into(),
            api_key_field: "api_key".into(),
            extra_fields: BTreeMap::new(),
        }
    }
}

#[derive(Debug)]
pub struct HttpClient {
    provider: String,
    endpoint: String,
    profile: HttpProfile,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(
        provider: impl Into<String>,
        endpoint: impl Into<String>,
        profile: HttpProfile,
        api_key: Option<String>,
    ) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { provider: provider.into(), endpoint: endpoint.into(), profile, api_key, agent }
    }
}

impl TranslationClient for HttpClient {
    fn provider(&self) -> &str {
        &self.provider
    }

    fn translate(&self, text: &str, source_lang: &str, target_lang: &str) -> Result<String, ClientError> {
        let mut body = serde_json::Map::new();
        body.insert(self.profile.text_field.clone(), text.into());
        body.insert(self.profile.source_field.clone(), source_lang.into());
        body.insert(self.profile.target_field.clone(), target_lang.into());
        for (k, v) in &self.profile.extra_fields {
            body.insert(k.clone(), v.clone().into());
        }
        if let Some(key) = &self.api_key {
            body.insert(self.profile.api_key_field.clone(), key.clone().into());
        }
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(serde_json::Value::Object(body))
            .map_err(|e| ClientError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| ClientError::Transient(e.to_string()))?;
        match status {
            200..=299 => {}
            429 | 500..=599 => return Err(ClientError::Transient(format!("HTTP {status}"))),
            _ => {
                return Err(ClientError::Fatal(format!(
                    "HTTP {status}: {}",
                    text.chars().take(200).collect::<String>()
                )))
            }
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| ClientError::Fatal(format!("response is not JSON: {e}")))?;
        Ok(value.pointer(&self.profile.response_pointer).and_then(|v| v.as_str()).unwrap_or_default().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_counts_and_scripted_failures() {
        let c = ReplayClient::new([("Hallo Welt", "Hello World")]).failing_first(1);
        assert!(matches!(c.translate("Hallo Welt", "de", "en"), Err(ClientError::Transient(_))));
        assert_eq!(c.translate("Hallo Welt", "de", "en").unwrap(), "Hello World");
        assert!(matches!(c.translate("Tschüss", "de", "en"), Err(ClientError::Fatal(_))));
        assert_eq!(c.calls(), 3);
    }

    #[test]
    fn http_client_uses_profile() {
        let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
        let url = format!("http://{}/translate", server.server_addr().to_ip().unwrap());
        let handle = std::thread::spawn(move || {
            let mut req = server.recv().unwrap();
            let mut body = String::new();
            req.as_reader().read_to_string(&mut body).unwrap();
            let v: serde_json::Value = serde_json::from_str(&body).unwrap();
            assert_eq!(v["q"], "Hallo Welt");
            assert_eq!(v["source"], "de");
            assert_eq!(v["api_key"], "secret");
            req.respond(tiny_http::Response::from_string(r#"{"translatedText":"Hello World"}"#)).unwrap();
            let req = server.recv().unwrap();
            req.respond(tiny_http::Response::from_string("x").with_status_code(503)).unwrap();
        });
        let client = HttpClient::new("libre", url, HttpProfile::default(), Some("secret".into()));
        assert_eq!(client.translate("Hallo Welt", "de", "en").unwrap(), "Hello World");
        assert!(matches!(client.translate("x", "de", "en"), Err(ClientError::Transient(_))));
        handle.join().unwrap();
    }
}
