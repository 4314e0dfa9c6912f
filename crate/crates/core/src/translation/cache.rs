//! Persistent translation cache.
//!
//! One JSON object per line with the fields `source_lang`, `target_lang`,
//! `provider`, `source_text`, `target_text` and `retrieved_at` (RFC 3339,
//! UTC), in that order. JSON string escaping keeps every record on one
//! line. A later line with the same `(source_text, source_lang,
//! target_lang, provider)` key replaces an earlier one, so inserts only
//! ever append.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::TranslationError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationRecord {
    pub source_lang: String,
    pub target_lang: String,
    pub provider: String,
    pub source_text: String,
    pub target_text: String,
    pub retrieved_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    source_text: String,
    source_lang: String,
    target_lang: String,
    provider: String,
}

impl CacheKey {
    fn of(r: &TranslationRecord) -> Self {
        Self {
            source_text: r.source_text.clone(),
            source_lang: r.source_lang.clone(),
            target_lang: r.target_lang.clone(),
            provider: r.provider.clone(),
        }
    }
}

/// Concurrent readers, serialized writers; each insert is one `write` of a
/// complete line.
#[derive(Debug)]
pub struct TranslationCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<CacheKey, TranslationRecord>>,
    writer: Mutex<Option<File>>,
}

impl TranslationCache {
    pub fn in_memory() -> Self {
        Self { path: None, entries: RwLock::new(HashMap::new()), writer: Mutex::new(None) }
    }

    /// Opens (creating if needed) the cache file at `path` and checks every
    /// existing line.
    pub fn open(path: &Path) -> Result<Self, TranslationError> {
        let io_err = |source| TranslationError::Io { path: path.to_path_buf(), source };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io_err)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let corrupt =
                    |reason: String| TranslationError::CacheCorrupt { path: path.to_path_buf(), line: i + 1, reason };
                let record: TranslationRecord = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
                if record.source_text.is_empty() || record.target_text.is_empty() {
                    return Err(corrupt("empty source or target text".into()));
                }
                entries.insert(CacheKey::of(&record), record);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err)?;
        Ok(Self { path: Some(path.to_path_buf()), entries: RwLock::new(entries), writer: Mutex::new(Some(file)) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn lookup(
        &self,
        source_text: &str,
        source_lang: &str,
        target_lang: &str,
        provider: &str,
    ) -> Option<TranslationRecord> {
        let key = CacheKey {
            source_text: source_text.to_string(),
            source_lang: source_lang.to_string(),
            target_lang: target_lang.to_string(),
            provider: provider.to_string(),
        };
        self.entries.read().expect("cache lock poisoned").get(&key).cloned()
    }

    /// Upsert. The record is on disk before it becomes visible to lookups.
    pub fn insert(&self, record: TranslationRecord) -> Result<(), TranslationError> {
        if record.source_text.is_empty() || record.target_text.is_empty() {
            return Err(TranslationError::InvalidResponse { source_text: record.source_text });
        }
        let mut writer = self.writer.lock().expect("cache lock poisoned");
        if let Some(file) = writer.as_mut() {
            let mut line = serde_json::to_string(&record).expect("record serializes");
            line.push('\n');
            let path = self.path.clone().unwrap_or_default();
            file.write_all(line.as_bytes()).map_err(|source| TranslationError::Io { path: path.clone(), source })?;
            file.flush().map_err(|source| TranslationError::Io { path, source })?;
        }
        self.entries.write().expect("cache lock poisoned").insert(CacheKey::of(&record), record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All records sorted by key, for writing a compact snapshot.
    pub fn records(&self) -> Vec<TranslationRecord> {
        let mut out: Vec<_> = self.entries.read().expect("cache lock poisoned").values().cloned().collect();
        out.sort_by(|a, b| {
            (&a.source_text, &a.source_lang, &a.target_lang, &a.provider).cmp(&(
                &b.source_text,
                &b.source_lang,
                &b.target_lang,
                &b.provider,
            ))
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{Clock, FixedClock};

    fn record(source: &str, target: &str) -> TranslationRecord {
        TranslationRecord {
            source_lang: "de".into(),
            target_lang: "en".into(),
            provider: "replay".into(),
            source_text: source.into(),
            target_text: target.into(),
            retrieved_at: FixedClock::epoch_2000().now(),
        }
    }

    #[test]
    fn lookup_of_unknown_key_is_none() {
        let cache = TranslationCache::in_memory();
        assert!(cache.lookup("Hallo", "de", "en", "replay").is_none());
    }

    #[test]
    fn insert_then_lookup_round_trips_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/cache.jsonl");
        let r = record("Hallo Welt\n\"zitiert\"", "Hello World");
        {
            let cache = TranslationCache::open(&path).unwrap();
            cache.insert(r.clone()).unwrap();
            assert_eq!(cache.lookup(&r.source_text, "de", "en", "replay"), Some(r.clone()));
        }
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with(r#"{"source_lang":"de","target_lang":"en","provider":"replay","source_text":"#));
        let reopened = TranslationCache::open(&path).unwrap();
        assert_eq!(reopened.lookup(&r.source_text, "de", "en", "replay"), Some(r));
        assert!(reopened.lookup("Hallo Welt", "de", "en", "other").is_none());
    }

    #[test]
    fn second_insert_overwrites() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = TranslationCache::open(&path).unwrap();
        cache.insert(record("Hallo", "Hi")).unwrap();
        cache.insert(record("Hallo", "Hello")).unwrap();
        assert_eq!(cache.lookup("Hallo", "de", "en", "replay").unwrap().target_text, "Hello");
        assert_eq!(cache.len(), 1);
        drop(cache);
        let reopened = TranslationCache::open(&path).unwrap();
        assert_eq!(reopened.lookup("Hallo", "de", "en", "replay").unwrap().target_text, "Hello");
    }

    #[test]
    fn corrupt_lines_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let good = serde_json::to_string(&record("a", "b")).unwrap();
        fs::write(&path, format!("{good}\n{{not json\n")).unwrap();
        assert!(matches!(TranslationCache::open(&path), Err(TranslationError::CacheCorrupt { line: 2, .. })));
        let empty_target = serde_json::to_string(&record("a", "")).unwrap();
        fs::write(&path, format!("{empty_target}\n")).unwrap();
        assert!(matches!(TranslationCache::open(&path), Err(TranslationError::CacheCorrupt { line: 1, .. })));
    }

    #[test]
    fn concurrent_inserts_keep_lines_whole() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = TranslationCache::open(&path).unwrap();
        std::thread::scope(|s| {
            for t in 0..8 {
                let cache = &cache;
                s.spawn(move || {
                    for i in 0..50 {
                        cache.insert(record(&format!("text {t}-{i}"), &format!("out {t}-{i}"))).unwrap();
                    }
                });
            }
        });
        drop(cache);
        assert_eq!(TranslationCache::open(&path).unwrap().len(), 400);
    }
}
