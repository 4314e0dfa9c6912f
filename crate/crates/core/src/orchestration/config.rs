//! Pipeline configuration: one TOML document fully describes a run.
//!
//! ```toml
//! output_dir = "out"
//! evaluate_on = "test"          # test | dev | holdout
//!
//! [data]
//! train = "train.tsv"           # optional; enables the split stage
//! test = "test.tsv"
//!
//! [split]
//! train_fraction = "4/5"
//! seed = 2021
//!
//! [translation]
//! enabled = false
//!
//! [[models]]
//! id = 1
//! predictions = { toxic = "preds/model01_toxic.tsv" }
//!
//! [[models]]
//! id = 6
//! endpoint = "http://127.0.0.1:8080"
//!
//! [[runs]]
//! id = 1
//! members = [1, 3, 4, 5, 6]
//! tie_policy = "error_on_tie"
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::backends::{default_registry, ModelId, ModelSpec};
use crate::corpus::{Schema, SplitSpec};
use crate::ensemble::{EnsembleRun, TiePolicy};
use crate::translation::TranslatorConfig;
use crate::SubtaskId;

/// Which labelled set the predictions are scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSplit {
    #[default]
    Test,
    Dev,
    Holdout,
}

impl EvalSplit {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalSplit::Test => "test",
            EvalSplit::Dev => "dev",
            EvalSplit::Holdout => "holdout",
        }
    }
}

impl fmt::Display for EvalSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// Aligned text tables.
    Table,
    /// Pretty-printed JSON with full-precision values.
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Table => "txt",
            ReportFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" | "txt" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}` (expected table or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Labelled training corpus to split into train/dev/holdout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    /// Test corpus; needs labels when it is the evaluation set.
    pub test: PathBuf,
    #[serde(default)]
    pub schema: Schema,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslationStage {
    pub enabled: bool,
    /// Cache file (JSON Lines). In-memory when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
    /// Never call the service; every text must already be cached.
    pub offline: bool,
    pub service: TranslatorConfig,
}

/// Prediction files of one model, per subtask.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toxic: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engaging: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact_claiming: Option<PathBuf>,
}

impl PredictionPaths {
    pub fn get(&self, subtask: SubtaskId) -> Option<&Path> {
        match subtask {
            SubtaskId::Toxic => self.toxic.as_deref(),
            SubtaskId::Engaging => self.engaging.as_deref(),
            SubtaskId::FactClaiming => self.fact_claiming.as_deref(),
        }
    }

    fn paths_mut(&mut self) -> impl Iterator<Item = &mut PathBuf> {
        [&mut self.toxic, &mut self.engaging, &mut self.fact_claiming].into_iter().flatten()
    }

    fn is_empty(&self) -> bool {
        SubtaskId::ALL.iter().all(|s| self.get(*s).is_none())
    }
}

/// Where one model's predictions come from: stored files or a model server.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBinding {
    pub id: ModelId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PredictionPaths>,
    /// Base URL of a server speaking the prediction wire protocol.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
}

impl ModelBinding {
    pub fn covers(&self, subtask: SubtaskId) -> bool {
        self.endpoint.is_some() || self.predictions.as_ref().is_some_and(|p| p.get(subtask).is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub id: u32,
    pub members: Vec<ModelId>,
    #[serde(default)]
    pub tie_policy: TiePolicy,
    #[serde(default = "all_subtasks")]
    pub subtasks: Vec<SubtaskId>,
}

fn all_subtasks() -> Vec<SubtaskId> {
    SubtaskId::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    pub evaluate_on: EvalSplit,
    /// Minority-class fraction under which a predictor is flagged degenerate.
    pub min_class_fraction: f64,
    /// Treat warnings as failures.
    pub strict: bool,
    pub report_formats: Vec<ReportFormat>,
    pub data: DataConfig,
    pub split: SplitSpec,
    pub translation: TranslationStage,
    pub registry: Vec<ModelSpec>,
    pub models: Vec<ModelBinding>,
    pub runs: Vec<RunConfig>,
}

const TOP_LEVEL_KEYS: [&str; 11] = [
    "output_dir",
    "evaluate_on",
    "min_class_fraction",
    "strict",
    "report_formats",
    "data",
    "split",
    "translation",
    "registry",
    "models",
    "runs",
];

impl PipelineConfig {
    /// Parses a configuration document without touching the filesystem.
    /// Every section is checked, and all problems are returned together.
    pub fn from_toml(text: &str) -> Result<Self, Vec<String>> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| vec![e.to_string()])?;
        let mut errors = Vec::new();
        for key in table.keys() {
            if !TOP_LEVEL_KEYS.contains(&key.as_str()) {
                errors.push(format!("unknown key `{key}`"));
            }
        }

        let output_dir = field(&table, "output_dir", &mut errors).unwrap_or_else(|| PathBuf::from("out"));
        let evaluate_on = field(&table, "evaluate_on", &mut errors).unwrap_or_default();
        let min_class_fraction =
            field(&table, "min_class_fraction", &mut errors).unwrap_or(crate::backends::DEFAULT_MIN_CLASS_FRACTION);
        let strict = field(&table, "strict", &mut errors).unwrap_or(false);
        let report_formats = field(&table, "report_formats", &mut errors)
            .unwrap_or_else(|| vec![ReportFormat::Table, ReportFormat::Json]);
        let data: Option<DataConfig> = field(&table, "data", &mut errors);
        if data.is_none() && !table.contains_key("data") {
            errors.push("missing section [data]".into());
        }
        let split = field(&table, "split", &mut errors).unwrap_or_default();
        let translation = field(&table, "translation", &mut errors).unwrap_or_default();
        let registry =
            if table.contains_key("registry") { list(&table, "registry", &mut errors) } else { default_registry() };
        let models = list(&table, "models", &mut errors);
        let runs = list(&table, "runs", &mut errors);

        let structural = !errors.is_empty();
        let config = Self {
            output_dir,
            evaluate_on,
            min_class_fraction,
            strict,
            report_formats,
            data: data.clone().unwrap_or_else(|| DataConfig {
                train: None,
                test: PathBuf::new(),
                schema: Schema::default(),
            }),
            split,
            translation,
            registry,
            models,
            runs,
        };
        errors.extend(config.check());
        if errors.is_empty() && !structural && data.is_some() {
            Ok(config)
        } else {
            Err(errors)
        }
    }

    pub fn to_toml(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    /// Semantic and referential checks on a parsed config.
    pub fn check(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if !(0.0..0.5).contains(&self.min_class_fraction) {
            errors.push(format!("min_class_fraction must be in [0, 0.5), got {}", self.min_class_fraction));
        }
        if self.report_formats.is_empty() {
            errors.push("report_formats must name at least one format".into());
        }
        if self.evaluate_on != EvalSplit::Test && self.data.train.is_none() {
            errors.push(format!("evaluate_on = \"{}\" needs data.train to split", self.evaluate_on));
        }
        if !self.data.schema.delimiter.is_ascii() {
            errors.push(format!(
                "data.schema.delimiter must be a single ASCII character, got {:?}",
                self.data.schema.delimiter
            ));
        }
        if self.translation.enabled {
            if self.translation.offline {
                if self.translation.cache.is_none() {
                    errors.push("translation.offline needs translation.cache".into());
                }
            } else {
                errors.extend(self.translation.service.validate());
            }
        }

        let mut registry_ids = BTreeSet::new();
        for spec in &self.registry {
            if spec.model_id.is_ensemble() {
                errors.push(format!("registry: model id {} is in the reserved ensemble range", spec.model_id));
            }
            if !registry_ids.insert(spec.model_id) {
                errors.push(format!("registry: model {} listed twice", spec.model_id));
            }
        }

        let mut bindings: BTreeMap<ModelId, &ModelBinding> = BTreeMap::new();
        for b in &self.models {
            if bindings.insert(b.id, b).is_some() {
                errors.push(format!("models: model {} bound twice", b.id));
            }
            if !registry_ids.contains(&b.id) {
                errors.push(format!("models: model {} is not in the registry", b.id));
            }
            match (&b.predictions, &b.endpoint) {
                (Some(_), Some(_)) => errors.push(format!("models: model {} has both predictions and endpoint", b.id)),
                (None, None) => errors.push(format!("models: model {} needs predictions or endpoint", b.id)),
                (Some(p), None) if p.is_empty() => {
                    errors.push(format!("models: model {} lists no prediction files", b.id))
                }
                _ => {}
            }
            if b.batch_size == Some(0) {
                errors.push(format!("models: model {} batch_size must be at least 1", b.id));
            }
        }

        let mut run_ids = BTreeSet::new();
        for run in &self.runs {
            if !run_ids.insert(run.id) {
                errors.push(format!("runs: run {} defined twice", run.id));
            }
            if run.subtasks.is_empty() {
                errors.push(format!("runs: run {} lists no subtasks", run.id));
            }
            if let Err(e) = EnsembleRun::new(run.id, run.members.clone(), run.tie_policy, SubtaskId::Toxic) {
                errors.push(format!("runs: {e}"));
            }
            for m in &run.members {
                match bindings.get(m) {
                    None => errors.push(format!("runs: run {} references model {m}, which has no binding", run.id)),
                    Some(b) => {
                        for s in &run.subtasks {
                            if !b.covers(*s) {
                                errors.push(format!("runs: run {} needs {s} predictions from model {m}", run.id));
                            }
                        }
                    }
                }
            }
        }
        errors
    }

    /// Makes every relative path absolute against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.data.test);
        self.data.train.iter_mut().for_each(fix);
        self.translation.cache.iter_mut().for_each(fix);
        self.translation.service.fixture.iter_mut().for_each(fix);
        for b in &mut self.models {
            if let Some(p) = &mut b.predictions {
                p.paths_mut().for_each(fix);
            }
        }
    }

    pub fn binding(&self, id: ModelId) -> Option<&ModelBinding> {
        self.models.iter().find(|b| b.id == id)
    }

    pub fn model_spec(&self, id: ModelId) -> Option<&ModelSpec> {
        self.registry.iter().find(|s| s.model_id == id)
    }

    /// Every (run, subtask) pair in run order, then subtask order.
    pub fn ensemble_runs(&self) -> Vec<EnsembleRun> {
        let mut out = Vec::new();
        for s in SubtaskId::ALL {
            for run in &self.runs {
                if run.subtasks.contains(&s) {
                    out.extend(EnsembleRun::new(run.id, run.members.clone(), run.tie_policy, s));
                }
            }
        }
        out
    }

    fn input_paths(&self) -> Vec<(String, &Path)> {
        let mut out = vec![("data.test".to_string(), self.data.test.as_path())];
        if let Some(p) = &self.data.train {
            out.push(("data.train".into(), p));
        }
        if self.translation.enabled {
            if let Some(p) = &self.translation.service.fixture {
                out.push(("translation.service.fixture".into(), p));
            }
        }
        for b in &self.models {
            if let Some(paths) = &b.predictions {
                for s in SubtaskId::ALL {
                    if let Some(p) = paths.get(s) {
                        out.push((format!("models.{:02}.{s}", b.id.0), p));
                    }
                }
            }
        }
        out
    }

    /// Named input files this config reads.
    pub fn inputs(&self) -> Vec<(String, PathBuf)> {
        self.input_paths().into_iter().map(|(k, p)| (k, p.to_path_buf())).collect()
    }
}

fn one_line(e: &toml::de::Error) -> String {
    e.to_string().split_whitespace().collect::<Vec<_>>().join(" ")
}

fn field<T: DeserializeOwned>(table: &toml::Table, key: &str, errors: &mut Vec<String>) -> Option<T> {
    let value = table.get(key)?;
    match value.clone().try_into() {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("{key}: {}", one_line(&e)));
            None
        }
    }
}

fn list<T: DeserializeOwned>(table: &toml::Table, key: &str, errors: &mut Vec<String>) -> Vec<T> {
    let Some(value) = table.get(key) else {
        return Vec::new();
    };
    let Some(items) = value.as_array() else {
        errors.push(format!("{key}: expected an array of tables"));
        return Vec::new();
    };
    items
        .iter()
        .enumerate()
        .filter_map(|(i, item)| match item.clone().try_into() {
            Ok(v) => Some(v),
            Err(e) => {
                errors.push(format!("{key}[{i}]: {}", one_line(&e)));
                None
            }
        })
        .collect()
}

/// Reads, parses, resolves and checks a config file, including that every
/// input file exists and the output directory can be created.
pub fn validate_config(path: &Path) -> Result<PipelineConfig, Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    let mut config = PipelineConfig::from_toml(&text)?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    config.resolve_paths(base);

    let mut errors = Vec::new();
    for (name, p) in config.input_paths() {
        if !p.is_file() {
            errors.push(format!("{name}: file {} does not exist", p.display()));
        }
    }
    if config.output_dir.is_file() {
        errors.push(format!("output_dir {} is a file", config.output_dir.display()));
    } else {
        let existing = config.output_dir.ancestors().find(|a| a.exists());
        if let Some(dir) = existing {
            let readonly = fs::metadata(dir).map(|m| m.permissions().readonly()).unwrap_or(true);
            if !dir.is_dir() || readonly {
                errors.push(format!("output_dir {}: {} is not writable", config.output_dir.display(), dir.display()));
            }
        }
    }
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [data]
        test = "test.tsv"

        [[models]]
        id = 1
        predictions = { toxic = "m1.tsv" }
    "#;

    #[test]
    fn defaults_fill_in() {
        let c = PipelineConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert_eq!(c.evaluate_on, EvalSplit::Test);
        assert_eq!(c.registry.len(), 10);
        assert_eq!(c.split, SplitSpec::default());
        assert!(!c.translation.enabled);
    }

    #[test]
    fn errors_are_collected() {
        let text = r#"
            bogus = 1
            [data]
            test = "t.tsv"
            [split]
            train_fraction = 1.2
            [[models]]
            id = 1
            predictions = { toxic = "a.tsv" }
            [[runs]]
            id = 1
            members = [1, 7]
            tie_policy = "error_on_tie"
            [[runs]]
            id = 2
            members = "1,2"
        "#;
        let errors = PipelineConfig::from_toml(text).unwrap_err();
        assert!(errors.iter().any(|e| e.contains("unknown key `bogus`")), "{errors:?}");
        assert!(errors.iter().any(|e| e.starts_with("split:") && e.contains("1.2")), "{errors:?}");
        assert!(errors.iter().any(|e| e.starts_with("runs[1]")), "{errors:?}");
    }

    #[test]
    fn referential_errors_name_the_model() {
        let text = format!(
            "{MINIMAL}\n[[runs]]\nid = 1\nmembers = [1, 7]\ntie_policy = \"error_on_tie\"\nsubtasks = [\"toxic\"]\n"
        );
        let errors = PipelineConfig::from_toml(&text).unwrap_err();
        assert!(errors.iter().any(|e| e.contains("even number of members")), "{errors:?}");
        assert!(errors.iter().any(|e| e.contains("model 7, which has no binding")), "{errors:?}");
    }

    #[test]
    fn round_trip() {
        let text = format!(
            "{MINIMAL}\n[[models]]\nid = 6\nendpoint = \"http://localhost:9\"\n\
             [[runs]]\nid = 3\nmembers = [1, 6]\ntie_policy = {{ seeded_random = 7 }}\nsubtasks = [\"toxic\"]\n\
             [translation]\nenabled = true\ncache = \"c.jsonl\"\noffline = true\n"
        );
        let c = PipelineConfig::from_toml(&text).unwrap();
        let again = PipelineConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.runs[0].tie_policy, TiePolicy::SeededRandom(7));
    }

    #[test]
    fn relative_paths_resolve_against_base() {
        let mut c = PipelineConfig::from_toml(MINIMAL).unwrap();
        c.resolve_paths(Path::new("/cfg"));
        assert_eq!(c.data.test, PathBuf::from("/cfg/test.tsv"));
        assert_eq!(c.output_dir, PathBuf::from("/cfg/out"));
        assert_eq!(c.models[0].predictions.as_ref().unwrap().toxic, Some(PathBuf::from("/cfg/m1.tsv")));
    }

    #[test]
    fn ensemble_runs_are_subtask_major() {
        let text = format!("{MINIMAL}\n[[runs]]\nid = 2\nmembers = [1]\nsubtasks = [\"toxic\"]\n[[runs]]\nid = 1\nmembers = [1]\nsubtasks = [\"toxic\"]\n");
        let c = PipelineConfig::from_toml(&text).unwrap();
        let ids: Vec<u32> = c.ensemble_runs().iter().map(EnsembleRun::run_id).collect();
        assert_eq!(ids, [2, 1]);
    }
}
