//! Configuration-driven pipeline: load, split, translate, collect
//! predictions, vote, evaluate and report, with a manifest of every run.

pub mod config;
pub mod manifest;
pub mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::backends::{
    detect_degenerate, fetch_predictions, load_predictions, threshold_inconsistencies, validate_coverage,
    write_predictions_to, BackendError, InputLanguage, ModelId, PredictionSet, ThresholdProfile, WireClient,
};
use crate::clock::Clock;
use crate::corpus::{load_dataset, stratified_split, write_dataset_to, CorpusError, Dataset, DatasetRole, Split};
use crate::ensemble::{hard_vote, write_traces, EnsembleError, EnsembleRun, TiePolicy, VoteOutcome};
use crate::metrics::{evaluate, krippendorff_alpha, MetricsError, RatingsMatrix};
use crate::translation::{translate_corpus, DisabledClient, TranslationCache, TranslationClient, TranslationError};
use crate::SubtaskId;

pub use config::{
    validate_config, DataConfig, EvalSplit, ModelBinding, PipelineConfig, PredictionPaths, ReportFormat, RunConfig,
    TranslationStage,
};
pub use manifest::{
    sha256_file, sha256_hex, InputDigest, ManifestWarning, RunManifest, RunStatus, Stage, StageRecord, StageStatus,
    WarningKind, TOOL_NAME, TOOL_VERSION,
};
pub use report::{format_score, render_report, EvalReport, ReportKind};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Translation(#[from] TranslationError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("model {model} ({subtask}) does not cover the {split} set: {detail}")]
    Coverage { model: ModelId, subtask: SubtaskId, split: EvalSplit, detail: String },
    #[error("{0}")]
    Input(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: StageError,
    },
}

/// A subcommand's slice of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Split,
    Translate,
    Vote,
    Evaluate,
    Run,
}

impl Verb {
    /// Stages the verb executes under `config`, in order.
    pub fn stages(self, config: &PipelineConfig) -> Vec<Stage> {
        let needs_split = config.evaluate_on != EvalSplit::Test;
        let split = config.data.train.is_some();
        let mut stages = vec![Stage::Load];
        match self {
            Verb::Split => stages.push(Stage::Split),
            Verb::Translate => {
                if split {
                    stages.push(Stage::Split);
                }
                stages.push(Stage::Translate);
            }
            Verb::Vote | Verb::Evaluate => {
                if needs_split {
                    stages.push(Stage::Split);
                }
                if config.translation.enabled {
                    stages.push(Stage::Translate);
                }
                stages.push(Stage::Collect);
                stages.push(Stage::Vote);
                if self == Verb::Evaluate {
                    stages.extend([Stage::Evaluate, Stage::Report]);
                }
            }
            Verb::Run => {
                if split {
                    stages.push(Stage::Split);
                }
                if config.translation.enabled {
                    stages.push(Stage::Translate);
                }
                stages.extend([Stage::Collect, Stage::Vote, Stage::Evaluate, Stage::Report]);
            }
        }
        stages
    }
}

/// Runtime collaborators that are not part of the config.
pub struct PipelineOptions<'a> {
    pub clock: &'a dyn Clock,
    /// Replaces the configured translation client.
    pub translator: Option<&'a dyn TranslationClient>,
}

#[derive(Debug)]
pub struct PipelineRun {
    pub reports: Vec<EvalReport>,
    pub manifest: RunManifest,
}

/// A failed run. The manifest is still written.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct PipelineFailure {
    #[source]
    pub error: PipelineError,
    pub manifest: Box<RunManifest>,
}

struct Collected {
    model: ModelId,
    subtask: SubtaskId,
    set: PredictionSet,
}

struct State<'a> {
    config: &'a PipelineConfig,
    options: &'a PipelineOptions<'a>,
    manifest: RunManifest,
    test: Option<Dataset>,
    train: Option<Dataset>,
    split: Option<Split>,
    collected: Vec<Collected>,
    votes: Vec<(EnsembleRun, VoteOutcome)>,
    reports: Vec<EvalReport>,
}

/// Runs the full pipeline.
pub fn run_pipeline(config: &PipelineConfig, options: &PipelineOptions) -> Result<PipelineRun, PipelineFailure> {
    let stages = Verb::Run.stages(config);
    run_stages(config, &stages, options)
}

/// Runs `stages` in pipeline order and writes the manifest, whatever
/// happens. Outputs of finished stages stay on disk after a failure.
pub fn run_stages(
    config: &PipelineConfig,
    stages: &[Stage],
    options: &PipelineOptions,
) -> Result<PipelineRun, PipelineFailure> {
    let digest = match config.to_toml() {
        Ok(text) => sha256_hex(text.as_bytes()),
        Err(e) => format!("unavailable: {e}"),
    };
    let mut state = State {
        config,
        options,
        manifest: RunManifest::new(digest, options.clock.now()),
        test: None,
        train: None,
        split: None,
        collected: Vec::new(),
        votes: Vec::new(),
        reports: Vec::new(),
    };
    state.record_seeds();

    let problems = config.check();
    let mut error = (!problems.is_empty()).then_some(PipelineError::Config(problems));
    if error.is_none() {
        for stage in Stage::ALL.iter().filter(|s| stages.contains(s)) {
            let started = options.clock.now();
            let result = state.run_stage(*stage);
            let elapsed_ms = (options.clock.now() - started).num_milliseconds();
            let status = if result.is_ok() { StageStatus::Ok } else { StageStatus::Failed };
            state.manifest.stages.push(StageRecord { stage: *stage, status, elapsed_ms });
            if let Err(source) = result {
                error = Some(PipelineError::Stage { stage: *stage, source });
                break;
            }
        }
    }

    if let Some(e) = &error {
        state.manifest.status = RunStatus::Failed;
        state.manifest.error = Some(e.to_string());
    }
    let manifest_result = state.write_manifest();
    let manifest = state.manifest;
    match (error, manifest_result) {
        (Some(error), _) => Err(PipelineFailure { error, manifest: Box::new(manifest) }),
        (None, Err(source)) => Err(PipelineFailure {
            error: PipelineError::Stage { stage: Stage::Report, source },
            manifest: Box::new(manifest),
        }),
        (None, Ok(())) => Ok(PipelineRun { reports: state.reports, manifest }),
    }
}

fn model_file(model: ModelId, subtask: SubtaskId) -> String {
    format!("predictions/model{:02}_{subtask}.tsv", model.0)
}

impl State<'_> {
    fn record_seeds(&mut self) {
        if self.config.data.train.is_some() {
            self.manifest.seeds.insert("split".into(), self.config.split.seed);
        }
        for run in &self.config.runs {
            if let TiePolicy::SeededRandom(seed) = run.tie_policy {
                self.manifest.seeds.insert(format!("run{}.tie_policy", run.id), seed);
            }
        }
    }

    fn run_stage(&mut self, stage: Stage) -> Result<(), StageError> {
        log::info!("stage {stage}");
        match stage {
            Stage::Load => self.load(),
            Stage::Split => self.split(),
            Stage::Translate => self.translate(),
            Stage::Collect => self.collect(),
            Stage::Vote => self.vote(),
            Stage::Evaluate => self.evaluate(),
            Stage::Report => self.report(),
        }
    }

    fn out_path(&self, rel: &str) -> PathBuf {
        self.config.output_dir.join(rel)
    }

    fn write(&mut self, rel: &str, contents: &[u8]) -> Result<(), StageError> {
        let path = self.out_path(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| StageError::Io { path: parent.to_path_buf(), source })?;
        }
        fs::write(&path, contents).map_err(|source| StageError::Io { path: path.clone(), source })?;
        if !self.manifest.outputs.iter().any(|o| o == rel) {
            self.manifest.outputs.push(rel.to_string());
        }
        Ok(())
    }

    fn write_manifest(&mut self) -> Result<(), StageError> {
        self.manifest.outputs.retain(|o| o != MANIFEST_FILE);
        self.manifest.outputs.push(MANIFEST_FILE.into());
        let json = self.manifest.to_json();
        self.write(MANIFEST_FILE, json.as_bytes())
    }

    fn write_dataset(&mut self, rel: &str, dataset: &Dataset) -> Result<(), StageError> {
        let mut buf = Vec::new();
        write_dataset_to(dataset, &mut buf, &self.config.data.schema)
            .map_err(|source| CorpusError::Csv { path: self.out_path(rel), source })?;
        self.write(rel, &buf)
    }

    fn write_predictions(&mut self, rel: &str, set: &PredictionSet) -> Result<(), StageError> {
        let mut buf = Vec::new();
        write_predictions_to(set, &mut buf).map_err(|source| StageError::Io { path: self.out_path(rel), source })?;
        self.write(rel, &buf)
    }

    fn load(&mut self) -> Result<(), StageError> {
        for (name, path) in self.config.inputs() {
            let sha256 = sha256_file(&path).map_err(|source| StageError::Io { path: path.clone(), source })?;
            self.manifest.inputs.insert(name, InputDigest { path: path.display().to_string(), sha256 });
        }
        let schema = &self.config.data.schema;
        self.test = Some(load_dataset(&self.config.data.test, schema)?);
        if let Some(train) = &self.config.data.train {
            let train = load_dataset(train, schema)?;
            if train.role() != DatasetRole::Full {
                return Err(StageError::Input(format!(
                    "{}: training data has no label columns",
                    train_path(self.config)
                )));
            }
            self.train = Some(train);
        }
        Ok(())
    }

    fn split(&mut self) -> Result<(), StageError> {
        let train = self.train.as_ref().ok_or_else(|| StageError::Input("no training data to split".into()))?;
        let split = stratified_split(train, &self.config.split)?;
        self.write_dataset("splits/train.tsv", &split.train)?;
        self.write_dataset("splits/dev.tsv", &split.dev)?;
        self.write_dataset("splits/holdout.tsv", &split.holdout)?;
        let json = serde_json::to_string_pretty(&split.manifest).expect("split manifest serializes") + "\n";
        self.write("splits/split_manifest.json", json.as_bytes())?;
        self.manifest.split = Some(split.manifest.clone());
        self.split = Some(split);
        Ok(())
    }

    fn eval_set(&self) -> Result<&Dataset, StageError> {
        let missing = || StageError::Input(format!("the {} set is not available", self.config.evaluate_on));
        match self.config.evaluate_on {
            EvalSplit::Test => self.test.as_ref().ok_or_else(missing),
            EvalSplit::Dev => self.split.as_ref().map(|s| &s.dev).ok_or_else(missing),
            EvalSplit::Holdout => self.split.as_ref().map(|s| &s.holdout).ok_or_else(missing),
        }
    }

    fn translate(&mut self) -> Result<(), StageError> {
        let config = self.config;
        let stage = &config.translation;
        self.manifest.translation = Some(stage.service.clone());
        let cache = match &stage.cache {
            Some(path) => TranslationCache::open(path)?,
            None => TranslationCache::in_memory(),
        };
        let owned: Box<dyn TranslationClient>;
        let client: &dyn TranslationClient = match self.options.translator {
            Some(c) => c,
            None if stage.offline => {
                owned = Box::new(DisabledClient::new(stage.service.provider.clone()));
                owned.as_ref()
            }
            None => {
                owned = stage.service.build_client()?;
                owned.as_ref()
            }
        };
        let clock = self.options.clock;
        let translate = |d: &Dataset| translate_corpus(d, &stage.service, &cache, client, clock);

        let test = translate(self.test.as_ref().expect("load ran"))?;
        self.write_dataset("translations/test.tsv", &test)?;
        self.test = Some(test);
        if let Some(mut split) = self.split.take() {
            split.train = translate(&split.train)?;
            split.dev = translate(&split.dev)?;
            split.holdout = translate(&split.holdout)?;
            self.write_dataset("translations/train.tsv", &split.train)?;
            self.write_dataset("translations/dev.tsv", &split.dev)?;
            self.write_dataset("translations/holdout.tsv", &split.holdout)?;
            self.split = Some(split);
        }
        Ok(())
    }

    /// (model, subtask) pairs to collect, in model order then subtask order.
    fn wanted(&self) -> Vec<(ModelId, SubtaskId)> {
        let mut out = BTreeSet::new();
        for b in &self.config.models {
            let used: BTreeSet<SubtaskId> = self
                .config
                .runs
                .iter()
                .filter(|r| r.members.contains(&b.id))
                .flat_map(|r| r.subtasks.iter().copied())
                .collect();
            for s in SubtaskId::ALL {
                let bound = match &b.predictions {
                    Some(p) => p.get(s).is_some(),
                    None => used.is_empty() || used.contains(&s),
                };
                if bound {
                    out.insert((b.id, s));
                }
            }
        }
        out.into_iter().collect()
    }

    fn collect(&mut self) -> Result<(), StageError> {
        let split = self.config.evaluate_on;
        let min_fraction = self.config.min_class_fraction;
        for (model, subtask) in self.wanted() {
            let binding = self.config.binding(model).expect("wanted pairs are bound");
            let set = match (&binding.predictions, &binding.endpoint) {
                (Some(paths), _) => load_predictions(paths.get(subtask).expect("bound"), model, subtask)?,
                (None, Some(endpoint)) => self.fetch(model, subtask, endpoint, binding.batch_size)?,
                (None, None) => unreachable!("config check requires a source"),
            };

            let eval = self.eval_set()?;
            let coverage = validate_coverage(&set, eval);
            if !coverage.missing.is_empty() {
                return Err(StageError::Coverage { model, subtask, split, detail: coverage.to_string() });
            }
            let set = if coverage.extraneous.is_empty() {
                set
            } else {
                let message = format!(
                    "model {model} ({subtask}): {} prediction(s) for comments outside the {split} set ignored ({coverage})",
                    coverage.extraneous.len()
                );
                let kept: Vec<_> =
                    set.iter().filter(|(id, _)| eval.get(id).is_some()).map(|(id, p)| (id.to_string(), *p)).collect();
                let set = PredictionSet::new(model, subtask, set.provenance().to_string(), kept)?;
                self.manifest.warn(ManifestWarning {
                    kind: WarningKind::CoverageGap,
                    model_id: model,
                    subtask,
                    message,
                });
                set
            };

            let inconsistent = threshold_inconsistencies(&set, &ThresholdProfile::default());
            if !inconsistent.is_empty() {
                self.manifest.warn(ManifestWarning {
                    kind: WarningKind::ThresholdInconsistency,
                    model_id: model,
                    subtask,
                    message: format!(
                        "model {model} ({subtask}): {} label(s) disagree with score >= {}; first `{}`",
                        inconsistent.len(),
                        ThresholdProfile::default().threshold,
                        inconsistent[0]
                    ),
                });
            }
            if let Some(w) = detect_degenerate(&set, min_fraction) {
                self.manifest.warn(ManifestWarning {
                    kind: WarningKind::DegeneratePredictor,
                    model_id: model,
                    subtask,
                    message: w.to_string(),
                });
            }
            self.write_predictions(&model_file(model, subtask), &set)?;
            self.collected.push(Collected { model, subtask, set });
        }
        Ok(())
    }

    fn fetch(
        &self,
        model: ModelId,
        subtask: SubtaskId,
        endpoint: &str,
        batch_size: Option<usize>,
    ) -> Result<PredictionSet, StageError> {
        let english = self.config.model_spec(model).map(|s| s.input_language) == Some(InputLanguage::English);
        let eval = self.eval_set()?;
        let mut texts = Vec::with_capacity(eval.len());
        for c in eval.comments() {
            let text = if english {
                c.translated_text.as_deref().ok_or_else(|| {
                    StageError::Input(format!(
                        "model {model} reads English but comment `{}` has no translation; enable translation or add a translation column",
                        c.id()
                    ))
                })?
            } else {
                c.text()
            };
            texts.push((c.id().to_string(), text.to_string()));
        }
        let mut client = WireClient::new(endpoint);
        if let Some(n) = batch_size {
            client.batch_size = n;
        }
        Ok(fetch_predictions(&client, model, &texts, subtask)?)
    }

    fn vote(&mut self) -> Result<(), StageError> {
        for run in self.config.ensemble_runs() {
            let sets: Vec<PredictionSet> = run
                .member_ids()
                .iter()
                .filter_map(|m| self.collected.iter().find(|c| c.model == *m && c.subtask == run.subtask()))
                .map(|c| c.set.clone())
                .collect();
            let outcome = hard_vote(&sets, &run)?;
            let (r, s) = (run.run_id(), run.subtask());
            self.write_predictions(&format!("predictions/ensemble_run{r}_{s}.tsv"), &outcome.predictions)?;
            let mut buf = Vec::new();
            write_traces(&run, &outcome.traces, &mut buf)
                .map_err(|source| StageError::Io { path: self.out_path("traces"), source })?;
            self.write(&format!("traces/run{r}_{s}.tsv"), &buf)?;
            self.votes.push((run, outcome));
        }
        Ok(())
    }

    fn warnings_for(&self, model: ModelId, subtask: SubtaskId, kinds: &[WarningKind]) -> Vec<String> {
        self.manifest
            .warnings
            .iter()
            .filter(|w| w.model_id == model && w.subtask == subtask && kinds.contains(&w.kind))
            .map(|w| w.message.clone())
            .collect()
    }

    fn evaluate(&mut self) -> Result<(), StageError> {
        let split = self.config.evaluate_on;
        let gold = self.eval_set()?;
        let min_fraction = self.config.min_class_fraction;
        let mut reports = Vec::new();

        for c in &self.collected {
            let entry = evaluate(&c.set, gold, c.subtask, min_fraction)?;
            let spec = self.config.model_spec(c.model);
            reports.push(EvalReport {
                kind: ReportKind::Model,
                model_id: c.model,
                run_id: None,
                name: spec.map(|s| s.name.clone()).unwrap_or_default(),
                input_language: spec.map(|s| s.input_language),
                members: Vec::new(),
                tie_policy: None,
                subtask: c.subtask,
                evaluated_on: split,
                comments: gold.len(),
                confusion: entry.confusion,
                scores: entry.scores,
                ties_broken: 0,
                member_alpha: None,
                warnings: self.warnings_for(
                    c.model,
                    c.subtask,
                    &[WarningKind::DegeneratePredictor, WarningKind::CoverageGap, WarningKind::ThresholdInconsistency],
                ),
            });
        }

        let mut new_warnings = Vec::new();
        for (run, outcome) in &self.votes {
            let entry = evaluate(&outcome.predictions, gold, run.subtask(), min_fraction)?;
            let mut warnings = Vec::new();
            for m in run.member_ids() {
                warnings.extend(self.warnings_for(*m, run.subtask(), &[WarningKind::DegeneratePredictor]));
            }
            for w in &entry.warnings {
                let message = format!("run {}: {w}", run.run_id());
                warnings.push(message.clone());
                new_warnings.push(ManifestWarning {
                    kind: WarningKind::DegeneratePredictor,
                    model_id: run.ensemble_model_id(),
                    subtask: run.subtask(),
                    message,
                });
            }
            reports.push(EvalReport {
                kind: ReportKind::Ensemble,
                model_id: run.ensemble_model_id(),
                run_id: Some(run.run_id()),
                name: String::new(),
                input_language: None,
                members: run.member_ids().to_vec(),
                tie_policy: Some(run.tie_policy()),
                subtask: run.subtask(),
                evaluated_on: split,
                comments: gold.len(),
                confusion: entry.confusion,
                scores: entry.scores,
                ties_broken: outcome.traces.iter().filter(|t| t.tie_broken).count(),
                member_alpha: member_alpha(run, outcome),
                warnings,
            });
        }
        for w in new_warnings {
            self.manifest.warn(w);
        }
        self.reports = reports;
        Ok(())
    }

    fn report(&mut self) -> Result<(), StageError> {
        let mut files: BTreeMap<String, Vec<EvalReport>> = BTreeMap::new();
        let mut order = Vec::new();
        let mut push = |name: String, r: &EvalReport| {
            if !files.contains_key(&name) {
                order.push(name.clone());
            }
            files.entry(name).or_default().push(r.clone());
        };
        for r in &self.reports {
            match (r.kind, r.run_id) {
                (ReportKind::Ensemble, Some(id)) => {
                    push(format!("reports/{}/run{id}", r.subtask), r);
                    push(format!("reports/{}/ensembles", r.subtask), r);
                }
                _ => push(format!("reports/{}/models", r.subtask), r),
            }
        }
        for name in order {
            let entries = &files[&name];
            for format in self.config.report_formats.clone() {
                let doc = render_report(entries, format);
                self.write(&format!("{name}.{}", format.extension()), doc.as_bytes())?;
            }
        }
        Ok(())
    }
}

/// Findings of [`preflight`].
#[derive(Debug, Default)]
pub struct Preflight {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

/// Loads the corpora and every stored prediction file and checks them
/// against the evaluation set without writing anything. Model servers are
/// not contacted.
pub fn preflight(config: &PipelineConfig) -> Preflight {
    let mut out = Preflight { errors: config.check(), ..Preflight::default() };
    if !out.errors.is_empty() {
        return out;
    }
    let schema = &config.data.schema;
    let test = match load_dataset(&config.data.test, schema) {
        Ok(d) => d,
        Err(e) => {
            out.errors.push(format!("data.test: {e}"));
            return out;
        }
    };
    let split = match &config.data.train {
        Some(path) => match load_dataset(path, schema).and_then(|d| stratified_split(&d, &config.split)) {
            Ok(s) => Some(s),
            Err(e) => {
                out.errors.push(format!("data.train: {e}"));
                return out;
            }
        },
        None => None,
    };
    let eval = match (config.evaluate_on, &split) {
        (EvalSplit::Test, _) => &test,
        (EvalSplit::Dev, Some(s)) => &s.dev,
        (EvalSplit::Holdout, Some(s)) => &s.holdout,
        (_, None) => return out,
    };
    if config.evaluate_on == EvalSplit::Test && test.role() == DatasetRole::Test {
        out.warnings.push("the test set has no labels; only the vote stage can run".into());
    }
    for b in &config.models {
        let Some(paths) = &b.predictions else {
            out.warnings.push(format!(
                "model {} is served by {}; not checked",
                b.id,
                b.endpoint.as_deref().unwrap_or("?")
            ));
            continue;
        };
        for s in SubtaskId::ALL {
            let Some(path) = paths.get(s) else { continue };
            match load_predictions(path, b.id, s) {
                Err(e) => out.errors.push(format!("model {} ({s}): {}: {e}", b.id, path.display())),
                Ok(set) => {
                    let coverage = validate_coverage(&set, eval);
                    if !coverage.missing.is_empty() {
                        out.errors.push(format!("model {} ({s}) vs {} set: {coverage}", b.id, config.evaluate_on));
                    } else if !coverage.extraneous.is_empty() {
                        out.warnings.push(format!("model {} ({s}) vs {} set: {coverage}", b.id, config.evaluate_on));
                    }
                    if let Some(w) = detect_degenerate(&set, config.min_class_fraction) {
                        out.warnings.push(w.to_string());
                    }
                }
            }
        }
    }
    out
}

fn train_path(config: &PipelineConfig) -> String {
    config.data.train.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

/// Agreement among a run's members, or `None` when alpha is undefined.
fn member_alpha(run: &EnsembleRun, outcome: &VoteOutcome) -> Option<f64> {
    if run.member_ids().len() < 2 {
        return None;
    }
    let cells = outcome.traces.iter().map(|t| t.ballots.values().map(|l| Some(*l)).collect()).collect();
    let matrix = RatingsMatrix::new(
        outcome.traces.iter().map(|t| t.comment_id.clone()).collect(),
        run.member_ids().iter().map(|m| m.to_string()).collect(),
        cells,
    )
    .ok()?;
    krippendorff_alpha(&matrix).ok()
}
