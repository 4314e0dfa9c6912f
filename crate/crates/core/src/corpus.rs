//! Labeled comment corpus: loading, label counts and the two-stage
//! stratified train/dev/holdout split.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;
use crate::{Label, SubtaskId};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: file has no data rows")]
    EmptyFile { path: PathBuf },
    #[error("column `{column}` not found in header")]
    MissingColumn { column: String },
    #[error("line {line}: label `{value}` in column `{column}` is not 0 or 1")]
    BadLabel { line: u64, column: String, value: String },
    #[error("duplicate comment id `{0}`")]
    DuplicateId(String),
    #[error("comment id must be non-empty")]
    EmptyId,
    #[error("comment `{0}` has empty text")]
    EmptyText(String),
    #[error("comment `{id}` has no {subtask} label")]
    UnlabeledComment { id: String, subtask: SubtaskId },
    #[error("{role} dataset requires every comment to carry all three labels")]
    IncompleteLabels { role: DatasetRole },
    #[error("split expects a Full dataset, got {0}")]
    WrongRole(DatasetRole),
    #[error("split needs at least 10 comments, got {0}")]
    TooSmall(usize),
    #[error("stratum {stratum} has {size} comments, too few to place at least one in each part")]
    EmptyStratum { stratum: String, size: usize },
    #[error("invalid fraction `{0}`: expected a value strictly between 0 and 1")]
    BadFraction(String),
    #[error("unknown stratification key `{0}`")]
    BadStratKey(String),
}

/// One corpus row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    id: String,
    text: String,
    pub translated_text: Option<String>,
    labels: [Option<Label>; 3],
}

impl Comment {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self, CorpusError> {
        let id = id.into();
        let text = text.into();
        if id.is_empty() {
            return Err(CorpusError::EmptyId);
        }
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText(id));
        }
        Ok(Self { id, text, translated_text: None, labels: [None; 3] })
    }

    pub fn with_labels(mut self, toxic: Label, engaging: Label, fact_claiming: Label) -> Self {
        self.labels = [Some(toxic), Some(engaging), Some(fact_claiming)];
        self
    }

    pub fn with_label(mut self, subtask: SubtaskId, label: Label) -> Self {
        self.labels[subtask.index()] = Some(label);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn label(&self, subtask: SubtaskId) -> Option<Label> {
        self.labels[subtask.index()]
    }

    pub fn set_label(&mut self, subtask: SubtaskId, label: Option<Label>) {
        self.labels[subtask.index()] = label;
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labels.iter().all(Option::is_some)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetRole {
    Full,
    Train,
    Dev,
    Holdout,
    Test,
}

impl fmt::Display for DatasetRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DatasetRole::Full => "full",
            DatasetRole::Train => "train",
            DatasetRole::Dev => "dev",
            DatasetRole::Holdout => "holdout",
            DatasetRole::Test => "test",
        };
        f.write_str(s)
    }
}

/// Ordered, id-unique list of comments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    comments: Vec<Comment>,
    role: DatasetRole,
}

impl Dataset {
    pub fn new(comments: Vec<Comment>, role: DatasetRole) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(comments.len());
        for c in &comments {
            if !seen.insert(c.id.as_str()) {
                return Err(CorpusError::DuplicateId(c.id.clone()));
            }
        }
        if role != DatasetRole::Test && !comments.iter().all(Comment::is_fully_labeled) {
            return Err(CorpusError::IncompleteLabels { role });
        }
        Ok(Self { comments, role })
    }

    pub fn comments(&self) -> &[Comment] {
        &self.comments
    }

    pub fn role(&self) -> DatasetRole {
        self.role
    }

    /// Same comments under another role. Fails if the role needs labels the
    /// comments do not have.
    pub fn with_role(self, role: DatasetRole) -> Result<Self, CorpusError> {
        Self::new(self.comments, role)
    }

    pub fn len(&self) -> usize {
        self.comments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comments.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.comments.iter().map(|c| c.id.as_str())
    }

    pub fn get(&self, id: &str) -> Option<&Comment> {
        self.comments.iter().find(|c| c.id == id)
    }

    /// Map from id to comment, for repeated lookups.
    pub fn index(&self) -> HashMap<&str, &Comment> {
        self.comments.iter().map(|c| (c.id.as_str(), c)).collect()
    }

    /// Replace the comments' translations, keeping everything else.
    pub(crate) fn map_translations<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&Comment) -> Option<String>,
    {
        let comments = self
            .comments
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.translated_text = f(&c);
                c
            })
            .collect();
        Self { comments, role: self.role }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LabelCounts {
    pub negatives: usize,
    pub positives: usize,
}

impl LabelCounts {
    pub fn total(&self) -> usize {
        self.negatives + self.positives
    }

    pub fn positive_rate(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.positives as f64 / self.total() as f64
        }
    }
}

pub fn label_distribution(dataset: &Dataset, subtask: SubtaskId) -> Result<LabelCounts, CorpusError> {
    let mut counts = LabelCounts::default();
    for c in dataset.comments() {
        match c.label(subtask) {
            Some(Label::Negative) => counts.negatives += 1,
            Some(Label::Positive) => counts.positives += 1,
            None => {
                return Err(CorpusError::UnlabeledComment { id: c.id.clone(), subtask });
            }
        }
    }
    Ok(counts)
}

/// Column names and delimiter of a corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schema {
    /// Single-byte field delimiter. No auto-detection.
    pub delimiter: char,
    /// Id column; when absent the 0-based row index is used.
    pub id: Option<String>,
    pub text: String,
    /// Optional column holding an existing translation.
    pub translated_text: Option<String>,
    pub toxic: Option<String>,
    pub engaging: Option<String>,
    pub fact_claiming: Option<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            delimiter: '\t',
            id: Some("comment_id".into()),
            text: "comment_text".into(),
            translated_text: Some("comment_text_en".into()),
            toxic: Some("Sub1_Toxic".into()),
            engaging: Some("Sub2_Engaging".into()),
            fact_claiming: Some("Sub3_FactClaiming".into()),
        }
    }
}

impl Schema {
    fn label_column(&self, subtask: SubtaskId) -> Option<&str> {
        match subtask {
            SubtaskId::Toxic => self.toxic.as_deref(),
            SubtaskId::Engaging => self.engaging.as_deref(),
            SubtaskId::FactClaiming => self.fact_claiming.as_deref(),
        }
    }

    fn delimiter_byte(&self) -> u8 {
        // Non-ASCII delimiters are rejected at config validation; fall back to tab.
        u8::try_from(self.delimiter).ok().filter(u8::is_ascii).unwrap_or(b'\t')
    }
}

/// Reads a delimiter-separated corpus file with a header row.
///
/// The result has role `Full` when all three label columns are present and
/// `Test` when none of them is. A schema naming a missing id or text
/// column, or only some of the label columns, is a `MissingColumn` error.
pub fn load_dataset(path: &Path, schema: &Schema) -> Result<Dataset, CorpusError> {
    let csv_err = |source| CorpusError::Csv { path: path.to_path_buf(), source };
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new().delimiter(schema.delimiter_byte()).has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(CorpusError::EmptyFile { path: path.to_path_buf() });
    }
    let find = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| find(name).ok_or_else(|| CorpusError::MissingColumn { column: name.to_string() });

    let id_col = schema.id.as_deref().map(require).transpose()?;
    let text_col = require(&schema.text)?;
    let translated_col = schema.translated_text.as_deref().and_then(find);

    let mut label_cols: [Option<usize>; 3] = [None; 3];
    let mut named = 0;
    for subtask in SubtaskId::ALL {
        if let Some(name) = schema.label_column(subtask) {
            named += 1;
            label_cols[subtask.index()] = find(name);
        }
    }
    let present = label_cols.iter().filter(|c| c.is_some()).count();
    if present > 0 && present < named {
        let missing = SubtaskId::ALL
            .iter()
            .find(|s| schema.label_column(**s).is_some() && label_cols[s.index()].is_none())
            .and_then(|s| schema.label_column(*s))
            .unwrap_or_default();
        return Err(CorpusError::MissingColumn { column: missing.to_string() });
    }

    let mut comments = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(row as u64 + 2);
        let cell = |col: usize| record.get(col).unwrap_or("");
        let id = match id_col {
            Some(col) => cell(col).to_string(),
            None => row.to_string(),
        };
        let mut comment = Comment::new(id, cell(text_col))?;
        if let Some(col) = translated_col {
            let t = cell(col);
            if !t.is_empty() {
                comment.translated_text = Some(t.to_string());
            }
        }
        for subtask in SubtaskId::ALL {
            if let Some(col) = label_cols[subtask.index()] {
                let value = cell(col);
                let label = value.parse::<Label>().map_err(|_| CorpusError::BadLabel {
                    line,
                    column: headers.get(col).unwrap_or_default().to_string(),
                    value: value.to_string(),
                })?;
                comment.set_label(subtask, Some(label));
            }
        }
        comments.push(comment);
    }
    if comments.is_empty() {
        return Err(CorpusError::EmptyFile { path: path.to_path_buf() });
    }
    let role = if present == 3 { DatasetRole::Full } else { DatasetRole::Test };
    Dataset::new(comments, role)
}

/// Writes a dataset in the same table convention `load_dataset` reads.
///
/// Label columns are written only when every comment carries all three
/// labels; the translation column only when some comment has one.
pub fn write_dataset(dataset: &Dataset, path: &Path, schema: &Schema) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    write_dataset_to(dataset, file, schema).map_err(|source| CorpusError::Csv { path: path.to_path_buf(), source })
}

pub fn write_dataset_to<W: Write>(dataset: &Dataset, out: W, schema: &Schema) -> Result<(), csv::Error> {
    let mut writer = csv::WriterBuilder::new().delimiter(schema.delimiter_byte()).from_writer(out);
    let with_translation = dataset.comments().iter().any(|c| c.translated_text.is_some());
    let with_labels = !dataset.is_empty() && dataset.comments().iter().all(Comment::is_fully_labeled);

    let mut header = vec![schema.id.as_deref().unwrap_or("id"), schema.text.as_str()];
    if with_translation {
        header.push(schema.translated_text.as_deref().unwrap_or("translated_text"));
    }
    if with_labels {
        for subtask in SubtaskId::ALL {
            header.push(schema.label_column(subtask).unwrap_or(subtask.as_str()));
        }
    }
    writer.write_record(&header)?;

    for c in dataset.comments() {
        let mut row: Vec<String> = vec![c.id.clone(), c.text.clone()];
        if with_translation {
            row.push(c.translated_text.clone().unwrap_or_default());
        }
        if with_labels {
            for subtask in SubtaskId::ALL {
                row.push(c.label(subtask).map(|l| l.to_string()).unwrap_or_default());
            }
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Exact fraction `num/den` with `0 < num < den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FractionRepr", into = "String")]
pub struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Result<Self, CorpusError> {
        if num == 0 || den == 0 || num >= den {
            return Err(CorpusError::BadFraction(format!("{num}/{den}")));
        }
        let g = gcd(num, den);
        Ok(Self { num: num / g, den: den / g })
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl FromStr for Fraction {
    type Err = CorpusError;

    /// Accepts `p/q` or a plain decimal such as `0.8`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CorpusError::BadFraction(s.to_string());
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p = p.trim().parse().map_err(|_| bad())?;
            let q = q.trim().parse().map_err(|_| bad())?;
            return Fraction::new(p, q).map_err(|_| bad());
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if (int.is_empty() && frac.is_empty())
            || frac.len() > 18
            || !int.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac_val: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac_val)).ok_or_else(bad)?;
        Fraction::new(num, den).map_err(|_| bad())
    }
}

impl fmt::Display for Fraction {
    /// Decimal when the expansion terminates, `p/q` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = self.den;
        while d.is_multiple_of(2) {
            d /= 2;
        }
        while d.is_multiple_of(5) {
            d /= 5;
        }
        if d != 1 {
            return write!(f, "{}/{}", self.num, self.den);
        }
        let mut digits = String::new();
        let mut rem = self.num;
        while rem != 0 {
            rem *= 10;
            digits.push(char::from(b'0' + (rem / self.den) as u8));
            rem %= self.den;
        }
        write!(f, "0.{digits}")
    }
}

impl From<Fraction> for String {
    fn from(f: Fraction) -> Self {
        f.to_string()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FractionRepr {
    Text(String),
    Number(f64),
}

impl TryFrom<FractionRepr> for Fraction {
    type Error = CorpusError;

    fn try_from(r: FractionRepr) -> Result<Self, Self::Error> {
        match r {
            FractionRepr::Text(s) => s.parse(),
            // Shortest round-trip decimal of the float, e.g. 0.8 -> "0.8".
            FractionRepr::Number(x) => format!("{x}").parse(),
        }
    }
}

/// What defines a stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StratKey {
    /// The combination of all three labels (8 strata).
    #[default]
    JointLabelTriple,
    SingleSubtask(SubtaskId),
}

impl StratKey {
    fn stratum_of(&self, c: &Comment) -> Result<u8, CorpusError> {
        let bit = |s: SubtaskId| {
            c.label(s).map(Label::as_u8).ok_or_else(|| CorpusError::UnlabeledComment { id: c.id.clone(), subtask: s })
        };
        match self {
            StratKey::JointLabelTriple => {
                Ok(bit(SubtaskId::Toxic)? << 2 | bit(SubtaskId::Engaging)? << 1 | bit(SubtaskId::FactClaiming)?)
            }
            StratKey::SingleSubtask(s) => bit(*s),
        }
    }

    /// Subtasks whose label is constant within each stratum.
    fn keyed_subtasks(&self) -> Vec<SubtaskId> {
        match self {
            StratKey::JointLabelTriple => SubtaskId::ALL.to_vec(),
            StratKey::SingleSubtask(s) => vec![*s],
        }
    }

    fn stratum_bit(&self, ordinal: u8, subtask: SubtaskId) -> bool {
        match self {
            StratKey::JointLabelTriple => ordinal >> (2 - subtask.index()) & 1 == 1,
            StratKey::SingleSubtask(_) => ordinal == 1,
        }
    }

    fn stratum_name(&self, ordinal: u8) -> String {
        match self {
            StratKey::JointLabelTriple => format!("{}{}{}", ordinal >> 2 & 1, ordinal >> 1 & 1, ordinal & 1),
            StratKey::SingleSubtask(_) => ordinal.to_string(),
        }
    }
}

impl fmt::Display for StratKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StratKey::JointLabelTriple => f.write_str("joint"),
            StratKey::SingleSubtask(s) => f.write_str(s.as_str()),
        }
    }
}

impl FromStr for StratKey {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "joint" {
            return Ok(StratKey::JointLabelTriple);
        }
        s.parse::<SubtaskId>().map(StratKey::SingleSubtask).map_err(|_| CorpusError::BadStratKey(s.to_string()))
    }
}

impl TryFrom<String> for StratKey {
    type Error = CorpusError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<StratKey> for String {
    fn from(k: StratKey) -> Self {
        k.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: Fraction,
    /// Split the non-train remainder into equal dev and holdout halves;
    /// otherwise the whole remainder becomes dev.
    #[serde(default = "default_true")]
    pub remainder_halves: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strat_key: StratKey,
}

fn default_true() -> bool {
    true
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: Fraction { num: 4, den: 5 },
            remainder_halves: true,
            seed: 0,
            strat_key: StratKey::JointLabelTriple,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumCounts {
    pub stratum: String,
    pub total: usize,
    pub train: usize,
    pub dev: usize,
    pub holdout: usize,
}

/// Everything needed to audit or replay a split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train_fraction: Fraction,
    pub remainder_halves: bool,
    pub strat_key: StratKey,
    pub total: usize,
    pub strata: Vec<StratumCounts>,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub dev: Dataset,
    pub holdout: Dataset,
    pub manifest: SplitManifest,
}

/// Largest-remainder apportionment of `total` over `weights/den`.
/// Ties on the remainder go to the lower index.
fn apportion(total: u64, weights: &[u64], den: u64) -> Vec<u64> {
    let mut quotas: Vec<u64> = weights.iter().map(|w| total * w / den).collect();
    let assigned: u64 = quotas.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(total * weights[i] % den), i));
    for &i in order.iter().take((total - assigned) as usize) {
        quotas[i] += 1;
    }
    quotas
}

/// Lexicographic k-subsets of `0..n`.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Starved strata, worst positive-rate deviation, total deviation.
type Score = (usize, f64, f64);

/// Per-stratum (train, dev) quotas; holdout is what remains.
///
/// Every quota is the floor or the ceiling of the stratum's exact share and
/// the per-part totals equal `global`. Which strata round up is chosen by
/// trying every admissible combination and keeping the one whose parts
/// leave no stratum part empty if possible and then track the full-set
/// positive rate of each keyed subtask most closely (smallest worst-case
/// deviation, then smallest total deviation). The
/// search visits train candidates in largest-remainder order (ties by
/// stratum ordinal) and dev candidates in ordinal order, and keeps the
/// first optimum, so with nothing to gain it falls back to plain
/// largest-remainder rounding.
fn allocate_quotas(
    sizes: &[u64],
    bits: &[Vec<bool>],
    weights: &[u64],
    den: u64,
    global: &[u64],
    halves: bool,
) -> (Vec<u64>, Vec<u64>) {
    let n: u64 = sizes.iter().sum();
    let keyed = bits.first().map_or(0, Vec::len);
    let positives: Vec<u64> =
        (0..keyed).map(|j| sizes.iter().zip(bits).filter(|(_, b)| b[j]).map(|(s, _)| *s).sum()).collect();

    let train_floor: Vec<u64> = sizes.iter().map(|s| s * weights[0] / den).collect();
    let mut train_candidates: Vec<usize> =
        (0..sizes.len()).filter(|&i| !(sizes[i] * weights[0]).is_multiple_of(den)).collect();
    train_candidates.sort_by_key(|&i| (std::cmp::Reverse(sizes[i] * weights[0] % den), i));
    let train_extra = (global[0].saturating_sub(train_floor.iter().sum()) as usize).min(train_candidates.len());

    let score = |train: &[u64], dev: &[u64]| -> Score {
        let starved = (0..sizes.len())
            .filter(|&i| train[i] == 0 || dev[i] == 0 || (halves && sizes[i] == train[i] + dev[i]))
            .count();
        let (mut worst, mut total) = (0.0f64, 0.0f64);
        for j in 0..keyed {
            let rate = positives[j] as f64 / n as f64;
            let mut pos = [0u64; 3];
            for i in 0..sizes.len() {
                if bits[i][j] {
                    pos[0] += train[i];
                    pos[1] += dev[i];
                    pos[2] += sizes[i] - train[i] - dev[i];
                }
            }
            for p in 0..3 {
                if global[p] > 0 {
                    let d = (pos[p] as f64 / global[p] as f64 - rate).abs();
                    worst = worst.max(d);
                    total += d;
                }
            }
        }
        (starved, worst, total)
    };

    let mut best: Option<(Score, Vec<u64>, Vec<u64>)> = None;
    for pick in combinations(train_candidates.len(), train_extra) {
        let mut train = train_floor.clone();
        for &c in &pick {
            train[train_candidates[c]] += 1;
        }
        let rest: Vec<u64> = sizes.iter().zip(&train).map(|(s, t)| s - t).collect();
        let dev_options: Vec<Vec<u64>> = if halves {
            let floor: Vec<u64> = rest.iter().map(|r| r / 2).collect();
            let odd: Vec<usize> = (0..rest.len()).filter(|&i| rest[i] % 2 == 1).collect();
            let extra = (global[1].saturating_sub(floor.iter().sum()) as usize).min(odd.len());
            combinations(odd.len(), extra)
                .into_iter()
                .map(|pick| {
                    let mut dev = floor.clone();
                    for &c in &pick {
                        dev[odd[c]] += 1;
                    }
                    dev
                })
                .collect()
        } else {
            vec![rest.clone()]
        };
        for dev in dev_options {
            let s = score(&train, &dev);
            if best.as_ref().is_none_or(|(b, _, _)| s < *b) {
                best = Some((s, train.clone(), dev));
            }
        }
    }
    let (_, train, dev) = best.expect("at least one allocation");
    (train, dev)
}

/// Two-stage stratified split: `train_fraction` of every stratum goes to
/// train, the rest is halved into dev and holdout.
///
/// Global part sizes come from largest-remainder apportionment of the whole
/// dataset (ties to the earlier part). Per-stratum quotas are floors or
/// ceilings of the exact shares, see [`allocate_quotas`]. Each stratum, in
/// ordinal order, is then shuffled with one SplitMix64 stream seeded by
/// `spec.seed` and cut into its quotas. Every part keeps the input row
/// order.
pub fn stratified_split(dataset: &Dataset, spec: &SplitSpec) -> Result<Split, CorpusError> {
    if dataset.role() != DatasetRole::Full {
        return Err(CorpusError::WrongRole(dataset.role()));
    }
    if dataset.len() < 10 {
        return Err(CorpusError::TooSmall(dataset.len()));
    }

    let mut strata: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, c) in dataset.comments().iter().enumerate() {
        strata.entry(spec.strat_key.stratum_of(c)?).or_default().push(i);
    }

    let (p, q) = (spec.train_fraction.num, spec.train_fraction.den);
    let (weights, den) =
        if spec.remainder_halves { (vec![2 * p, q - p, q - p], 2 * q) } else { (vec![p, q - p, 0], q) };
    let n = dataset.len() as u64;
    let global = apportion(n, &weights, den);

    let sizes: Vec<u64> = strata.values().map(|v| v.len() as u64).collect();
    let keyed = spec.strat_key.keyed_subtasks();
    let bits: Vec<Vec<bool>> =
        strata.keys().map(|&ordinal| keyed.iter().map(|s| spec.strat_key.stratum_bit(ordinal, *s)).collect()).collect();
    let (train, dev) = allocate_quotas(&sizes, &bits, &weights, den, &global, spec.remainder_halves);
    let rest: Vec<u64> = sizes.iter().zip(&train).map(|(s, t)| s - t).collect();

    let mut counts = Vec::with_capacity(sizes.len());
    for (i, (ordinal, size)) in strata.keys().zip(&sizes).enumerate() {
        let holdout = rest[i] - dev[i];
        let starved = train[i] == 0 || dev[i] == 0 || (spec.remainder_halves && holdout == 0);
        if starved {
            return Err(CorpusError::EmptyStratum {
                stratum: spec.strat_key.stratum_name(*ordinal),
                size: *size as usize,
            });
        }
        counts.push(StratumCounts {
            stratum: spec.strat_key.stratum_name(*ordinal),
            total: *size as usize,
            train: train[i] as usize,
            dev: dev[i] as usize,
            holdout: holdout as usize,
        });
    }

    // 0 = train, 1 = dev, 2 = holdout
    let mut part_of = vec![0u8; dataset.len()];
    let mut rng = SplitMix64::new(spec.seed);
    for (i, members) in strata.values().enumerate() {
        let mut shuffled = members.clone();
        rng.shuffle(&mut shuffled);
        let (t, d) = (train[i] as usize, dev[i] as usize);
        for (pos, &row) in shuffled.iter().enumerate() {
            part_of[row] = if pos < t {
                0
            } else if pos < t + d {
                1
            } else {
                2
            };
        }
    }

    let mut parts: [Vec<Comment>; 3] = Default::default();
    for (row, c) in dataset.comments().iter().enumerate() {
        parts[part_of[row] as usize].push(c.clone());
    }
    let [train_rows, dev_rows, holdout_rows] = parts;
    Ok(Split {
        train: Dataset { comments: train_rows, role: DatasetRole::Train },
        dev: Dataset { comments: dev_rows, role: DatasetRole::Dev },
        holdout: Dataset { comments: holdout_rows, role: DatasetRole::Holdout },
        manifest: SplitManifest {
            seed: spec.seed,
            train_fraction: spec.train_fraction,
            remainder_halves: spec.remainder_halves,
            strat_key: spec.strat_key,
            total: dataset.len(),
            strata: counts,
        },
    })
}
