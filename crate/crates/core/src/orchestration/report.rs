//! Evaluation reports and their two renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{EvalSplit, ReportFormat};
use crate::backends::{InputLanguage, ModelId};
use crate::ensemble::TiePolicy;
use crate::metrics::{ClassificationScores, ConfusionMatrix};
use crate::SubtaskId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Model,
    Ensemble,
}

/// Scores of one predictor (a single model or an ensemble run) on one
/// subtask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: ReportKind,
    pub model_id: ModelId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<u32>,
    /// Registry name for models.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_language: Option<InputLanguage>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<ModelId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_policy: Option<TiePolicy>,
    pub subtask: SubtaskId,
    pub evaluated_on: EvalSplit,
    pub comments: usize,
    pub confusion: ConfusionMatrix,
    pub scores: ClassificationScores,
    /// Comments decided by the tie policy.
    #[serde(default)]
    pub ties_broken: usize,
    /// Krippendorff's alpha over the members' ballots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member_alpha: Option<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl EvalReport {
    /// Run reports show members as `1,3,4,5,6`, model reports as `6) BERTweet`.
    pub fn label(&self) -> String {
        match self.kind {
            ReportKind::Ensemble => self.members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","),
            ReportKind::Model if self.name.is_empty() => format!("{})", self.model_id),
            ReportKind::Model => format!("{}) {}", self.model_id, self.name),
        }
    }
}

/// Four decimals, leading zero dropped: `.6810`, `1.0000`, `-.0312`.
pub fn format_score(x: f64) -> String {
    let s = format!("{x:.4}");
    if let Some(rest) = s.strip_prefix("0.") {
        format!(".{rest}")
    } else if let Some(rest) = s.strip_prefix("-0.") {
        format!("-.{rest}")
    } else {
        s
    }
}

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            let _ = write!(line, "{cell:<w$}", w = widths[c]);
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn render_group(out: &mut String, kind: ReportKind, subtask: SubtaskId, entries: &[&EvalReport]) {
    let split = entries[0].evaluated_on;
    let noun = match kind {
        ReportKind::Model => "Classifier",
        ReportKind::Ensemble => "Ensemble",
    };
    let _ = writeln!(out, "{noun} result for subtask {} ({subtask})", subtask.ordinal());
    out.push('\n');
    let metric = |m: &str| format!("macro {m}_{split}");
    let mut rows = Vec::with_capacity(entries.len() + 1);
    let mut header = match kind {
        ReportKind::Model => vec!["Classifier".to_string(), "Language".to_string()],
        ReportKind::Ensemble => vec!["Run".to_string(), "Ensemble".to_string()],
    };
    header.extend([metric("P"), metric("R"), metric("F1")]);
    rows.push(header);
    for e in entries {
        let mut row = match kind {
            ReportKind::Model => {
                vec![e.label(), e.input_language.map(|l| l.to_string()).unwrap_or_default()]
            }
            ReportKind::Ensemble => vec![e.run_id.map(|r| r.to_string()).unwrap_or_default(), e.label()],
        };
        row.extend([
            format_score(e.scores.macro_precision),
            format_score(e.scores.macro_recall),
            format_score(e.scores.macro_f1),
        ]);
        rows.push(row);
    }
    out.push_str(&table(&rows));

    let mut notes = Vec::new();
    for e in entries {
        let who = match e.run_id {
            Some(r) => format!("run {r}"),
            None => format!("model {}", e.model_id),
        };
        if let Some(alpha) = e.member_alpha {
            notes.push(format!("{who}: member agreement (Krippendorff's alpha) {}", format_score(alpha)));
        }
        if e.ties_broken > 0 {
            let policy = e.tie_policy.map(|p| tie_policy_name(&p)).unwrap_or_default();
            notes.push(format!("{who}: {} tie(s) broken by {policy}", e.ties_broken));
        }
    }
    if !notes.is_empty() {
        out.push('\n');
        for n in notes {
            let _ = writeln!(out, "{n}");
        }
    }
    let warnings: Vec<&String> = entries.iter().flat_map(|e| &e.warnings).collect();
    if !warnings.is_empty() {
        out.push('\n');
        for w in warnings {
            let _ = writeln!(out, "warning: {w}");
        }
    }
}

fn tie_policy_name(p: &TiePolicy) -> String {
    match p {
        TiePolicy::ErrorOnTie => "error_on_tie".into(),
        TiePolicy::FavorNegative => "favor_negative".into(),
        TiePolicy::FavorPositive => "favor_positive".into(),
        TiePolicy::SeededRandom(seed) => format!("seeded_random({seed})"),
    }
}

/// Renders reports in input order, one table per (kind, subtask) group.
///
/// # Panics
/// On an empty slice.
pub fn render_report(reports: &[EvalReport], format: ReportFormat) -> String {
    assert!(!reports.is_empty(), "render_report needs at least one entry");
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
            s.push('\n');
            s
        }
        ReportFormat::Table => {
            let mut groups: Vec<((ReportKind, SubtaskId), Vec<&EvalReport>)> = Vec::new();
            for r in reports {
                let key = (r.kind, r.subtask);
                match groups.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, g)) => g.push(r),
                    None => groups.push((key, vec![r])),
                }
            }
            let mut out = String::new();
            for (i, ((kind, subtask), entries)) in groups.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                render_group(&mut out, *kind, *subtask, entries);
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ClassScores;

    fn entry(run: u32, members: &[u32], p: f64, r: f64, f1: f64) -> EvalReport {
        let zero = ClassScores { precision: 0.0, recall: 0.0, f1: 0.0 };
        EvalReport {
            kind: ReportKind::Ensemble,
            model_id: ModelId::for_ensemble(run),
            run_id: Some(run),
            name: String::new(),
            input_language: None,
            members: members.iter().map(|m| ModelId(*m)).collect(),
            tie_policy: Some(TiePolicy::ErrorOnTie),
            subtask: SubtaskId::Toxic,
            evaluated_on: EvalSplit::Test,
            comments: 0,
            confusion: ConfusionMatrix::default(),
            scores: ClassificationScores {
                class_0: zero,
                class_1: zero,
                macro_precision: p,
                macro_recall: r,
                macro_f1: f1,
            },
            ties_broken: 0,
            member_alpha: None,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn score_formatting() {
        assert_eq!(format_score(0.68104), ".6810");
        assert_eq!(format_score(1.0), "1.0000");
        assert_eq!(format_score(0.0), ".0000");
        assert_eq!(format_score(-0.03119), "-.0312");
    }

    #[test]
    fn rows_follow_input_order() {
        let reports = [entry(3, &[1, 2, 3], 0.5, 0.5, 0.5), entry(1, &[4, 5, 6], 1.0, 1.0, 1.0)];
        let text = render_report(&reports, ReportFormat::Table);
        let rows: Vec<&str> = text.lines().skip(3).take(2).collect();
        assert!(rows[0].starts_with("3    1,2,3"), "{text}");
        assert!(rows[1].ends_with("1.0000        1.0000        1.0000"), "{text}");
    }

    #[test]
    fn warnings_are_listed() {
        let mut e = entry(1, &[1], 0.5, 0.5, 0.5);
        e.warnings.push("degenerate predictor: model 10".into());
        let text = render_report(&[e], ReportFormat::Table);
        assert_eq!(text.matches("warning: degenerate predictor").count(), 1);
    }

    #[test]
    fn json_round_trips() {
        let reports = vec![entry(2, &[1, 2, 3], 0.71834, 0.66351, 0.68978)];
        let text = render_report(&reports, ReportFormat::Json);
        let back: Vec<EvalReport> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, reports);
    }
}
