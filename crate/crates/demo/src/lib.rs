//! Browser bindings for three pieces of the harness: majority voting over a
//! ballot grid, macro scores from a confusion matrix, and nominal
//! Krippendorff's alpha.
//!
//! Every export takes and returns plain strings and numbers, so the same
//! functions are exercised natively by the tests.

use vote_harness::backends::{ModelId, Prediction, PredictionSet};
use vote_harness::ensemble::{hard_vote, EnsembleRun, TiePolicy};
use vote_harness::metrics::{classification_scores, krippendorff_alpha, ConfusionMatrix, RatingsMatrix};
use vote_harness::{Label, SubtaskId};
use wasm_bindgen::prelude::*;

fn parse_policy(policy: &str) -> Result<TiePolicy, String> {
    match policy.trim() {
        "error_on_tie" => Ok(TiePolicy::ErrorOnTie),
        "favor_negative" | "" => Ok(TiePolicy::FavorNegative),
        "favor_positive" => Ok(TiePolicy::FavorPositive),
        other => match other.strip_prefix("seeded_random:") {
            Some(seed) => {
                seed.trim().parse().map(TiePolicy::SeededRandom).map_err(|e| format!("bad seed `{seed}`: {e}"))
            }
            None => Err(format!(
                "unknown tie policy `{other}`; use error_on_tie, favor_negative, favor_positive or seeded_random:<seed>"
            )),
        },
    }
}

fn parse_label(cell: &str, line: usize) -> Result<Label, String> {
    cell.parse().map_err(|_| format!("line {line}: `{cell}` is not 0 or 1"))
}

/// Rows of whitespace-separated 0/1 cells; blank lines and `#` comments are skipped.
fn grid(text: &str) -> Vec<(usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, cells)| !cells.is_empty())
        .collect()
}

/// Votes each row of `ballots` (one column per member) under `policy`.
/// Returns one line per row: decision, positive count and a `tie` marker.
#[wasm_bindgen]
pub fn vote(ballots: &str, policy: &str) -> Result<String, String> {
    let rows = grid(ballots);
    let Some((_, first)) = rows.first() else {
        return Err("no ballots".into());
    };
    let members = first.len();
    let mut columns: Vec<Vec<(String, Prediction)>> = vec![Vec::new(); members];
    for (line, cells) in &rows {
        if cells.len() != members {
            return Err(format!("line {line}: {} ballots, expected {members}", cells.len()));
        }
        for (m, cell) in cells.iter().enumerate() {
            columns[m].push((format!("row{line:06}"), Prediction::hard(parse_label(cell, *line)?)));
        }
    }
    let ids: Vec<ModelId> = (1..=members as u32).map(ModelId).collect();
    let run = EnsembleRun::new(1, ids.clone(), parse_policy(policy)?, SubtaskId::Toxic).map_err(|e| e.to_string())?;
    let sets = ids
        .iter()
        .zip(columns)
        .map(|(id, col)| PredictionSet::new(*id, SubtaskId::Toxic, "demo", col).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let outcome = hard_vote(&sets, &run).map_err(|e| e.to_string())?;
    let mut out = String::new();
    for t in &outcome.traces {
        let tie = if t.tie_broken { "  tie" } else { "" };
        out += &format!("{}  {}/{members}{tie}\n", t.decision, t.positive_count);
    }
    Ok(out)
}

/// Per-class and macro precision, recall and F1 as JSON.
#[wasm_bindgen]
pub fn scores(tp: u32, fp: u32, fn_: u32, tn: u32) -> String {
    let cm = ConfusionMatrix::new(tp.into(), fp.into(), fn_.into(), tn.into());
    serde_json::to_string_pretty(&classification_scores(&cm)).expect("scores serialize")
}

/// Nominal alpha for rows of ratings (one column per rater, `.` for a
/// missing rating).
#[wasm_bindgen]
pub fn alpha(ratings: &str) -> Result<f64, String> {
    let rows = grid(ratings);
    let raters = rows.first().map_or(0, |(_, c)| c.len());
    let mut cells = Vec::with_capacity(rows.len());
    for (line, row) in &rows {
        if row.len() != raters {
            return Err(format!("line {line}: {} ratings, expected {raters}", row.len()));
        }
        let parsed = row
            .iter()
            .map(|c| if *c == "." { Ok(None) } else { parse_label(c, *line).map(Some) })
            .collect::<Result<Vec<_>, _>>()?;
        cells.push(parsed);
    }
    let units = (0..cells.len()).map(|u| format!("u{u}")).collect();
    let raters = (0..raters).map(|r| format!("r{r}")).collect();
    let matrix = RatingsMatrix::new(units, raters, cells).map_err(|e| e.to_string())?;
    krippendorff_alpha(&matrix).map_err(|e| e.to_string())
}
