//! Prediction interchange files.
//!
//! ```text
//! #format=predictions/1<TAB>model_id=4<TAB>subtask=toxic<TAB>provenance=trainer run 7
//! c001<TAB>1<TAB>0.91
//! c002<TAB>0
//! ```
//!
//! The header is the first line and always starts with `#`; its fields are
//! `key=value` pairs separated by single tabs. `format`, `model_id` and
//! `subtask` are required and `provenance` is optional. In the provenance
//! value a backslash escapes `\\`, `\t`, `\n` and `\r`. Each following line
//! is `comment_id<TAB>label[<TAB>score]` with label `0`/`1` and a score in
//! `[0, 1]` written as the shortest decimal that parses back to the same
//! double. Comment ids may not contain tabs or line breaks. Canonical files
//! list records in ascending comment-id order and end every line with `\n`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::{BackendError, ModelId, Prediction, PredictionSet};
use crate::{Label, SubtaskId};

pub const FORMAT_TAG: &str = "predictions/1";

/// Reads and validates a prediction file, checking its header against the
/// model and subtask the caller expects.
pub fn load_predictions(
    path: &Path,
    expected_model: ModelId,
    expected_subtask: SubtaskId,
) -> Result<PredictionSet, BackendError> {
    let text = fs::read_to_string(path).map_err(|source| BackendError::Io { path: path.to_path_buf(), source })?;
    let set = parse_predictions(&text, &path.display().to_string())?;
    if set.model_id() != expected_model {
        return Err(BackendError::MetadataMismatch {
            field: "model_id",
            expected: expected_model.to_string(),
            found: set.model_id().to_string(),
        });
    }
    if set.subtask() != expected_subtask {
        return Err(BackendError::MetadataMismatch {
            field: "subtask",
            expected: expected_subtask.to_string(),
            found: set.subtask().to_string(),
        });
    }
    Ok(set)
}

/// Parses file contents. `default_provenance` is used when the header has
/// no provenance field.
pub fn parse_predictions(text: &str, default_provenance: &str) -> Result<PredictionSet, BackendError> {
    let mut lines = text.split('\n').enumerate();
    let (_, header) = lines
        .next()
        .filter(|(_, l)| !l.is_empty())
        .ok_or(BackendError::Format { line: 1, reason: "missing header".into() })?;
    let header = parse_header(header.strip_suffix('\r').unwrap_or(header))?;
    let provenance = header.provenance.unwrap_or_else(|| default_provenance.to_string());

    let mut records = Vec::new();
    let body: Vec<(usize, &str)> = lines.collect();
    let last = body.len().saturating_sub(1);
    for (pos, (idx, raw)) in body.into_iter().enumerate() {
        let line = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.is_empty() {
            if pos == last {
                break;
            }
            return Err(BackendError::Format { line, reason: "blank line".into() });
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(BackendError::Format {
                line,
                reason: format!("expected 2 or 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let id = fields[0];
        if id.is_empty() {
            return Err(BackendError::Format { line, reason: "empty comment id".into() });
        }
        let label = fields[1]
            .parse::<Label>()
            .map_err(|_| BackendError::LabelOutOfRange { line, value: fields[1].to_string() })?;
        let score = match fields.get(2) {
            Some(s) => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| BackendError::Format { line, reason: format!("score `{s}` is not a number") })?;
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(BackendError::Format { line, reason: format!("score `{s}` outside [0, 1]") });
                }
                Some(v)
            }
            None => None,
        };
        records.push((id.to_string(), Prediction { label, score }));
    }
    PredictionSet::new(header.model_id, header.subtask, provenance, records)
}

struct Header {
    model_id: ModelId,
    subtask: SubtaskId,
    provenance: Option<String>,
}

fn parse_header(line: &str) -> Result<Header, BackendError> {
    let bad = |reason: String| BackendError::Format { line: 1, reason };
    let body = line.strip_prefix('#').ok_or_else(|| bad("header must start with `#`".into()))?;
    let (mut format, mut model_id, mut subtask, mut provenance) = (None, None, None, None);
    for field in body.split('\t') {
        let (key, value) =
            field.split_once('=').ok_or_else(|| bad(format!("header field `{field}` is not key=value")))?;
        let slot = match key {
            "format" => &mut format,
            "model_id" => &mut model_id,
            "subtask" => &mut subtask,
            "provenance" => &mut provenance,
            other => return Err(bad(format!("unknown header field `{other}`"))),
        };
        if slot.replace(value).is_some() {
            return Err(bad(format!("header field `{key}` repeated")));
        }
    }
    match format {
        Some(FORMAT_TAG) => {}
        Some(other) => return Err(bad(format!("unsupported format `{other}`, expected `{FORMAT_TAG}`"))),
        None => return Err(bad("header lacks `format`".into())),
    }
    let model_id = model_id
        .ok_or_else(|| bad("header lacks `model_id`".into()))?
        .parse::<u32>()
        .map(ModelId)
        .map_err(|e| bad(format!("bad model_id: {e}")))?;
    let subtask = subtask
        .ok_or_else(|| bad("header lacks `subtask`".into()))?
        .parse::<SubtaskId>()
        .map_err(|e| bad(e.to_string()))?;
    let provenance = provenance.map(unescape).transpose().map_err(bad)?;
    Ok(Header { model_id, subtask, provenance })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(format!("bad escape `\\{}` in provenance", other.map(String::from).unwrap_or_default()))
            }
        }
    }
    Ok(out)
}

/// Canonical serialization.
pub fn write_predictions_to<W: Write>(set: &PredictionSet, mut out: W) -> io::Result<()> {
    let mut buf = String::new();
    let _ = writeln!(
        buf,
        "#format={FORMAT_TAG}\tmodel_id={}\tsubtask={}\tprovenance={}",
        set.model_id(),
        set.subtask(),
        escape(set.provenance())
    );
    for (id, p) in set.iter() {
        if id.contains(['\t', '\n', '\r']) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("comment id {id:?} contains a tab or newline"),
            ));
        }
        match p.score {
            Some(score) => {
                let _ = writeln!(buf, "{id}\t{}\t{score}", p.label);
            }
            None => {
                let _ = writeln!(buf, "{id}\t{}", p.label);
            }
        }
    }
    out.write_all(buf.as_bytes())
}

pub fn write_predictions(set: &PredictionSet, path: &Path) -> Result<(), BackendError> {
    let io_err = |source| BackendError::Io { path: path.to_path_buf(), source };
    let file = fs::File::create(path).map_err(io_err)?;
    write_predictions_to(set, io::BufWriter::new(file)).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIXTURE: &str = "#format=predictions/1\tmodel_id=5\tsubtask=toxic\tprovenance=fixture\n\
                           a\t1\t0.75\n\
                           b\t0\n\
                           c\t0\t0.125\n";

    fn canonical(set: &PredictionSet) -> String {
        let mut out = Vec::new();
        write_predictions_to(set, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn parses_three_line_fixture() {
        let set = parse_predictions(FIXTURE, "x").unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.model_id(), ModelId(5));
        assert_eq!(set.get("a"), Some(&Prediction::scored(Label::Positive, 0.75)));
        assert_eq!(set.get("b"), Some(&Prediction::hard(Label::Negative)));
        assert_eq!(set.provenance(), "fixture");
        assert_eq!(canonical(&set), FIXTURE);
    }

    #[test]
    fn label_two_is_out_of_range() {
        let text = "#format=predictions/1\tmodel_id=5\tsubtask=toxic\na\t2\n";
        assert!(matches!(parse_predictions(text, "x"), Err(BackendError::LabelOutOfRange { line: 2, .. })));
    }

    #[test]
    fn header_mismatch_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.tsv");
        fs::write(&path, FIXTURE.replace("model_id=5", "model_id=4")).unwrap();
        let err = load_predictions(&path, ModelId(5), SubtaskId::Toxic).unwrap_err();
        assert!(matches!(err, BackendError::MetadataMismatch { field: "model_id", .. }));
        fs::write(&path, FIXTURE).unwrap();
        let err = load_predictions(&path, ModelId(5), SubtaskId::Engaging).unwrap_err();
        assert!(matches!(err, BackendError::MetadataMismatch { field: "subtask", .. }));
        assert_eq!(load_predictions(&path, ModelId(5), SubtaskId::Toxic).unwrap().len(), 3);
    }

    #[test]
    fn malformed_files() {
        let cases = [
            "",
            "a\t1\n",
            "#format=predictions/2\tmodel_id=1\tsubtask=toxic\n",
            "#model_id=1\tsubtask=toxic\n",
            "#format=predictions/1\tmodel_id=x\tsubtask=toxic\n",
            "#format=predictions/1\tmodel_id=1\tsubtask=toxic\na\n",
            "#format=predictions/1\tmodel_id=1\tsubtask=toxic\na\t1\t0.5\textra\n",
            "#format=predictions/1\tmodel_id=1\tsubtask=toxic\na\t1\tNaN\n",
            "#format=predictions/1\tmodel_id=1\tsubtask=toxic\na\t1\t1.5\n",
            "#format=predictions/1\tmodel_id=1\tsubtask=toxic\na\t1\n\nb\t0\n",
        ];
        for text in cases {
            assert!(matches!(parse_predictions(text, "x"), Err(BackendError::Format { .. })), "{text:?}");
        }
        let dup = "#format=predictions/1\tmodel_id=1\tsubtask=toxic\na\t1\na\t0\n";
        assert!(matches!(parse_predictions(dup, "x"), Err(BackendError::DuplicateCommentId(_))));
    }

    #[test]
    fn missing_provenance_defaults_to_path() {
        let set = parse_predictions("#format=predictions/1\tmodel_id=1\tsubtask=engaging\n", "/tmp/p.tsv").unwrap();
        assert!(set.is_empty());
        assert_eq!(set.provenance(), "/tmp/p.tsv");
    }

    proptest! {
        #[test]
        fn canonical_files_round_trip(
            provenance in "[ -~\t\n\\\\]{0,20}",
            rows in proptest::collection::btree_map("[a-z0-9_]{1,8}", (any::<bool>(), proptest::option::of(0.0f64..=1.0)), 0..20),
        ) {
            let set = PredictionSet::new(
                ModelId(3),
                SubtaskId::FactClaiming,
                provenance,
                rows.into_iter().map(|(id, (l, s))| (id, Prediction { label: Label::from(l), score: s })),
            ).unwrap();
            let text = canonical(&set);
            let back = parse_predictions(&text, "unused").unwrap();
            prop_assert_eq!(&back, &set);
            prop_assert_eq!(canonical(&back), text);
        }
    }
}
