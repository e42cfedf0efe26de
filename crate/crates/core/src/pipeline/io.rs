//! Dataset, staging and prediction file formats.
//!
//! TSV fields escape `\`, tab, newline and carriage return with a backslash,
//! so multi-line programs survive one-record-per-line files.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use super::{ExampleRecord, Prediction, QuarantineEntry, Stage2Request, StagePair};
use crate::scan::ActionSeq;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    /// `{"id": ..., "x": ..., "y": ...}` per line.
    Jsonl,
    /// `x <TAB> y` per line; ids are line indices.
    Tsv,
    /// SCAN `IN: <command> OUT: <actions>` per line; ids are line indices.
    ScanText,
}

impl RecordFormat {
    pub fn from_path(path: &Path) -> RecordFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json") => RecordFormat::Jsonl,
            Some("tsv") => RecordFormat::Tsv,
            _ => RecordFormat::ScanText,
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn escape_field(s: &str) -> String {
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

pub fn unescape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn tsv_row(line: usize, l: &str, columns: usize) -> Result<Vec<String>, IoError> {
    let fields: Vec<String> = l.split('\t').map(unescape_field).collect();
    if fields.len() != columns {
        return Err(IoError::Format {
            line,
            message: format!("expected {columns} tab-separated columns, found {}", fields.len()),
        });
    }
    Ok(fields)
}

fn tsv_line(fields: &[&str]) -> String {
    let mut line = fields.iter().map(|f| escape_field(f)).collect::<Vec<_>>().join("\t");
    line.push('\n');
    line
}

pub fn parse_records(text: &str, format: RecordFormat) -> Result<Vec<ExampleRecord>, IoError> {
    let mut out = Vec::new();
    for (idx, (line, l)) in content_lines(text).enumerate() {
        let record = match format {
            RecordFormat::Jsonl => serde_json::from_str(l).map_err(|source| IoError::Json { line, source })?,
            RecordFormat::Tsv => {
                let mut f = tsv_row(line, l, 2)?;
                let y = f.pop().unwrap_or_default();
                let x = f.pop().unwrap_or_default();
                ExampleRecord {
                    id: idx.to_string(),
                    x,
                    y,
                }
            }
            RecordFormat::ScanText => {
                let (x, y) = parse_scan_line(l).ok_or_else(|| IoError::Format {
                    line,
                    message: "expected `IN: <command> OUT: <actions>`".into(),
                })?;
                ExampleRecord {
                    id: idx.to_string(),
                    x,
                    y,
                }
            }
        };
        out.push(record);
    }
    Ok(out)
}

/// Split a SCAN line; `I_JUMP`-style action names become `JUMP`.
fn parse_scan_line(l: &str) -> Option<(String, String)> {
    let rest = l.trim().strip_prefix("IN:")?;
    let (x, y) = rest.split_once("OUT:")?;
    let x = x.split_whitespace().collect::<Vec<_>>().join(" ");
    let y = match ActionSeq::parse(y) {
        Ok(seq) => seq.to_string(),
        // left as-is so the record is quarantined with the parser's reason
        Err(_) => y.split_whitespace().collect::<Vec<_>>().join(" "),
    };
    Some((x, y))
}

pub fn read_records(path: &Path) -> Result<Vec<ExampleRecord>, IoError> {
    parse_records(&read_file(path)?, RecordFormat::from_path(path))
}

pub fn render_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("plain structs serialize"));
        out.push('\n');
    }
    out
}

pub fn render_stage_pairs(pairs: &[StagePair]) -> String {
    pairs.iter().map(|p| tsv_line(&[&p.id, &p.source, &p.target])).collect()
}

pub fn parse_stage_pairs(text: &str) -> Result<Vec<StagePair>, IoError> {
    content_lines(text)
        .map(|(line, l)| {
            let mut f = tsv_row(line, l, 3)?.into_iter();
            Ok(StagePair {
                id: f.next().unwrap_or_default(),
                source: f.next().unwrap_or_default(),
                target: f.next().unwrap_or_default(),
            })
        })
        .collect()
}

pub fn render_requests(requests: &[Stage2Request]) -> String {
    requests.iter().map(|r| tsv_line(&[&r.id, &r.source])).collect()
}

/// Prediction files are `id <TAB> output`. Flagged predictions are written
/// with an empty output.
pub fn render_predictions(preds: &[Prediction]) -> String {
    preds.iter().map(|p| tsv_line(&[&p.id, &p.output])).collect()
}

pub fn render_pairs(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(a, b)| tsv_line(&[a, b])).collect()
}

/// Two-column `(id, output)` rows. A line with no tab is an empty output.
pub fn parse_predictions(text: &str) -> Result<Vec<(String, String)>, IoError> {
    let mut out = Vec::new();
    for (line, l) in text.lines().enumerate() {
        let l = l.strip_suffix('\r').unwrap_or(l);
        if l.is_empty() {
            continue;
        }
        let (id, output) = l.split_once('\t').unwrap_or((l, ""));
        if output.contains('\t') {
            return Err(IoError::Format {
                line: line + 1,
                message: "expected 2 tab-separated columns".into(),
            });
        }
        out.push((unescape_field(id), unescape_field(output)));
    }
    Ok(out)
}

pub fn parse_quarantine(text: &str) -> Result<Vec<QuarantineEntry>, IoError> {
    content_lines(text)
        .map(|(line, l)| serde_json::from_str(l).map_err(|source| IoError::Json { line, source }))
        .collect()
}
