//! Exact-match accuracy, the share of structurally new programs and average
//! program length.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{Formalism, IrContext};
use crate::sparql::RirOptions;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("prediction ids do not match gold ids ({missing} missing, {extra} unexpected; first: `{example}`)")]
    IdMismatch {
        missing: usize,
        extra: usize,
        example: String,
    },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("gold program `{id}` does not parse: {reason}")]
    GoldUnparseable { id: String, reason: String },
    #[error("no programs to measure")]
    Empty,
    #[error("vocabulary file: {0}")]
    Vocab(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Correct,
    Incorrect,
    /// The prediction does not parse; scored as incorrect.
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub exact_match: f64,
    pub n_total: usize,
    pub n_correct: usize,
    pub n_invalid: usize,
    pub per_example: Vec<(String, Verdict)>,
}

fn context(formalism: Formalism) -> IrContext<'static> {
    IrContext {
        formalism,
        rir: RirOptions::none(),
        dict: None,
    }
}

fn id_map(rows: &[(String, String)]) -> Result<HashMap<&str, &str>, MetricsError> {
    let mut map = HashMap::with_capacity(rows.len());
    for (id, text) in rows {
        if map.insert(id.as_str(), text.as_str()).is_some() {
            return Err(MetricsError::DuplicateId(id.clone()));
        }
    }
    Ok(map)
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Score `preds` against `golds` (both `(id, program)`), in gold order.
/// SPARQL is compared after deduplicating and sorting conjuncts; SQL and
/// SCAN token by token.
pub fn exact_match(
    preds: &[(String, String)],
    golds: &[(String, String)],
    formalism: Formalism,
) -> Result<EvalReport, MetricsError> {
    let pred_map = id_map(preds)?;
    let gold_map = id_map(golds)?;
    let missing: Vec<&str> = gold_map
        .keys()
        .filter(|k| !pred_map.contains_key(*k))
        .copied()
        .collect();
    let extra: Vec<&str> = pred_map
        .keys()
        .filter(|k| !gold_map.contains_key(*k))
        .copied()
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut example: Vec<&str> = missing.iter().chain(&extra).copied().collect();
        example.sort_unstable();
        return Err(MetricsError::IdMismatch {
            missing: missing.len(),
            extra: extra.len(),
            example: example[0].to_string(),
        });
    }
    let ir = context(formalism);
    let verdicts: Vec<(String, Verdict)> = golds
        .par_iter()
        .map(|(id, gold)| {
            let gold = ir.normalize(gold).map_err(|e| MetricsError::GoldUnparseable {
                id: id.clone(),
                reason: e.to_string(),
            })?;
            let verdict = match ir.normalize(pred_map[id.as_str()]) {
                Err(_) => Verdict::Invalid,
                Ok(p) if p == gold => Verdict::Correct,
                Ok(_) => Verdict::Incorrect,
            };
            Ok((id.clone(), verdict))
        })
        .collect::<Result<_, MetricsError>>()?;
    let n_correct = verdicts.iter().filter(|(_, v)| *v == Verdict::Correct).count();
    let n_invalid = verdicts.iter().filter(|(_, v)| *v == Verdict::Invalid).count();
    Ok(EvalReport {
        exact_match: percent(n_correct, verdicts.len()),
        n_total: verdicts.len(),
        n_correct,
        n_invalid,
        per_example: verdicts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    /// Percentage of parseable eval programs whose signature is absent from train.
    pub new_structures: f64,
    pub n_eval: usize,
    pub n_new: usize,
    pub train_unparseable: usize,
    pub eval_unparseable: usize,
}

fn signatures(items: &[String], ir: &IrContext<'_>) -> (Vec<String>, usize) {
    let results: Vec<_> = items.par_iter().map(|z| ir.structure_signature(z).ok()).collect();
    let bad = results.iter().filter(|r| r.is_none()).count();
    (results.into_iter().flatten().collect(), bad)
}

/// Share of eval items (reversible IRs, or programs for the baseline) whose
/// structure signature never occurs in the train items.
pub fn new_structure_rate(train: &[String], eval: &[String], formalism: Formalism) -> StructureReport {
    let ir = context(formalism);
    let (train_sigs, train_unparseable) = signatures(train, &ir);
    let (eval_sigs, eval_unparseable) = signatures(eval, &ir);
    let seen: HashSet<&String> = train_sigs.iter().collect();
    let n_new = eval_sigs.iter().filter(|s| !seen.contains(s)).count();
    StructureReport {
        new_structures: percent(n_new, eval_sigs.len()),
        n_eval: eval_sigs.len(),
        n_new,
        train_unparseable,
        eval_unparseable,
    }
}

/// Subword vocabulary for greedy longest-match segmentation.
///
/// Files hold one piece per line (anything after a tab is ignored).
/// Continuation pieces are marked `##piece`; if the vocabulary instead
/// uses `▁` to mark word starts, that convention is used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    pieces: HashSet<String>,
    word_start_marker: bool,
    max_chars: usize,
}

const WORD_START: char = '\u{2581}';

impl Vocab {
    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Self {
        let pieces: HashSet<String> = lines
            .into_iter()
            .map(|l| l.split('\t').next().unwrap_or("").trim_end_matches('\r'))
            .filter(|p| !p.is_empty())
            .map(str::to_string)
            .collect();
        let word_start_marker = pieces.iter().any(|p| p.starts_with(WORD_START));
        let max_chars = pieces.iter().map(|p| p.chars().count()).max().unwrap_or(1);
        Vocab {
            pieces,
            word_start_marker,
            max_chars,
        }
    }

    pub fn load(path: &Path) -> Result<Self, MetricsError> {
        Ok(Self::from_lines(std::fs::read_to_string(path)?.lines()))
    }

    fn lookup(&self, piece: &str, first: bool) -> bool {
        match (self.word_start_marker, first) {
            (true, true) => self.pieces.contains(&format!("{WORD_START}{piece}")),
            (true, false) | (false, true) => self.pieces.contains(piece),
            (false, false) => self.pieces.contains(&format!("##{piece}")),
        }
    }

    /// Number of pieces for one whitespace-free word. Characters that start
    /// no known piece count as one piece each.
    pub fn count_word(&self, word: &str) -> usize {
        let chars: Vec<char> = word.chars().collect();
        let mut i = 0;
        let mut n = 0;
        while i < chars.len() {
            let longest = (1..=self.max_chars.min(chars.len() - i))
                .rev()
                .find(|&len| self.lookup(&chars[i..i + len].iter().collect::<String>(), i == 0));
            i += longest.unwrap_or(1);
            n += 1;
        }
        n
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Tokenizer {
    #[default]
    Whitespace,
    WordPiece(Vocab),
}

impl Tokenizer {
    pub fn count(&self, text: &str) -> usize {
        match self {
            Tokenizer::Whitespace => text.split_whitespace().count(),
            Tokenizer::WordPiece(v) => text.split_whitespace().map(|w| v.count_word(w)).sum(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Tokenizer::Whitespace => "whitespace",
            Tokenizer::WordPiece(_) => "wordpiece",
        }
    }
}

pub fn avg_length(programs: &[String], tokenizer: &Tokenizer) -> Result<f64, MetricsError> {
    if programs.is_empty() {
        return Err(MetricsError::Empty);
    }
    let total: usize = programs.par_iter().map(|p| tokenizer.count(p)).sum();
    Ok(total as f64 / programs.len() as f64)
}
