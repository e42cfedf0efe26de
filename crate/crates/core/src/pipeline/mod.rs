//! Staging datasets for one- and two-stage seq2seq training and turning
//! model predictions back into programs.
//!
//! Notation: `y` is the program, `z_r` its reversible IR, `z_l` its lossy IR
//! and `z_lr` the lossy IR of `z_r`.

mod formalism;
pub mod io;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use formalism::{Formalism, IrContext, ProgramError};

use crate::sparql::{RelationDictionary, RirOptions};

pub const DEFAULT_SEPARATOR: &str = " ; ";
pub const DEFAULT_CAT_BUDGET: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PipelineMode {
    Baseline,
    Rir,
    LirD,
    LirI,
    LirDRir,
    LirIRir,
    LirOracle,
    LirCat,
    Varified,
}

impl PipelineMode {
    pub const ALL: [PipelineMode; 9] = [
        PipelineMode::Baseline,
        PipelineMode::Rir,
        PipelineMode::LirD,
        PipelineMode::LirI,
        PipelineMode::LirDRir,
        PipelineMode::LirIRir,
        PipelineMode::LirOracle,
        PipelineMode::LirCat,
        PipelineMode::Varified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PipelineMode::Baseline => "baseline",
            PipelineMode::Rir => "rir",
            PipelineMode::LirD => "lir-d",
            PipelineMode::LirI => "lir-i",
            PipelineMode::LirDRir => "lir-d-rir",
            PipelineMode::LirIRir => "lir-i-rir",
            PipelineMode::LirOracle => "lir-oracle",
            PipelineMode::LirCat => "lir-cat",
            PipelineMode::Varified => "varified",
        }
    }

    /// Modes whose final program comes from a second model conditioned on `(x ; z)`.
    pub fn is_two_stage(self) -> bool {
        matches!(
            self,
            PipelineMode::LirD
                | PipelineMode::LirI
                | PipelineMode::LirDRir
                | PipelineMode::LirIRir
                | PipelineMode::LirOracle
        )
    }

    /// Modes whose last model predicts `z_r` rather than `y`.
    pub fn predicts_rir(self) -> bool {
        matches!(self, PipelineMode::Rir | PipelineMode::LirDRir | PipelineMode::LirIRir)
    }
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PipelineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PipelineMode::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = PipelineMode::ALL.iter().map(|m| m.as_str()).collect();
            format!("unknown mode `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    pub x: String,
    pub y: String,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub formalism: Formalism,
    pub rir: RirOptions,
    pub dict: Option<RelationDictionary>,
    pub separator: String,
    /// LIR-CAT targets longer than this many whitespace tokens are counted.
    pub cat_budget: usize,
}

impl PipelineConfig {
    pub fn new(formalism: Formalism) -> Self {
        PipelineConfig {
            formalism,
            rir: RirOptions::default(),
            dict: None,
            separator: DEFAULT_SEPARATOR.to_string(),
            cat_budget: DEFAULT_CAT_BUDGET,
        }
    }

    /// Build the relation dictionary from the programs of `records`.
    /// Records that fail to parse are ignored here and quarantined later.
    pub fn with_dictionary_from(mut self, records: &[ExampleRecord]) -> Result<Self, PipelineError> {
        let parsed: Vec<_> = records
            .iter()
            .filter_map(|r| crate::sparql::parse_sparql(&r.y).ok())
            .collect();
        self.dict = Some(RelationDictionary::build(&parsed).map_err(ProgramError::from)?);
        Ok(self)
    }

    pub fn ir(&self) -> IrContext<'_> {
        IrContext {
            formalism: self.formalism,
            rir: self.rir,
            dict: self.dict.as_ref(),
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.separator.trim().is_empty() {
            return Err(PipelineError::EmptySeparator);
        }
        if self.formalism == Formalism::Sparql && self.rir.shorten_relations && self.dict.is_none() {
            return Err(ProgramError::MissingDictionary.into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("mode {0} has no second stage")]
    NoStageTwo(PipelineMode),
    #[error("separator must contain a non-space character")]
    EmptySeparator,
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("prediction for unknown id `{0}`")]
    UnknownId(String),
    #[error(transparent)]
    Program(#[from] ProgramError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagePair {
    pub id: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuarantineEntry {
    pub id: String,
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Staged {
    pub pairs: Vec<StagePair>,
    pub quarantined: Vec<QuarantineEntry>,
    /// LIR-CAT targets over the length budget (kept, not truncated).
    pub over_budget: usize,
}

/// Gold representations of one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldViews {
    pub y: String,
    pub z_r: String,
    pub z_l: String,
    pub z_lr: String,
}

impl GoldViews {
    pub fn compute(cfg: &PipelineConfig, r: &ExampleRecord) -> Result<Self, ProgramError> {
        let ir = cfg.ir();
        let y = ir.check_program(&r.y)?;
        let z_r = ir.to_rir(&r.x, &y)?;
        let z_l = ir.to_lir(&y)?;
        let z_lr = ir.rir_to_lir(&z_r)?;
        Ok(GoldViews { y, z_r, z_l, z_lr })
    }
}

fn check_ids(records: &[ExampleRecord]) -> Result<(), PipelineError> {
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(PipelineError::DuplicateId(r.id.clone()));
        }
    }
    Ok(())
}

fn join(x: &str, sep: &str, z: &str) -> String {
    format!("{x}{sep}{z}")
}

fn stage1_target(mode: PipelineMode, cfg: &PipelineConfig, r: &ExampleRecord) -> Result<String, ProgramError> {
    let ir = cfg.ir();
    let g = GoldViews::compute(cfg, r)?;
    Ok(match mode {
        PipelineMode::Baseline | PipelineMode::LirI => r.y.clone(),
        PipelineMode::Rir | PipelineMode::LirIRir => g.z_r,
        PipelineMode::LirD | PipelineMode::LirOracle => g.z_l,
        PipelineMode::LirDRir => g.z_lr,
        PipelineMode::LirCat => join(&g.z_l, &cfg.separator, &r.y),
        PipelineMode::Varified => ir.varify(&g.y)?,
    })
}

fn stage2_pair(mode: PipelineMode, cfg: &PipelineConfig, r: &ExampleRecord) -> Result<(String, String), ProgramError> {
    let g = GoldViews::compute(cfg, r)?;
    Ok(if mode.predicts_rir() {
        (join(&r.x, &cfg.separator, &g.z_lr), g.z_r)
    } else {
        (join(&r.x, &cfg.separator, &g.z_l), r.y.clone())
    })
}

fn stage(
    records: &[ExampleRecord],
    stage: &str,
    f: impl Fn(&ExampleRecord) -> Result<(String, String), ProgramError> + Sync,
) -> Staged {
    let results: Vec<_> = records.par_iter().map(|r| (r, f(r))).collect();
    let mut out = Staged::default();
    for (r, res) in results {
        match res {
            Ok((source, target)) => out.pairs.push(StagePair {
                id: r.id.clone(),
                source,
                target,
            }),
            Err(e) => out.quarantined.push(QuarantineEntry {
                id: r.id.clone(),
                stage: stage.to_string(),
                reason: e.to_string(),
            }),
        }
    }
    out
}

/// Training pairs for the first (or only) model.
pub fn prepare_stage1(
    data: &[ExampleRecord],
    mode: PipelineMode,
    cfg: &PipelineConfig,
) -> Result<Staged, PipelineError> {
    cfg.validate()?;
    check_ids(data)?;
    let mut staged = stage(data, "stage1", |r| Ok((r.x.clone(), stage1_target(mode, cfg, r)?)));
    if mode == PipelineMode::LirCat {
        staged.over_budget = staged
            .pairs
            .iter()
            .filter(|p| p.target.split_whitespace().count() > cfg.cat_budget)
            .count();
    }
    Ok(staged)
}

/// Training pairs `(x ; z) -> y` (or `-> z_r`) for the second model.
pub fn prepare_stage2(
    data: &[ExampleRecord],
    mode: PipelineMode,
    cfg: &PipelineConfig,
) -> Result<Staged, PipelineError> {
    if !mode.is_two_stage() {
        return Err(PipelineError::NoStageTwo(mode));
    }
    cfg.validate()?;
    check_ids(data)?;
    Ok(stage(data, "stage2", |r| stage2_pair(mode, cfg, r)))
}

/// A final program, or the reason the prediction could not be turned into one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub output: String,
    pub invalid: Option<String>,
}

impl Prediction {
    fn from_result(id: &str, res: Result<String, ProgramError>) -> Self {
        match res {
            Ok(output) => Prediction {
                id: id.to_string(),
                output,
                invalid: None,
            },
            Err(e) => Prediction {
                id: id.to_string(),
                output: String::new(),
                invalid: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage2Request {
    pub id: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stage1Output {
    Final(Vec<Prediction>),
    Stage2 {
        requests: Vec<Stage2Request>,
        /// Flagged predictions; they skip stage 2 and count as mismatches.
        invalid: Vec<Prediction>,
    },
}

/// Split a LIR-CAT output `z ; y` at the last separator.
fn split_cat<'a>(text: &'a str, sep: &str) -> Option<&'a str> {
    text.rfind(sep).map(|at| &text[at + sep.len()..])
}

fn cat_program(ir: &IrContext<'_>, text: &str, sep: &str) -> Result<String, ProgramError> {
    let y = split_cat(text, sep).ok_or_else(|| ProgramError::MissingSeparator(sep.to_string()))?;
    ir.check_program(y)
}

fn index_records(data: &[ExampleRecord]) -> Result<HashMap<&str, &ExampleRecord>, PipelineError> {
    let mut map = HashMap::with_capacity(data.len());
    for r in data {
        if map.insert(r.id.as_str(), r).is_some() {
            return Err(PipelineError::DuplicateId(r.id.clone()));
        }
    }
    Ok(map)
}

/// Turn stage-1 predictions into final programs (single-stage modes) or into
/// stage-2 sources (two-stage modes). `data` supplies the utterances.
pub fn postprocess_stage1(
    preds: &[(String, String)],
    data: &[ExampleRecord],
    mode: PipelineMode,
    cfg: &PipelineConfig,
) -> Result<Stage1Output, PipelineError> {
    cfg.validate()?;
    let records = index_records(data)?;
    let mut seen = HashSet::new();
    for (id, _) in preds {
        if !records.contains_key(id.as_str()) {
            return Err(PipelineError::UnknownId(id.clone()));
        }
        if !seen.insert(id.as_str()) {
            return Err(PipelineError::DuplicateId(id.clone()));
        }
    }
    let ir = cfg.ir();
    let sep = cfg.separator.as_str();
    if !mode.is_two_stage() {
        let finals = preds
            .par_iter()
            .map(|(id, out)| {
                let res = match mode {
                    PipelineMode::Baseline => ir.check_program(out),
                    PipelineMode::Rir => ir.from_rir(out),
                    PipelineMode::Varified => ir.unvarify(out),
                    PipelineMode::LirCat => cat_program(&ir, out, sep),
                    _ => unreachable!("two-stage modes handled below"),
                };
                Prediction::from_result(id, res)
            })
            .collect();
        return Ok(Stage1Output::Final(finals));
    }
    let results: Vec<(&String, Result<String, ProgramError>)> = preds
        .par_iter()
        .map(|(id, out)| {
            let z = match mode {
                PipelineMode::LirD | PipelineMode::LirDRir | PipelineMode::LirOracle => ir.check_lir(out),
                PipelineMode::LirI => ir.to_lir(out),
                PipelineMode::LirIRir => ir.rir_to_lir(out),
                _ => unreachable!("single-stage modes handled above"),
            };
            (id, z)
        })
        .collect();
    let mut requests = Vec::new();
    let mut invalid = Vec::new();
    for (id, z) in results {
        match z {
            Ok(z) => requests.push(Stage2Request {
                id: id.clone(),
                source: join(&records[id.as_str()].x, sep, &z),
            }),
            Err(e) => invalid.push(Prediction::from_result(id, Err(e))),
        }
    }
    Ok(Stage1Output::Stage2 { requests, invalid })
}

/// Final programs from stage-2 predictions. LIR-CAT outputs are also accepted.
pub fn finalize(
    stage2_preds: &[(String, String)],
    mode: PipelineMode,
    cfg: &PipelineConfig,
) -> Result<Vec<Prediction>, PipelineError> {
    if !mode.is_two_stage() && mode != PipelineMode::LirCat {
        return Err(PipelineError::NoStageTwo(mode));
    }
    cfg.validate()?;
    let ir = cfg.ir();
    Ok(stage2_preds
        .par_iter()
        .map(|(id, out)| {
            let res = if mode == PipelineMode::LirCat {
                cat_program(&ir, out, &cfg.separator)
            } else if mode.predicts_rir() {
                ir.from_rir(out)
            } else {
                ir.check_program(out)
            };
            Prediction::from_result(id, res)
        })
        .collect())
}
