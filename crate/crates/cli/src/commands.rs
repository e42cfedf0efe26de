use std::io::Write;
use std::path::{Path, PathBuf};

use semir::metrics::{avg_length, exact_match, new_structure_rate, MetricsError, Tokenizer, Vocab};
use semir::pipeline::io::{
    parse_predictions, parse_quarantine, read_file, read_records, render_jsonl, render_pairs, render_predictions,
    render_requests, render_stage_pairs, write_file, IoError,
};
use semir::pipeline::{
    finalize, postprocess_stage1, prepare_stage1, prepare_stage2, PipelineError, Prediction, ProgramError,
    QuarantineEntry, Stage1Output,
};
use semir::sparql::{parse_sparql, DictError, RelationDictionary, RirOptions};
use semir::sql::{parse_sql, sql_template_signature};
use semir::{ExampleRecord, Formalism, PipelineConfig};
use serde_json::{json, Value};
use thiserror::Error;

use crate::{Command, Common, InOut, IrKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Dict(#[from] DictError),
    #[error("{0}")]
    Usage(String),
}

pub enum Outcome {
    Clean,
    /// Records were quarantined or flagged and `--strict` was given.
    Flagged(usize),
}

pub fn run(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Transform { common, ir, io } => transform(&common, ir, &io),
        Command::Invert { common, io } => invert(&common, &io),
        Command::Prepare {
            common,
            mode,
            stage,
            io,
        } => {
            let data = read_records(&io.input)?;
            let cfg = config(&common, Some(&data))?;
            let staged = if stage == 1 {
                prepare_stage1(&data, mode, &cfg)?
            } else {
                prepare_stage2(&data, mode, &cfg)?
            };
            emit(&io.output, &render_stage_pairs(&staged.pairs))?;
            if staged.over_budget > 0 {
                eprintln!("{} target(s) exceed {} tokens", staged.over_budget, cfg.cat_budget);
            }
            finish(&common, staged.pairs.len(), &staged.quarantined)
        }
        Command::Postprocess {
            common,
            mode,
            stage,
            data,
            carry,
            io,
        } => {
            let preds = parse_predictions(&read_file(&io.input)?)?;
            if stage == 1 {
                let data_path = data
                    .ok_or_else(|| CliError::Usage("postprocess --stage 1 needs --data with the utterances".into()))?;
                let records = read_records(&data_path)?;
                let cfg = config(&common, None)?;
                match postprocess_stage1(&preds, &records, mode, &cfg)? {
                    Stage1Output::Final(finals) => {
                        emit(&io.output, &render_predictions(&finals))?;
                        let flagged = flagged_entries(&finals, "postprocess");
                        finish(&common, finals.len() - flagged.len(), &flagged)
                    }
                    Stage1Output::Stage2 { requests, invalid } => {
                        emit(&io.output, &render_requests(&requests))?;
                        finish(&common, requests.len(), &flagged_entries(&invalid, "postprocess"))
                    }
                }
            } else {
                let cfg = config(&common, None)?;
                let mut finals = finalize(&preds, mode, &cfg)?;
                if let Some(path) = carry {
                    for q in parse_quarantine(&read_file(&path)?)? {
                        finals.push(Prediction {
                            id: q.id,
                            output: String::new(),
                            invalid: Some(q.reason),
                        });
                    }
                }
                emit(&io.output, &render_predictions(&finals))?;
                let flagged = flagged_entries(&finals, "finalize");
                finish(&common, finals.len() - flagged.len(), &flagged)
            }
        }
        Command::Evaluate { common, gold, mode, io } => {
            let preds = parse_predictions(&read_file(&io.input)?)?;
            let golds: Vec<(String, String)> = read_records(&gold)?.into_iter().map(|r| (r.id, r.y)).collect();
            let report = exact_match(&preds, &golds, common.formalism)?;
            let mut value = serde_json::to_value(&report).expect("report serializes");
            value["formalism"] = json!(common.formalism.as_str());
            value["mode"] = json!(mode.map(|m| m.as_str()));
            emit(&io.output, &to_json(&value))?;
            eprintln!(
                "exact match {:.2} ({} / {}, {} invalid)",
                report.exact_match, report.n_correct, report.n_total, report.n_invalid
            );
            Ok(Outcome::Clean)
        }
        Command::Stats {
            common,
            train,
            tokenizer,
            io,
        } => stats(&common, train.as_deref(), &tokenizer, &io),
    }
}

fn to_json(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    text
}

fn emit(path: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| IoError::File {
                    path: PathBuf::from("<stdout>"),
                    source,
                })?;
        }
    }
    Ok(())
}

fn finish(common: &Common, ok: usize, quarantined: &[QuarantineEntry]) -> Result<Outcome, CliError> {
    if let Some(path) = &common.quarantine {
        write_file(path, &render_jsonl(quarantined))?;
    }
    eprintln!("{ok} ok, {} quarantined", quarantined.len());
    Ok(if common.strict && !quarantined.is_empty() {
        Outcome::Flagged(quarantined.len())
    } else {
        Outcome::Clean
    })
}

fn flagged_entries(preds: &[Prediction], stage: &str) -> Vec<QuarantineEntry> {
    preds
        .iter()
        .filter_map(|p| {
            p.invalid.as_ref().map(|reason| QuarantineEntry {
                id: p.id.clone(),
                stage: stage.to_string(),
                reason: reason.clone(),
            })
        })
        .collect()
}

fn rir_options(common: &Common) -> RirOptions {
    RirOptions {
        merge_conjuncts: !common.no_merge,
        shorten_relations: !common.no_shorten,
        brackets: !common.no_brackets,
    }
}

/// Pipeline configuration. SPARQL relation shortening needs a dictionary:
/// it is loaded from `--dict`, or built from `records` (and saved to
/// `--dict` when that path does not exist yet).
fn config(common: &Common, records: Option<&[ExampleRecord]>) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::new(common.formalism);
    cfg.rir = rir_options(common);
    cfg.separator = common.sep.clone();
    if common.formalism != Formalism::Sparql || !cfg.rir.shorten_relations {
        return Ok(cfg);
    }
    cfg.dict = Some(match (&common.dict, records) {
        (Some(path), _) if path.exists() => RelationDictionary::load(path)?,
        (path, Some(records)) => {
            let parsed: Vec<_> = records.iter().filter_map(|r| parse_sparql(&r.y).ok()).collect();
            let dict = RelationDictionary::build(&parsed)?;
            if let Some(path) = path {
                dict.save(path)?;
            }
            dict
        }
        (_, None) => {
            return Err(CliError::Usage(
                "an existing --dict is required to expand shortened relations".into(),
            ))
        }
    });
    Ok(cfg)
}

fn transform(common: &Common, ir: IrKind, io: &InOut) -> Result<Outcome, CliError> {
    let data = read_records(&io.input)?;
    let cfg = config(common, Some(&data))?;
    let ctx = cfg.ir();
    let mut rows = Vec::with_capacity(data.len());
    let mut quarantined = Vec::new();
    for r in &data {
        let res: Result<String, ProgramError> = match ir {
            IrKind::Rir => ctx.to_rir(&r.x, &r.y),
            IrKind::Lir => ctx.to_lir(&r.y),
            IrKind::LirRir => ctx.to_rir(&r.x, &r.y).and_then(|z| ctx.rir_to_lir(&z)),
            IrKind::Varify => ctx.varify(&r.y),
            IrKind::Template => template(&cfg, &r.y),
        };
        match res {
            Ok(z) => rows.push((r.id.clone(), z)),
            Err(e) => quarantined.push(QuarantineEntry {
                id: r.id.clone(),
                stage: "transform".into(),
                reason: e.to_string(),
            }),
        }
    }
    emit(&io.output, &render_pairs(&rows))?;
    finish(common, rows.len(), &quarantined)
}

fn template(cfg: &PipelineConfig, y: &str) -> Result<String, ProgramError> {
    match cfg.formalism {
        Formalism::Sql => Ok(sql_template_signature(&parse_sql(y)?)),
        _ => cfg.ir().structure_signature(y),
    }
}

/// `(id, program)` rows of a prediction-style TSV, or `(id, y)` of a dataset.
fn read_programs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    if path.extension().is_some_and(|e| e == "tsv") {
        Ok(parse_predictions(&read_file(path)?)?)
    } else {
        Ok(read_records(path)?.into_iter().map(|r| (r.id, r.y)).collect())
    }
}

fn invert(common: &Common, io: &InOut) -> Result<Outcome, CliError> {
    let rows = parse_predictions(&read_file(&io.input)?)?;
    let cfg = config(common, None)?;
    let ctx = cfg.ir();
    let mut out = Vec::with_capacity(rows.len());
    let mut quarantined = Vec::new();
    for (id, z) in rows {
        match ctx.from_rir(&z) {
            Ok(y) => out.push((id, y)),
            Err(e) => quarantined.push(QuarantineEntry {
                id,
                stage: "invert".into(),
                reason: e.to_string(),
            }),
        }
    }
    emit(&io.output, &render_pairs(&out))?;
    finish(common, out.len(), &quarantined)
}

fn parse_tokenizer(spec: &str) -> Result<Tokenizer, CliError> {
    match spec.split_once(':') {
        None if spec == "whitespace" => Ok(Tokenizer::Whitespace),
        Some(("vocab", path)) => Ok(Tokenizer::WordPiece(Vocab::load(Path::new(path))?)),
        _ => Err(CliError::Usage(format!(
            "unknown tokenizer `{spec}` (expected whitespace or vocab:<path>)"
        ))),
    }
}

fn stats(common: &Common, train: Option<&Path>, tokenizer: &str, io: &InOut) -> Result<Outcome, CliError> {
    let tokenizer = parse_tokenizer(tokenizer)?;
    let programs: Vec<String> = read_programs(&io.input)?.into_iter().map(|(_, p)| p).collect();
    let mut value = json!({
        "formalism": common.formalism.as_str(),
        "tokenizer": tokenizer.label(),
        "n_programs": programs.len(),
        "avg_length": avg_length(&programs, &tokenizer)?,
    });
    if let Some(train) = train {
        let train: Vec<String> = read_programs(train)?.into_iter().map(|(_, p)| p).collect();
        let report = new_structure_rate(&train, &programs, common.formalism);
        value["structures"] = serde_json::to_value(&report).expect("report serializes");
    }
    emit(&io.output, &to_json(&value))?;
    Ok(Outcome::Clean)
}
