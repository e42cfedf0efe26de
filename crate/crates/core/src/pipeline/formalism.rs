//! Per-formalism program operations used by the pipeline and the metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scan::{
    interpret, parse_command, scan_rir_to_lir, scan_to_lir, scan_to_rir, strip_brackets, ActionSeq, ScanError, ScanLir,
    ScanRir,
};
use crate::sparql::{
    canonical_sparql, parse_sparql, parse_sparql_rir, render_sparql, sparql_from_rir, sparql_rir_to_lir,
    sparql_structure_signature, sparql_to_lir, sparql_to_rir, strip_var_markers, varify, DictError, ParseError,
    ParseMode, RelationDictionary, RirOptions, VAR_TOKEN,
};
use crate::sql::{
    parse_sql, parse_sql_with, sql_from_rir, sql_to_lir, sql_to_rir, AliasStyle, SqlError, SqlLir, SqlRir, TokenTag,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formalism {
    Sparql,
    Sql,
    Scan,
}

impl Formalism {
    pub const ALL: [Formalism; 3] = [Formalism::Sparql, Formalism::Sql, Formalism::Scan];

    pub fn as_str(self) -> &'static str {
        match self {
            Formalism::Sparql => "sparql",
            Formalism::Sql => "sql",
            Formalism::Scan => "scan",
        }
    }
}

impl fmt::Display for Formalism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formalism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Formalism::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown formalism `{s}` (expected sparql, sql or scan)"))
    }
}

#[derive(Debug, Error)]
pub enum ProgramError {
    #[error(transparent)]
    Sparql(#[from] ParseError),
    #[error(transparent)]
    Dict(#[from] DictError),
    #[error(transparent)]
    Sql(#[from] SqlError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error("relation dictionary required for shortened relations")]
    MissingDictionary,
    #[error("program `{program}` does not execute the command `{command}`")]
    CommandMismatch { command: String, program: String },
    #[error("output has no separator `{0}`")]
    MissingSeparator(String),
}

/// What the formalism operations need besides the program itself.
#[derive(Debug, Clone, Copy)]
pub struct IrContext<'a> {
    pub formalism: Formalism,
    pub rir: RirOptions,
    pub dict: Option<&'a RelationDictionary>,
}

impl IrContext<'_> {
    fn dict(&self) -> Result<Option<&RelationDictionary>, ProgramError> {
        match (self.rir.shorten_relations, self.dict) {
            (false, _) => Ok(None),
            (true, Some(d)) => Ok(Some(d)),
            (true, None) => Err(ProgramError::MissingDictionary),
        }
    }

    /// Parse `y` and render it in the formalism's canonical spacing.
    pub fn check_program(&self, y: &str) -> Result<String, ProgramError> {
        Ok(match self.formalism {
            Formalism::Sparql => render_sparql(&parse_sparql(y)?),
            Formalism::Sql => parse_sql(y)?.render(),
            Formalism::Scan => ActionSeq::parse(y)?.to_string(),
        })
    }

    /// Reversible IR of `y`. SCAN brackets come from the command `x`.
    pub fn to_rir(&self, x: &str, y: &str) -> Result<String, ProgramError> {
        match self.formalism {
            Formalism::Sparql => Ok(sparql_to_rir(&parse_sparql(y)?, self.dict()?, self.rir)?.render()),
            Formalism::Sql => Ok(sql_to_rir(&parse_sql(y)?)?.to_string()),
            Formalism::Scan => {
                let command = parse_command(x)?;
                let program = ActionSeq::parse(y)?;
                if interpret(&command) != program {
                    return Err(ProgramError::CommandMismatch {
                        command: x.to_string(),
                        program: y.to_string(),
                    });
                }
                Ok(scan_to_rir(&command).to_string())
            }
        }
    }

    pub fn from_rir(&self, z: &str) -> Result<String, ProgramError> {
        match self.formalism {
            Formalism::Sparql => {
                let rir = parse_sparql_rir(z, ParseMode::Strict)?;
                Ok(render_sparql(&sparql_from_rir(&rir, self.dict()?)?))
            }
            Formalism::Sql => Ok(sql_from_rir(&SqlRir::parse(z)?)?.render()),
            Formalism::Scan => Ok(strip_brackets(&ScanRir::parse(z)?)?.to_string()),
        }
    }

    /// Lossy IR of a program.
    pub fn to_lir(&self, y: &str) -> Result<String, ProgramError> {
        match self.formalism {
            Formalism::Sparql => Ok(sparql_to_lir(&parse_sparql(y)?)),
            Formalism::Sql => Ok(sql_to_lir(&parse_sql(y)?).to_string()),
            Formalism::Scan => Ok(scan_to_lir(&ActionSeq::parse(y)?).to_string()),
        }
    }

    /// Lossy IR of a reversible IR.
    pub fn rir_to_lir(&self, z: &str) -> Result<String, ProgramError> {
        match self.formalism {
            Formalism::Sparql => Ok(sparql_rir_to_lir(&parse_sparql_rir(z, ParseMode::Strict)?)),
            Formalism::Sql => Ok(sql_to_lir(&parse_sql_with(z, AliasStyle::Reversible)?).to_string()),
            Formalism::Scan => Ok(scan_rir_to_lir(&ScanRir::parse(z)?).to_string()),
        }
    }

    /// Check that `z` is a well-formed lossy IR; returns it with normalized spacing.
    pub fn check_lir(&self, z: &str) -> Result<String, ProgramError> {
        match self.formalism {
            Formalism::Sparql => Ok(parse_sparql_rir(z, ParseMode::Lenient)?.render()),
            Formalism::Sql => Ok(SqlLir::parse(z)?.to_string()),
            Formalism::Scan => {
                let lir = ScanLir::parse(z)?;
                lir.validate()?;
                Ok(lir.to_string())
            }
        }
    }

    /// Program with a `var` marker in front of every variable, entity or value.
    /// SCAN has neither, so its programs are unchanged.
    pub fn varify(&self, y: &str) -> Result<String, ProgramError> {
        match self.formalism {
            Formalism::Sparql => Ok(varify(&parse_sparql(y)?)),
            Formalism::Sql => {
                let q = parse_sql(y)?;
                let mut out = Vec::with_capacity(q.tokens.len() * 2);
                for t in &q.tokens {
                    if t.tag == TokenTag::Value {
                        out.push(VAR_TOKEN);
                    }
                    out.push(t.text.as_str());
                }
                Ok(out.join(" "))
            }
            Formalism::Scan => Ok(ActionSeq::parse(y)?.to_string()),
        }
    }

    pub fn unvarify(&self, text: &str) -> Result<String, ProgramError> {
        match self.formalism {
            Formalism::Sparql => self.check_program(&strip_var_markers(text)),
            Formalism::Sql => {
                let stripped: Vec<String> = SqlRir::parse(text)?
                    .tokens
                    .into_iter()
                    .filter(|t| t != VAR_TOKEN)
                    .collect();
                self.check_program(&stripped.join(" "))
            }
            Formalism::Scan => self.check_program(text),
        }
    }

    /// Form used for exact-match comparison.
    pub fn normalize(&self, y: &str) -> Result<String, ProgramError> {
        match self.formalism {
            Formalism::Sparql => Ok(canonical_sparql(&parse_sparql(y)?)),
            _ => self.check_program(y),
        }
    }

    /// Structure signature of a reversible IR (or of a program, for the
    /// baseline): entities and values anonymized, variables renamed.
    pub fn structure_signature(&self, z: &str) -> Result<String, ProgramError> {
        match self.formalism {
            Formalism::Sparql => Ok(sparql_structure_signature(&parse_sparql_rir(z, ParseMode::Strict)?)),
            Formalism::Sql => {
                let q = parse_sql_with(z, AliasStyle::Lenient)?;
                Ok(crate::sql::sql_template_signature(&q))
            }
            Formalism::Scan => Ok(ScanRir::parse(z)?.to_string()),
        }
    }
}
