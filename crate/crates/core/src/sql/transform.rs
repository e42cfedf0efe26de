use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{
    from_texts, is_number, lex, split_canonical_alias, split_reversible_alias, AliasStyle, ClauseKind, Cond, CondItem,
    SqlError, SqlQuery, TokenTag,
};

pub const MASK_TOKEN: &str = "T";

/// Alias-free reversible IR: `Xalias<N>` written as `X<N>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SqlRir {
    pub tokens: Vec<String>,
}

impl SqlRir {
    pub fn parse(text: &str) -> Result<Self, SqlError> {
        let tokens = lex(text)?;
        if tokens.is_empty() {
            return Err(SqlError::Empty);
        }
        Ok(SqlRir { tokens })
    }
}

impl fmt::Display for SqlRir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

/// Coarse lossy IR: no `FROM`, no join conditions, qualifiers masked as `T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SqlLir {
    pub tokens: Vec<String>,
}

impl SqlLir {
    pub fn parse(text: &str) -> Result<Self, SqlError> {
        let q = from_texts(lex(text)?, AliasStyle::Lenient)?;
        Ok(SqlLir {
            tokens: q.texts().into_iter().map(str::to_string).collect(),
        })
    }
}

impl fmt::Display for SqlLir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

fn map_token(text: &str, tag: TokenTag, rename: &dyn Fn(&str) -> Option<String>) -> (String, bool) {
    if tag == TokenTag::TableAlias {
        if let Some(r) = rename(text) {
            return (r, true);
        }
    }
    if tag == TokenTag::ColumnRef {
        if let Some((q, c)) = text.split_once('.') {
            // derived tables expose derived fields: both sides can be aliases
            let (rq, rc) = (rename(q), rename(c));
            if rq.is_some() || rc.is_some() {
                let q = rq.unwrap_or_else(|| q.to_string());
                let c = rc.unwrap_or_else(|| c.to_string());
                return (format!("{q}.{c}"), true);
            }
        }
    }
    (text.to_string(), false)
}

pub fn sql_to_rir(q: &SqlQuery) -> Result<SqlRir, SqlError> {
    let mut renamed: BTreeMap<&str, String> = BTreeMap::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for alias in q.aliases() {
        let r = match split_canonical_alias(alias) {
            Some((table, n)) => format!("{table}{n}"),
            None => alias.clone(),
        };
        if !seen.insert(r.clone()) {
            return Err(SqlError::Collision(r));
        }
        renamed.insert(alias, r);
    }
    let rename = |name: &str| renamed.get(name).cloned();
    let mut tokens = Vec::with_capacity(q.tokens.len());
    for t in &q.tokens {
        let (text, changed) = map_token(&t.text, t.tag, &rename);
        if !changed {
            let head = text.split_once('.').map_or(text.as_str(), |(h, _)| h);
            if seen.contains(head) || seen.contains(&text) {
                return Err(SqlError::Collision(text));
            }
        }
        tokens.push(text);
    }
    Ok(SqlRir { tokens })
}

pub fn sql_from_rir(z: &SqlRir) -> Result<SqlQuery, SqlError> {
    let rir = from_texts(z.tokens.clone(), AliasStyle::Reversible)?;
    let mut restored: BTreeMap<&str, String> = BTreeMap::new();
    let mut tables: BTreeSet<&str> = BTreeSet::new();
    for alias in rir.aliases() {
        // Reversible parsing guarantees the shape
        let (table, n) = split_reversible_alias(alias).ok_or_else(|| SqlError::BadAlias(alias.clone()))?;
        tables.insert(table);
        restored.insert(alias, format!("{table}alias{n}"));
    }
    for t in &rir.tokens {
        if t.tag == TokenTag::TableName {
            tables.insert(&t.text);
        }
    }
    let rename = |name: &str| restored.get(name).cloned();
    let mut texts = Vec::with_capacity(rir.tokens.len());
    for t in &rir.tokens {
        let (text, changed) = map_token(&t.text, t.tag, &rename);
        if !changed {
            let head = t.qualified().map(|(h, _)| h);
            if let Some((table, _)) = head.and_then(split_reversible_alias) {
                if tables.contains(table) {
                    return Err(SqlError::UndeclaredAlias(head.unwrap_or_default().to_string()));
                }
            }
        }
        texts.push(text);
    }
    from_texts(texts, AliasStyle::Canonical)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionKind {
    JoinOnly,
    Semantic,
}

/// A condition joins tables iff it is `qualified_col = qualified_col`.
pub fn classify_condition(cond: &Cond, q: &SqlQuery) -> ConditionKind {
    let Cond::Atom(range) = cond else {
        return ConditionKind::Semantic;
    };
    let toks = &q.tokens[range.clone()];
    if toks.len() == 3 && toks[1].text == "=" && toks[0].qualified().is_some() && toks[2].qualified().is_some() {
        ConditionKind::JoinOnly
    } else {
        ConditionKind::Semantic
    }
}

/// Mark join-only conditions in `items` as removed; returns whether any
/// condition survives.
/// A removed condition takes its own connector with it; when the first kept
/// condition had a connector, that connector goes instead.
fn prune(items: &[CondItem], q: &SqlQuery, removed: &mut [bool]) -> bool {
    let mut kept_any = false;
    for item in items {
        let drop = match &item.cond {
            Cond::Group { items: inner, .. } => !prune(inner, q, removed),
            atom => classify_condition(atom, q) == ConditionKind::JoinOnly,
        };
        if drop {
            removed[item.cond.span()].iter_mut().for_each(|r| *r = true);
            if let Some(c) = item.connector {
                removed[c] = true;
            }
        } else {
            if !kept_any {
                if let Some(c) = item.connector {
                    removed[c] = true;
                }
            }
            kept_any = true;
        }
    }
    kept_any
}

pub fn sql_to_lir(q: &SqlQuery) -> SqlLir {
    let mut removed = vec![false; q.tokens.len()];
    for block in q.root.walk() {
        for clause in &block.clauses {
            match clause.kind {
                ClauseKind::From => removed[clause.span.clone()].iter_mut().for_each(|r| *r = true),
                // keyword goes too when no condition survives
                ClauseKind::Where | ClauseKind::Having if !prune(&q.condition_tree(clause), q, &mut removed) => {
                    removed[clause.span.start] = true;
                }
                _ => {}
            }
        }
    }
    let tokens = q
        .tokens
        .iter()
        .zip(&removed)
        .filter(|(_, r)| !**r)
        .map(|(t, _)| match (t.tag, t.qualified()) {
            (_, Some((_, col))) if q.is_alias(col) => format!("{MASK_TOKEN}.{MASK_TOKEN}"),
            (_, Some((_, col))) => format!("{MASK_TOKEN}.{col}"),
            (TokenTag::TableAlias | TokenTag::TableName, _) => MASK_TOKEN.to_string(),
            _ => t.text.clone(),
        })
        .collect();
    SqlLir { tokens }
}

/// Query with literal values replaced by `STR` / `NUM`.
pub fn sql_template_signature(q: &SqlQuery) -> String {
    q.tokens
        .iter()
        .map(|t| match t.tag {
            TokenTag::Value if is_number(&t.text) => "NUM",
            TokenTag::Value => "STR",
            _ => t.text.as_str(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}
