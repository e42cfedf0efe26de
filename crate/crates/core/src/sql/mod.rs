//! Canonicalized SQL (aliases written `<TABLE>alias<N>`): tokenizing,
//! clause segmentation, and the alias-free reversible IR and coarse lossy IR.
//!
//! The parser does not build a full SQL tree. It tags tokens, splits each
//! `SELECT` block into clauses, and splits `WHERE`/`HAVING` bodies into
//! conditions joined by `AND`/`OR`.

mod transform;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use thiserror::Error;

pub use transform::{
    classify_condition, sql_from_rir, sql_template_signature, sql_to_lir, sql_to_rir, ConditionKind, SqlLir, SqlRir,
    MASK_TOKEN,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error("unterminated string literal starting at byte {0}")]
    UnterminatedString(usize),
    #[error("unbalanced parentheses at token {0}")]
    UnbalancedParens(usize),
    #[error("alias `{0}` does not match the expected alias pattern")]
    BadAlias(String),
    #[error("alias `{0}` is used but never declared")]
    UndeclaredAlias(String),
    #[error("cannot segment clauses at token {index} (`{token}`): {reason}")]
    Unsegmentable {
        index: usize,
        token: String,
        reason: &'static str,
    },
    #[error("rewritten alias `{0}` collides with another token in the query")]
    Collision(String),
    #[error("empty query")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenTag {
    Keyword,
    /// Declaration `AS Xalias0` or a bare reference to one.
    TableAlias,
    /// `Xalias0.COL` or a bare column name.
    ColumnRef,
    /// String or numeric literal, or an anonymized placeholder such as `city_name0`.
    Value,
    Operator,
    Punctuation,
    /// Table name in `FROM T AS Talias0`.
    TableName,
    /// Function opener such as `MAX(` or `COUNT(*)`.
    Function,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SqlToken {
    pub text: String,
    pub tag: TokenTag,
}

impl SqlToken {
    /// `(qualifier, column)` of a qualified column reference.
    pub fn qualified(&self) -> Option<(&str, &str)> {
        if self.tag != TokenTag::ColumnRef {
            return None;
        }
        let (q, c) = self.text.split_once('.')?;
        (!q.is_empty() && !c.is_empty()).then_some((q, c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClauseKind {
    Select,
    From,
    Where,
    GroupBy,
    Having,
    OrderBy,
    Limit,
    /// `UNION`, `INTERSECT`, `EXCEPT` (with optional `ALL`).
    Compound,
    /// Trailing `;`.
    End,
}

impl ClauseKind {
    fn rank(self) -> u8 {
        match self {
            ClauseKind::Select => 0,
            ClauseKind::From => 1,
            ClauseKind::Where => 2,
            ClauseKind::GroupBy => 3,
            ClauseKind::Having => 4,
            ClauseKind::OrderBy => 5,
            ClauseKind::Limit => 6,
            ClauseKind::Compound => 7,
            ClauseKind::End => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub kind: ClauseKind,
    /// Token indices, keyword included.
    pub span: Range<usize>,
}

/// One `SELECT` block. Clauses partition `span`; parenthesized subqueries
/// appear as children nested inside one of the clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub span: Range<usize>,
    pub clauses: Vec<Clause>,
    pub children: Vec<Block>,
}

impl Block {
    /// This block and all nested blocks, outermost first.
    pub fn walk(&self) -> Vec<&Block> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.walk());
        }
        out
    }
}

/// How alias declarations are recognized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AliasStyle {
    /// `<TABLE>alias<N>`, as in the source datasets.
    #[default]
    Canonical,
    /// `<TABLE><N>`, as produced by the reversible IR.
    Reversible,
    /// Any declared name; no pattern checks.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlQuery {
    pub tokens: Vec<SqlToken>,
    pub root: Block,
    pub style: AliasStyle,
    aliases: BTreeSet<String>,
}

impl SqlQuery {
    /// Names declared with `AS`.
    pub fn aliases(&self) -> &BTreeSet<String> {
        &self.aliases
    }

    pub fn is_alias(&self, name: &str) -> bool {
        self.aliases.contains(name)
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Tokens joined by single spaces.
    pub fn render(&self) -> String {
        self.texts().join(" ")
    }

    /// Top-level conditions of every `WHERE` and `HAVING` clause.
    pub fn conditions(&self) -> Vec<CondItem> {
        let mut out = Vec::new();
        for block in self.root.walk() {
            for clause in &block.clauses {
                if matches!(clause.kind, ClauseKind::Where | ClauseKind::Having) {
                    out.extend(self.condition_tree(clause));
                }
            }
        }
        out
    }

    /// Split the body of a `WHERE`/`HAVING` clause into connected conditions.
    pub fn condition_tree(&self, clause: &Clause) -> Vec<CondItem> {
        split_conditions(&self.tokens, clause.span.start + 1..clause.span.end)
    }
}

impl fmt::Display for SqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// A condition, possibly a parenthesized group of conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    Atom(Range<usize>),
    Group {
        open: usize,
        close: usize,
        items: Vec<CondItem>,
    },
}

impl Cond {
    pub fn span(&self) -> Range<usize> {
        match self {
            Cond::Atom(r) => r.clone(),
            Cond::Group { open, close, .. } => *open..*close + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondItem {
    /// Index of the `AND`/`OR` token in front of this condition.
    pub connector: Option<usize>,
    pub cond: Cond,
}

const KEYWORDS: &[&str] = &[
    "SELECT",
    "FROM",
    "WHERE",
    "AND",
    "OR",
    "NOT",
    "AS",
    "DISTINCT",
    "GROUP",
    "BY",
    "ORDER",
    "HAVING",
    "LIMIT",
    "IN",
    "BETWEEN",
    "LIKE",
    "IS",
    "NULL",
    "ASC",
    "DESC",
    "UNION",
    "INTERSECT",
    "EXCEPT",
    "EXISTS",
    "ALL",
    "ANY",
    "JOIN",
    "ON",
    "INNER",
    "LEFT",
    "OUTER",
    "CASE",
    "WHEN",
    "THEN",
    "ELSE",
    "END",
];

const OPERATORS: &[&str] = &["=", "!=", "<>", "<", ">", "<=", ">=", "+", "-", "*", "/", "%"];

fn upper_is(text: &str, kw: &str) -> bool {
    text.eq_ignore_ascii_case(kw)
}

pub(crate) fn is_keyword(text: &str) -> bool {
    KEYWORDS.iter().any(|k| upper_is(text, k))
}

fn is_quoted(text: &str) -> bool {
    text.starts_with('"') || text.starts_with('\'')
}

pub(crate) fn is_number(text: &str) -> bool {
    let t = text.strip_prefix('-').unwrap_or(text);
    !t.is_empty()
        && t.bytes().all(|b| b.is_ascii_digit() || b == b'.')
        && t.bytes().filter(|b| *b == b'.').count() <= 1
        && t.bytes().any(|b| b.is_ascii_digit())
}

/// Unquoted anonymized value such as `city_name0`.
fn is_placeholder(text: &str) -> bool {
    let Some(first) = text.chars().next() else {
        return false;
    };
    first.is_ascii_lowercase()
        && text.ends_with(|c: char| c.is_ascii_digit())
        && text
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Split `name` into `(table, n)` for `<table>alias<n>`.
pub(crate) fn split_canonical_alias(name: &str) -> Option<(&str, &str)> {
    let at = name.rfind("alias")?;
    let (table, rest) = (&name[..at], &name[at + 5..]);
    (!table.is_empty() && !table.contains('.') && !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
        .then_some((table, rest))
}

/// Split `name` into `(table, n)` for `<table><n>`.
pub(crate) fn split_reversible_alias(name: &str) -> Option<(&str, &str)> {
    let digits = name.len() - name.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let at = name.len() - digits;
    (digits > 0 && at > 0 && !name[..at].contains('.')).then_some((&name[..at], &name[at..]))
}

fn lex(text: &str) -> Result<Vec<String>, SqlError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c == b'"' || c == b'\'' {
            i += 1;
            while i < bytes.len() && bytes[i] != c {
                i += 1;
            }
            if i == bytes.len() {
                return Err(SqlError::UnterminatedString(start));
            }
            i += 1;
        }
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        out.push(text[start..i].to_string());
    }
    Ok(out)
}

fn paren_delta(text: &str) -> i32 {
    if is_quoted(text) {
        return 0;
    }
    text.bytes()
        .map(|b| match b {
            b'(' => 1,
            b')' => -1,
            _ => 0,
        })
        .sum()
}

/// Parse a query in the canonical alias style.
pub fn parse_sql(text: &str) -> Result<SqlQuery, SqlError> {
    parse_sql_with(text, AliasStyle::Canonical)
}

pub fn parse_sql_with(text: &str, style: AliasStyle) -> Result<SqlQuery, SqlError> {
    from_texts(lex(text)?, style)
}

pub(crate) fn from_texts(texts: Vec<String>, style: AliasStyle) -> Result<SqlQuery, SqlError> {
    if texts.is_empty() {
        return Err(SqlError::Empty);
    }
    let mut depth = 0;
    for (i, t) in texts.iter().enumerate() {
        depth += paren_delta(t);
        if depth < 0 {
            return Err(SqlError::UnbalancedParens(i));
        }
    }
    if depth != 0 {
        return Err(SqlError::UnbalancedParens(texts.len() - 1));
    }

    let mut aliases = BTreeSet::new();
    for w in texts.windows(2) {
        if upper_is(&w[0], "AS") {
            let ok = match style {
                AliasStyle::Canonical => split_canonical_alias(&w[1]).is_some(),
                AliasStyle::Reversible => split_reversible_alias(&w[1]).is_some(),
                AliasStyle::Lenient => true,
            };
            if !ok {
                return Err(SqlError::BadAlias(w[1].clone()));
            }
            aliases.insert(w[1].clone());
        }
    }

    let root = segment(&texts)?;
    let from_spans: Vec<Range<usize>> = root
        .walk()
        .iter()
        .flat_map(|b| b.clauses.iter())
        .filter(|c| c.kind == ClauseKind::From)
        .map(|c| c.span.clone())
        .collect();
    let in_from = |i: usize| from_spans.iter().any(|r| r.contains(&i));

    let mut tokens = Vec::with_capacity(texts.len());
    for (i, t) in texts.iter().enumerate() {
        let next_is_as = texts.get(i + 1).is_some_and(|n| upper_is(n, "AS"));
        let tag = if is_quoted(t) || is_number(t) {
            TokenTag::Value
        } else if matches!(t.as_str(), "(" | ")" | "," | ";") {
            TokenTag::Punctuation
        } else if OPERATORS.contains(&t.as_str()) {
            TokenTag::Operator
        } else if is_keyword(t) {
            TokenTag::Keyword
        } else if t.contains('(') || t.contains(')') {
            TokenTag::Function
        } else if aliases.contains(t) {
            TokenTag::TableAlias
        } else if in_from(i) && next_is_as {
            TokenTag::TableName
        } else if t.contains('.') {
            TokenTag::ColumnRef
        } else if is_placeholder(t) {
            TokenTag::Value
        } else {
            TokenTag::ColumnRef
        };
        if style == AliasStyle::Canonical
            && split_canonical_alias(t).is_some()
            && tag != TokenTag::TableAlias
            && tag != TokenTag::Value
        {
            return Err(SqlError::UndeclaredAlias(t.clone()));
        }
        tokens.push(SqlToken { text: t.clone(), tag });
    }
    let query = SqlQuery {
        tokens,
        root,
        style,
        aliases,
    };
    if style == AliasStyle::Canonical {
        for t in &query.tokens {
            if let Some((q, _)) = t.qualified() {
                if split_canonical_alias(q).is_some() && !query.is_alias(q) {
                    return Err(SqlError::UndeclaredAlias(q.to_string()));
                }
            }
        }
    }
    Ok(query)
}

fn clause_start(texts: &[String], i: usize) -> Option<(ClauseKind, usize)> {
    let t = texts[i].as_str();
    let next_by = texts.get(i + 1).is_some_and(|n| upper_is(n, "BY"));
    Some(match () {
        _ if upper_is(t, "SELECT") => (ClauseKind::Select, 1),
        _ if upper_is(t, "FROM") => (ClauseKind::From, 1),
        _ if upper_is(t, "WHERE") => (ClauseKind::Where, 1),
        _ if upper_is(t, "GROUP") && next_by => (ClauseKind::GroupBy, 2),
        _ if upper_is(t, "ORDER") && next_by => (ClauseKind::OrderBy, 2),
        _ if upper_is(t, "HAVING") => (ClauseKind::Having, 1),
        _ if upper_is(t, "LIMIT") => (ClauseKind::Limit, 1),
        _ if upper_is(t, "UNION") || upper_is(t, "INTERSECT") || upper_is(t, "EXCEPT") => {
            let all = texts.get(i + 1).is_some_and(|n| upper_is(n, "ALL"));
            (ClauseKind::Compound, 1 + all as usize)
        }
        _ if t == ";" => (ClauseKind::End, 1),
        _ => return None,
    })
}

fn segment(texts: &[String]) -> Result<Block, SqlError> {
    let (block, end) = segment_block(texts, 0, true)?;
    if end != texts.len() {
        return Err(unsegmentable(texts, end, "trailing tokens after query"));
    }
    Ok(block)
}

fn unsegmentable(texts: &[String], index: usize, reason: &'static str) -> SqlError {
    SqlError::Unsegmentable {
        index,
        token: texts.get(index).cloned().unwrap_or_default(),
        reason,
    }
}

/// Segment the block starting at `start` (a `SELECT`). Returns the block and
/// the index one past its last token.
fn segment_block(texts: &[String], start: usize, top: bool) -> Result<(Block, usize), SqlError> {
    if !texts.get(start).is_some_and(|t| upper_is(t, "SELECT")) {
        return Err(unsegmentable(texts, start, "expected SELECT"));
    }
    let mut clauses: Vec<Clause> = Vec::new();
    let mut children = Vec::new();
    let mut depth = 0i32;
    let mut i = start;
    let mut last_rank: Option<u8> = None;
    while i < texts.len() {
        let t = texts[i].as_str();
        if depth == 0 {
            if t == ")" {
                break;
            }
            if let Some((kind, width)) = clause_start(texts, i) {
                let ok = match (last_rank, kind) {
                    (None, ClauseKind::Select) => true,
                    (None, _) => false,
                    (Some(7), ClauseKind::Select) => true,
                    (Some(7), _) => false,
                    (Some(_), ClauseKind::End) => top,
                    (Some(8), _) => false,
                    (Some(r), k) => k.rank() > r,
                };
                if !ok {
                    return Err(unsegmentable(texts, i, "clause out of order"));
                }
                if let Some(prev) = clauses.last_mut() {
                    prev.span.end = i;
                }
                clauses.push(Clause {
                    kind,
                    span: i..i + width,
                });
                last_rank = Some(kind.rank());
                i += width;
                continue;
            }
        }
        if t == "(" && texts.get(i + 1).is_some_and(|n| upper_is(n, "SELECT")) {
            let (child, end) = segment_block(texts, i + 1, false)?;
            children.push(child);
            // `end` is the closing parenthesis
            i = end + 1;
            continue;
        }
        depth += paren_delta(t);
        if depth < 0 {
            break;
        }
        i += 1;
    }
    if let Some(prev) = clauses.last_mut() {
        prev.span.end = i;
    }
    if last_rank == Some(ClauseKind::Compound.rank()) {
        return Err(unsegmentable(texts, i, "compound operator without a SELECT"));
    }
    Ok((
        Block {
            span: start..i,
            clauses,
            children,
        },
        i,
    ))
}

fn split_conditions(tokens: &[SqlToken], range: Range<usize>) -> Vec<CondItem> {
    let mut items = Vec::new();
    let mut depth = 0i32;
    let mut piece_start = range.start;
    let mut connector = None;
    let mut pending_between = false;
    for i in range.clone() {
        let t = tokens[i].text.as_str();
        if depth == 0 && upper_is(t, "BETWEEN") {
            pending_between = true;
        } else if depth == 0 && (upper_is(t, "AND") || upper_is(t, "OR")) {
            if upper_is(t, "AND") && pending_between {
                pending_between = false;
            } else {
                if piece_start < i {
                    items.push(CondItem {
                        connector,
                        cond: make_cond(tokens, piece_start..i),
                    });
                }
                connector = Some(i);
                piece_start = i + 1;
                continue;
            }
        }
        depth += paren_delta(t);
    }
    if piece_start < range.end {
        items.push(CondItem {
            connector,
            cond: make_cond(tokens, piece_start..range.end),
        });
    }
    items
}

fn make_cond(tokens: &[SqlToken], range: Range<usize>) -> Cond {
    let first = &tokens[range.start].text;
    let last = range.end - 1;
    if first == "("
        && last > range.start
        && tokens[last].text == ")"
        && !tokens.get(range.start + 1).is_some_and(|t| upper_is(&t.text, "SELECT"))
    {
        // the opening parenthesis must close at the end of the range
        let mut depth = 0;
        let mut closes_at = None;
        for i in range.clone() {
            depth += paren_delta(&tokens[i].text);
            if depth == 0 {
                closes_at = Some(i);
                break;
            }
        }
        if closes_at == Some(last) {
            return Cond::Group {
                open: range.start,
                close: last,
                items: split_conditions(tokens, range.start + 1..last),
            };
        }
    }
    Cond::Atom(range)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLIGHT: &str =
        r#"SELECT FLIGHTalias0.FLIGHT_ID FROM FLIGHT AS FLIGHTalias0 WHERE FLIGHTalias0.AIRLINE_CODE = "UA""#;

    #[test]
    fn parses_simple_query() {
        let q = parse_sql(FLIGHT).unwrap();
        assert_eq!(q.aliases().iter().collect::<Vec<_>>(), vec!["FLIGHTalias0"]);
        assert_eq!(q.root.clauses.len(), 3);
        let kinds: Vec<_> = q.root.clauses.iter().map(|c| c.kind).collect();
        assert_eq!(kinds, vec![ClauseKind::Select, ClauseKind::From, ClauseKind::Where]);
        assert_eq!(q.conditions().len(), 1);
        assert_eq!(q.render(), FLIGHT);
        let tags: Vec<_> = q.tokens.iter().map(|t| t.tag).collect();
        use TokenTag::*;
        assert_eq!(
            tags,
            vec![Keyword, ColumnRef, Keyword, TableName, Keyword, TableAlias, Keyword, ColumnRef, Operator, Value]
        );
    }

    #[test]
    fn select_one() {
        let q = parse_sql("SELECT 1").unwrap();
        assert_eq!(
            q.root.clauses,
            vec![Clause {
                kind: ClauseKind::Select,
                span: 0..2
            }]
        );
        assert!(q.aliases().is_empty());
    }

    #[test]
    fn clause_spans_partition_and_nest() {
        let text = "SELECT CITYalias0.CITY_NAME FROM CITY AS CITYalias0 WHERE CITYalias0.POPULATION = \
                    ( SELECT MAX( CITYalias1.POPULATION ) FROM CITY AS CITYalias1 ) ;";
        let q = parse_sql(text).unwrap();
        let mut covered = Vec::new();
        for c in &q.root.clauses {
            covered.extend(c.span.clone());
        }
        assert_eq!(covered, (0..q.tokens.len()).collect::<Vec<_>>());
        assert_eq!(q.root.children.len(), 1);
        let child = &q.root.children[0];
        assert_eq!(q.tokens[child.span.start].text, "SELECT");
        assert_eq!(q.tokens[child.span.end].text, ")");
        let where_clause = &q.root.clauses[2];
        assert!(where_clause.span.start < child.span.start && child.span.end < where_clause.span.end);
    }

    #[test]
    fn quoted_values_keep_spaces() {
        let q = parse_sql(r#"SELECT CITYalias0.X FROM CITY AS CITYalias0 WHERE CITYalias0.CITY_NAME = "new york""#)
            .unwrap();
        assert_eq!(q.tokens.last().unwrap().text, r#""new york""#);
        assert_eq!(q.tokens.last().unwrap().tag, TokenTag::Value);
    }

    #[test]
    fn errors() {
        assert_eq!(parse_sql("SELECT ( 1"), Err(SqlError::UnbalancedParens(2)));
        assert_eq!(parse_sql("SELECT 1 )"), Err(SqlError::UnbalancedParens(2)));
        assert_eq!(
            parse_sql("SELECT A.X FROM A AS A0"),
            Err(SqlError::BadAlias("A0".into()))
        );
        assert_eq!(
            parse_sql("SELECT Balias0.X FROM A AS Aalias0"),
            Err(SqlError::UndeclaredAlias("Balias0".into()))
        );
        assert!(matches!(parse_sql("WHERE x = 1"), Err(SqlError::Unsegmentable { .. })));
        assert!(matches!(
            parse_sql("SELECT x WHERE y = 1 FROM A AS Aalias0"),
            Err(SqlError::Unsegmentable { .. })
        ));
        assert!(matches!(
            parse_sql(r#"SELECT "abc"#),
            Err(SqlError::UnterminatedString(7))
        ));
        assert_eq!(parse_sql("  "), Err(SqlError::Empty));
    }

    #[test]
    fn between_and_groups() {
        let text = "SELECT Falias0.ID FROM F AS Falias0 , G AS Galias0 WHERE Falias0.T BETWEEN 0 AND 1200 \
                    AND ( Falias0.A = Galias0.A OR Falias0.B = \"x\" ) AND Falias0.C = Galias0.C";
        let q = parse_sql(text).unwrap();
        let conds = q.conditions();
        assert_eq!(conds.len(), 3);
        assert!(matches!(conds[0].cond, Cond::Atom(ref r) if r.len() == 5));
        match &conds[1].cond {
            Cond::Group { items, .. } => assert_eq!(items.len(), 2),
            other => panic!("expected group, got {other:?}"),
        }
        assert!(conds[2].connector.is_some());
    }

    #[test]
    fn alias_splitting() {
        assert_eq!(split_canonical_alias("FLIGHTalias0"), Some(("FLIGHT", "0")));
        assert_eq!(
            split_canonical_alias("AIRPORT_SERVICEalias12"),
            Some(("AIRPORT_SERVICE", "12"))
        );
        assert_eq!(split_canonical_alias("alias0"), None);
        assert_eq!(split_canonical_alias("FLIGHTalias"), None);
        assert_eq!(split_reversible_alias("FLIGHT0"), Some(("FLIGHT", "0")));
        assert_eq!(split_reversible_alias("0"), None);
        assert_eq!(split_reversible_alias("FLIGHT"), None);
    }

    #[test]
    fn placeholders_are_values() {
        let q =
            parse_sql("SELECT CITYalias0.X FROM CITY AS CITYalias0 WHERE CITYalias0.CITY_NAME = city_name0").unwrap();
        assert_eq!(q.tokens.last().unwrap().tag, TokenTag::Value);
    }
}
