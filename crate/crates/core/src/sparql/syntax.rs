use thiserror::Error;

use super::{Conjunct, Filter, RirGroup, SelectHead, SparqlQuery, SparqlRir, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" | "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("head variable {0} does not appear in any conjunct")]
    UnboundHeadVariable(String),
}

/// How strictly terms in the head are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Head terms must be variables bound by some conjunct.
    #[default]
    Strict,
    /// Any term is accepted anywhere; used for lossy IR strings where
    /// variables have been replaced by `var`.
    Lenient,
}

const FILTER_OPS: &[&str] = &["!="];

struct Parser<'a> {
    tokens: Vec<(usize, &'a str)>,
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let mut tokens = Vec::new();
        let mut start = None;
        for (i, ch) in text.char_indices() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    tokens.push((s, &text[s..i]));
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            tokens.push((s, &text[s..]));
        }
        Parser {
            tokens,
            pos: 0,
            end: text.len(),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).map(|t| t.1)
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        let (offset, found) = match self.tokens.get(self.pos) {
            Some(&(off, tok)) => (off, format!("`{tok}`")),
            None => (self.end, "end of input".to_string()),
        };
        ParseError::Syntax {
            offset,
            expected: expected.to_vec(),
            found,
        }
    }

    fn expect(&mut self, tok: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&[tok]))
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(tok) if !is_structural(tok) => {
                self.pos += 1;
                Ok(Term::classify(tok))
            }
            _ => Err(self.error(&["term"])),
        }
    }

    fn relation(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(tok) if !is_structural(tok) => {
                self.pos += 1;
                Ok(tok.to_string())
            }
            _ => Err(self.error(&["relation"])),
        }
    }

    fn head(&mut self, mode: ParseMode) -> Result<SelectHead, ParseError> {
        self.expect("SELECT")?;
        if self.eat("count(*)") {
            self.expect("WHERE")?;
            return Ok(SelectHead::Count);
        }
        if !self.eat("DISTINCT") {
            return Err(self.error(&["count(*)", "DISTINCT"]));
        }
        let mut vars = Vec::new();
        while let Some(tok) = self.peek() {
            if tok == "WHERE" {
                break;
            }
            let var_ok = tok.starts_with('?') && tok.len() > 1;
            if is_structural(tok) || (mode == ParseMode::Strict && !var_ok) {
                return Err(self.error(&["variable", "WHERE"]));
            }
            vars.push(Term::classify(tok));
            self.pos += 1;
        }
        if vars.is_empty() {
            return Err(self.error(&["variable"]));
        }
        self.expect("WHERE")?;
        Ok(SelectHead::Distinct(vars))
    }

    /// `FILTER ( a != b )`, with the `FILTER` keyword already at the cursor.
    fn filter(&mut self) -> Result<Filter, ParseError> {
        self.expect("FILTER")?;
        self.expect("(")?;
        let left = self.term()?;
        let op = match self.peek() {
            Some(op) if FILTER_OPS.contains(&op) => {
                self.pos += 1;
                op.to_string()
            }
            _ => return Err(self.error(FILTER_OPS)),
        };
        let right = self.term()?;
        self.expect(")")?;
        Ok(Filter { left, op, right })
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        self.expect("}")?;
        if self.pos < self.tokens.len() {
            return Err(self.error(&["end of input"]));
        }
        Ok(())
    }
}

fn is_structural(tok: &str) -> bool {
    matches!(tok, "." | "," | "(" | ")" | "{" | "}" | "FILTER" | "WHERE")
}

fn check_head(head: &SelectHead, bound: impl Fn(&Term) -> bool) -> Result<(), ParseError> {
    if let SelectHead::Distinct(vars) = head {
        if let Some(v) = vars.iter().find(|v| !bound(v)) {
            return Err(ParseError::UnboundHeadVariable(v.to_string()));
        }
    }
    Ok(())
}

/// Parse a CFQ query. Conjuncts may be separated by `.`; a trailing `.` is
/// accepted. Conjunct order is preserved.
pub fn parse_sparql(text: &str) -> Result<SparqlQuery, ParseError> {
    let mut p = Parser::new(text);
    let head = p.head(ParseMode::Strict)?;
    p.expect("{")?;
    let mut conjuncts = Vec::new();
    loop {
        match p.peek() {
            Some("}") => break,
            Some("FILTER") => conjuncts.push(Conjunct::Filter(p.filter()?)),
            Some(tok) if !is_structural(tok) => {
                let subject = p.term()?;
                let relation = p.relation()?;
                let object = p.term()?;
                conjuncts.push(Conjunct::Triple {
                    subject,
                    relation,
                    object,
                });
            }
            _ => return Err(p.error(&["term", "FILTER", "}"])),
        }
        if !p.eat(".") && !matches!(p.peek(), Some("}") | Some("FILTER")) {
            // a new triple may follow a FILTER without a separator
            if !matches!(conjuncts.last(), Some(Conjunct::Filter(_))) {
                return Err(p.error(&[".", "}"]));
            }
        }
    }
    p.finish()?;
    let q = SparqlQuery { head, conjuncts };
    check_head(&q.head, |v| q.conjuncts.iter().any(|c| c.terms().contains(&v)))?;
    Ok(q)
}

/// Parse the surface form of a reversible IR, bracketed or not.
///
/// A plain query is a valid unbracketed IR in which every group has one
/// object.
pub fn parse_sparql_rir(text: &str, mode: ParseMode) -> Result<SparqlRir, ParseError> {
    let mut p = Parser::new(text);
    let head = p.head(mode)?;
    p.expect("{")?;
    let bracketed = p.peek() == Some("(");
    let mut groups = Vec::new();
    if bracketed {
        while p.peek() != Some("}") {
            p.expect("(")?;
            if p.peek() == Some("FILTER") {
                groups.push(RirGroup::Filter(p.filter()?));
            } else {
                let subject = p.term()?;
                let relation = p.relation()?;
                let objects = if p.eat("(") {
                    let objs = object_list(&mut p)?;
                    p.expect(")")?;
                    objs
                } else {
                    vec![p.term()?]
                };
                groups.push(RirGroup::Triple {
                    subject,
                    relation,
                    objects,
                });
            }
            p.expect(")")?;
        }
    } else if p.peek() != Some("}") {
        loop {
            if p.peek() == Some("FILTER") {
                groups.push(RirGroup::Filter(p.filter()?));
            } else {
                let subject = p.term()?;
                let relation = p.relation()?;
                let objects = object_list(&mut p)?;
                groups.push(RirGroup::Triple {
                    subject,
                    relation,
                    objects,
                });
            }
            match p.peek() {
                Some(".") => {
                    p.pos += 1;
                    if p.peek() == Some("}") {
                        break;
                    }
                }
                Some("}") => break,
                Some("FILTER") => {}
                _ if matches!(groups.last(), Some(RirGroup::Filter(_))) => {}
                _ => return Err(p.error(&[".", "}"])),
            }
        }
    }
    p.finish()?;
    let rir = SparqlRir {
        head,
        groups,
        bracketed,
    };
    if mode == ParseMode::Strict {
        check_head(&rir.head, |v| {
            rir.groups.iter().any(|g| match g {
                RirGroup::Triple { subject, objects, .. } => subject == v || objects.contains(v),
                RirGroup::Filter(f) => &f.left == v || &f.right == v,
            })
        })?;
    }
    Ok(rir)
}

fn object_list(p: &mut Parser<'_>) -> Result<Vec<Term>, ParseError> {
    let mut objs = vec![p.term()?];
    while p.eat(",") {
        objs.push(p.term()?);
    }
    Ok(objs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparql::render_sparql;

    #[test]
    fn parses_count_query() {
        let q = parse_sparql("SELECT count(*) WHERE { ?x0 people.person.nationality m_0f8l9c }").unwrap();
        assert_eq!(q.head, SelectHead::Count);
        assert_eq!(
            q.conjuncts,
            vec![Conjunct::triple("?x0", "people.person.nationality", "m_0f8l9c")]
        );
    }

    #[test]
    fn parses_empty_body() {
        let q = parse_sparql("SELECT count(*) WHERE { }").unwrap();
        assert!(q.conjuncts.is_empty());
    }

    #[test]
    fn parses_raw_cfq_layout() {
        let text = "SELECT DISTINCT ?x0 WHERE {\n?x0 a ns:film.actor .\n\
                    ?x0 ns:film.actor.film/ns:film.performance.film M1 .\n\
                    FILTER ( ?x0 != M1 )\n}";
        let q = parse_sparql(text).unwrap();
        assert_eq!(q.conjuncts.len(), 3);
        assert_eq!(
            render_sparql(&q),
            "SELECT DISTINCT ?x0 WHERE { ?x0 a ns:film.actor . \
             ?x0 ns:film.actor.film/ns:film.performance.film M1 . FILTER ( ?x0 != M1 ) }"
        );
    }

    #[test]
    fn filter_then_triple_without_separator() {
        let q = parse_sparql("SELECT count(*) WHERE { FILTER ( ?x0 != M1 ) ?x0 r M1 }").unwrap();
        assert_eq!(q.conjuncts.len(), 2);
    }

    #[test]
    fn reports_offset_and_expected() {
        let err = parse_sparql("SELECT count(*) WHERE { ?x0 r }").unwrap_err();
        match err {
            ParseError::Syntax { offset, expected, .. } => {
                assert_eq!(offset, 30);
                assert_eq!(expected, vec!["term"]);
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_sparql("SELECT count(*) WHERE { ?x0 r M1").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 32, .. }));
    }

    #[test]
    fn rejects_other_filter_ops() {
        assert!(parse_sparql("SELECT count(*) WHERE { ?x0 r M1 . FILTER ( ?x0 = M1 ) }").is_err());
    }

    #[test]
    fn rejects_unbound_head() {
        let err = parse_sparql("SELECT DISTINCT ?x1 WHERE { ?x0 r M1 }").unwrap_err();
        assert_eq!(err, ParseError::UnboundHeadVariable("?x1".into()));
    }

    #[test]
    fn rejects_trailing_garbage() {
        assert!(parse_sparql("SELECT count(*) WHERE { } extra").is_err());
        assert!(parse_sparql("SELECT count(*) WHERE { ?x0 r M1 ?x0 r M2 }").is_err());
    }

    #[test]
    fn rir_bracketed_and_plain() {
        let r = parse_sparql_rir(
            "SELECT count(*) WHERE { ( ?x0 r1 ( M1 , M2 ) ) ( FILTER ( ?x0 != M1 ) ) ( ?x0 r2 M3 ) }",
            ParseMode::Strict,
        )
        .unwrap();
        assert!(r.bracketed);
        assert_eq!(r.groups.len(), 3);
        let r2 = parse_sparql_rir(
            "SELECT count(*) WHERE { ?x0 r1 M1 , M2 . FILTER ( ?x0 != M1 ) . ?x0 r2 M3 }",
            ParseMode::Strict,
        )
        .unwrap();
        assert!(!r2.bracketed);
        assert_eq!(r.groups, r2.groups);
    }

    #[test]
    fn rir_malformed_brackets() {
        assert!(parse_sparql_rir("SELECT count(*) WHERE { ( ?x0 r ( M1 , M2 ) }", ParseMode::Strict).is_err());
        assert!(parse_sparql_rir("SELECT count(*) WHERE { ( ?x0 r M1 ) ) }", ParseMode::Strict).is_err());
    }

    #[test]
    fn lenient_accepts_placeholders() {
        let r = parse_sparql_rir(
            "SELECT DISTINCT var WHERE { ( var r ( var , var ) ) }",
            ParseMode::Lenient,
        )
        .unwrap();
        assert_eq!(r.groups.len(), 1);
        assert!(parse_sparql_rir("SELECT DISTINCT var WHERE { ( var r var ) }", ParseMode::Strict).is_err());
    }
}
