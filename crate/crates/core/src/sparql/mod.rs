//! CFQ-style SPARQL: parsing, rendering and the intermediate representations
//! built on top of them.
//!
//! Only the subset used by CFQ is accepted: a `count(*)` or `DISTINCT` head,
//! triple conjuncts and binary `!=` filters.

mod dict;
mod syntax;
mod transform;

use std::fmt;

pub use dict::{DictError, RelationDictionary};
pub use syntax::{parse_sparql, parse_sparql_rir, ParseError, ParseMode};
pub use transform::{
    canonical_sparql, normalize_sparql, sparql_from_rir, sparql_rir_to_lir, sparql_structure_signature, sparql_to_lir,
    sparql_to_rir, strip_var_markers, varify, RirOptions,
};

/// Placeholder emitted by the lossy IR for variables and entities.
pub const VAR_TOKEN: &str = "var";

/// A term in subject or object position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// `?x0`
    Var(String),
    /// `M0`, `m_0f8l9c`, `ns:m.0f8l9c`
    Entity(String),
    /// Anything else, e.g. the class in `?x0 a ns:film.actor`.
    Constant(String),
}

impl Term {
    pub fn classify(token: &str) -> Term {
        if token.starts_with('?') {
            Term::Var(token.to_string())
        } else if is_entity(token) {
            Term::Entity(token.to_string())
        } else {
            Term::Constant(token.to_string())
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Term::Var(s) | Term::Entity(s) | Term::Constant(s) => s,
        }
    }

    /// True for variables and entities, the terms the lossy IR anonymizes.
    pub fn is_anonymizable(&self) -> bool {
        matches!(self, Term::Var(_) | Term::Entity(_))
    }
}

fn is_entity(token: &str) -> bool {
    if let Some(rest) = token.strip_prefix('M') {
        return !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit());
    }
    token.starts_with("m_") || token.starts_with("ns:m.") || token.starts_with("ns:g.")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SelectHead {
    /// `SELECT count(*)`
    Count,
    /// `SELECT DISTINCT ?x0 ...`
    Distinct(Vec<Term>),
}

/// `FILTER ( left op right )`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Filter {
    pub left: Term,
    pub op: String,
    pub right: Term,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Conjunct {
    Triple {
        subject: Term,
        relation: String,
        object: Term,
    },
    Filter(Filter),
}

impl Conjunct {
    pub fn triple(subject: &str, relation: &str, object: &str) -> Self {
        Conjunct::Triple {
            subject: Term::classify(subject),
            relation: relation.to_string(),
            object: Term::classify(object),
        }
    }

    pub fn filter(left: &str, op: &str, right: &str) -> Self {
        Conjunct::Filter(Filter {
            left: Term::classify(left),
            op: op.to_string(),
            right: Term::classify(right),
        })
    }

    fn terms(&self) -> [&Term; 2] {
        match self {
            Conjunct::Triple { subject, object, .. } => [subject, object],
            Conjunct::Filter(f) => [&f.left, &f.right],
        }
    }
}

impl fmt::Display for Conjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conjunct::Triple {
                subject,
                relation,
                object,
            } => write!(f, "{subject} {relation} {object}"),
            Conjunct::Filter(flt) => fmt::Display::fmt(flt, f),
        }
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FILTER ( {} {} {} )", self.left, self.op, self.right)
    }
}

/// A parsed CFQ query: head plus conjuncts in source order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparqlQuery {
    pub head: SelectHead,
    pub conjuncts: Vec<Conjunct>,
}

impl SparqlQuery {
    /// Full relation names in order of first appearance.
    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.conjuncts.iter().filter_map(|c| match c {
            Conjunct::Triple { relation, .. } => Some(relation.as_str()),
            Conjunct::Filter(_) => None,
        })
    }

    /// Head variables that no conjunct mentions.
    pub fn unbound_head_vars(&self) -> Vec<&Term> {
        match &self.head {
            SelectHead::Count => Vec::new(),
            SelectHead::Distinct(vars) => vars
                .iter()
                .filter(|v| !self.conjuncts.iter().any(|c| c.terms().contains(v)))
                .collect(),
        }
    }
}

pub(crate) fn write_head(out: &mut String, head: &SelectHead, term: impl Fn(&Term) -> String) {
    out.push_str("SELECT ");
    match head {
        SelectHead::Count => out.push_str("count(*)"),
        SelectHead::Distinct(vars) => {
            out.push_str("DISTINCT");
            for v in vars {
                out.push(' ');
                out.push_str(&term(v));
            }
        }
    }
    out.push_str(" WHERE {");
}

/// Canonical surface form: single spaces, ` . ` between conjuncts.
pub fn render_sparql(q: &SparqlQuery) -> String {
    let mut out = String::new();
    write_head(&mut out, &q.head, |t| t.to_string());
    for (i, c) in q.conjuncts.iter().enumerate() {
        out.push_str(if i == 0 { " " } else { " . " });
        out.push_str(&c.to_string());
    }
    out.push_str(" }");
    out
}

impl fmt::Display for SparqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_sparql(self))
    }
}

/// One element of the reversible IR.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RirGroup {
    /// Triples sharing a subject and relation, objects in first-occurrence order.
    Triple {
        subject: Term,
        relation: String,
        objects: Vec<Term>,
    },
    Filter(Filter),
}

/// Reversible IR of a SPARQL query.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparqlRir {
    pub head: SelectHead,
    pub groups: Vec<RirGroup>,
    pub bracketed: bool,
}

impl SparqlRir {
    pub fn render(&self) -> String {
        self.render_with(&|t: &Term| t.to_string())
    }

    pub(crate) fn render_with(&self, term: &dyn Fn(&Term) -> String) -> String {
        let mut out = String::new();
        write_head(&mut out, &self.head, term);
        for (i, g) in self.groups.iter().enumerate() {
            if i == 0 || self.bracketed {
                out.push(' ');
            } else {
                out.push_str(" . ");
            }
            if self.bracketed {
                out.push_str("( ");
            }
            match g {
                RirGroup::Triple {
                    subject,
                    relation,
                    objects,
                } => {
                    out.push_str(&term(subject));
                    out.push(' ');
                    out.push_str(relation);
                    out.push(' ');
                    let multi = self.bracketed && objects.len() > 1;
                    if multi {
                        out.push_str("( ");
                    }
                    for (j, o) in objects.iter().enumerate() {
                        if j > 0 {
                            out.push_str(" , ");
                        }
                        out.push_str(&term(o));
                    }
                    if multi {
                        out.push_str(" )");
                    }
                }
                RirGroup::Filter(flt) => {
                    out.push_str(&format!(
                        "FILTER ( {} {} {} )",
                        term(&flt.left),
                        flt.op,
                        term(&flt.right)
                    ));
                }
            }
            if self.bracketed {
                out.push_str(" )");
            }
        }
        out.push_str(" }");
        out
    }
}

impl fmt::Display for SparqlRir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_terms() {
        assert_eq!(Term::classify("?x0"), Term::Var("?x0".into()));
        assert_eq!(Term::classify("M2"), Term::Entity("M2".into()));
        assert_eq!(Term::classify("m_0f8l9c"), Term::Entity("m_0f8l9c".into()));
        assert_eq!(Term::classify("ns:m.0f8l9c"), Term::Entity("ns:m.0f8l9c".into()));
        assert_eq!(Term::classify("ns:film.actor"), Term::Constant("ns:film.actor".into()));
        assert_eq!(Term::classify("M"), Term::Constant("M".into()));
    }

    #[test]
    fn render_single_triple() {
        let q = SparqlQuery {
            head: SelectHead::Count,
            conjuncts: vec![Conjunct::triple("?x0", "people.person.nationality", "m_0f8l9c")],
        };
        assert_eq!(
            render_sparql(&q),
            "SELECT count(*) WHERE { ?x0 people.person.nationality m_0f8l9c }"
        );
    }

    #[test]
    fn render_empty() {
        let q = SparqlQuery {
            head: SelectHead::Count,
            conjuncts: vec![],
        };
        assert_eq!(render_sparql(&q), "SELECT count(*) WHERE { }");
    }

    #[test]
    fn unbound_head() {
        let q = SparqlQuery {
            head: SelectHead::Distinct(vec![Term::classify("?x0"), Term::classify("?x1")]),
            conjuncts: vec![Conjunct::triple("?x0", "r", "M0")],
        };
        assert_eq!(q.unbound_head_vars(), vec![&Term::Var("?x1".into())]);
    }
}
