use std::collections::{BTreeSet, HashMap};

use super::{
    render_sparql, write_head, Conjunct, DictError, RelationDictionary, RirGroup, SelectHead, SparqlQuery, SparqlRir,
    Term, VAR_TOKEN,
};

/// Switches for the three parts of the reversible IR. All on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RirOptions {
    pub merge_conjuncts: bool,
    pub shorten_relations: bool,
    pub brackets: bool,
}

impl Default for RirOptions {
    fn default() -> Self {
        RirOptions {
            merge_conjuncts: true,
            shorten_relations: true,
            brackets: true,
        }
    }
}

impl RirOptions {
    pub fn none() -> Self {
        RirOptions {
            merge_conjuncts: false,
            shorten_relations: false,
            brackets: false,
        }
    }
}

/// Reversible IR: group triples by (subject, relation), shorten relations
/// and bracket each group, as selected by `opts`.
///
/// `dict` is required when `opts.shorten_relations` is set.
pub fn sparql_to_rir(
    q: &SparqlQuery,
    dict: Option<&RelationDictionary>,
    opts: RirOptions,
) -> Result<SparqlRir, DictError> {
    let relation = |full: &str| -> Result<String, DictError> {
        if !opts.shorten_relations {
            return Ok(full.to_string());
        }
        match dict {
            Some(d) => d.shorten(full).map(str::to_string),
            None => Err(DictError::UnknownRelation(full.to_string())),
        }
    };

    let mut groups: Vec<RirGroup> = Vec::with_capacity(q.conjuncts.len());
    let mut index: HashMap<(&Term, &str), usize> = HashMap::new();
    for c in &q.conjuncts {
        match c {
            Conjunct::Triple {
                subject,
                relation: rel,
                object,
            } => {
                if opts.merge_conjuncts {
                    if let Some(&i) = index.get(&(subject, rel.as_str())) {
                        if let RirGroup::Triple { objects, .. } = &mut groups[i] {
                            objects.push(object.clone());
                        }
                        continue;
                    }
                    index.insert((subject, rel.as_str()), groups.len());
                }
                groups.push(RirGroup::Triple {
                    subject: subject.clone(),
                    relation: relation(rel)?,
                    objects: vec![object.clone()],
                });
            }
            Conjunct::Filter(f) => groups.push(RirGroup::Filter(f.clone())),
        }
    }
    Ok(SparqlRir {
        head: q.head.clone(),
        groups,
        bracketed: opts.brackets,
    })
}

/// Inverse of [`sparql_to_rir`]. Pass the dictionary used for shortening,
/// or `None` if relations were left at full length.
pub fn sparql_from_rir(z: &SparqlRir, dict: Option<&RelationDictionary>) -> Result<SparqlQuery, DictError> {
    let mut conjuncts = Vec::new();
    for g in &z.groups {
        match g {
            RirGroup::Triple {
                subject,
                relation,
                objects,
            } => {
                let full = match dict {
                    Some(d) => d.expand(relation)?.to_string(),
                    None => relation.clone(),
                };
                conjuncts.extend(objects.iter().map(|o| Conjunct::Triple {
                    subject: subject.clone(),
                    relation: full.clone(),
                    object: o.clone(),
                }));
            }
            RirGroup::Filter(f) => conjuncts.push(Conjunct::Filter(f.clone())),
        }
    }
    Ok(SparqlQuery {
        head: z.head.clone(),
        conjuncts,
    })
}

fn anonymize(t: &Term) -> String {
    if t.is_anonymizable() {
        VAR_TOKEN.to_string()
    } else {
        t.to_string()
    }
}

fn render_query_with(q: &SparqlQuery, term: impl Fn(&Term) -> String) -> String {
    let mut out = String::new();
    write_head(&mut out, &q.head, &term);
    for (i, c) in q.conjuncts.iter().enumerate() {
        out.push_str(if i == 0 { " " } else { " . " });
        match c {
            Conjunct::Triple {
                subject,
                relation,
                object,
            } => {
                out.push_str(&format!("{} {relation} {}", term(subject), term(object)));
            }
            Conjunct::Filter(f) => {
                out.push_str(&format!("FILTER ( {} {} {} )", term(&f.left), f.op, term(&f.right)));
            }
        }
    }
    out.push_str(" }");
    out
}

/// Lossy IR: every variable and entity becomes `var`.
pub fn sparql_to_lir(q: &SparqlQuery) -> String {
    render_query_with(q, anonymize)
}

/// Lossy IR of a reversible IR.
pub fn sparql_rir_to_lir(z: &SparqlRir) -> String {
    z.render_with(&anonymize)
}

/// The program with a `var` marker in front of every variable and entity.
pub fn varify(q: &SparqlQuery) -> String {
    render_query_with(q, |t| {
        if t.is_anonymizable() {
            format!("{VAR_TOKEN} {t}")
        } else {
            t.to_string()
        }
    })
}

/// Drop every standalone `var` token.
pub fn strip_var_markers(text: &str) -> String {
    text.split_whitespace()
        .filter(|t| *t != VAR_TOKEN)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Deduplicate conjuncts and sort them by their rendered form.
pub fn normalize_sparql(q: &SparqlQuery) -> SparqlQuery {
    let rendered: BTreeSet<(String, usize)> = {
        let mut seen = HashMap::new();
        for (i, c) in q.conjuncts.iter().enumerate() {
            seen.entry(c.to_string()).or_insert(i);
        }
        seen.into_iter().collect()
    };
    SparqlQuery {
        head: q.head.clone(),
        conjuncts: rendered.into_iter().map(|(_, i)| q.conjuncts[i].clone()).collect(),
    }
}

/// Structure of a reversible IR with entities replaced by `ENT` and
/// variables renamed `V0, V1, ...` in first-occurrence order, so that
/// co-reference between variables survives.
pub fn sparql_structure_signature(z: &SparqlRir) -> String {
    let shape = |t: &Term| match t {
        Term::Var(_) => "V".to_string(),
        Term::Entity(_) => "ENT".to_string(),
        Term::Constant(c) => c.clone(),
    };
    let group_key = |g: &RirGroup| {
        SparqlRir {
            head: SelectHead::Count,
            groups: vec![g.clone()],
            bracketed: z.bracketed,
        }
        .render_with(&shape)
    };
    let mut groups: Vec<(String, &RirGroup)> = z.groups.iter().map(|g| (group_key(g), g)).collect();
    groups.sort_by(|a, b| a.0.cmp(&b.0));

    let mut names: HashMap<Term, String> = HashMap::new();
    let mut visit = |t: &Term| {
        if matches!(t, Term::Var(_)) && !names.contains_key(t) {
            let n = names.len();
            names.insert(t.clone(), format!("V{n}"));
        }
    };
    if let SelectHead::Distinct(vars) = &z.head {
        vars.iter().for_each(&mut visit);
    }
    for (_, g) in &groups {
        match g {
            RirGroup::Triple { subject, objects, .. } => {
                visit(subject);
                objects.iter().for_each(&mut visit);
            }
            RirGroup::Filter(f) => {
                visit(&f.left);
                visit(&f.right);
            }
        }
    }
    let rename = |t: &Term| match t {
        Term::Var(_) => names[t].clone(),
        Term::Entity(_) => "ENT".to_string(),
        Term::Constant(c) => c.clone(),
    };
    let mut renamed: Vec<(String, RirGroup)> = groups
        .into_iter()
        .map(|(_, g)| {
            let single = SparqlRir {
                head: SelectHead::Count,
                groups: vec![g.clone()],
                bracketed: z.bracketed,
            };
            (single.render_with(&rename), g.clone())
        })
        .collect();
    renamed.sort_by(|a, b| a.0.cmp(&b.0));
    SparqlRir {
        head: z.head.clone(),
        groups: renamed.into_iter().map(|(_, g)| g).collect(),
        bracketed: z.bracketed,
    }
    .render_with(&rename)
}

/// Canonical rendering used when scoring predictions.
pub fn canonical_sparql(q: &SparqlQuery) -> String {
    render_sparql(&normalize_sparql(q))
}
