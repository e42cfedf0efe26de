use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use super::SparqlQuery;

#[derive(Debug, Error)]
pub enum DictError {
    #[error("cannot build a relation dictionary from an empty corpus")]
    EmptyCorpus,
    #[error("relations `{0}` and `{1}` cannot be given distinct short names")]
    Collision(String, String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown short relation `{0}`")]
    UnknownShortRelation(String),
    #[error("dictionary file: {0}")]
    Io(#[from] std::io::Error),
    #[error("dictionary file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Bijective map between full relation names and their truncated forms.
///
/// A relation `<prefix>ns:<suffix>` is shortened to the shortest dot-segment
/// suffix of `<suffix>` (split at the last `ns:`) that is not also a
/// candidate name of another relation. Relations without `ns:` keep their
/// name. When every suffix collides the full name is kept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationDictionary {
    forward: BTreeMap<String, String>,
    backward: BTreeMap<String, String>,
}

/// Candidate short names for a relation, shortest first. The last candidate
/// is always the full name.
pub(crate) fn candidates(relation: &str) -> Vec<String> {
    let Some(at) = relation.rfind("ns:") else {
        return vec![relation.to_string()];
    };
    let suffix = &relation[at + 3..];
    let mut out = Vec::new();
    if !suffix.is_empty() {
        let dots: Vec<usize> = suffix.match_indices('.').map(|(i, _)| i).collect();
        for &d in dots.iter().rev() {
            if d + 1 < suffix.len() {
                out.push(suffix[d + 1..].to_string());
            }
        }
        out.push(suffix.to_string());
    }
    out.push(relation.to_string());
    out.dedup();
    out
}

impl RelationDictionary {
    /// Build from every relation that appears in `corpus`.
    pub fn build<'a>(corpus: impl IntoIterator<Item = &'a SparqlQuery>) -> Result<Self, DictError> {
        let mut relations = BTreeSet::new();
        let mut queries = 0usize;
        for q in corpus {
            queries += 1;
            relations.extend(q.relations().map(str::to_string));
        }
        if queries == 0 {
            return Err(DictError::EmptyCorpus);
        }
        Self::from_relations(relations)
    }

    pub fn from_relations<I, S>(relations: I) -> Result<Self, DictError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let relations: BTreeSet<String> = relations.into_iter().map(Into::into).collect();
        let cands: Vec<(String, Vec<String>)> = relations.iter().map(|r| (r.clone(), candidates(r))).collect();
        // candidate -> number of relations that own it
        let mut owners: HashMap<&str, usize> = HashMap::new();
        for (_, cs) in &cands {
            for c in cs {
                *owners.entry(c.as_str()).or_default() += 1;
            }
        }
        let mut dict = RelationDictionary::default();
        for (rel, cs) in &cands {
            // a relation's full name is never a candidate of another one
            let short = if rel.contains("ns:") {
                cs.iter().find(|c| owners[c.as_str()] == 1).unwrap_or(rel)
            } else {
                rel
            };
            dict.insert(rel.clone(), short.clone())?;
        }
        Ok(dict)
    }

    fn insert(&mut self, full: String, short: String) -> Result<(), DictError> {
        if let Some(prev) = self.backward.get(&short) {
            return Err(DictError::Collision(prev.clone(), full));
        }
        self.backward.insert(short.clone(), full.clone());
        self.forward.insert(full, short);
        Ok(())
    }

    pub fn shorten(&self, full: &str) -> Result<&str, DictError> {
        self.forward
            .get(full)
            .map(String::as_str)
            .ok_or_else(|| DictError::UnknownRelation(full.to_string()))
    }

    pub fn expand(&self, short: &str) -> Result<&str, DictError> {
        self.backward
            .get(short)
            .map(String::as_str)
            .ok_or_else(|| DictError::UnknownShortRelation(short.to_string()))
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.forward.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// JSON object `{full: short}` with sorted keys.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.forward).expect("string map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DictError> {
        let forward: BTreeMap<String, String> = serde_json::from_str(text)?;
        let mut dict = RelationDictionary::default();
        for (full, short) in forward {
            dict.insert(full, short)?;
        }
        Ok(dict)
    }

    pub fn save(&self, path: &Path) -> Result<(), DictError> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DictError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
