//! Relational fact extraction: whitelisted subgraph edges verbalized into
//! short English statements and capped at a fixed capacity.

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ConceptId, InducedSubgraph};

/// Default fact capacity.
pub const DEFAULT_N_FACTS: usize = 5;

const DEFAULT_TEMPLATES: [(&str, &str); 5] = [
    ("AtLocation", "{h} is typically found at {t}"),
    ("UsedFor", "{h} is used for {t}"),
    ("HasProperty", "{h} has the property {t}"),
    ("CapableOf", "{h} is capable of {t}"),
    ("PartOf", "{h} is part of {t}"),
];

/// Ordered relation names and their verbalization templates. Relation names
/// match graph labels case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationWhitelist {
    entries: Vec<(String, String)>,
}

impl Default for RelationWhitelist {
    fn default() -> Self {
        Self {
            entries: DEFAULT_TEMPLATES
                .iter()
                .map(|(r, t)| (r.to_string(), t.to_string()))
                .collect(),
        }
    }
}

impl RelationWhitelist {
    pub fn new<I, R, T>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (R, T)>,
        R: Into<String>,
        T: Into<String>,
    {
        let mut out: Vec<(String, String)> = Vec::new();
        for (relation, template) in entries {
            let relation = relation.into();
            let template = template.into();
            if relation.trim().is_empty() {
                return Err(Error::Domain("empty relation name".into()));
            }
            if !template.contains("{h}") || !template.contains("{t}") {
                return Err(Error::Domain(format!(
                    "template for {relation} must contain {{h}} and {{t}}"
                )));
            }
            if out.iter().any(|(r, _)| r.eq_ignore_ascii_case(&relation)) {
                return Err(Error::Domain(format!("duplicate relation {relation}")));
            }
            out.push((relation, template));
        }
        if out.is_empty() {
            return Err(Error::Empty("relation whitelist"));
        }
        Ok(Self { entries: out })
    }

    /// Reads `relation<TAB>template` lines; `#` comments and blanks skipped.
    pub fn load<R: BufRead>(source: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (rel, tpl) = line
                .split_once('\t')
                .ok_or_else(|| Error::ingest(i + 1, "expected relation<TAB>template"))?;
            entries.push((rel.trim().to_owned(), tpl.to_owned()));
        }
        Self::new(entries)
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(r, _)| r.as_str())
    }

    /// Canonical whitelist spelling of `relation`, if whitelisted.
    pub fn canonical(&self, relation: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(r, _)| r.eq_ignore_ascii_case(relation))
            .map(|(r, _)| r.as_str())
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.canonical(relation).is_some()
    }

    pub fn verbalize(&self, head: &ConceptId, relation: &str, tail: &ConceptId) -> Result<String> {
        let (_, template) = self
            .entries
            .iter()
            .find(|(r, _)| r.eq_ignore_ascii_case(relation))
            .ok_or_else(|| Error::UnknownRelation(relation.to_owned()))?;
        Ok(template
            .replace("{h}", &head.display_text())
            .replace("{t}", &tail.display_text()))
    }
}

/// Verbalizes a triple with the built-in template table.
pub fn verbalize(head: &ConceptId, relation: &str, tail: &ConceptId) -> Result<String> {
    RelationWhitelist::default().verbalize(head, relation, tail)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub surface: String,
    pub head: ConceptId,
    pub relation: String,
    pub tail: ConceptId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactSet {
    pub facts: Vec<Fact>,
    pub capacity: usize,
}

impl FactSet {
    pub fn empty(capacity: usize) -> Self {
        Self {
            facts: Vec::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.facts.iter().map(|f| f.surface.as_str())
    }
}

/// Whitelisted edges of `sub`, deduplicated by triple (keeping the heaviest),
/// ordered by weight descending then head, relation, tail, and truncated to
/// `capacity`.
pub fn extract_facts(
    sub: &InducedSubgraph,
    whitelist: &RelationWhitelist,
    capacity: usize,
) -> Result<FactSet> {
    let mut best: HashMap<(&ConceptId, &str, &ConceptId), f64> = HashMap::new();
    for e in &sub.edges {
        let Some(rel) = whitelist.canonical(&e.relation) else {
            continue;
        };
        let w = best.entry((&e.head, rel, &e.tail)).or_insert(e.weight);
        if e.weight > *w {
            *w = e.weight;
        }
    }
    let mut triples: Vec<_> = best.into_iter().collect();
    triples.sort_by(|((h1, r1, t1), w1), ((h2, r2, t2), w2)| {
        w2.total_cmp(w1)
            .then_with(|| h1.cmp(h2))
            .then_with(|| r1.cmp(r2))
            .then_with(|| t1.cmp(t2))
    });
    triples.truncate(capacity);
    let facts = triples
        .into_iter()
        .map(|((head, rel, tail), weight)| {
            Ok(Fact {
                surface: whitelist.verbalize(head, rel, tail)?,
                head: head.clone(),
                relation: rel.to_owned(),
                tail: tail.clone(),
                weight,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FactSet { facts, capacity })
}
