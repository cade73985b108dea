//! Commonsense multigraph, per-trial induced subgraphs and centrality-based
//! candidate pruning.
//!
//! A candidate keyword survives pruning when it is connected to at least one
//! other candidate through a sufficiently confident edge, or when it sits in
//! the top `m` ranks of the neural retrieval (the priority safeguard).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent::CandidateSet;

/// Default minimum edge weight for the induced subgraph.
pub const DEFAULT_W_MIN: f64 = 1.0;
/// Default size of the priority safeguard set.
pub const DEFAULT_M: usize = 5;

/// Normalized vertex identifier: lowercase, trimmed, inner whitespace runs
/// replaced by `_`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(String);

impl ConceptId {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Concept rendered for prose: underscores become spaces.
    pub fn display_text(&self) -> String {
        self.0.replace('_', " ")
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ConceptId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

pub fn normalize_concept(word: &str) -> Result<ConceptId> {
    let parts: Vec<String> = word.split_whitespace().map(str::to_lowercase).collect();
    if parts.is_empty() {
        return Err(Error::Domain("empty concept".into()));
    }
    Ok(ConceptId(parts.join("_")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub head: ConceptId,
    pub relation: String,
    pub tail: ConceptId,
    pub weight: f64,
}

/// Weighted directed multigraph. Immutable after ingestion.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    vertices: HashSet<ConceptId>,
    edges: Vec<Edge>,
    // edge indices by head, in insertion order
    outgoing: HashMap<ConceptId, Vec<usize>>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an edge, registering both endpoints. Parallel edges are kept.
    pub fn add_edge(&mut self, edge: Edge) -> Result<()> {
        if !(edge.weight.is_finite() && edge.weight >= 0.0) {
            return Err(Error::Domain(format!(
                "edge weight {} must be finite and non-negative",
                edge.weight
            )));
        }
        self.vertices.insert(edge.head.clone());
        self.vertices.insert(edge.tail.clone());
        self.outgoing
            .entry(edge.head.clone())
            .or_default()
            .push(self.edges.len());
        self.edges.push(edge);
        Ok(())
    }

    pub fn contains(&self, v: &ConceptId) -> bool {
        self.vertices.contains(v)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges leaving `head`, in ingestion order.
    pub fn outgoing(&self, head: &ConceptId) -> impl Iterator<Item = (usize, &Edge)> {
        self.outgoing
            .get(head)
            .into_iter()
            .flatten()
            .map(|&i| (i, &self.edges[i]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    /// Lines read, including blank and comment lines.
    pub lines: usize,
    pub edges: usize,
}

/// Parses `head<TAB>relation<TAB>tail<TAB>weight` lines. Blank lines and
/// lines starting with `#` are skipped.
pub fn ingest_graph<R: BufRead>(source: R) -> Result<(KnowledgeGraph, IngestSummary)> {
    let mut graph = KnowledgeGraph::new();
    let mut lines = 0;
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        lines = lineno;
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::ingest(
                lineno,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let head = normalize_concept(cols[0]).map_err(|_| Error::ingest(lineno, "empty head"))?;
        let relation = cols[1].trim();
        if relation.is_empty() {
            return Err(Error::ingest(lineno, "empty relation"));
        }
        let tail = normalize_concept(cols[2]).map_err(|_| Error::ingest(lineno, "empty tail"))?;
        let weight: f64 = cols[3]
            .trim()
            .parse()
            .map_err(|_| Error::ingest(lineno, format!("invalid weight {:?}", cols[3])))?;
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::ingest(
                lineno,
                format!("weight {weight} is negative or not finite"),
            ));
        }
        graph.add_edge(Edge {
            head,
            relation: relation.to_owned(),
            tail,
            weight,
        })?;
    }
    let summary = IngestSummary {
        lines,
        edges: graph.edge_count(),
    };
    Ok((graph, summary))
}

/// Candidate concepts plus the graph edges among them at or above `w_min`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedSubgraph {
    /// Candidate concepts in rank order, first occurrence only.
    pub vertices: Vec<ConceptId>,
    /// Retained edges in graph ingestion order. No self-loops.
    pub edges: Vec<Edge>,
    pub w_min: f64,
}

impl InducedSubgraph {
    pub fn contains(&self, v: &ConceptId) -> bool {
        self.vertices.contains(v)
    }

    /// Distinct neighbors of every vertex in the undirected simplification of
    /// the edge set.
    pub fn neighbor_counts(&self) -> HashMap<&ConceptId, usize> {
        let mut neighbors: HashMap<&ConceptId, BTreeSet<&ConceptId>> =
            self.vertices.iter().map(|v| (v, BTreeSet::new())).collect();
        for e in &self.edges {
            if e.head == e.tail {
                continue;
            }
            if let Some(s) = neighbors.get_mut(&e.head) {
                s.insert(&e.tail);
            }
            if let Some(s) = neighbors.get_mut(&e.tail) {
                s.insert(&e.head);
            }
        }
        neighbors.into_iter().map(|(v, s)| (v, s.len())).collect()
    }

    fn centrality_from_degree(&self, degree: usize) -> f64 {
        match self.vertices.len() {
            0 | 1 => 0.0,
            n => degree as f64 / (n - 1) as f64,
        }
    }

    /// Normalized degree centrality of every vertex, in vertex order.
    pub fn centralities(&self) -> Vec<(ConceptId, f64)> {
        let degrees = self.neighbor_counts();
        self.vertices
            .iter()
            .map(|v| (v.clone(), self.centrality_from_degree(degrees[v])))
            .collect()
    }
}

pub fn induce_subgraph(
    graph: &KnowledgeGraph,
    candidates: &CandidateSet,
    w_min: f64,
) -> Result<InducedSubgraph> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate set"));
    }
    let mut vertices = Vec::with_capacity(candidates.len());
    let mut members = HashSet::new();
    for word in candidates.words() {
        let c = normalize_concept(word)?;
        if members.insert(c.clone()) {
            vertices.push(c);
        }
    }
    let mut kept: Vec<usize> = vertices
        .iter()
        .flat_map(|v| graph.outgoing(v))
        .filter(|(_, e)| e.head != e.tail && members.contains(&e.tail) && e.weight >= w_min)
        .map(|(i, _)| i)
        .collect();
    kept.sort_unstable();
    Ok(InducedSubgraph {
        vertices,
        edges: kept.into_iter().map(|i| graph.edges[i].clone()).collect(),
        w_min,
    })
}

/// `deg(v) / (|V_G| - 1)`, with 0 for a single-vertex subgraph.
pub fn degree_centrality(sub: &InducedSubgraph, v: &ConceptId) -> Result<f64> {
    if !sub.contains(v) {
        return Err(Error::Domain(format!("{v} is not a subgraph vertex")));
    }
    let degree = sub.neighbor_counts()[v];
    Ok(sub.centrality_from_degree(degree))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruningConfig {
    /// Number of top-ranked candidates exempt from pruning.
    pub m: usize,
    pub w_min: f64,
}

impl Default for PruningConfig {
    fn default() -> Self {
        Self {
            m: DEFAULT_M,
            w_min: DEFAULT_W_MIN,
        }
    }
}

/// Surviving candidate words, rank order preserved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrunedVocabulary {
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruningReport {
    pub retained: Vec<String>,
    pub dropped: Vec<String>,
    pub retained_count: usize,
    pub dropped_count: usize,
    /// Isolated words kept only because they are in the safeguard set.
    pub rescued_by_priority: Vec<String>,
}

/// Keeps candidates whose concept has nonzero centrality or belongs to the
/// first `m` ranks. A repeated concept keeps only its best-ranked word; later
/// repeats are reported as dropped.
pub fn prune(
    candidates: &CandidateSet,
    sub: &InducedSubgraph,
    config: &PruningConfig,
) -> Result<(PrunedVocabulary, PruningReport)> {
    if config.m > candidates.len() {
        return Err(Error::Domain(format!(
            "priority size m = {} exceeds {} candidates",
            config.m,
            candidates.len()
        )));
    }
    let degrees = sub.neighbor_counts();
    let priority: HashSet<ConceptId> = candidates
        .words()
        .take(config.m)
        .filter_map(|w| normalize_concept(w).ok())
        .collect();

    let mut seen = HashSet::new();
    let mut report = PruningReport {
        retained: Vec::new(),
        dropped: Vec::new(),
        retained_count: 0,
        dropped_count: 0,
        rescued_by_priority: Vec::new(),
    };
    for word in candidates.words() {
        let concept = normalize_concept(word)?;
        if !seen.insert(concept.clone()) {
            report.dropped.push(word.to_owned());
            continue;
        }
        let connected = degrees.get(&concept).is_some_and(|&d| d > 0);
        if connected || priority.contains(&concept) {
            if !connected {
                report.rescued_by_priority.push(word.to_owned());
            }
            report.retained.push(word.to_owned());
        } else {
            report.dropped.push(word.to_owned());
        }
    }
    report.retained_count = report.retained.len();
    report.dropped_count = report.dropped.len();
    let pruned = PrunedVocabulary {
        words: report.retained.clone(),
    };
    Ok((pruned, report))
}

/// Macro-level pruning statistics over a set of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruningStatistics {
    pub trials: usize,
    pub total_candidates: usize,
    pub total_dropped: usize,
    pub mean_retained: f64,
    pub mean_dropped: f64,
    /// total dropped / total candidates, in [0, 1].
    pub macro_rate: f64,
    pub max_dropped: usize,
    pub min_dropped: usize,
}

pub fn pruning_statistics(reports: &[PruningReport]) -> Result<PruningStatistics> {
    if reports.is_empty() {
        return Err(Error::Empty("pruning report list"));
    }
    let n = reports.len();
    let total_retained: usize = reports.iter().map(|r| r.retained_count).sum();
    let total_dropped: usize = reports.iter().map(|r| r.dropped_count).sum();
    let total_candidates = total_retained + total_dropped;
    let macro_rate = if total_candidates == 0 {
        0.0
    } else {
        total_dropped as f64 / total_candidates as f64
    };
    Ok(PruningStatistics {
        trials: n,
        total_candidates,
        total_dropped,
        mean_retained: total_retained as f64 / n as f64,
        mean_dropped: total_dropped as f64 / n as f64,
        macro_rate,
        max_dropped: reports.iter().map(|r| r.dropped_count).max().unwrap_or(0),
        min_dropped: reports.iter().map(|r| r.dropped_count).min().unwrap_or(0),
    })
}

impl fmt::Display for PruningStatistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trials={}", self.trials)?;
        writeln!(f, "mean_retained={:.2}", self.mean_retained)?;
        writeln!(f, "mean_dropped={:.2}", self.mean_dropped)?;
        writeln!(f, "macro_pruning_rate_pct={:.1}", self.macro_rate * 100.0)?;
        writeln!(f, "max_dropped={}", self.max_dropped)?;
        write!(f, "min_dropped={}", self.min_dropped)
    }
}
