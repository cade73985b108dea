//! Lexical-overlap caption metrics: corpus BLEU, ROUGE-1/2/L and an
//! exact-match METEOR.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercases, splits on whitespace and trims non-alphanumeric characters
/// from both ends of every token. Empty tokens are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPair {
    pub id: String,
    pub candidate: String,
    pub references: Vec<String>,
}

impl EvalPair {
    pub fn new(
        id: impl Into<String>,
        candidate: impl Into<String>,
        references: Vec<String>,
    ) -> Self {
        Self {
            id: id.into(),
            candidate: candidate.into(),
            references,
        }
    }

    /// Single-reference shorthand.
    pub fn single(id: impl Into<String>, candidate: &str, reference: &str) -> Self {
        Self::new(id, candidate, vec![reference.to_owned()])
    }
}

struct Tokenized {
    candidate: Vec<String>,
    references: Vec<Vec<String>>,
}

fn prepare(pairs: &[EvalPair]) -> Result<Vec<Tokenized>> {
    if pairs.is_empty() {
        return Err(Error::Empty("evaluation pair list"));
    }
    pairs
        .iter()
        .map(|p| {
            let candidate = tokenize(&p.candidate);
            if candidate.is_empty() {
                return Err(Error::record(&p.id, "candidate has no tokens"));
            }
            if p.references.is_empty() {
                return Err(Error::record(&p.id, "no reference captions"));
            }
            let references = p
                .references
                .iter()
                .map(|r| {
                    let toks = tokenize(r);
                    if toks.is_empty() {
                        Err(Error::record(&p.id, "reference has no tokens"))
                    } else {
                        Ok(toks)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Tokenized {
                candidate,
                references,
            })
        })
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

fn ngram_total(len: usize, n: usize) -> usize {
    (len + 1).saturating_sub(n)
}

/// Corpus-level BLEU over orders `1..=max_n`.
///
/// Clipped n-gram matches and candidate n-gram totals are pooled over the
/// corpus before the geometric mean; the brevity penalty uses the pooled
/// candidate length against the closest reference length per pair (shorter
/// wins ties). No smoothing: any order with candidate n-grams but zero
/// matches gives 0. An order for which no candidate has any n-gram at all is
/// left out of the mean.
pub fn bleu(pairs: &[EvalPair], max_n: usize) -> Result<f64> {
    if max_n == 0 {
        return Err(Error::Domain("BLEU order must be at least 1".into()));
    }
    let corpus = prepare(pairs)?;
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let mut cand_len = 0usize;
    let mut ref_len = 0usize;
    for t in &corpus {
        cand_len += t.candidate.len();
        ref_len += t
            .references
            .iter()
            .map(Vec::len)
            .min_by_key(|&r| (r.abs_diff(t.candidate.len()), r))
            .unwrap_or(0);
        for n in 1..=max_n {
            let cand = ngram_counts(&t.candidate, n);
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for r in &t.references {
                for (g, c) in ngram_counts(r, n) {
                    let e = max_ref.entry(g).or_insert(0);
                    *e = (*e).max(c);
                }
            }
            matched[n - 1] += cand
                .iter()
                .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
                .sum::<usize>();
            total[n - 1] += ngram_total(t.candidate.len(), n);
        }
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 0..max_n {
        if total[n] == 0 {
            continue;
        }
        if matched[n] == 0 {
            return Ok(0.0);
        }
        log_sum += (matched[n] as f64 / total[n] as f64).ln();
        orders += 1;
    }
    let precision = (log_sum / orders as f64).exp();
    let bp = if cand_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    };
    Ok(bp * precision)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RougeVariant {
    One,
    Two,
    L,
}

fn f1(overlap: usize, cand: usize, reference: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / cand as f64;
    let r = overlap as f64 / reference as f64;
    2.0 * p * r / (p + r)
}

fn rouge_n_pair(cand: &[String], reference: &[String], n: usize) -> f64 {
    let (cn, rn) = (ngram_total(cand.len(), n), ngram_total(reference.len(), n));
    if cn == 0 && rn == 0 {
        // Both too short to contain an n-gram: only an exact match scores.
        return if cand == reference { 1.0 } else { 0.0 };
    }
    let c = ngram_counts(cand, n);
    let r = ngram_counts(reference, n);
    let overlap = c
        .iter()
        .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    f1(overlap, cn, rn)
}

pub(crate) fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn rouge_pair(cand: &[String], reference: &[String], variant: RougeVariant) -> f64 {
    match variant {
        RougeVariant::One => rouge_n_pair(cand, reference, 1),
        RougeVariant::Two => rouge_n_pair(cand, reference, 2),
        RougeVariant::L => f1(lcs_len(cand, reference), cand.len(), reference.len()),
    }
}

/// Mean over pairs of the best per-reference F1.
pub fn rouge(pairs: &[EvalPair], variant: RougeVariant) -> Result<f64> {
    let corpus = prepare(pairs)?;
    Ok(mean(corpus.iter().map(|t| {
        best(
            t.references
                .iter()
                .map(|r| rouge_pair(&t.candidate, r, variant)),
        )
    })))
}

fn best(scores: impl Iterator<Item = f64>) -> f64 {
    scores.fold(0.0, f64::max)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Candidate position -> matched reference position, exact token matches
/// only. Each candidate token takes the reference slot right after the
/// previous match when possible, otherwise the earliest free slot.
fn align(cand: &[String], reference: &[String]) -> Vec<Option<usize>> {
    let mut used = vec![false; reference.len()];
    let mut out = Vec::with_capacity(cand.len());
    let mut prev: Option<usize> = None;
    for tok in cand {
        let next = prev
            .map(|p| p + 1)
            .filter(|&j| j < reference.len() && !used[j] && &reference[j] == tok)
            .or_else(|| (0..reference.len()).find(|&j| !used[j] && &reference[j] == tok));
        if let Some(j) = next {
            used[j] = true;
        }
        out.push(next);
        prev = next;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorDetail {
    pub matches: usize,
    pub chunks: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_mean: f64,
    pub penalty: f64,
    pub score: f64,
}

/// Exact-match METEOR for one candidate/reference token pair.
pub fn meteor_detail(cand: &[String], reference: &[String]) -> MeteorDetail {
    let alignment = align(cand, reference);
    let matches = alignment.iter().flatten().count();
    let mut chunks = 0;
    let mut prev: Option<usize> = None;
    for a in &alignment {
        match (prev, a) {
            (Some(p), Some(j)) if *j == p + 1 => {}
            (_, Some(_)) => chunks += 1,
            _ => {}
        }
        prev = *a;
    }
    if matches == 0 {
        return MeteorDetail {
            matches,
            chunks,
            precision: 0.0,
            recall: 0.0,
            f_mean: 0.0,
            penalty: 0.0,
            score: 0.0,
        };
    }
    let precision = matches as f64 / cand.len() as f64;
    let recall = matches as f64 / reference.len() as f64;
    let f_mean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let penalty = 0.5 * (chunks as f64 / matches as f64).powi(3);
    MeteorDetail {
        matches,
        chunks,
        precision,
        recall,
        f_mean,
        penalty,
        score: f_mean * (1.0 - penalty),
    }
}

/// Mean over pairs of the best per-reference METEOR score.
pub fn meteor(pairs: &[EvalPair]) -> Result<f64> {
    let corpus = prepare(pairs)?;
    Ok(mean(corpus.iter().map(|t| {
        best(
            t.references
                .iter()
                .map(|r| meteor_detail(&t.candidate, r).score),
        )
    })))
}

/// Six-metric summary on the display scale (×100).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu1: f64,
    pub bleu4: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
    pub meteor: f64,
    pub pairs: usize,
}

impl MetricReport {
    pub fn values(&self) -> [(&'static str, f64); 6] {
        [
            ("bleu1", self.bleu1),
            ("bleu4", self.bleu4),
            ("rouge1", self.rouge1),
            ("rouge2", self.rouge2),
            ("rougeL", self.rouge_l),
            ("meteor", self.meteor),
        ]
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:>7}", "metric", "score")?;
        for (name, v) in self.values() {
            writeln!(f, "{name:<8} {v:>7.2}")?;
        }
        write!(f, "{:<8} {:>7}", "pairs", self.pairs)
    }
}

pub fn score_pairs(pairs: &[EvalPair]) -> Result<MetricReport> {
    Ok(MetricReport {
        bleu1: 100.0 * bleu(pairs, 1)?,
        bleu4: 100.0 * bleu(pairs, 4)?,
        rouge1: 100.0 * rouge(pairs, RougeVariant::One)?,
        rouge2: 100.0 * rouge(pairs, RougeVariant::Two)?,
        rouge_l: 100.0 * rouge(pairs, RougeVariant::L)?,
        meteor: 100.0 * meteor(pairs)?,
        pairs: pairs.len(),
    })
}

/// Joins references and generations by id and scores the result. Every id
/// must appear on both sides; pair order follows `references`.
pub fn aggregate(
    references: &[(String, Vec<String>)],
    generations: &[(String, String)],
) -> Result<MetricReport> {
    let gen: HashMap<&str, &str> = generations
        .iter()
        .map(|(id, c)| (id.as_str(), c.as_str()))
        .collect();
    let ref_ids: HashSet<&str> = references.iter().map(|(id, _)| id.as_str()).collect();
    let mut missing: Vec<String> = references
        .iter()
        .filter(|(id, _)| !gen.contains_key(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    missing.extend(
        generations
            .iter()
            .filter(|(id, _)| !ref_ids.contains(id.as_str()))
            .map(|(id, _)| id.clone()),
    );
    if !missing.is_empty() {
        return Err(Error::Alignment(missing));
    }
    let pairs: Vec<EvalPair> = references
        .iter()
        .map(|(id, refs)| EvalPair::new(id.clone(), gen[id.as_str()], refs.clone()))
        .collect();
    score_pairs(&pairs)
}
