//! Neural latents, the frozen vocabulary matrix, and candidate keyword
//! retrieval by cosine similarity.
//!
//! The refined latent `z` of a trial is compared against every vocabulary
//! row; the `k` most similar words form the raw candidate set that the
//! graph stage later purifies.

use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::normalize_concept;
use crate::topk::{dot, top_k_indices};

/// Default latent dimension produced by the upstream encoder.
pub const DEFAULT_DIM: usize = 512;
/// Default number of raw candidates.
pub const DEFAULT_K: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentKind {
    /// Output of the refiner, aligned with the vocabulary space.
    RefinedZ,
    /// Unrefined encoder output, used for exemplar lookup.
    RawX,
}

/// A finite, nonzero latent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector {
    values: Vec<f64>,
    kind: LatentKind,
}

impl LatentVector {
    pub fn new(values: Vec<f64>, kind: LatentKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("latent vector"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("latent entry {i} is not finite")));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::Domain(
                "zero latent vector cannot be normalized".into(),
            ));
        }
        Ok(Self { values, kind })
    }

    /// Like [`LatentVector::new`], additionally checking the dimension.
    pub fn with_dim(values: Vec<f64>, kind: LatentKind, dim: usize) -> Result<Self> {
        if values.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                actual: values.len(),
            });
        }
        Self::new(values, kind)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> LatentKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    /// Scaled copy; `factor` must be positive.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Domain(format!(
                "scale factor {factor} must be positive"
            )));
        }
        Self::new(self.values.iter().map(|v| v * factor).collect(), self.kind)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    // Scale by the max magnitude first so tiny or huge inputs do not
    // underflow/overflow when squared.
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 || !max.is_finite() {
        return max;
    }
    max * v.iter().map(|x| (x / max).powi(2)).sum::<f64>().sqrt()
}

/// Cosine of `query` against each row. Dot products are taken on the raw
/// values and divided by both norms afterwards, so rows that tie exactly in
/// real arithmetic also tie in floating point for small-integer data.
pub(crate) fn cosines(query: &LatentVector, rows: &[Vec<f64>], norms: &[f64]) -> Vec<f64> {
    let qn = query.norm();
    rows.iter()
        .zip(norms)
        .map(|(r, rn)| dot(query.values(), r) / qn / rn)
        .collect()
}

pub(crate) fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

/// Unit-length copy of `v` pointing the same way.
pub fn l2_normalize(v: &LatentVector) -> Result<LatentVector> {
    let values =
        unit(&v.values).ok_or_else(|| Error::Domain("cannot normalize a zero vector".into()))?;
    Ok(LatentVector {
        values,
        kind: v.kind,
    })
}

/// Ordered word list with embedding rows and their norms. Row index is the
/// canonical word index used for tie-breaking.
#[derive(Debug, Clone)]
pub struct VocabularyMatrix {
    words: Vec<String>,
    rows: Vec<Vec<f64>>,
    norms: Vec<f64>,
    dim: usize,
}

impl VocabularyMatrix {
    /// Builds a matrix from in-memory entries.
    pub fn from_entries<I>(entries: I, dim: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut vocab = Self {
            words: Vec::new(),
            rows: Vec::new(),
            norms: Vec::new(),
            dim,
        };
        let mut seen = HashSet::new();
        for (i, (word, row)) in entries.into_iter().enumerate() {
            vocab.push(i + 1, word, row, &mut seen)?;
        }
        Ok(vocab)
    }

    fn push(
        &mut self,
        line: usize,
        word: String,
        row: Vec<f64>,
        seen: &mut HashSet<String>,
    ) -> Result<()> {
        let concept = normalize_concept(&word).map_err(|_| Error::ingest(line, "empty word"))?;
        if !seen.insert(concept.as_str().to_owned()) {
            return Err(Error::ingest(line, format!("duplicate word {word:?}")));
        }
        if row.len() != self.dim {
            return Err(Error::ingest(
                line,
                format!("expected {} values, found {}", self.dim, row.len()),
            ));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::ingest(line, "non-finite embedding value"));
        }
        let n = norm(&row);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::ingest(line, "zero embedding"));
        }
        self.words.push(word);
        self.rows.push(row);
        self.norms.push(n);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Embedding row as loaded.
    pub fn row(&self, index: usize) -> &[f64] {
        &self.rows[index]
    }

    pub fn row_norm(&self, index: usize) -> f64 {
        self.norms[index]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.words.iter().position(|w| w == word)
    }
}

/// Parses `word<TAB>v1 v2 … vd` lines. Blank lines are skipped; line numbers
/// in errors are 1-based.
pub fn load_vocabulary<R: BufRead>(source: R, dim: usize) -> Result<VocabularyMatrix> {
    let mut vocab = VocabularyMatrix {
        words: Vec::new(),
        rows: Vec::new(),
        norms: Vec::new(),
        dim,
    };
    let mut seen = HashSet::new();
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (word, vector) = line
            .split_once('\t')
            .ok_or_else(|| Error::ingest(lineno, "expected word<TAB>vector"))?;
        let row = parse_vector(vector).map_err(|reason| Error::ingest(lineno, reason))?;
        vocab.push(lineno, word.to_owned(), row, &mut seen)?;
    }
    Ok(vocab)
}

/// Space-separated decimal floats.
pub(crate) fn parse_vector(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| format!("invalid number {tok:?}"))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub word: String,
    /// Cosine similarity to the query latent.
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Raw candidate keywords, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub items: Vec<Candidate>,
    pub k: usize,
}

impl CandidateSet {
    /// Wraps an already-ranked word list (scores unknown, recorded as 0).
    /// Useful when candidates come from somewhere other than the vocabulary.
    pub fn from_ranked_words<S: AsRef<str>>(words: &[S]) -> Self {
        let items = words
            .iter()
            .enumerate()
            .map(|(i, w)| Candidate {
                word: w.as_ref().to_owned(),
                score: 0.0,
                rank: i + 1,
            })
            .collect();
        Self {
            items,
            k: words.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|c| c.word.as_str())
    }
}

/// The `k` vocabulary words most cosine-similar to `z`.
///
/// Scores are raw cosines; ties resolve to the lower vocabulary index. When
/// `k` exceeds the vocabulary size every word is returned.
pub fn retrieve_candidates(
    z: &LatentVector,
    vocab: &VocabularyMatrix,
    k: usize,
) -> Result<CandidateSet> {
    if vocab.is_empty() {
        return Err(Error::Empty("vocabulary"));
    }
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if z.dim() != vocab.dim() {
        return Err(Error::Dimension {
            expected: vocab.dim(),
            actual: z.dim(),
        });
    }
    let scores = cosines(z, &vocab.rows, &vocab.norms);
    let items = top_k_indices(&scores, k)
        .into_iter()
        .enumerate()
        .map(|(pos, idx)| Candidate {
            word: vocab.words[idx].clone(),
            score: scores[idx],
            rank: pos + 1,
        })
        .collect();
    Ok(CandidateSet { items, k })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f64]) -> LatentVector {
        LatentVector::new(values.to_vec(), LatentKind::RefinedZ).unwrap()
    }

    #[test]
    fn normalize_three_four_five() {
        let n = l2_normalize(&v(&[3.0, 4.0])).unwrap();
        assert!((n.values()[0] - 0.6).abs() < 1e-12);
        assert!((n.values()[1] - 0.8).abs() < 1e-12);
        assert!((n.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normalize_unit_vector_is_identity() {
        let e1 = v(&[1.0, 0.0, 0.0]);
        assert_eq!(l2_normalize(&e1).unwrap(), e1);
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(matches!(
            LatentVector::new(vec![0.0, 0.0], LatentKind::RawX),
            Err(Error::Domain(_))
        ));
        assert!(LatentVector::new(vec![1.0, f64::NAN], LatentKind::RawX).is_err());
    }

    #[test]
    fn tiny_vectors_normalize() {
        let n = l2_normalize(&v(&[3e-200, 4e-200])).unwrap();
        assert!((n.values()[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn load_three_rows() {
        let src = "dog\t1 0 0 0\ncat\t0 1 0 0\npiano\t0 0 1 1\n";
        let vocab = load_vocabulary(src.as_bytes(), 4).unwrap();
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.words(), &["dog", "cat", "piano"]);
        assert_eq!(vocab.index_of("piano"), Some(2));
        assert_eq!(vocab.row(2), &[0.0, 0.0, 1.0, 1.0]);
        assert!((vocab.row_norm(2) - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn load_wrong_dimension_names_line() {
        let src = "dog\t1 0 0 0\ncat\t0 1 0\n";
        match load_vocabulary(src.as_bytes(), 4) {
            Err(Error::Ingest { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_duplicate_word() {
        let src = "dog\t1 0\ncat\t0 1\ndog\t1 1\n";
        match load_vocabulary(src.as_bytes(), 2) {
            Err(Error::Ingest { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("duplicate"));
            }
            other => panic!("unexpected {other:?}"),
        }
        // Uniqueness is judged on normalized concepts.
        let src = "Golf Ball\t1 0\ngolf_ball\t0 1\n";
        assert!(load_vocabulary(src.as_bytes(), 2).is_err());
    }

    #[test]
    fn load_rejects_zero_row_and_garbage() {
        assert!(load_vocabulary("dog\t0 0\n".as_bytes(), 2).is_err());
        assert!(load_vocabulary("dog 1 0\n".as_bytes(), 2).is_err());
        assert!(load_vocabulary("dog\t1 x\n".as_bytes(), 2).is_err());
    }

    #[test]
    fn self_retrieval_ranks_first() {
        let src = "dog\t1 0 0 0\npiano\t0.2 0.9 0.1 0\ncat\t0 0 1 0\n";
        let vocab = load_vocabulary(src.as_bytes(), 4).unwrap();
        let z = v(&[0.2, 0.9, 0.1, 0.0]);
        let c = retrieve_candidates(&z, &vocab, 2).unwrap();
        assert_eq!(c.items[0].word, "piano");
        assert!((c.items[0].score - 1.0).abs() < 1e-12);
        assert_eq!(c.items[0].rank, 1);
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn oversized_k_returns_all_ranked() {
        let vocab = VocabularyMatrix::from_entries(
            vec![
                ("a".to_string(), vec![1.0, 0.0]),
                ("b".to_string(), vec![0.0, 1.0]),
            ],
            2,
        )
        .unwrap();
        let c = retrieve_candidates(&v(&[0.0, 1.0]), &vocab, 15).unwrap();
        assert_eq!(c.words().collect::<Vec<_>>(), vec!["b", "a"]);
        assert_eq!(c.k, 15);
    }

    #[test]
    fn empty_vocab_and_bad_k() {
        let empty = VocabularyMatrix::from_entries(Vec::new(), 2).unwrap();
        assert!(retrieve_candidates(&v(&[1.0, 0.0]), &empty, 3).is_err());
        let vocab =
            VocabularyMatrix::from_entries(vec![("a".to_string(), vec![1.0, 0.0])], 2).unwrap();
        assert!(retrieve_candidates(&v(&[1.0, 0.0]), &vocab, 0).is_err());
        assert!(matches!(
            retrieve_candidates(&v(&[1.0, 0.0, 0.0]), &vocab, 1),
            Err(Error::Dimension { .. })
        ));
    }
}
