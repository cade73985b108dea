//! Nearest-neighbor caption lookup over the frozen training-split latents.

use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent::{cosines, norm, parse_vector, LatentVector};
use crate::topk::top_k_indices;

/// Default number of exemplars per trial.
pub const DEFAULT_N_EXEMPLARS: usize = 2;

#[derive(Debug, Clone)]
pub struct ExemplarStore {
    ids: Vec<String>,
    captions: Vec<String>,
    rows: Vec<Vec<f64>>,
    norms: Vec<f64>,
    dim: usize,
}

/// One training trial: identifier, raw latent, caption.
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarRecord {
    pub id: String,
    pub latent: Vec<f64>,
    pub caption: String,
}

impl ExemplarStore {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn caption(&self, row: usize) -> &str {
        &self.captions[row]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Latent row as stored.
    pub fn row(&self, row: usize) -> &[f64] {
        &self.rows[row]
    }
}

/// Stacks records into a store, preserving input order.
pub fn build_store<I>(records: I, dim: usize) -> Result<ExemplarStore>
where
    I: IntoIterator<Item = ExemplarRecord>,
{
    let mut store = ExemplarStore {
        ids: Vec::new(),
        captions: Vec::new(),
        rows: Vec::new(),
        norms: Vec::new(),
        dim,
    };
    let mut seen = HashSet::new();
    for rec in records {
        if rec.latent.len() != dim {
            return Err(Error::record(
                rec.id,
                format!("expected dimension {dim}, found {}", rec.latent.len()),
            ));
        }
        if rec.latent.iter().any(|v| !v.is_finite()) {
            return Err(Error::record(rec.id, "non-finite latent value"));
        }
        let n = norm(&rec.latent);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::record(rec.id, "zero latent vector"));
        }
        if !seen.insert(rec.id.clone()) {
            return Err(Error::record(rec.id, "duplicate id"));
        }
        store.ids.push(rec.id);
        store.captions.push(rec.caption);
        store.rows.push(rec.latent);
        store.norms.push(n);
    }
    if store.is_empty() {
        return Err(Error::Empty("exemplar record list"));
    }
    Ok(store)
}

/// Reads `id<TAB>caption<TAB>v1 … vd` lines into a store.
pub fn load_store<R: BufRead>(source: R, dim: usize) -> Result<ExemplarStore> {
    let mut records = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.splitn(3, '\t');
        let (Some(id), Some(caption), Some(vector)) = (cols.next(), cols.next(), cols.next())
        else {
            return Err(Error::ingest(lineno, "expected id<TAB>caption<TAB>vector"));
        };
        if id.trim().is_empty() {
            return Err(Error::ingest(lineno, "empty id"));
        }
        let latent = parse_vector(vector).map_err(|reason| Error::ingest(lineno, reason))?;
        records.push(ExemplarRecord {
            id: id.trim().to_owned(),
            latent,
            caption: caption.to_owned(),
        });
    }
    build_store(records, dim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub id: String,
    pub caption: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarSet {
    pub items: Vec<Exemplar>,
    pub k: usize,
}

impl ExemplarSet {
    pub fn empty(k: usize) -> Self {
        Self {
            items: Vec::new(),
            k,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|e| e.id.as_str())
    }
}

/// Top-`k` store captions by cosine similarity to the raw latent `x`.
pub fn retrieve_exemplars(
    x: &LatentVector,
    store: &ExemplarStore,
    k: usize,
) -> Result<ExemplarSet> {
    if store.is_empty() {
        return Err(Error::Empty("exemplar store"));
    }
    if x.dim() != store.dim {
        return Err(Error::Dimension {
            expected: store.dim,
            actual: x.dim(),
        });
    }
    let scores = cosines(x, &store.rows, &store.norms);
    let items = top_k_indices(&scores, k)
        .into_iter()
        .map(|i| Exemplar {
            id: store.ids[i].clone(),
            caption: store.captions[i].clone(),
            score: scores[i],
        })
        .collect();
    Ok(ExemplarSet { items, k })
}
