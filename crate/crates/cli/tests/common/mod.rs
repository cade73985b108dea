#![allow(dead_code)]

use std::path::PathBuf;

use neuroground::{AblationId, BackendDescriptor};
use neuroground_cli::{InputPaths, Params, RunConfig};
use serde::Deserialize;

pub const DIM: usize = 16;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn inputs() -> InputPaths {
    InputPaths {
        trials: fixture("trials.jsonl"),
        vocab: fixture("vocab.tsv"),
        graph: fixture("graph.tsv"),
        store: Some(fixture("store.tsv")),
        whitelist: None,
    }
}

pub fn config(ablation: AblationId) -> RunConfig {
    RunConfig {
        params: Params {
            dim: DIM,
            ablation,
            ..Params::default()
        },
        backend: BackendDescriptor::mock(),
        inputs: inputs(),
        concurrency: 2,
    }
}

/// Stage values computed independently when the fixture was built.
#[derive(Debug, Deserialize)]
pub struct ExpectedStages {
    pub id: String,
    pub candidates: Vec<String>,
    pub scores: Vec<f64>,
    pub pruned: Vec<String>,
    pub dropped: Vec<String>,
    pub pruned_m0: Vec<String>,
    pub facts: Vec<String>,
    pub exemplar_ids: Vec<String>,
    pub caption: String,
}

pub fn expected() -> Vec<ExpectedStages> {
    serde_json::from_str(&std::fs::read_to_string(fixture("expected_stages.json")).unwrap())
        .unwrap()
}
