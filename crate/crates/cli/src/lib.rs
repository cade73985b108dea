//! Command-line orchestration for the decoding pipeline: trial ingestion,
//! per-trial decoding on a worker pool, ablation sweeps, pruning statistics
//! and caption evaluation.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod trial;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

pub use commands::{cmd_ablate, cmd_decode, cmd_evaluate, cmd_ingest_graph, cmd_prune_stats};
pub use config::{InputPaths, Params, RunConfig};
pub use error::CliError;
pub use trial::TrialRecord;

pub(crate) fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}
