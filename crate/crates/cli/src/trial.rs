use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::open;

/// One decoding trial: refined and raw latents plus the upstream classifier
/// guess and the ground-truth caption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub id: String,
    pub z_refined: Vec<f64>,
    pub x_raw: Vec<f64>,
    pub pred_obj: String,
    pub pred_conf: f64,
    pub reference_caption: String,
}

pub fn parse_trials<R: BufRead>(
    source: R,
    dim: usize,
) -> Result<Vec<TrialRecord>, neuroground::Error> {
    use neuroground::Error;
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let t: TrialRecord =
            serde_json::from_str(&line).map_err(|e| Error::ingest(lineno, e.to_string()))?;
        if t.id.trim().is_empty() {
            return Err(Error::ingest(lineno, "empty trial id"));
        }
        for (name, v) in [("z_refined", &t.z_refined), ("x_raw", &t.x_raw)] {
            if v.len() != dim {
                return Err(Error::ingest(
                    lineno,
                    format!("{name} has {} values, expected {dim}", v.len()),
                ));
            }
        }
        if !(0.0..=1.0).contains(&t.pred_conf) {
            return Err(Error::ingest(
                lineno,
                format!("pred_conf {} outside [0, 1]", t.pred_conf),
            ));
        }
        if !ids.insert(t.id.clone()) {
            return Err(Error::ingest(
                lineno,
                format!("duplicate trial id {:?}", t.id),
            ));
        }
        out.push(t);
    }
    if out.is_empty() {
        return Err(Error::Empty("trial file"));
    }
    Ok(out)
}

pub fn load_trials(path: &Path, dim: usize) -> Result<Vec<TrialRecord>, CliError> {
    parse_trials(open(path)?, dim).map_err(|e| CliError::data(path, e))
}
