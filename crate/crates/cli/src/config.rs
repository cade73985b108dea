use std::path::PathBuf;

use neuroground::exemplars::DEFAULT_N_EXEMPLARS;
use neuroground::facts::DEFAULT_N_FACTS;
use neuroground::graph::{DEFAULT_M, DEFAULT_W_MIN};
use neuroground::latent::{DEFAULT_DIM, DEFAULT_K};
use neuroground::{AblationId, BackendDescriptor};
use serde::Serialize;

use crate::error::CliError;

/// Pipeline hyperparameters shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params {
    pub k: usize,
    pub m: usize,
    pub w_min: f64,
    pub n_facts: usize,
    pub n_exemplars: usize,
    pub dim: usize,
    pub ablation: AblationId,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            m: DEFAULT_M,
            w_min: DEFAULT_W_MIN,
            n_facts: DEFAULT_N_FACTS,
            n_exemplars: DEFAULT_N_EXEMPLARS,
            dim: DEFAULT_DIM,
            ablation: AblationId::A1,
        }
    }
}

impl Params {
    /// Safeguard size actually applied; A2 always runs without one.
    pub fn effective_m(&self) -> usize {
        if self.ablation.disables_priority() {
            0
        } else {
            self.m
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.k == 0 {
            return Err(CliError::Config("k must be at least 1".into()));
        }
        if self.m > self.k {
            return Err(CliError::Config(format!(
                "m = {} exceeds k = {}",
                self.m, self.k
            )));
        }
        if !(self.w_min.is_finite() && self.w_min >= 0.0) {
            return Err(CliError::Config(format!(
                "w_min {} must be a finite non-negative number",
                self.w_min
            )));
        }
        if self.dim == 0 {
            return Err(CliError::Config("dim must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputPaths {
    pub trials: PathBuf,
    pub vocab: PathBuf,
    pub graph: PathBuf,
    /// Needed only by configurations that use exemplars.
    pub store: Option<PathBuf>,
    /// Replaces the built-in relation whitelist.
    pub whitelist: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: Params,
    pub backend: BackendDescriptor,
    pub inputs: InputPaths,
    /// Worker threads for trial processing.
    pub concurrency: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate()?;
        self.backend
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.concurrency == 0 {
            return Err(CliError::Config("concurrency must be at least 1".into()));
        }
        if self.params.ablation.uses_exemplars() && self.inputs.store.is_none() {
            return Err(CliError::Config(format!(
                "ablation {} uses exemplars and needs --store",
                self.params.ablation
            )));
        }
        Ok(())
    }

    pub fn with_ablation(&self, ablation: AblationId) -> Self {
        let mut c = self.clone();
        c.params.ablation = ablation;
        c
    }
}
