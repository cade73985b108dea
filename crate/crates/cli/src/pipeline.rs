use std::path::Path;

use neuroground::{
    extract_facts, induce_subgraph, ingest_graph, load_store, load_vocabulary, prune, render,
    retrieve_candidates, retrieve_exemplars, Error, ExemplarStore, KnowledgeGraph, LatentKind,
    LatentVector, LlmClient, PromptPayload, PruningConfig, PruningReport, RelationWhitelist,
    VocabularyMatrix,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{InputPaths, Params};
use crate::error::CliError;
use crate::open;
use crate::trial::TrialRecord;

/// Read-only inputs shared by every trial of every configuration.
pub struct Artifacts {
    pub vocab: VocabularyMatrix,
    pub graph: KnowledgeGraph,
    pub store: Option<ExemplarStore>,
    pub whitelist: RelationWhitelist,
}

impl Artifacts {
    pub fn load(inputs: &InputPaths, dim: usize) -> Result<Self, CliError> {
        let vocab = load_vocabulary(open(&inputs.vocab)?, dim)
            .map_err(|e| CliError::data(&inputs.vocab, e))?;
        let (graph, _) =
            ingest_graph(open(&inputs.graph)?).map_err(|e| CliError::data(&inputs.graph, e))?;
        let store = inputs
            .store
            .as_deref()
            .map(|p| load_store(open(p)?, dim).map_err(|e| CliError::data(p, e)))
            .transpose()?;
        let whitelist = load_whitelist(inputs.whitelist.as_deref())?;
        Ok(Self {
            vocab,
            graph,
            store,
            whitelist,
        })
    }
}

pub fn load_whitelist(path: Option<&Path>) -> Result<RelationWhitelist, CliError> {
    match path {
        Some(p) => RelationWhitelist::load(open(p)?).map_err(|e| CliError::data(p, e)),
        None => Ok(RelationWhitelist::default()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredWord {
    pub word: String,
    pub score: f64,
}

/// One output row. Stage fields hold whatever was computed before a failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutput {
    pub id: String,
    pub config: neuroground::AblationId,
    pub candidates: Vec<ScoredWord>,
    pub pruned: Vec<String>,
    pub dropped: Vec<String>,
    pub facts: Vec<String>,
    pub exemplar_ids: Vec<String>,
    pub prompt: Option<String>,
    pub caption: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Data,
    Transport,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub output: TrialOutput,
    pub report: Option<PruningReport>,
    pub failure: Option<FailureKind>,
}

fn new_output(trial: &TrialRecord, params: &Params) -> TrialOutput {
    TrialOutput {
        id: trial.id.clone(),
        config: params.ablation,
        candidates: Vec::new(),
        pruned: Vec::new(),
        dropped: Vec::new(),
        facts: Vec::new(),
        exemplar_ids: Vec::new(),
        prompt: None,
        caption: None,
        error: None,
    }
}

/// Retrieval, induction and pruning for one trial.
pub fn prune_trial(
    art: &Artifacts,
    trial: &TrialRecord,
    params: &Params,
) -> Result<
    (
        neuroground::CandidateSet,
        neuroground::InducedSubgraph,
        PruningReport,
    ),
    Error,
> {
    let z = LatentVector::with_dim(trial.z_refined.clone(), LatentKind::RefinedZ, params.dim)?;
    let candidates = retrieve_candidates(&z, &art.vocab, params.k)?;
    let sub = induce_subgraph(&art.graph, &candidates, params.w_min)?;
    let config = PruningConfig {
        m: params.effective_m().min(candidates.len()),
        w_min: params.w_min,
    };
    let (_, report) = prune(&candidates, &sub, &config)?;
    Ok((candidates, sub, report))
}

/// Full pipeline for one trial. Errors end the trial, not the run.
pub fn run_trial(
    art: &Artifacts,
    trial: &TrialRecord,
    params: &Params,
    client: &LlmClient,
) -> TrialResult {
    let mut out = new_output(trial, params);
    let mut report = None;
    let result = (|| -> Result<(), Error> {
        let (candidates, sub, rep) = prune_trial(art, trial, params)?;
        out.candidates = candidates
            .items
            .iter()
            .map(|c| ScoredWord {
                word: c.word.clone(),
                score: c.score,
            })
            .collect();
        out.pruned = rep.retained.clone();
        out.dropped = rep.dropped.clone();
        report = Some(rep);

        let id = params.ablation;
        let facts = if id.uses_facts() {
            let f = extract_facts(&sub, &art.whitelist, params.n_facts)?;
            out.facts = f.surfaces().map(str::to_owned).collect();
            Some(f)
        } else {
            None
        };
        let exemplars = if id.uses_exemplars() {
            let store = art.store.as_ref().ok_or(Error::Empty("exemplar store"))?;
            let x = LatentVector::with_dim(trial.x_raw.clone(), LatentKind::RawX, params.dim)?;
            let e = retrieve_exemplars(&x, store, params.n_exemplars)?;
            out.exemplar_ids = e.ids().map(str::to_owned).collect();
            Some(e)
        } else {
            None
        };
        let payload = PromptPayload {
            pruned_words: out.pruned.clone(),
            facts,
            exemplars,
            pred_obj: id.uses_object().then(|| trial.pred_obj.clone()),
            pred_conf: id.uses_object().then_some(trial.pred_conf),
        };
        let prompt = render(&payload, id)?;
        out.prompt = Some(prompt.text.clone());
        out.caption = Some(client.generate(&prompt)?.caption);
        Ok(())
    })();
    let failure = result.err().map(|e| {
        out.error = Some(e.to_string());
        match e {
            Error::Transport { .. } => FailureKind::Transport,
            _ => FailureKind::Data,
        }
    });
    TrialResult {
        output: out,
        report,
        failure,
    }
}

/// Runs every trial on a bounded pool; results come back in input order.
pub fn run_trials(
    art: &Artifacts,
    trials: &[TrialRecord],
    params: &Params,
    client: &LlmClient,
    concurrency: usize,
) -> Result<Vec<TrialResult>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let results: Vec<TrialResult> = pool.install(|| {
        trials
            .par_iter()
            .map(|t| run_trial(art, t, params, client))
            .collect()
    });
    for r in &results {
        if let Some(e) = &r.output.error {
            eprintln!("trial {}: {e}", r.output.id);
        }
    }
    Ok(results)
}
