use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use neuroground::llm::BackendKind;
use neuroground::{
    aggregate, ingest_graph, pruning_statistics, AblationId, Error, LlmClient, MetricReport,
    PruningStatistics,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{Params, RunConfig};
use crate::error::CliError;
use crate::open;
use crate::pipeline::{
    load_whitelist, prune_trial, run_trials, Artifacts, FailureKind, TrialOutput,
};
use crate::trial::{load_trials, TrialRecord};

pub const OUTPUTS_FILE: &str = "outputs.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LLM_LOG_FILE: &str = "llm_log.jsonl";
pub const COMPARISON_FILE: &str = "comparison.tsv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub config: AblationId,
    pub trials: usize,
    pub failed: usize,
    pub mean_prompt_bytes: f64,
    pub pruning: Option<PruningStatistics>,
    /// Scored over trials that produced a caption.
    pub metrics: Option<MetricReport>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<TrialOutput>,
    pub summary: RunSummary,
    transport_failures: usize,
}

impl RunOutput {
    /// Ok when every trial succeeded.
    pub fn status(&self) -> Result<(), CliError> {
        if self.summary.failed == 0 {
            Ok(())
        } else {
            Err(CliError::TrialsFailed {
                failed: self.summary.failed,
                transport: self.transport_failures,
                total: self.summary.trials,
            })
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for row in &self.rows {
            s.push_str(&serde_json::to_string(row).expect("rows serialize"));
            s.push('\n');
        }
        s
    }
}

fn summarize(
    config: AblationId,
    trials: &[TrialRecord],
    results: &[crate::pipeline::TrialResult],
) -> RunSummary {
    let reports: Vec<_> = results.iter().filter_map(|r| r.report.clone()).collect();
    let prompts: Vec<usize> = results
        .iter()
        .filter_map(|r| r.output.prompt.as_ref().map(String::len))
        .collect();
    let refs: Vec<(String, Vec<String>)> = trials
        .iter()
        .zip(results)
        .filter(|(_, r)| r.output.caption.is_some())
        .map(|(t, _)| (t.id.clone(), vec![t.reference_caption.clone()]))
        .collect();
    let gens: Vec<(String, String)> = results
        .iter()
        .filter_map(|r| Some((r.output.id.clone(), r.output.caption.clone()?)))
        .collect();
    let metrics = if refs.is_empty() {
        None
    } else {
        match aggregate(&refs, &gens) {
            Ok(m) => Some(m),
            Err(e) => {
                eprintln!("metrics skipped: {e}");
                None
            }
        }
    };
    RunSummary {
        config,
        trials: results.len(),
        failed: results.iter().filter(|r| r.failure.is_some()).count(),
        mean_prompt_bytes: if prompts.is_empty() {
            0.0
        } else {
            prompts.iter().sum::<usize>() as f64 / prompts.len() as f64
        },
        pruning: pruning_statistics(&reports).ok(),
        metrics,
    }
}

fn build_client(config: &RunConfig, log: Option<&Path>) -> Result<LlmClient, CliError> {
    let mut backend = config.backend.clone();
    backend.max_in_flight = config.concurrency;
    let client = LlmClient::new(backend).map_err(|e| CliError::Config(e.to_string()))?;
    match (config.backend.kind, log) {
        (BackendKind::Http, Some(path)) => {
            let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
            Ok(client.with_log(Box::new(file)))
        }
        _ => Ok(client),
    }
}

/// Decodes already-loaded trials with shared artifacts.
pub fn decode_with(
    config: &RunConfig,
    artifacts: &Artifacts,
    trials: &[TrialRecord],
    out_dir: Option<&Path>,
) -> Result<RunOutput, CliError> {
    config.validate()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let log = out_dir.map(|d| d.join(LLM_LOG_FILE));
    let client = build_client(config, log.as_deref())?;
    let results = run_trials(
        artifacts,
        trials,
        &config.params,
        &client,
        config.concurrency,
    )?;
    let transport_failures = results
        .iter()
        .filter(|r| r.failure == Some(FailureKind::Transport))
        .count();
    let summary = summarize(config.params.ablation, trials, &results);
    let run = RunOutput {
        rows: results.into_iter().map(|r| r.output).collect(),
        summary,
        transport_failures,
    };
    if let Some(dir) = out_dir {
        write_file(&dir.join(OUTPUTS_FILE), run.to_jsonl().as_bytes())?;
        write_json(&dir.join(SUMMARY_FILE), &run.summary)?;
        write_json(&dir.join(MANIFEST_FILE), &manifest(config)?)?;
    }
    Ok(run)
}

pub fn cmd_decode(config: &RunConfig, out_dir: Option<&Path>) -> Result<RunOutput, CliError> {
    config.validate()?;
    let artifacts = Artifacts::load(&config.inputs, config.params.dim)?;
    let trials = load_trials(&config.inputs.trials, config.params.dim)?;
    decode_with(config, &artifacts, &trials, out_dir)
}

/// Pruning-only pass over every trial.
pub fn cmd_prune_stats(
    params: &Params,
    inputs: &crate::config::InputPaths,
) -> Result<PruningStatistics, CliError> {
    params.validate()?;
    let vocab = neuroground::load_vocabulary(open(&inputs.vocab)?, params.dim)
        .map_err(|e| CliError::data(&inputs.vocab, e))?;
    let (graph, _) =
        ingest_graph(open(&inputs.graph)?).map_err(|e| CliError::data(&inputs.graph, e))?;
    let artifacts = Artifacts {
        vocab,
        graph,
        store: None,
        whitelist: Default::default(),
    };
    let trials = load_trials(&inputs.trials, params.dim)?;
    let reports = trials
        .iter()
        .map(|t| {
            prune_trial(&artifacts, t, params)
                .map(|(_, _, r)| r)
                .map_err(|e| CliError::data(&inputs.trials, Error::record(&t.id, e.to_string())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    pruning_statistics(&reports).map_err(|e| CliError::data(&inputs.trials, e))
}

#[derive(Deserialize)]
struct GenerationLine {
    id: String,
    caption: Option<String>,
}

#[derive(Deserialize)]
struct ReferenceLine {
    id: String,
    #[serde(default)]
    references: Option<Vec<String>>,
    #[serde(default)]
    reference_caption: Option<String>,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line)
            .map_err(|e| CliError::data(path, Error::ingest(i + 1, e.to_string())))?;
        out.push(v);
    }
    Ok(out)
}

/// Scores a generations file (`id`, `caption`) against references (`id`
/// with `references` or `reference_caption`). Trial files and decode
/// outputs are accepted directly.
pub fn cmd_evaluate(generations: &Path, references: &Path) -> Result<MetricReport, CliError> {
    let gens = read_jsonl::<GenerationLine>(generations)?
        .into_iter()
        .map(|g| match g.caption {
            Some(c) => Ok((g.id, c)),
            None => Err(CliError::data(
                generations,
                Error::record(g.id, "no caption"),
            )),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let refs = read_jsonl::<ReferenceLine>(references)?
        .into_iter()
        .map(|r| {
            let list = match (r.references, r.reference_caption) {
                (Some(list), _) if !list.is_empty() => list,
                (_, Some(one)) => vec![one],
                _ => {
                    return Err(CliError::data(
                        references,
                        Error::record(r.id, "no references"),
                    ))
                }
            };
            Ok((r.id, list))
        })
        .collect::<Result<Vec<_>, _>>()?;
    aggregate(&refs, &gens).map_err(CliError::Evaluation)
}

pub struct AblationRun {
    pub id: AblationId,
    pub run: RunOutput,
}

/// Decodes every configuration in `ids` over shared artifacts, one output
/// directory per id plus a comparison table.
pub fn cmd_ablate(
    config: &RunConfig,
    ids: &[AblationId],
    out_dir: Option<&Path>,
) -> Result<Vec<AblationRun>, CliError> {
    if ids.is_empty() {
        return Err(CliError::Config("no ablation ids given".into()));
    }
    for &id in ids {
        config.with_ablation(id).validate()?;
    }
    let artifacts = Artifacts::load(&config.inputs, config.params.dim)?;
    let trials = load_trials(&config.inputs.trials, config.params.dim)?;
    let mut runs = Vec::new();
    for &id in ids {
        let dir: Option<PathBuf> = out_dir.map(|d| d.join(id.to_string()));
        let run = decode_with(
            &config.with_ablation(id),
            &artifacts,
            &trials,
            dir.as_deref(),
        )?;
        runs.push(AblationRun { id, run });
    }
    if let Some(dir) = out_dir {
        write_file(
            &dir.join(COMPARISON_FILE),
            comparison_table(&runs).as_bytes(),
        )?;
    }
    Ok(runs)
}

pub fn comparison_table(runs: &[AblationRun]) -> String {
    let mut s = String::from(
        "config\ttrials\tfailed\tmean_retained\tmean_prompt_bytes\tbleu1\tbleu4\trouge1\trouge2\trougeL\tmeteor\n",
    );
    for r in runs {
        let sm = &r.run.summary;
        let retained = sm
            .pruning
            .as_ref()
            .map_or("-".into(), |p| format!("{:.2}", p.mean_retained));
        s.push_str(&format!(
            "{}\t{}\t{}\t{retained}\t{:.1}",
            r.id, sm.trials, sm.failed, sm.mean_prompt_bytes
        ));
        match &sm.metrics {
            Some(m) => {
                for (_, v) in m.values() {
                    s.push_str(&format!("\t{v:.2}"));
                }
            }
            None => s.push_str(&"\t-".repeat(6)),
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphCheck {
    pub lines: usize,
    pub edges: usize,
    pub vertices: usize,
    pub whitelisted_edges: usize,
    pub relations: BTreeMap<String, usize>,
}

/// Validation pass over a graph file.
pub fn cmd_ingest_graph(graph: &Path, whitelist: Option<&Path>) -> Result<GraphCheck, CliError> {
    let whitelist = load_whitelist(whitelist)?;
    let (g, summary) = ingest_graph(open(graph)?).map_err(|e| CliError::data(graph, e))?;
    let mut relations = BTreeMap::new();
    for e in g.edges() {
        *relations.entry(e.relation.clone()).or_insert(0) += 1;
    }
    Ok(GraphCheck {
        lines: summary.lines,
        edges: summary.edges,
        vertices: g.vertex_count(),
        whitelisted_edges: g
            .edges()
            .iter()
            .filter(|e| whitelist.contains(&e.relation))
            .count(),
        relations,
    })
}

fn digest(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Configuration plus SHA-256 digests of every input file.
pub fn manifest(config: &RunConfig) -> Result<Value, CliError> {
    let i = &config.inputs;
    let mut inputs = BTreeMap::new();
    for (role, path) in [
        ("trials", Some(&i.trials)),
        ("vocab", Some(&i.vocab)),
        ("graph", Some(&i.graph)),
        ("store", i.store.as_ref()),
        ("whitelist", i.whitelist.as_ref()),
    ] {
        if let Some(p) = path {
            inputs.insert(
                role,
                serde_json::json!({"path": p.display().to_string(), "sha256": digest(p)?}),
            );
        }
    }
    Ok(serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "params": config.params,
        "backend": config.backend,
        "concurrency": config.concurrency,
        "inputs": inputs,
    }))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}
