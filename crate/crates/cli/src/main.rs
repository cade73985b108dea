use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use neuroground::llm::BackendKind;
use neuroground::{AblationId, BackendDescriptor};
use neuroground_cli::commands::comparison_table;
use neuroground_cli::{
    cmd_ablate, cmd_decode, cmd_evaluate, cmd_ingest_graph, cmd_prune_stats, CliError, InputPaths,
    Params, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "neuroground",
    version,
    about = "Knowledge-grounded caption decoding from neural latents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode every trial with one ablation configuration.
    Decode {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, default_value = "A1")]
        ablation: AblationId,
        /// Output directory for outputs.jsonl, summary.json and manifest.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run retrieval and pruning only and report pruning statistics.
    PruneStats {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// A2 forces m = 0; other ids use --m.
        #[arg(long, default_value = "A1")]
        ablation: AblationId,
        #[arg(long)]
        json: bool,
    },
    /// Score generated captions against references.
    Evaluate {
        /// JSONL with `id` and `caption` (decode outputs work as-is).
        #[arg(long)]
        generations: PathBuf,
        /// JSONL with `id` and `references` or `reference_caption`.
        #[arg(long)]
        references: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Decode with several configurations over shared inputs.
    Ablate {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        backend: BackendArgs,
        /// Comma-separated ids; defaults to all eight.
        #[arg(long, value_delimiter = ',')]
        ablation: Vec<AblationId>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a knowledge-graph TSV file.
    IngestGraph {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        whitelist: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PipelineArgs {
    /// Trial JSONL file.
    #[arg(long)]
    trials: PathBuf,
    /// Vocabulary embeddings, `word<TAB>v1 … vd`.
    #[arg(long)]
    vocab: PathBuf,
    /// Knowledge graph, `head<TAB>relation<TAB>tail<TAB>weight`.
    #[arg(long)]
    graph: PathBuf,
    /// Exemplar store, `id<TAB>caption<TAB>v1 … vd`.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Relation whitelist override, `relation<TAB>template`.
    #[arg(long)]
    whitelist: Option<PathBuf>,
    #[arg(long, default_value_t = neuroground::latent::DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = neuroground::latent::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = neuroground::graph::DEFAULT_M)]
    m: usize,
    #[arg(long, default_value_t = neuroground::graph::DEFAULT_W_MIN)]
    w_min: f64,
    #[arg(long, default_value_t = neuroground::facts::DEFAULT_N_FACTS)]
    n_facts: usize,
    #[arg(long, default_value_t = neuroground::exemplars::DEFAULT_N_EXEMPLARS)]
    n_exemplars: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Mock,
    Http,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "mock")]
    backend: Backend,
    /// Chat-completion URL for the http backend.
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name sent with every http request.
    #[arg(long)]
    model: Option<String>,
    /// Worker threads and maximum in-flight requests.
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    /// Use the deterministic mock decoder regardless of --backend.
    #[arg(long)]
    seedless: bool,
    /// Environment variable holding the bearer token.
    #[arg(long)]
    api_key_env: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long, default_value_t = 64)]
    max_tokens: u32,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    /// Extra attempts after a transient failure.
    #[arg(long, default_value_t = 3)]
    retries: u32,
    /// First retry delay in milliseconds; doubles per attempt.
    #[arg(long, default_value_t = 500)]
    backoff_ms: u64,
}

impl PipelineArgs {
    fn split(self, ablation: AblationId) -> (Params, InputPaths) {
        let params = Params {
            k: self.k,
            m: self.m,
            w_min: self.w_min,
            n_facts: self.n_facts,
            n_exemplars: self.n_exemplars,
            dim: self.dim,
            ablation,
        };
        let inputs = InputPaths {
            trials: self.trials,
            vocab: self.vocab,
            graph: self.graph,
            store: self.store,
            whitelist: self.whitelist,
        };
        (params, inputs)
    }
}

impl BackendArgs {
    fn descriptor(&self) -> BackendDescriptor {
        let kind = match (self.seedless, self.backend) {
            (true, _) | (false, Backend::Mock) => BackendKind::Mock,
            (false, Backend::Http) => BackendKind::Http,
        };
        let mut d = BackendDescriptor::mock();
        d.kind = kind;
        if kind == BackendKind::Http {
            d.endpoint = self.endpoint.clone();
            d.model_name = self.model.clone().unwrap_or_default();
        }
        d.temperature = self.temperature;
        d.max_tokens = self.max_tokens;
        d.timeout = Duration::from_secs(self.timeout);
        d.max_in_flight = self.concurrency.max(1);
        d.retry_limit = self.retries;
        d.backoff_base = Duration::from_millis(self.backoff_ms);
        d.api_key_env = self.api_key_env.clone();
        d
    }
}

fn run_config(pipeline: PipelineArgs, backend: &BackendArgs, ablation: AblationId) -> RunConfig {
    let (params, inputs) = pipeline.split(ablation);
    RunConfig {
        params,
        backend: backend.descriptor(),
        inputs,
        concurrency: backend.concurrency,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Decode {
            pipeline,
            backend,
            ablation,
            out,
        } => {
            let config = run_config(pipeline, &backend, ablation);
            let run = cmd_decode(&config, out.as_deref())?;
            if out.is_none() {
                print!("{}", run.to_jsonl());
            }
            let s = &run.summary;
            eprintln!("{}: {} trials, {} failed", s.config, s.trials, s.failed);
            if let Some(m) = &s.metrics {
                eprintln!("{m}");
            }
            run.status()
        }
        Command::PruneStats {
            pipeline,
            ablation,
            json,
        } => {
            let (params, inputs) = pipeline.split(ablation);
            let stats = cmd_prune_stats(&params, &inputs)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&stats).expect("serializable")
                );
            } else {
                println!("{stats}");
            }
            Ok(())
        }
        Command::Evaluate {
            generations,
            references,
            json,
        } => {
            let report = cmd_evaluate(&generations, &references)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("serializable")
                );
            } else {
                println!("{report}");
            }
            Ok(())
        }
        Command::Ablate {
            pipeline,
            backend,
            ablation,
            out,
        } => {
            let ids = if ablation.is_empty() {
                AblationId::ALL.to_vec()
            } else {
                ablation
            };
            let config = run_config(pipeline, &backend, ids[0]);
            let runs = cmd_ablate(&config, &ids, out.as_deref())?;
            print!("{}", comparison_table(&runs));
            runs.iter().try_for_each(|r| r.run.status())
        }
        Command::IngestGraph { graph, whitelist } => {
            let check = cmd_ingest_graph(&graph, whitelist.as_deref())?;
            println!(
                "lines={} edges={} vertices={} whitelisted_edges={}",
                check.lines, check.edges, check.vertices, check.whitelisted_edges
            );
            for (rel, n) in &check.relations {
                println!("{rel}\t{n}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
