//! Inference-time regularization of noisy neural keyword candidates.
//!
//! The pipeline for one trial:
//!
//! 1. [`latent::retrieve_candidates`] ranks vocabulary words against the
//!    refined latent.
//! 2. [`graph::induce_subgraph`] and [`graph::prune`] drop candidates that are
//!    isolated in a commonsense graph, except the top-ranked safeguard set.
//! 3. [`facts::extract_facts`] verbalizes whitelisted edges among the
//!    candidates.
//! 4. [`exemplars::retrieve_exemplars`] fetches training captions whose raw
//!    latents are nearest to the trial's raw latent.
//! 5. [`prompt::render`] assembles the decoder prompt, and
//!    [`llm::LlmClient`] produces a caption.
//!
//! [`metrics`] scores captions against references.
//!
//! A narrative guide with runnable examples lives in `book/`.

pub mod error;
pub mod exemplars;
pub mod facts;
pub mod graph;
pub mod latent;
pub mod llm;
pub mod metrics;
pub mod prompt;
pub mod topk;

pub use error::{Error, Result};
pub use exemplars::{
    build_store, load_store, retrieve_exemplars, Exemplar, ExemplarRecord, ExemplarSet,
    ExemplarStore,
};
pub use facts::{extract_facts, verbalize, Fact, FactSet, RelationWhitelist};
pub use graph::{
    degree_centrality, induce_subgraph, ingest_graph, normalize_concept, prune, pruning_statistics,
    ConceptId, Edge, InducedSubgraph, KnowledgeGraph, PrunedVocabulary, PruningConfig,
    PruningReport, PruningStatistics,
};
pub use latent::{
    l2_normalize, load_vocabulary, retrieve_candidates, Candidate, CandidateSet, LatentKind,
    LatentVector, VocabularyMatrix,
};
pub use llm::{postprocess, BackendDescriptor, GenerationResult, LlmClient};
pub use metrics::{aggregate, bleu, meteor, rouge, tokenize, EvalPair, MetricReport, RougeVariant};
pub use prompt::{render, AblationId, PromptPayload, RenderedPrompt};

// Book chapters are compiled as doctests so their snippets stay in sync.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/candidates.md")]
    mod candidates {}
    #[doc = include_str!("../../../book/src/pruning.md")]
    mod pruning {}
    #[doc = include_str!("../../../book/src/facts.md")]
    mod facts {}
    #[doc = include_str!("../../../book/src/exemplars.md")]
    mod exemplars {}
    #[doc = include_str!("../../../book/src/prompts.md")]
    mod prompts {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
