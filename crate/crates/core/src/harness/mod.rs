//! Deterministic algorithm-evolution harness.
//!
//! Candidates are points of a small strategy-parameter space rendered to
//! template source text. A run samples an initial population, produces
//! offspring through a [`Mutator`], evaluates each candidate on a set of
//! benchmark problems and keeps the best according to the variant's selection
//! scheme. Every candidate's lineage record and evaluation traces are handed
//! to a [`RunSink`] in generation order.

mod candidate;
mod config;
mod evolve;
mod genome;
mod llm;
mod mutators;
mod sink;

pub use candidate::Candidate;
pub use config::{run_experiment, ExperimentConfig};
pub use evolve::{evaluate_candidate, run_id, run_variant, trace_seed, Evaluation, RunSummary};
pub use genome::{
    parse_code, render_code, Block, Blocks, GeneRange, Genome, CROSSOVER_ACTIVE_MIN, GENE_RANGES,
    GENOME_LEN, HEAVY_TAIL_ACTIVE_MIN, RESTART_ACTIVE_MIN,
};
#[cfg(feature = "http")]
pub use llm::HttpTransport;
pub use llm::{
    extract_code_block, parse_chat_reply, ChatRequest, LlmConfig, LlmMutator, Transport,
    TransportError,
};
pub use mutators::{
    draw_mutation_fraction, mutate_adaptive, mutate_adaptive_with_fraction, mutate_random_new,
    mutate_refine_simplify, MutationKind, Mutator, SurrogateMutator,
};
pub use sink::{DirectorySink, MemorySink, RunSink};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmarks::{BenchError, FUNCTION_IDS};
use crate::performance::PerfError;
use crate::trace::TraceError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid candidate code: {0}")]
    InvalidCode(String),
    #[error("candidate evaluation failed: {0}")]
    Evaluation(String),
    #[error("mutation unavailable: {0}")]
    MutationUnavailable(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Perf(#[from] PerfError),
}

/// Selection scheme and variation operators of one evolution variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub variant_id: String,
    pub mu: usize,
    pub lambda: usize,
    pub elitist: bool,
    pub mutator_mix: Vec<MutationKind>,
    #[serde(default = "default_algo_budget")]
    pub algo_budget: usize,
    /// Objective evaluations per candidate and problem; `2000 * dim` when
    /// unset.
    #[serde(default)]
    pub eval_budget_per_algo: Option<usize>,
}

fn default_algo_budget() -> usize {
    100
}

pub const PRESET_IDS: [&str; 6] = [
    "llamea-1", "llamea-2", "llamea-3", "llamea-4", "llamea-5", "llamea-6",
];

impl VariantConfig {
    /// One of the six built-in variants `llamea-1` .. `llamea-6`.
    pub fn preset(variant_id: &str) -> Result<Self, HarnessError> {
        use MutationKind::*;
        let (mu, lambda, elitist, mix) = match variant_id {
            "llamea-1" => (4, 12, false, vec![RefineSimplify]),
            "llamea-2" => (4, 12, false, vec![RandomNew]),
            "llamea-3" => (4, 12, false, vec![RefineSimplify, RandomNew]),
            "llamea-4" => (1, 1, true, vec![RefineSimplify, RandomNew]),
            "llamea-5" => (4, 12, false, vec![Adaptive]),
            "llamea-6" => (1, 1, true, vec![Adaptive]),
            other => return Err(HarnessError::Config(format!("unknown variant `{other}`"))),
        };
        Ok(VariantConfig {
            variant_id: variant_id.to_string(),
            mu,
            lambda,
            elitist,
            mutator_mix: mix,
            algo_budget: default_algo_budget(),
            eval_budget_per_algo: None,
        })
    }

    pub fn presets() -> Vec<Self> {
        PRESET_IDS
            .iter()
            .map(|id| Self::preset(id).expect("built-in preset"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(format!("{}: {msg}", self.variant_id)));
        if matches!(self.variant_id.as_str(), "" | "." | "..")
            || self.variant_id.contains(['/', '\\'])
        {
            return bad("variant id must be a non-empty path segment".into());
        }
        if self.mu == 0 || self.lambda == 0 {
            return bad("mu and lambda must be positive".into());
        }
        if !self.elitist && self.lambda < self.mu {
            return bad(format!(
                "comma selection needs lambda >= mu, got ({}, {})",
                self.mu, self.lambda
            ));
        }
        if self.mutator_mix.is_empty() {
            return bad("mutator mix is empty".into());
        }
        if self.algo_budget < self.mu {
            return bad(format!(
                "algo budget {} is below mu {}",
                self.algo_budget, self.mu
            ));
        }
        if self.eval_budget_per_algo == Some(0) {
            return bad("evaluation budget must be positive".into());
        }
        Ok(())
    }

    pub fn eval_budget(&self, dim: usize) -> usize {
        self.eval_budget_per_algo.unwrap_or(2000 * dim)
    }
}

/// Benchmark problems a candidate is scored on.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSet {
    pub dim: usize,
    pub functions: Vec<String>,
    pub train_instances: Vec<u64>,
    /// Instances the final algorithm of each run is evaluated on; empty to
    /// skip.
    pub test_instances: Vec<u64>,
}

impl Default for ProblemSet {
    fn default() -> Self {
        ProblemSet {
            dim: 5,
            functions: FUNCTION_IDS.iter().map(|s| s.to_string()).collect(),
            train_instances: (1..=5).collect(),
            test_instances: (6..=15).collect(),
        }
    }
}

impl ProblemSet {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.functions.is_empty() || self.train_instances.is_empty() {
            return Err(HarnessError::Config(
                "need at least one function and one training instance".into(),
            ));
        }
        for f in &self.functions {
            for i in self.train_instances.iter().chain(&self.test_instances) {
                crate::benchmarks::make_function(f, self.dim, *i)?;
            }
        }
        Ok(())
    }
}
