//! Experiment configuration file (TOML).
//!
//! ```toml
//! out_dir = "runs"
//! seeds = [1, 2, 3, 4, 5]
//! variants = ["llamea-1", "llamea-4"]
//! dim = 5
//! functions = ["sphere", "rastrigin"]
//! train_instances = [1, 2, 3, 4, 5]
//! test_instances = [6, 7, 8, 9, 10, 11, 12, 13, 14, 15]
//! algo_budget = 100
//! eval_budget_per_algo = 10000
//!
//! [[custom_variant]]
//! variant_id = "wide"
//! mu = 8
//! lambda = 24
//! elitist = false
//! mutator_mix = ["adaptive", "random_new"]
//!
//! [llm]
//! endpoint = "https://example.invalid/v1/chat/completions"
//! model = "some-model"
//! ```
//!
//! Every key is optional. `algo_budget` and `eval_budget_per_algo` override
//! the values of all selected variants.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::evolve::{run_id, run_variant, RunSummary};
use super::llm::LlmConfig;
use super::mutators::SurrogateMutator;
use super::sink::DirectorySink;
use super::{HarnessError, ProblemSet, VariantConfig, PRESET_IDS};
use crate::benchmarks::FUNCTION_IDS;
use crate::par;
use crate::trace::RunLayout;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    /// Preset ids or ids of `custom_variant` entries.
    pub variants: Vec<String>,
    pub dim: usize,
    pub functions: Vec<String>,
    pub train_instances: Vec<u64>,
    pub test_instances: Vec<u64>,
    pub algo_budget: Option<usize>,
    pub eval_budget_per_algo: Option<usize>,
    pub custom_variant: Vec<VariantConfig>,
    pub llm: Option<LlmConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = ProblemSet::default();
        ExperimentConfig {
            out_dir: PathBuf::from("runs"),
            seeds: (1..=5).collect(),
            variants: PRESET_IDS.iter().map(|s| s.to_string()).collect(),
            dim: p.dim,
            functions: FUNCTION_IDS.iter().map(|s| s.to_string()).collect(),
            train_instances: p.train_instances,
            test_instances: p.test_instances,
            algo_budget: None,
            eval_budget_per_algo: None,
            custom_variant: Vec::new(),
            llm: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn problem_set(&self) -> ProblemSet {
        ProblemSet {
            dim: self.dim,
            functions: self.functions.clone(),
            train_instances: self.train_instances.clone(),
            test_instances: self.test_instances.clone(),
        }
    }

    /// Resolved variant configurations, in the order listed.
    pub fn variant_configs(&self) -> Result<Vec<VariantConfig>, HarnessError> {
        self.variants
            .iter()
            .map(|id| {
                let mut v = match self.custom_variant.iter().find(|c| &c.variant_id == id) {
                    Some(c) => c.clone(),
                    None => VariantConfig::preset(id)?,
                };
                if let Some(b) = self.algo_budget {
                    v.algo_budget = b;
                }
                if self.eval_budget_per_algo.is_some() {
                    v.eval_budget_per_algo = self.eval_budget_per_algo;
                }
                v.validate()?;
                Ok(v)
            })
            .collect()
    }
}

/// Runs every (variant, seed) pair of `cfg` into `cfg.out_dir` with the
/// built-in mutator. Runs are independent and execute in parallel; each run
/// has its own output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunSummary>, HarnessError> {
    if cfg.llm.is_some() {
        return Err(HarnessError::Config(
            "the [llm] section needs a transport; use LlmMutator with run_variant".into(),
        ));
    }
    let variants = cfg.variant_configs()?;
    let problems = cfg.problem_set();
    problems.validate()?;
    let layout = RunLayout::new(&cfg.out_dir);
    let jobs: Vec<(&VariantConfig, u64)> = variants
        .iter()
        .flat_map(|v| cfg.seeds.iter().map(move |s| (v, *s)))
        .collect();
    par::map(&jobs, |(v, seed)| {
        let mut sink = DirectorySink::create(layout.clone(), &v.variant_id, &run_id(*seed))?;
        log::info!("{} {}: starting", v.variant_id, run_id(*seed));
        run_variant(v, &problems, *seed, &mut SurrogateMutator, &mut sink)
    })
    .into_iter()
    .collect()
}
