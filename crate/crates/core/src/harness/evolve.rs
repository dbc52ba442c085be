use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::candidate::Candidate;
use super::mutators::Mutator;
use super::sink::RunSink;
use super::{HarnessError, ProblemSet, VariantConfig};
use crate::benchmarks::make_function;
use crate::par;
use crate::performance::{algorithm_fitness, AoccConfig};
use crate::seed::StableHasher;
use crate::trace::{LineageRecord, Trace};

/// Seed of the optimizer run of `algorithm_id` on one problem instance.
pub fn trace_seed(run_seed: u64, algorithm_id: &str, function_id: &str, instance_id: u64) -> u64 {
    StableHasher::new()
        .u64(run_seed)
        .str(algorithm_id)
        .str(function_id)
        .u64(instance_id)
        .finish()
}

/// Outcome of scoring one candidate. A failed evaluation has fitness 0, no
/// traces and the failure reason in `error`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub fitness: f64,
    pub traces: Vec<Trace>,
    pub error: Option<String>,
}

impl Evaluation {
    fn failed(reason: String) -> Self {
        Evaluation {
            fitness: 0.0,
            traces: Vec::new(),
            error: Some(reason),
        }
    }
}

fn problems(functions: &[String], instances: &[u64]) -> Vec<(String, u64)> {
    functions
        .iter()
        .flat_map(|f| instances.iter().map(move |i| (f.clone(), *i)))
        .collect()
}

fn run_on(
    c: &Candidate,
    dim: usize,
    problem: &(String, u64),
    budget: usize,
    run_seed: u64,
) -> Result<Trace, HarnessError> {
    let f = make_function(&problem.0, dim, problem.1)?;
    c.run(
        &f,
        budget,
        trace_seed(run_seed, &c.algorithm_id, &problem.0, problem.1),
    )
}

fn score(traces: Result<Vec<Trace>, HarnessError>, aocc: &AoccConfig) -> Evaluation {
    match traces.and_then(|t| Ok((algorithm_fitness(&t, aocc)?, t))) {
        Ok((fitness, traces)) => Evaluation {
            fitness,
            traces,
            error: None,
        },
        Err(e) => Evaluation::failed(e.to_string()),
    }
}

/// Runs `c` on every (function, instance) pair and scores it by mean AOCC.
pub fn evaluate_candidate(
    c: &Candidate,
    dim: usize,
    functions: &[String],
    instances: &[u64],
    eval_budget: usize,
    run_seed: u64,
    aocc: &AoccConfig,
) -> Evaluation {
    let ps = problems(functions, instances);
    let traces = par::map(&ps, |p| run_on(c, dim, p, eval_budget, run_seed));
    score(traces.into_iter().collect(), aocc)
}

/// Scores a batch, parallel over all (candidate, problem) pairs.
fn evaluate_batch(
    batch: &[Candidate],
    problem_set: &ProblemSet,
    budget: usize,
    run_seed: u64,
) -> Vec<Evaluation> {
    let ps = problems(&problem_set.functions, &problem_set.train_instances);
    let jobs: Vec<(usize, usize)> = (0..batch.len())
        .flat_map(|c| (0..ps.len()).map(move |p| (c, p)))
        .collect();
    let mut results = par::map(&jobs, |(c, p)| {
        run_on(&batch[*c], problem_set.dim, &ps[*p], budget, run_seed)
    })
    .into_iter();
    let aocc = AoccConfig::default();
    batch
        .iter()
        .map(|c| {
            let traces: Result<Vec<Trace>, HarnessError> =
                results.by_ref().take(ps.len()).collect();
            let e = score(traces, &aocc);
            if let Some(reason) = &e.error {
                log::warn!(
                    "{}: evaluation failed, fitness set to 0: {reason}",
                    c.algorithm_id
                );
            }
            e
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub variant_id: String,
    pub run_id: String,
    pub n_candidates: usize,
    pub best_id: String,
    pub best_fitness: f64,
    /// Best fitness in the selected population after each selection step,
    /// starting with the initial population.
    pub population_best: Vec<f64>,
    /// Mean AOCC of the best candidate on the test instances, if any.
    pub test_fitness: Option<f64>,
}

pub fn run_id(seed: u64) -> String {
    format!("s{seed}")
}

/// One evolution run of `cfg` with the given seed.
///
/// Offspring choose a parent uniformly from the current population and a
/// mutation kind uniformly from the variant's mix; a child's generation is
/// its parent's plus one. Elitist variants keep the best `mu` of parents and
/// offspring, preferring parents on ties, so the incumbent only changes on
/// strict improvement; the others keep the best `mu` offspring. The run
/// stops after exactly `cfg.algo_budget` candidates, truncating the last
/// batch of offspring if needed.
pub fn run_variant(
    cfg: &VariantConfig,
    problem_set: &ProblemSet,
    seed: u64,
    mutator: &mut dyn Mutator,
    sink: &mut dyn RunSink,
) -> Result<RunSummary, HarnessError> {
    cfg.validate()?;
    problem_set.validate()?;
    let budget = cfg.eval_budget(problem_set.dim);
    let run_id = run_id(seed);
    let mut rng =
        ChaCha8Rng::seed_from_u64(StableHasher::new().str(&cfg.variant_id).u64(seed).finish());
    let mut next_id = 0usize;
    let mut assign_id = |c: &mut Candidate| {
        c.algorithm_id = format!("a{next_id:03}");
        next_id += 1;
    };

    let mut best: Option<(String, f64, Candidate)> = None;
    let emit = |batch: Vec<Candidate>,
                sink: &mut dyn RunSink,
                best: &mut Option<(String, f64, Candidate)>|
     -> Result<Vec<(Candidate, f64)>, HarnessError> {
        let evals = evaluate_batch(&batch, problem_set, budget, seed);
        let mut out = Vec::with_capacity(batch.len());
        for (c, e) in batch.into_iter().zip(evals) {
            let record = LineageRecord {
                algorithm_id: c.algorithm_id.clone(),
                parent_ids: c.parent_ids.clone(),
                generation: c.generation,
                code_text: c.code_text.clone(),
                fitness: e.fitness,
                variant_id: cfg.variant_id.clone(),
                run_id: run_id.clone(),
            };
            sink.candidate(&record, &e.traces)?;
            if best.as_ref().is_none_or(|(_, f, _)| e.fitness > *f) {
                *best = Some((c.algorithm_id.clone(), e.fitness, c.clone()));
            }
            out.push((c, e.fitness));
        }
        Ok(out)
    };

    let mut initial = Vec::with_capacity(cfg.mu);
    for _ in 0..cfg.mu {
        let mut c = mutator.initial(&mut rng)?;
        assign_id(&mut c);
        c.parent_ids.clear();
        c.generation = 0;
        initial.push(c);
    }
    let mut population = emit(initial, sink, &mut best)?;
    let mut produced = population.len();
    let mut population_best = vec![max_fitness(&population)];

    while produced < cfg.algo_budget {
        let n = cfg.lambda.min(cfg.algo_budget - produced);
        let mut offspring = Vec::with_capacity(n);
        for _ in 0..n {
            let (parent, _) = population
                .choose(&mut rng)
                .expect("population is never empty");
            let kind = cfg.mutator_mix[rng.random_range(0..cfg.mutator_mix.len())];
            let mut child = mutator.mutate(parent, kind, &mut rng)?;
            assign_id(&mut child);
            child.parent_ids = vec![parent.algorithm_id.clone()];
            child.generation = parent.generation + 1;
            offspring.push(child);
        }
        produced += n;
        let offspring = emit(offspring, sink, &mut best)?;
        let mut pool = if cfg.elitist {
            let mut p = std::mem::take(&mut population);
            p.extend(offspring);
            p
        } else {
            offspring
        };
        // stable: earlier entries (parents, then older offspring) win ties
        pool.sort_by(|a, b| b.1.total_cmp(&a.1));
        pool.truncate(cfg.mu);
        population = pool;
        population_best.push(max_fitness(&population));
    }

    let (best_id, best_fitness, best_candidate) = best.expect("at least one candidate");
    let test_fitness = if problem_set.test_instances.is_empty() {
        None
    } else {
        let e = evaluate_candidate(
            &best_candidate,
            problem_set.dim,
            &problem_set.functions,
            &problem_set.test_instances,
            budget,
            seed,
            &AoccConfig::default(),
        );
        match e.error {
            Some(reason) => {
                log::warn!("{best_id}: test evaluation failed: {reason}");
                None
            }
            None => {
                sink.test_traces(&best_id, &e.traces)?;
                Some(e.fitness)
            }
        }
    };
    sink.finish()?;
    Ok(RunSummary {
        variant_id: cfg.variant_id.clone(),
        run_id,
        n_candidates: produced,
        best_id,
        best_fitness,
        population_best,
        test_fitness,
    })
}

fn max_fitness(pop: &[(Candidate, f64)]) -> f64 {
    pop.iter()
        .map(|(_, f)| *f)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Blocks;
    use crate::harness::{Genome, MemorySink, MutationKind, SurrogateMutator};
    use crate::trace::validate_lineage;

    fn small_problems() -> ProblemSet {
        ProblemSet {
            dim: 2,
            functions: vec!["sphere".into(), "rastrigin".into()],
            train_instances: vec![1, 2],
            test_instances: vec![],
        }
    }

    fn cfg(id: &str, algo_budget: usize) -> VariantConfig {
        let mut c = VariantConfig::preset(id).unwrap();
        c.algo_budget = algo_budget;
        c.eval_budget_per_algo = Some(60);
        c
    }

    #[test]
    fn exact_candidate_and_evaluation_counts() {
        for id in ["llamea-1", "llamea-4"] {
            let mut sink = MemorySink::default();
            let s = run_variant(
                &cfg(id, 30),
                &small_problems(),
                3,
                &mut SurrogateMutator,
                &mut sink,
            )
            .unwrap();
            assert_eq!(s.n_candidates, 30);
            assert_eq!(sink.records.len(), 30);
            validate_lineage(&sink.records).unwrap();
            for traces in &sink.traces {
                assert_eq!(traces.len(), 4);
                assert!(traces.iter().all(|t| t.len() == 60));
            }
            let ids: Vec<_> = sink
                .records
                .iter()
                .map(|r| r.algorithm_id.as_str())
                .collect();
            assert_eq!(ids[0], "a000");
            assert_eq!(ids[29], "a029");
        }
    }

    #[test]
    fn comma_generations_are_truncated_at_budget() {
        let mut sink = MemorySink::default();
        run_variant(
            &cfg("llamea-2", 30),
            &small_problems(),
            1,
            &mut SurrogateMutator,
            &mut sink,
        )
        .unwrap();
        let per_gen = |g| sink.records.iter().filter(|r| r.generation == g).count();
        assert_eq!(
            (per_gen(0), per_gen(1), per_gen(2), per_gen(3)),
            (4, 12, 12, 2)
        );
    }

    #[test]
    fn elitist_incumbent_never_gets_worse() {
        for seed in 1..=3 {
            let mut sink = MemorySink::default();
            let s = run_variant(
                &cfg("llamea-6", 40),
                &small_problems(),
                seed,
                &mut SurrogateMutator,
                &mut sink,
            )
            .unwrap();
            assert!(s.population_best.windows(2).all(|w| w[1] >= w[0]));
            assert_eq!(*s.population_best.last().unwrap(), s.best_fitness);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let run = |seed| {
            let mut sink = MemorySink::default();
            run_variant(
                &cfg("llamea-3", 20),
                &small_problems(),
                seed,
                &mut SurrogateMutator,
                &mut sink,
            )
            .unwrap();
            sink
        };
        let (a, b, c) = (run(9), run(9), run(10));
        assert_eq!(a.records, b.records);
        assert_eq!(a.traces, b.traces);
        assert_ne!(a.records, c.records);
    }

    /// Produces offspring that barely move, so every offspring is worse than
    /// a good parent.
    struct Degrading;

    impl Mutator for Degrading {
        fn mutate(
            &mut self,
            parent: &Candidate,
            _: MutationKind,
            _: &mut ChaCha8Rng,
        ) -> Result<Candidate, HarnessError> {
            let mut g = parent.genome;
            g.step_size = 0.001;
            g.population = 40.0;
            Ok(Candidate::new(g, Blocks::default()))
        }

        fn initial(&mut self, _: &mut ChaCha8Rng) -> Result<Candidate, HarnessError> {
            let g = Genome {
                step_size: 0.2,
                population: 6.0,
                restart_prob: 0.0,
                crossover_weight: 0.0,
                tail_shape: 0.0,
            };
            Ok(Candidate::new(g, Blocks::default()))
        }
    }

    #[test]
    fn comma_selection_can_lose_the_best() {
        let problems = ProblemSet {
            dim: 2,
            functions: vec!["sphere".into()],
            train_instances: vec![1],
            test_instances: vec![],
        };
        let mut c = cfg("llamea-1", 16);
        c.eval_budget_per_algo = Some(200);
        let mut sink = MemorySink::default();
        let s = run_variant(&c, &problems, 1, &mut Degrading, &mut sink).unwrap();
        assert!(
            s.population_best[1] < s.population_best[0],
            "{:?}",
            s.population_best
        );

        let mut e = cfg("llamea-4", 16);
        e.eval_budget_per_algo = Some(200);
        let s = run_variant(&e, &problems, 1, &mut Degrading, &mut MemorySink::default()).unwrap();
        assert!(s.population_best.iter().all(|f| *f == s.population_best[0]));
    }

    struct Failing;

    impl Mutator for Failing {
        fn mutate(
            &mut self,
            parent: &Candidate,
            _: MutationKind,
            _: &mut ChaCha8Rng,
        ) -> Result<Candidate, HarnessError> {
            let mut g = parent.genome;
            g.step_size = -1.0;
            Ok(Candidate::unchecked(g, parent.blocks))
        }
    }

    #[test]
    fn failed_evaluations_score_zero() {
        let mut sink = MemorySink::default();
        run_variant(
            &cfg("llamea-4", 5),
            &small_problems(),
            1,
            &mut Failing,
            &mut sink,
        )
        .unwrap();
        assert!(sink.records[0].fitness > 0.0);
        assert!(sink.records[1..].iter().all(|r| r.fitness == 0.0));
        assert!(sink.traces[1..].iter().all(|t| t.is_empty()));
    }

    struct Unavailable;

    impl Mutator for Unavailable {
        fn mutate(
            &mut self,
            _: &Candidate,
            _: MutationKind,
            _: &mut ChaCha8Rng,
        ) -> Result<Candidate, HarnessError> {
            Err(HarnessError::MutationUnavailable("offline".into()))
        }
    }

    #[test]
    fn unavailable_mutator_aborts_after_writing_initial_population() {
        let mut sink = MemorySink::default();
        let r = run_variant(
            &cfg("llamea-1", 20),
            &small_problems(),
            1,
            &mut Unavailable,
            &mut sink,
        );
        assert!(matches!(r, Err(HarnessError::MutationUnavailable(_))));
        assert_eq!(sink.records.len(), 4);
    }

    #[test]
    fn test_instances_score_the_best_candidate() {
        let mut p = small_problems();
        p.test_instances = vec![6, 7];
        let mut sink = MemorySink::default();
        let s = run_variant(&cfg("llamea-4", 6), &p, 2, &mut SurrogateMutator, &mut sink).unwrap();
        let f = s.test_fitness.unwrap();
        assert!((0.0..=1.0).contains(&f));
        let (id, traces) = sink.test.as_ref().unwrap();
        assert_eq!(id, &s.best_id);
        assert_eq!(traces.len(), 4);
    }
}
