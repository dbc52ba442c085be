use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, StandardNormal};

use super::genome::{render_code, Blocks, Genome};
use super::HarnessError;
use crate::benchmarks::{BenchmarkFunction, Recorder};
use crate::trace::Trace;

/// One generated algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub algorithm_id: String,
    pub genome: Genome,
    pub blocks: Blocks,
    pub code_text: String,
    pub parent_ids: Vec<String>,
    pub generation: u32,
}

impl Candidate {
    /// Normalises the genome and renders its code.
    pub fn new(genome: Genome, blocks: Blocks) -> Self {
        let genome = genome.normalized();
        Candidate {
            algorithm_id: String::new(),
            code_text: render_code(&genome, &blocks),
            genome,
            blocks,
            parent_ids: Vec::new(),
            generation: 0,
        }
    }

    /// Candidate whose genome is used verbatim, for mutators that may produce
    /// invalid parameters; such candidates fail at evaluation.
    pub fn unchecked(genome: Genome, blocks: Blocks) -> Self {
        Candidate {
            algorithm_id: String::new(),
            code_text: render_code(&genome, &blocks),
            genome,
            blocks,
            parent_ids: Vec::new(),
            generation: 0,
        }
    }

    pub fn with_lineage(mut self, parent: &Candidate) -> Self {
        self.parent_ids = vec![parent.algorithm_id.clone()];
        self.generation = parent.generation + 1;
        self
    }

    /// Runs the candidate's optimizer on `f` for exactly `budget` evaluations.
    pub fn run(
        &self,
        f: &BenchmarkFunction,
        budget: usize,
        seed: u64,
    ) -> Result<Trace, HarnessError> {
        if !self.genome.in_box() {
            return Err(HarnessError::Evaluation(format!(
                "{}: genome outside the parameter box",
                self.algorithm_id
            )));
        }
        if budget == 0 {
            return Err(HarnessError::Evaluation("zero evaluation budget".into()));
        }
        Ok(execute(&self.genome, &self.blocks, f, budget, seed)
            .into_trace(&self.algorithm_id, seed))
    }
}

/// Interpreter for the rendered template.
fn execute<'a>(
    g: &Genome,
    blocks: &Blocks,
    f: &'a BenchmarkFunction,
    budget: usize,
    seed: u64,
) -> Recorder<'a> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder::new(f, budget);
    let d = f.dim;
    let domain = rec.domain().clone();
    let uniform = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        domain
            .lower()
            .iter()
            .zip(domain.upper())
            .map(|(l, u)| rng.random_range(*l..=*u))
            .collect()
    };
    let sigma0 = g.step_size * domain.mean_width();
    let lambda = g.population_size();
    let cauchy = Cauchy::new(0.0, 1.0).expect("valid scale");

    let mut center = uniform(&mut rng);
    let mut best_f = rec.eval(&mut center).expect("budget >= 1");
    let mut best_x = center.clone();
    let mut sigma = sigma0;
    let mut z = vec![0.0; d];
    while !rec.done() {
        let mut gen: Option<(Vec<f64>, f64)> = None;
        let mut successes = 0usize;
        for _ in 0..lambda {
            if rec.done() {
                break;
            }
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            if blocks.heavy_tail && rng.random::<f64>() < g.tail_shape {
                for v in z.iter_mut() {
                    *v = rng.sample(cauchy);
                }
            }
            let mut x: Vec<f64> = center
                .iter()
                .zip(&z)
                .map(|(c, zi)| c + sigma * zi)
                .collect();
            if blocks.crossover {
                let w = g.crossover_weight;
                for (xi, bi) in x.iter_mut().zip(&best_x) {
                    *xi = (1.0 - w) * *xi + w * bi;
                }
            }
            let fx = rec.eval(&mut x).expect("checked remaining budget");
            if gen.as_ref().is_none_or(|(_, gf)| fx < *gf) {
                gen = Some((x.clone(), fx));
            }
            if fx < best_f {
                best_f = fx;
                best_x = x;
                successes += 1;
            }
        }
        if let Some((gx, _)) = gen {
            center = gx;
        }
        if successes as f64 >= 0.2 * lambda as f64 {
            sigma *= 1.5;
        } else {
            sigma *= 0.8;
        }
        sigma = sigma.clamp(1e-12, 10.0 * domain.diameter());
        if blocks.restart && rng.random::<f64>() < g.restart_prob {
            center = uniform(&mut rng);
            sigma = sigma0;
        }
    }
    rec
}
