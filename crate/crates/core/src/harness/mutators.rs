use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Pareto};
use serde::{Deserialize, Serialize};

use super::candidate::Candidate;
use super::genome::{Blocks, Genome, GENE_RANGES, GENOME_LEN};
use super::HarnessError;

/// The three variation prompts of the evolution loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    RefineSimplify,
    RandomNew,
    Adaptive,
}

impl MutationKind {
    pub fn name(self) -> &'static str {
        match self {
            MutationKind::RefineSimplify => "refine_simplify",
            MutationKind::RandomNew => "random_new",
            MutationKind::Adaptive => "adaptive",
        }
    }
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MutationKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "refine_simplify" => Ok(MutationKind::RefineSimplify),
            "random_new" => Ok(MutationKind::RandomNew),
            "adaptive" => Ok(MutationKind::Adaptive),
            other => Err(HarnessError::Config(format!("unknown mutator `{other}`"))),
        }
    }
}

/// Source of offspring. The harness assigns ids, parents and generation to
/// whatever the mutator returns.
pub trait Mutator {
    fn mutate(
        &mut self,
        parent: &Candidate,
        kind: MutationKind,
        rng: &mut ChaCha8Rng,
    ) -> Result<Candidate, HarnessError>;

    /// Member of the initial population.
    fn initial(&mut self, rng: &mut ChaCha8Rng) -> Result<Candidate, HarnessError> {
        Ok(mutate_random_new(rng))
    }
}

/// The built-in deterministic mutator over the surrogate algorithm space.
#[derive(Debug, Default, Clone, Copy)]
pub struct SurrogateMutator;

impl Mutator for SurrogateMutator {
    fn mutate(
        &mut self,
        parent: &Candidate,
        kind: MutationKind,
        rng: &mut ChaCha8Rng,
    ) -> Result<Candidate, HarnessError> {
        Ok(match kind {
            MutationKind::RefineSimplify => mutate_refine_simplify(parent, rng),
            MutationKind::RandomNew => mutate_random_new(rng),
            MutationKind::Adaptive => mutate_adaptive(parent, rng),
        })
    }
}

/// Standard deviation of the refine step, as a fraction of each gene's range.
pub const REFINE_SIGMA_FRAC: f64 = 0.05;

/// Small Gaussian step on every gene, then removal of the first inactive
/// block, if any. Never adds code, so the token count cannot grow.
pub fn mutate_refine_simplify(parent: &Candidate, rng: &mut ChaCha8Rng) -> Candidate {
    let mut v = parent.genome.to_array();
    for (x, r) in v.iter_mut().zip(&GENE_RANGES) {
        let n = Normal::new(0.0, REFINE_SIGMA_FRAC * r.width()).expect("positive sigma");
        *x += rng.sample(n);
    }
    let genome = Genome::from_array(v).normalized();
    let mut blocks = parent.blocks;
    if let Some(b) = blocks.inactive(&genome).first() {
        blocks.remove(*b);
    }
    Candidate::new(genome, blocks)
}

/// Fresh genome, uniform in the parameter box, with each optional block
/// present with probability 1/2.
pub fn mutate_random_new(rng: &mut ChaCha8Rng) -> Candidate {
    let genome = Genome::uniform(rng);
    let blocks = Blocks::random(rng);
    Candidate::new(genome, blocks)
}

pub const ADAPTIVE_PARETO_SHAPE: f64 = 1.5;
pub const ADAPTIVE_MIN_FRACTION: f64 = 0.01;

/// Mutation fraction `p` from a Pareto law with scale 0.01 and shape 1.5,
/// clipped to `[0.01, 1]`.
pub fn draw_mutation_fraction(rng: &mut impl Rng) -> f64 {
    let pareto = Pareto::new(ADAPTIVE_MIN_FRACTION, ADAPTIVE_PARETO_SHAPE).expect("valid Pareto");
    rng.sample(pareto).clamp(ADAPTIVE_MIN_FRACTION, 1.0)
}

/// Heavy-tailed mutation: draws `p`, then changes `ceil(p * len)` distinct
/// genes by Gaussian noise with standard deviation `p` times the gene range.
pub fn mutate_adaptive(parent: &Candidate, rng: &mut ChaCha8Rng) -> Candidate {
    let p = draw_mutation_fraction(rng);
    mutate_adaptive_with_fraction(parent, p, rng)
}

pub fn mutate_adaptive_with_fraction(
    parent: &Candidate,
    p: f64,
    rng: &mut ChaCha8Rng,
) -> Candidate {
    let p = p.clamp(ADAPTIVE_MIN_FRACTION, 1.0);
    let k = ((p * GENOME_LEN as f64).ceil() as usize).clamp(1, GENOME_LEN);
    let mut v = parent.genome.to_array();
    for idx in sample(rng, GENOME_LEN, k) {
        v[idx] = perturb_gene(v[idx], idx, p, rng);
    }
    Candidate::new(Genome::from_array(v), parent.blocks)
}

/// Gaussian step that is guaranteed to change the (quantised) gene.
fn perturb_gene(old: f64, idx: usize, p: f64, rng: &mut ChaCha8Rng) -> f64 {
    let r = GENE_RANGES[idx];
    let n = Normal::new(0.0, p * r.width()).expect("positive sigma");
    for _ in 0..16 {
        let new = r.normalize(old + rng.sample(n));
        if new != old {
            return new;
        }
    }
    // smallest representable step, away from the nearer bound
    let step = 1.0 / r.scale;
    let up = r.normalize(old + step);
    if up != old {
        up
    } else {
        r.normalize(old - step)
    }
}
