//! The surrogate algorithm space: a strategy-parameter genome plus a set of
//! optional code blocks, rendered to source text in a fixed template.

use std::fmt::Write as _;

use rand::Rng;

use super::HarnessError;

/// Strategy parameters of a generated optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Genome {
    /// Initial step size as a fraction of the mean domain width.
    pub step_size: f64,
    /// Offspring sampled per iteration.
    pub population: f64,
    /// Per-iteration probability of a restart.
    pub restart_prob: f64,
    /// Pull of every sample towards the best point so far.
    pub crossover_weight: f64,
    /// Probability of drawing a Cauchy instead of a Gaussian perturbation.
    pub tail_shape: f64,
}

/// Inclusive bounds of one gene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneRange {
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
    /// Values are rounded to a multiple of `1 / scale`.
    pub scale: f64,
}

impl GeneRange {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Clamp into range and round to `1 / scale` (4 decimals for real genes,
    /// the precision of the rendered code).
    pub fn normalize(&self, v: f64) -> f64 {
        ((v.clamp(self.lower, self.upper) * self.scale).round() / self.scale)
            .clamp(self.lower, self.upper)
    }
}

pub const GENE_RANGES: [GeneRange; 5] = [
    GeneRange {
        name: "step_size",
        lower: 0.001,
        upper: 1.0,
        scale: 1e4,
    },
    GeneRange {
        name: "population",
        lower: 1.0,
        upper: 40.0,
        scale: 1.0,
    },
    GeneRange {
        name: "restart_prob",
        lower: 0.0,
        upper: 0.3,
        scale: 1e4,
    },
    GeneRange {
        name: "crossover_weight",
        lower: 0.0,
        upper: 1.0,
        scale: 1e4,
    },
    GeneRange {
        name: "tail_shape",
        lower: 0.0,
        upper: 1.0,
        scale: 1e4,
    },
];

pub const GENOME_LEN: usize = GENE_RANGES.len();

impl Genome {
    pub fn from_array(v: [f64; GENOME_LEN]) -> Self {
        Genome {
            step_size: v[0],
            population: v[1],
            restart_prob: v[2],
            crossover_weight: v[3],
            tail_shape: v[4],
        }
    }

    pub fn to_array(&self) -> [f64; GENOME_LEN] {
        [
            self.step_size,
            self.population,
            self.restart_prob,
            self.crossover_weight,
            self.tail_shape,
        ]
    }

    /// Clamped and quantised copy.
    pub fn normalized(&self) -> Self {
        let mut v = self.to_array();
        for (x, r) in v.iter_mut().zip(&GENE_RANGES) {
            *x = r.normalize(*x);
        }
        Genome::from_array(v)
    }

    pub fn in_box(&self) -> bool {
        self.to_array()
            .iter()
            .zip(&GENE_RANGES)
            .all(|(v, r)| v.is_finite() && r.lower <= *v && *v <= r.upper)
    }

    pub fn uniform(rng: &mut impl Rng) -> Self {
        let v = GENE_RANGES.map(|r| r.normalize(rng.random_range(r.lower..=r.upper)));
        Genome::from_array(v)
    }

    pub fn population_size(&self) -> usize {
        self.population.round().max(1.0) as usize
    }
}

/// Optional template blocks. A present block is *inactive* when its gene makes
/// it a no-op.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Blocks {
    pub crossover: bool,
    pub restart: bool,
    pub heavy_tail: bool,
}

pub const CROSSOVER_ACTIVE_MIN: f64 = 0.1;
pub const RESTART_ACTIVE_MIN: f64 = 0.02;
pub const HEAVY_TAIL_ACTIVE_MIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Crossover,
    Restart,
    HeavyTail,
}

impl Blocks {
    pub const ALL: [Block; 3] = [Block::Crossover, Block::Restart, Block::HeavyTail];

    pub fn all() -> Self {
        Blocks {
            crossover: true,
            restart: true,
            heavy_tail: true,
        }
    }

    pub fn has(&self, b: Block) -> bool {
        match b {
            Block::Crossover => self.crossover,
            Block::Restart => self.restart,
            Block::HeavyTail => self.heavy_tail,
        }
    }

    pub fn remove(&mut self, b: Block) {
        match b {
            Block::Crossover => self.crossover = false,
            Block::Restart => self.restart = false,
            Block::HeavyTail => self.heavy_tail = false,
        }
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        Blocks {
            crossover: rng.random_bool(0.5),
            restart: rng.random_bool(0.5),
            heavy_tail: rng.random_bool(0.5),
        }
    }

    /// Present blocks whose gene switches them off, in template order.
    pub fn inactive(&self, g: &Genome) -> Vec<Block> {
        Self::ALL
            .into_iter()
            .filter(|b| self.has(*b))
            .filter(|b| match b {
                Block::Crossover => g.crossover_weight < CROSSOVER_ACTIVE_MIN,
                Block::Restart => g.restart_prob < RESTART_ACTIVE_MIN,
                Block::HeavyTail => g.tail_shape < HEAVY_TAIL_ACTIVE_MIN,
            })
            .collect()
    }
}

/// Renders the optimizer source. Every parameter is a single numeric token, so
/// the token count depends only on which blocks are present.
pub fn render_code(g: &Genome, blocks: &Blocks) -> String {
    let mut s = String::new();
    let w = &mut s;
    writeln!(w, "import numpy as np").unwrap();
    writeln!(w).unwrap();
    writeln!(w).unwrap();
    writeln!(w, "class Optimizer:").unwrap();
    writeln!(w, "    def __init__(self, budget, dim):").unwrap();
    writeln!(w, "        self.budget = budget").unwrap();
    writeln!(w, "        self.dim = dim").unwrap();
    writeln!(w, "        self.step_size = {:.4}", g.step_size).unwrap();
    writeln!(w, "        self.population = {}", g.population_size()).unwrap();
    if blocks.crossover {
        writeln!(
            w,
            "        self.crossover_weight = {:.4}",
            g.crossover_weight
        )
        .unwrap();
    }
    if blocks.restart {
        writeln!(w, "        self.restart_prob = {:.4}", g.restart_prob).unwrap();
    }
    if blocks.heavy_tail {
        writeln!(w, "        self.tail_shape = {:.4}", g.tail_shape).unwrap();
    }
    writeln!(w).unwrap();
    writeln!(w, "    def __call__(self, func):").unwrap();
    writeln!(w, "        lb, ub = func.bounds.lb, func.bounds.ub").unwrap();
    writeln!(w, "        center = np.random.uniform(lb, ub)").unwrap();
    writeln!(w, "        best_x, best_f = center, func(center)").unwrap();
    writeln!(w, "        sigma = self.step_size * np.mean(ub - lb)").unwrap();
    writeln!(w, "        evals = 1").unwrap();
    writeln!(w, "        while evals < self.budget:").unwrap();
    writeln!(w, "            gen_x, gen_f = None, np.inf").unwrap();
    writeln!(w, "            successes = 0").unwrap();
    writeln!(w, "            for _ in range(self.population):").unwrap();
    writeln!(w, "                if evals >= self.budget:").unwrap();
    writeln!(w, "                    break").unwrap();
    writeln!(w, "                z = np.random.randn(self.dim)").unwrap();
    if blocks.heavy_tail {
        writeln!(w, "                if np.random.rand() < self.tail_shape:").unwrap();
        writeln!(
            w,
            "                    z = np.random.standard_cauchy(self.dim)"
        )
        .unwrap();
    }
    writeln!(w, "                x = center + sigma * z").unwrap();
    if blocks.crossover {
        writeln!(
            w,
            "                x = (1 - self.crossover_weight) * x + self.crossover_weight * best_x"
        )
        .unwrap();
    }
    writeln!(w, "                x = np.clip(x, lb, ub)").unwrap();
    writeln!(w, "                f = func(x)").unwrap();
    writeln!(w, "                evals += 1").unwrap();
    writeln!(w, "                if f < gen_f:").unwrap();
    writeln!(w, "                    gen_x, gen_f = x, f").unwrap();
    writeln!(w, "                if f < best_f:").unwrap();
    writeln!(w, "                    best_x, best_f = x, f").unwrap();
    writeln!(w, "                    successes += 1").unwrap();
    writeln!(w, "            if gen_x is not None:").unwrap();
    writeln!(w, "                center = gen_x").unwrap();
    writeln!(w, "            if successes >= 0.2 * self.population:").unwrap();
    writeln!(w, "                sigma *= 1.5").unwrap();
    writeln!(w, "            else:").unwrap();
    writeln!(w, "                sigma *= 0.8").unwrap();
    if blocks.restart {
        writeln!(w, "            if np.random.rand() < self.restart_prob:").unwrap();
        writeln!(w, "                center = np.random.uniform(lb, ub)").unwrap();
        writeln!(
            w,
            "                sigma = self.step_size * np.mean(ub - lb)"
        )
        .unwrap();
    }
    writeln!(w, "        return best_f, best_x").unwrap();
    s
}

fn attribute(code: &str, name: &str) -> Result<Option<f64>, HarnessError> {
    let key = format!("self.{name}");
    let mut found = None;
    for line in code.lines() {
        let Some((lhs, rhs)) = line.split_once('=') else {
            continue;
        };
        if lhs.trim() != key {
            continue;
        }
        let v: f64 = rhs.trim().parse().map_err(|_| {
            HarnessError::InvalidCode(format!(
                "`{key}` is assigned `{}`, not a number",
                rhs.trim()
            ))
        })?;
        if found.replace(v).is_some() {
            return Err(HarnessError::InvalidCode(format!(
                "`{key}` is assigned twice"
            )));
        }
    }
    Ok(found)
}

/// Recovers genome and blocks from template source (for example from text
/// returned by a language model). Parameters missing from the text are the
/// optional blocks; out-of-range values are rejected.
pub fn parse_code(code: &str) -> Result<(Genome, Blocks), HarnessError> {
    let step = attribute(code, "step_size")?
        .ok_or_else(|| HarnessError::InvalidCode("missing `self.step_size`".into()))?;
    let pop = attribute(code, "population")?
        .ok_or_else(|| HarnessError::InvalidCode("missing `self.population`".into()))?;
    let cw = attribute(code, "crossover_weight")?;
    let rp = attribute(code, "restart_prob")?;
    let ts = attribute(code, "tail_shape")?;
    let blocks = Blocks {
        crossover: cw.is_some(),
        restart: rp.is_some(),
        heavy_tail: ts.is_some(),
    };
    let g = Genome {
        step_size: step,
        population: pop,
        restart_prob: rp.unwrap_or(0.0),
        crossover_weight: cw.unwrap_or(0.0),
        tail_shape: ts.unwrap_or(0.0),
    };
    if !g.in_box() {
        return Err(HarnessError::InvalidCode(format!(
            "parameters outside the allowed box: {g:?}"
        )));
    }
    Ok((g.normalized(), blocks))
}
