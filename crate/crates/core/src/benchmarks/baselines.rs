use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{BenchError, BenchmarkFunction};
use crate::trace::{SearchDomain, Trace, TraceMeta};

/// Budget-enforcing evaluation log. Every call to [`Recorder::eval`] is one
/// trace row.
#[derive(Debug)]
pub struct Recorder<'a> {
    f: &'a BenchmarkFunction,
    domain: SearchDomain,
    budget: usize,
    coords: Vec<f64>,
    values: Vec<f64>,
}

impl<'a> Recorder<'a> {
    pub fn new(f: &'a BenchmarkFunction, budget: usize) -> Self {
        Recorder {
            f,
            domain: f.domain(),
            budget,
            coords: Vec::with_capacity(budget * f.dim),
            values: Vec::with_capacity(budget),
        }
    }

    pub fn domain(&self) -> &SearchDomain {
        &self.domain
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.values.len()
    }

    pub fn done(&self) -> bool {
        self.values.len() >= self.budget
    }

    /// Evaluates `x` (clamped into the domain first). Returns `None` once the
    /// budget is spent.
    pub fn eval(&mut self, x: &mut [f64]) -> Option<f64> {
        if self.done() {
            return None;
        }
        self.domain.clamp(x);
        let v = self.f.evaluate(x);
        self.coords.extend_from_slice(x);
        self.values.push(v);
        Some(v)
    }

    pub fn into_trace(self, algorithm_id: &str, run_seed: u64) -> Trace {
        let meta = TraceMeta {
            algorithm_id: algorithm_id.to_string(),
            function_id: self.f.id().to_string(),
            instance_id: self.f.instance_id,
            run_seed,
            budget: self.budget,
        };
        Trace::new(
            self.domain,
            self.coords,
            self.values,
            Some(self.f.f_opt),
            meta,
        )
        .expect("recorded points are clamped into the domain")
    }
}

fn uniform_point(domain: &SearchDomain, rng: &mut impl Rng) -> Vec<f64> {
    domain
        .lower()
        .iter()
        .zip(domain.upper())
        .map(|(l, u)| rng.random_range(*l..=*u))
        .collect()
}

/// Uniform i.i.d. sampling of the domain.
pub fn baseline_random_search(
    f: &BenchmarkFunction,
    budget: usize,
    seed: u64,
) -> Result<Trace, BenchError> {
    if budget == 0 {
        return Err(BenchError::BudgetTooSmall(1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder::new(f, budget);
    while !rec.done() {
        let mut x = uniform_point(rec.domain(), &mut rng);
        rec.eval(&mut x);
    }
    Ok(rec.into_trace("random_search", seed))
}

/// (1+1)-ES with the one-fifth success rule: the step size grows by
/// `exp(0.2)` after a strict improvement and shrinks by `exp(-0.05)`
/// otherwise, which is stationary at a 1/5 success rate.
pub fn baseline_one_plus_one_es(
    f: &BenchmarkFunction,
    budget: usize,
    seed: u64,
) -> Result<Trace, BenchError> {
    if budget < 2 {
        return Err(BenchError::BudgetTooSmall(2));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder::new(f, budget);
    let mut parent = uniform_point(rec.domain(), &mut rng);
    let mut f_parent = rec.eval(&mut parent).expect("budget >= 2");
    let mut sigma = 0.2 * rec.domain().mean_width();
    while !rec.done() {
        let mut child: Vec<f64> = parent
            .iter()
            .map(|x| x + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let f_child = rec.eval(&mut child).expect("checked remaining budget");
        if f_child < f_parent {
            parent = child;
            f_parent = f_child;
            sigma *= 0.2f64.exp();
        } else {
            sigma *= (-0.05f64).exp();
        }
        sigma = sigma.max(1e-12);
    }
    Ok(rec.into_trace("one_plus_one_es", seed))
}

/// DE/rand/1/bin with F = 0.5, CR = 0.9, logged per evaluation and cut off
/// exactly at the budget.
pub fn baseline_de(
    f: &BenchmarkFunction,
    budget: usize,
    seed: u64,
    pop_size: usize,
) -> Result<Trace, BenchError> {
    if pop_size < 4 {
        return Err(BenchError::PopulationTooSmall(pop_size));
    }
    if budget == 0 {
        return Err(BenchError::BudgetTooSmall(1));
    }
    const F: f64 = 0.5;
    const CR: f64 = 0.9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = Recorder::new(f, budget);
    let d = f.dim;
    let mut pop: Vec<Vec<f64>> = Vec::with_capacity(pop_size);
    let mut fit: Vec<f64> = Vec::with_capacity(pop_size);
    while pop.len() < pop_size {
        let mut x = uniform_point(rec.domain(), &mut rng);
        match rec.eval(&mut x) {
            Some(v) => {
                pop.push(x);
                fit.push(v);
            }
            None => return Ok(rec.into_trace("de", seed)),
        }
    }
    'outer: loop {
        for i in 0..pop_size {
            let mut pick = || loop {
                let r = rng.random_range(0..pop_size);
                if r != i {
                    break r;
                }
            };
            let (a, b, c) = loop {
                let (a, b, c) = (pick(), pick(), pick());
                if a != b && b != c && a != c {
                    break (a, b, c);
                }
            };
            let j_rand = rng.random_range(0..d);
            let mut trial = pop[i].clone();
            for j in 0..d {
                if j == j_rand || rng.random::<f64>() < CR {
                    trial[j] = pop[a][j] + F * (pop[b][j] - pop[c][j]);
                }
            }
            let Some(v) = rec.eval(&mut trial) else {
                break 'outer;
            };
            if v <= fit[i] {
                pop[i] = trial;
                fit[i] = v;
            }
        }
    }
    Ok(rec.into_trace("de", seed))
}
