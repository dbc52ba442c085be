//! Anytime performance: log-normalised error, AOCC, algorithm fitness,
//! confidence-banded convergence curves and metric/fitness correlation.

use std::cmp::Ordering;
use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::metrics::{BehaviourVector, Metric};
use crate::trace::Trace;

#[derive(Debug, Error, PartialEq)]
pub enum PerfError {
    #[error("invalid AOCC config: {0}")]
    InvalidConfig(String),
    #[error("trace `{algorithm_id}`/{function_id} has no optimum value")]
    MissingOptimum {
        algorithm_id: String,
        function_id: String,
    },
    #[error("no traces given")]
    Empty,
    #[error("need at least {needed} runs, got {found}")]
    TooFewRuns { needed: usize, found: usize },
    #[error("run {run} has {found} steps, expected {expected}")]
    LengthMismatch {
        run: usize,
        expected: usize,
        found: usize,
    },
    #[error("confidence must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("need at least 3 samples for correlation, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoccConfig {
    pub error_lower: f64,
    pub error_upper: f64,
    pub log_scale: bool,
}

impl Default for AoccConfig {
    fn default() -> Self {
        AoccConfig {
            error_lower: 1e-8,
            error_upper: 1e2,
            log_scale: true,
        }
    }
}

impl AoccConfig {
    pub fn validate(&self) -> Result<(), PerfError> {
        if !(self.error_lower > 0.0
            && self.error_lower < self.error_upper
            && self.error_upper.is_finite())
        {
            return Err(PerfError::InvalidConfig(format!(
                "need 0 < error_lower < error_upper, got [{}, {}]",
                self.error_lower, self.error_upper
            )));
        }
        Ok(())
    }
}

/// Maps `value - f_star` to `[0, 1]`: 0 at or below `error_lower`, 1 at or
/// above `error_upper`, log-linear in between (linear with `log_scale` off).
pub fn normalized_error(value: f64, f_star: f64, cfg: &AoccConfig) -> f64 {
    let e = (value - f_star).clamp(cfg.error_lower, cfg.error_upper);
    if cfg.log_scale {
        let lo = cfg.error_lower.log10();
        (e.log10() - lo) / (cfg.error_upper.log10() - lo)
    } else {
        (e - cfg.error_lower) / (cfg.error_upper - cfg.error_lower)
    }
}

/// Area over the convergence curve of one trace, in `[0, 1]` (higher is
/// better). The curve runs over the full budget in `meta.budget`; a trace that
/// stopped early keeps its final best-so-far value until the budget.
pub fn aocc(trace: &Trace, cfg: &AoccConfig) -> Result<f64, PerfError> {
    cfg.validate()?;
    let f_star = trace
        .optimum_value()
        .ok_or_else(|| PerfError::MissingOptimum {
            algorithm_id: trace.meta().algorithm_id.clone(),
            function_id: trace.meta().function_id.clone(),
        })?;
    let budget = trace.meta().budget.max(trace.len());
    let mut area = 0.0;
    let mut last = 1.0;
    for b in trace.best_so_far() {
        last = 1.0 - normalized_error(b, f_star, cfg);
        area += last;
    }
    area += (budget - trace.len()) as f64 * last;
    Ok(area / budget as f64)
}

/// Mean AOCC over all given (function, instance) traces.
pub fn algorithm_fitness(traces: &[Trace], cfg: &AoccConfig) -> Result<f64, PerfError> {
    if traces.is_empty() {
        return Err(PerfError::Empty);
    }
    let scores = crate::par::map(traces, |t| aocc(t, cfg));
    let mut total = 0.0;
    for s in scores {
        total += s?;
    }
    Ok(total / traces.len() as f64)
}

/// Running maximum of per-algorithm fitness in evaluation order: the
/// "best AOCC so far" series of one evolution run.
pub fn best_fitness_series(fitness: &[f64]) -> Vec<f64> {
    fitness
        .iter()
        .scan(f64::NEG_INFINITY, |best, f| {
            *best = best.max(*f);
            Some(*best)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCurve {
    pub evals: Vec<usize>,
    pub mean: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub n_runs: usize,
}

/// Two-sided standard normal quantile for the given confidence level.
pub fn normal_quantile(confidence: f64) -> Result<f64, PerfError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(PerfError::InvalidConfidence(confidence));
    }
    let n = Normal::standard();
    Ok(n.inverse_cdf(0.5 + confidence / 2.0))
}

/// Pointwise mean over runs with a normal-approximation band
/// `mean ± z * sd / sqrt(n)` (sample standard deviation).
pub fn mean_best_curve(runs: &[Vec<f64>], confidence: f64) -> Result<ConvergenceCurve, PerfError> {
    if runs.len() < 2 {
        return Err(PerfError::TooFewRuns {
            needed: 2,
            found: runs.len(),
        });
    }
    let z = normal_quantile(confidence)?;
    let len = runs[0].len();
    for (i, r) in runs.iter().enumerate() {
        if r.len() != len {
            return Err(PerfError::LengthMismatch {
                run: i,
                expected: len,
                found: r.len(),
            });
        }
    }
    let n = runs.len() as f64;
    let mut curve = ConvergenceCurve {
        evals: (1..=len).collect(),
        mean: Vec::with_capacity(len),
        ci_low: Vec::with_capacity(len),
        ci_high: Vec::with_capacity(len),
        n_runs: runs.len(),
    };
    for t in 0..len {
        let mean = runs.iter().map(|r| r[t]).sum::<f64>() / n;
        let var = runs.iter().map(|r| (r[t] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let half = z * var.sqrt() / n.sqrt();
        curve.mean.push(mean);
        curve.ci_low.push(mean - half);
        curve.ci_high.push(mean + half);
    }
    Ok(curve)
}

/// CSV with columns `eval,mean,ci_low,ci_high,variant_id`.
pub fn curves_csv(curves: &[(String, ConvergenceCurve)]) -> String {
    let mut out = String::from("eval,mean,ci_low,ci_high,variant_id\n");
    for (label, c) in curves {
        for i in 0..c.evals.len() {
            writeln!(
                out,
                "{},{:?},{:?},{:?},{}",
                c.evals[i], c.mean[i], c.ci_low[i], c.ci_high[i], label
            )
            .unwrap();
        }
    }
    out
}

/// Symmetric Pearson matrix over the behaviour metrics plus a trailing
/// `fitness` column. `None` marks an undefined coefficient (a constant
/// column).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub r: Vec<Vec<Option<f64>>>,
}

pub const FITNESS_COLUMN: &str = "fitness";

impl CorrelationMatrix {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        self.r[self.index(a)?][self.index(b)?]
    }

    /// CSV with a header row and a leading name column; undefined entries
    /// are written as `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, row) in self.r.iter().enumerate() {
            out.push_str(&self.names[i]);
            for v in row {
                match v {
                    Some(v) => write!(out, ",{v:?}").unwrap(),
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Pearson correlation of two equally long columns; `None` when either is
/// constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation matrix of named columns.
pub fn correlation_of_columns(
    names: Vec<String>,
    columns: &[Vec<f64>],
) -> Result<CorrelationMatrix, PerfError> {
    let n = columns.first().map_or(0, Vec::len);
    if n < 3 {
        return Err(PerfError::TooFewSamples(n));
    }
    let k = columns.len();
    let constant: Vec<bool> = columns
        .iter()
        .map(|c| c.iter().all(|v| *v == c[0]))
        .collect();
    let mut r = vec![vec![None; k]; k];
    for i in 0..k {
        if !constant[i] {
            r[i][i] = Some(1.0);
        }
        for j in i + 1..k {
            let v = pearson(&columns[i], &columns[j]);
            r[i][j] = v;
            r[j][i] = v;
        }
    }
    Ok(CorrelationMatrix { names, r })
}

/// Pearson matrix over all behaviour metrics and fitness.
pub fn correlation_matrix(
    samples: &[(BehaviourVector, f64)],
) -> Result<CorrelationMatrix, PerfError> {
    if samples.len() < 3 {
        return Err(PerfError::TooFewSamples(samples.len()));
    }
    let mut names: Vec<String> = Metric::ALL.iter().map(|m| m.name().to_string()).collect();
    names.push(FITNESS_COLUMN.to_string());
    let mut columns: Vec<Vec<f64>> = Metric::ALL
        .iter()
        .map(|m| samples.iter().map(|(v, _)| v.get(*m)).collect())
        .collect();
    columns.push(samples.iter().map(|(_, f)| *f).collect());
    correlation_of_columns(names, &columns)
}

/// Greedy pruning of strongly correlated metrics.
///
/// Pairs among `candidates` with `|r| > threshold` are visited from the
/// strongest correlation down; when both members are still kept, the one
/// less correlated with fitness is dropped (on a tie, the one later in
/// `candidates`). Undefined coefficients never trigger a drop. The result
/// keeps the order of `candidates`.
pub fn select_uncorrelated(
    matrix: &CorrelationMatrix,
    candidates: &[&str],
    threshold: f64,
) -> Vec<String> {
    let idx: Vec<Option<usize>> = candidates.iter().map(|c| matrix.index(c)).collect();
    let fit = matrix.index(FITNESS_COLUMN);
    let fit_abs = |pos: usize| -> f64 {
        match (idx[pos], fit) {
            (Some(i), Some(f)) => matrix.r[i][f].map_or(0.0, f64::abs),
            _ => 0.0,
        }
    };
    let mut pairs = Vec::new();
    for a in 0..candidates.len() {
        for b in a + 1..candidates.len() {
            if let (Some(i), Some(j)) = (idx[a], idx[b]) {
                if let Some(r) = matrix.r[i][j] {
                    if r.abs() > threshold {
                        pairs.push((r.abs(), a, b));
                    }
                }
            }
        }
    }
    pairs.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap_or(Ordering::Equal)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut kept = vec![true; candidates.len()];
    for (_, a, b) in pairs {
        if !(kept[a] && kept[b]) {
            continue;
        }
        if fit_abs(b) > fit_abs(a) {
            kept[a] = false;
        } else {
            kept[b] = false;
        }
    }
    candidates
        .iter()
        .zip(kept)
        .filter(|(_, k)| *k)
        .map(|(c, _)| c.to_string())
        .collect()
}
