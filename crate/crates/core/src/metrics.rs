//! Scalar behaviour metrics of a single optimisation trace, and their
//! aggregation over benchmark instances into one [`BehaviourVector`].
//!
//! Conventions shared by all metrics:
//!
//! * minimisation; "best so far" is the running minimum of raw values,
//! * evaluation 1 has no prior best, so metrics defined against the best so
//!   far start at evaluation 2 and divide by `N - 1`,
//! * distances are Euclidean.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::par;
use crate::performance::{normalized_error, AoccConfig};
use crate::trace::{SearchDomain, Trace};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("{metric} needs at least {needed} evaluations, trace has {found}")]
    TooFewPoints {
        metric: &'static str,
        needed: usize,
        found: usize,
    },
    #[error("{metric} needs the optimum value, which the trace does not record")]
    MissingOptimum { metric: &'static str },
    #[error("no traces to aggregate")]
    Empty,
    #[error("traces mix dimensions {0} and {1}")]
    MixedDimensions(usize, usize),
    #[error("invalid metrics config: {0}")]
    InvalidConfig(String),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
}

/// The behaviour metrics, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    NnDist,
    Dispersion,
    ExplorationPct,
    DistToBest,
    IntensificationRatio,
    ExploitationPct,
    ConvRate,
    AvgImprovement,
    SuccessRate,
    NoImpStreak,
    LastImpFraction,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::NnDist,
        Metric::Dispersion,
        Metric::ExplorationPct,
        Metric::DistToBest,
        Metric::IntensificationRatio,
        Metric::ExploitationPct,
        Metric::ConvRate,
        Metric::AvgImprovement,
        Metric::SuccessRate,
        Metric::NoImpStreak,
        Metric::LastImpFraction,
    ];

    /// Metrics used as behaviour-space axes for search trajectory networks.
    pub const STN_DEFAULT: [Metric; 5] = [
        Metric::ExplorationPct,
        Metric::ConvRate,
        Metric::AvgImprovement,
        Metric::SuccessRate,
        Metric::NoImpStreak,
    ];

    /// Machine name used in CSV headers and configs.
    pub fn name(self) -> &'static str {
        match self {
            Metric::NnDist => "nn_dist",
            Metric::Dispersion => "dispersion",
            Metric::ExplorationPct => "exploration_pct",
            Metric::DistToBest => "dist_to_best",
            Metric::IntensificationRatio => "intensification_ratio",
            Metric::ExploitationPct => "exploitation_pct",
            Metric::ConvRate => "conv_rate",
            Metric::AvgImprovement => "avg_improvement",
            Metric::SuccessRate => "success_rate",
            Metric::NoImpStreak => "no_imp_streak",
            Metric::LastImpFraction => "last_imp_fraction",
        }
    }

    /// Short human label for plots.
    pub fn label(self) -> &'static str {
        match self {
            Metric::NnDist => "NN-dist",
            Metric::Dispersion => "Disp",
            Metric::ExplorationPct => "Expl %",
            Metric::DistToBest => "Dist->best",
            Metric::IntensificationRatio => "Inten-ratio",
            Metric::ExploitationPct => "Eplt %",
            Metric::ConvRate => "Conv-rate",
            Metric::AvgImprovement => "Delta fitness",
            Metric::SuccessRate => "Success %",
            Metric::NoImpStreak => "No-imp streak",
            Metric::LastImpFraction => "Last-imp frac",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| MetricError::UnknownMetric(s.to_string()))
    }
}

/// Behaviour metrics of one algorithm (or one trace).
///
/// `no_imp_streak` is the longest non-improving run divided by the trace
/// length, so all fields are comparable across budgets.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BehaviourVector {
    pub nn_dist: f64,
    pub dispersion: f64,
    pub exploration_pct: f64,
    pub dist_to_best: f64,
    pub intensification_ratio: f64,
    pub exploitation_pct: f64,
    pub conv_rate: f64,
    pub avg_improvement: f64,
    pub success_rate: f64,
    pub no_imp_streak: f64,
    pub last_imp_fraction: f64,
}

impl BehaviourVector {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::NnDist => self.nn_dist,
            Metric::Dispersion => self.dispersion,
            Metric::ExplorationPct => self.exploration_pct,
            Metric::DistToBest => self.dist_to_best,
            Metric::IntensificationRatio => self.intensification_ratio,
            Metric::ExploitationPct => self.exploitation_pct,
            Metric::ConvRate => self.conv_rate,
            Metric::AvgImprovement => self.avg_improvement,
            Metric::SuccessRate => self.success_rate,
            Metric::NoImpStreak => self.no_imp_streak,
            Metric::LastImpFraction => self.last_imp_fraction,
        }
    }

    fn set(&mut self, m: Metric, v: f64) {
        match m {
            Metric::NnDist => self.nn_dist = v,
            Metric::Dispersion => self.dispersion = v,
            Metric::ExplorationPct => self.exploration_pct = v,
            Metric::DistToBest => self.dist_to_best = v,
            Metric::IntensificationRatio => self.intensification_ratio = v,
            Metric::ExploitationPct => self.exploitation_pct = v,
            Metric::ConvRate => self.conv_rate = v,
            Metric::AvgImprovement => self.avg_improvement = v,
            Metric::SuccessRate => self.success_rate = v,
            Metric::NoImpStreak => self.no_imp_streak = v,
            Metric::LastImpFraction => self.last_imp_fraction = v,
        }
    }

    pub fn values(&self) -> [f64; 11] {
        Metric::ALL.map(|m| self.get(m))
    }
}

/// Anything that can report metric values; lets behaviour-space tools work on
/// full vectors or on partial metric sets.
pub trait BehaviourSource {
    fn metric(&self, m: Metric) -> Option<f64>;
}

impl BehaviourSource for BehaviourVector {
    fn metric(&self, m: Metric) -> Option<f64> {
        Some(self.get(m))
    }
}

/// A subset of metrics, keyed by metric.
pub type MetricValues = BTreeMap<Metric, f64>;

impl BehaviourSource for MetricValues {
    fn metric(&self, m: Metric) -> Option<f64> {
        self.get(&m).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    /// Chunk size K for the exploration percentage.
    pub chunk_size: usize,
    /// Intensification radius as a fraction of the mean domain width.
    pub intensification_radius_frac: f64,
    /// Number of probe points M for the dispersion estimate.
    pub dispersion_samples: usize,
    pub dispersion_seed: u64,
    /// Lower clamp on errors in the convergence rate.
    pub epsilon_error: f64,
    /// Error normalisation used for the mean improvement.
    pub normalization: AoccConfig,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            chunk_size: 100,
            intensification_radius_frac: 0.10,
            dispersion_samples: 4096,
            dispersion_seed: 0,
            epsilon_error: 1e-12,
            normalization: AoccConfig::default(),
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.chunk_size < 2 {
            return Err(MetricError::InvalidConfig(
                "chunk_size must be at least 2".into(),
            ));
        }
        if !(self.intensification_radius_frac > 0.0 && self.intensification_radius_frac < 1.0) {
            return Err(MetricError::InvalidConfig(
                "intensification_radius_frac must lie in (0, 1)".into(),
            ));
        }
        if self.dispersion_samples == 0 {
            return Err(MetricError::InvalidConfig(
                "dispersion_samples must be positive".into(),
            ));
        }
        if self.epsilon_error.is_nan() || self.epsilon_error <= 0.0 {
            return Err(MetricError::InvalidConfig(
                "epsilon_error must be positive".into(),
            ));
        }
        self.normalization
            .validate()
            .map_err(|e| MetricError::InvalidConfig(e.to_string()))
    }
}

fn need(metric: &'static str, trace: &Trace, needed: usize) -> Result<(), MetricError> {
    if trace.len() < needed {
        return Err(MetricError::TooFewPoints {
            metric,
            needed,
            found: trace.len(),
        });
    }
    Ok(())
}

fn optimum(metric: &'static str, trace: &Trace) -> Result<f64, MetricError> {
    trace
        .optimum_value()
        .ok_or(MetricError::MissingOptimum { metric })
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Mean distance from each evaluated point to its nearest other point in the
/// trace.
pub fn nn_distance(trace: &Trace) -> Result<f64, MetricError> {
    need("nn_dist", trace, 2)?;
    let n = trace.len();
    let nearest = par::map_range(n, |i| {
        let xi = trace.point(i);
        let mut best = f64::INFINITY;
        for (j, xj) in trace.points().enumerate() {
            if j != i {
                best = best.min(dist2(xi, xj));
            }
        }
        best.sqrt()
    });
    Ok(nearest.iter().sum::<f64>() / n as f64)
}

fn first_primes(k: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(k);
    let mut c = 2u64;
    while primes.len() < k {
        if primes
            .iter()
            .take_while(|p| *p * *p <= c)
            .all(|p| !c.is_multiple_of(*p))
        {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Dispersion probes: the Halton sequence (first `d` prime bases, starting at
/// index 1) under a Cranley-Patterson rotation drawn from `seed`, mapped into
/// the domain. Row-major, `m * d` values.
pub fn dispersion_probes(domain: &SearchDomain, m: usize, seed: u64) -> Vec<f64> {
    let d = domain.dim();
    let bases = first_primes(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let mut out = Vec::with_capacity(m * d);
    for i in 0..m {
        for k in 0..d {
            let u = (radical_inverse(i as u64 + 1, bases[k]) + shift[k]).fract();
            let l = domain.lower()[k];
            let w = domain.upper()[k] - l;
            out.push((l + u * w).min(domain.upper()[k]));
        }
    }
    out
}

/// Monte-Carlo estimate of `sup_{y in D} min_{x in X} ||y - x||`: the largest
/// distance from any probe point to its nearest evaluated point. Never exceeds
/// the exact supremum.
pub fn dispersion(trace: &Trace, cfg: &MetricsConfig) -> Result<f64, MetricError> {
    need("dispersion", trace, 1)?;
    let d = trace.dim();
    let probes = dispersion_probes(trace.domain(), cfg.dispersion_samples, cfg.dispersion_seed);
    const BLOCK: usize = 256;
    let blocks = probes.len().div_ceil(BLOCK * d);
    let best2 = par::max_range(blocks, 0.0, |b| {
        let mut local = 0.0f64;
        let lo = b * BLOCK * d;
        let hi = ((b + 1) * BLOCK * d).min(probes.len());
        for y in probes[lo..hi].chunks_exact(d) {
            let mut nearest = f64::INFINITY;
            for x in trace.points() {
                nearest = nearest.min(dist2(y, x));
                // this probe can no longer raise the block maximum
                if nearest <= local {
                    break;
                }
            }
            local = local.max(nearest);
        }
        local
    });
    Ok(best2.sqrt())
}

/// Average pairwise Euclidean distance `D(S)`.
pub fn pairwise_diversity<P: AsRef<[f64]>>(points: &[P]) -> Result<f64, MetricError> {
    let n = points.len();
    if n < 2 {
        return Err(MetricError::TooFewPoints {
            metric: "pairwise_diversity",
            needed: 2,
            found: n,
        });
    }
    let mut total = 0.0;
    for p in 0..n {
        for q in p + 1..n {
            total += dist(points[p].as_ref(), points[q].as_ref());
        }
    }
    Ok(2.0 * total / (n * (n - 1)) as f64)
}

/// Expected distance between two uniform points of the domain, approximated
/// as `mean_width * sqrt(d / 6)`.
pub fn d_rand(domain: &SearchDomain) -> f64 {
    domain.mean_width() * (domain.dim() as f64 / 6.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exploration {
    pub exploration_pct: f64,
    pub exploitation_pct: f64,
}

impl Exploration {
    fn from_exploration(e: f64) -> Self {
        Exploration {
            exploration_pct: e,
            exploitation_pct: 100.0 - e,
        }
    }
}

/// Chunked exploration percentage and its complement.
///
/// The trace is cut into `ceil(N / K)` consecutive chunks; each scores
/// `min(100 * D(chunk) / D_rand, 100)`, a chunk with a single point scores 0,
/// and the result is the mean score.
pub fn exploration_percentage(
    trace: &Trace,
    cfg: &MetricsConfig,
) -> Result<Exploration, MetricError> {
    need("exploration_pct", trace, 2)?;
    if cfg.chunk_size < 2 {
        return Err(MetricError::InvalidConfig(
            "chunk_size must be at least 2".into(),
        ));
    }
    let reference = d_rand(trace.domain());
    let d = trace.dim();
    let chunks: Vec<&[f64]> = trace.coords().chunks(cfg.chunk_size * d).collect();
    let scores = par::map(&chunks, |c| {
        let pts: Vec<&[f64]> = c.chunks_exact(d).collect();
        match pairwise_diversity(&pts) {
            Ok(div) => (100.0 * div / reference).min(100.0),
            Err(_) => 0.0,
        }
    });
    let e = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok(Exploration::from_exploration(e))
}

/// `||x_i - b_{i-1}||` for i = 2..N, where `b_{i-1}` is the best point among
/// the first i-1 evaluations.
fn distances_to_prior_best(trace: &Trace) -> Vec<f64> {
    let best_idx = trace.best_index_so_far();
    (1..trace.len())
        .map(|i| dist(trace.point(i), trace.point(best_idx[i - 1])))
        .collect()
}

/// Mean distance of each evaluation (from the second on) to the best point
/// found before it.
pub fn dist_to_best(trace: &Trace) -> Result<f64, MetricError> {
    need("dist_to_best", trace, 2)?;
    let ds = distances_to_prior_best(trace);
    Ok(ds.iter().sum::<f64>() / ds.len() as f64)
}

/// Fraction of evaluations (from the second on) within
/// `intensification_radius_frac * mean_width` of the best point found before.
pub fn intensification_ratio(trace: &Trace, cfg: &MetricsConfig) -> Result<f64, MetricError> {
    need("intensification_ratio", trace, 2)?;
    let r = cfg.intensification_radius_frac * trace.domain().mean_width();
    let ds = distances_to_prior_best(trace);
    let near = ds.iter().filter(|d| **d <= r).count();
    Ok(near as f64 / ds.len() as f64)
}

/// Geometric mean of successive best-so-far error ratios,
/// `(e_N / e_1)^(1 / (N - 1))`, with errors clamped below at
/// `epsilon_error`.
pub fn convergence_rate(trace: &Trace, cfg: &MetricsConfig) -> Result<f64, MetricError> {
    let f_star = optimum("conv_rate", trace)?;
    need("conv_rate", trace, 2)?;
    let bsf = trace.best_so_far();
    let err = |v: f64| (v - f_star).max(cfg.epsilon_error);
    let first = err(bsf[0]);
    let last = err(bsf[bsf.len() - 1]);
    if last >= first {
        return Ok(1.0);
    }
    Ok(((last.ln() - first.ln()) / (bsf.len() - 1) as f64).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementStats {
    /// Mean drop of the normalised best-so-far error over improving steps.
    pub avg_improvement: f64,
    /// Improving steps over N - 1.
    pub success_rate: f64,
    /// Longest run of consecutive non-improving steps.
    pub no_imp_streak: usize,
    /// `(N - i_last) / N` with `i_last` the 1-based index of the last
    /// improvement (1 when there is none).
    pub last_imp_fraction: f64,
}

/// Improvement bookkeeping. Step i (from 2) improves iff its value is strictly
/// below the best of the earlier values.
pub fn improvement_stats(
    trace: &Trace,
    cfg: &MetricsConfig,
) -> Result<ImprovementStats, MetricError> {
    let f_star = optimum("avg_improvement", trace)?;
    need("improvement_stats", trace, 2)?;
    let n = trace.len();
    let values = trace.values();
    let bsf = trace.best_so_far();
    let norm = |v: f64| normalized_error(v, f_star, &cfg.normalization);

    let mut improvements = 0usize;
    let mut gain = 0.0;
    let mut streak = 0usize;
    let mut longest = 0usize;
    let mut last = 1usize;
    for i in 1..n {
        if values[i] < bsf[i - 1] {
            improvements += 1;
            gain += norm(bsf[i - 1]) - norm(bsf[i]);
            streak = 0;
            last = i + 1;
        } else {
            streak += 1;
            longest = longest.max(streak);
        }
    }
    Ok(ImprovementStats {
        avg_improvement: if improvements > 0 {
            gain / improvements as f64
        } else {
            0.0
        },
        success_rate: improvements as f64 / (n - 1) as f64,
        no_imp_streak: longest,
        last_imp_fraction: (n - last) as f64 / n as f64,
    })
}

fn compute_metric(trace: &Trace, m: Metric, cfg: &MetricsConfig) -> Result<f64, MetricError> {
    Ok(match m {
        Metric::NnDist => nn_distance(trace)?,
        Metric::Dispersion => dispersion(trace, cfg)?,
        Metric::ExplorationPct => exploration_percentage(trace, cfg)?.exploration_pct,
        Metric::ExploitationPct => exploration_percentage(trace, cfg)?.exploitation_pct,
        Metric::DistToBest => dist_to_best(trace)?,
        Metric::IntensificationRatio => intensification_ratio(trace, cfg)?,
        Metric::ConvRate => convergence_rate(trace, cfg)?,
        Metric::AvgImprovement => improvement_stats(trace, cfg)?.avg_improvement,
        Metric::SuccessRate => improvement_stats(trace, cfg)?.success_rate,
        Metric::NoImpStreak => {
            improvement_stats(trace, cfg)?.no_imp_streak as f64 / trace.len() as f64
        }
        Metric::LastImpFraction => improvement_stats(trace, cfg)?.last_imp_fraction,
    })
}

/// All metrics of one trace.
pub fn trace_behaviour(trace: &Trace, cfg: &MetricsConfig) -> Result<BehaviourVector, MetricError> {
    cfg.validate()?;
    let expl = exploration_percentage(trace, cfg)?;
    let imp = improvement_stats(trace, cfg)?;
    Ok(BehaviourVector {
        nn_dist: nn_distance(trace)?,
        dispersion: dispersion(trace, cfg)?,
        exploration_pct: expl.exploration_pct,
        dist_to_best: dist_to_best(trace)?,
        intensification_ratio: intensification_ratio(trace, cfg)?,
        exploitation_pct: expl.exploitation_pct,
        conv_rate: convergence_rate(trace, cfg)?,
        avg_improvement: imp.avg_improvement,
        success_rate: imp.success_rate,
        no_imp_streak: imp.no_imp_streak as f64 / trace.len() as f64,
        last_imp_fraction: imp.last_imp_fraction,
    })
}

fn check_batch(traces: &[Trace]) -> Result<(), MetricError> {
    let first = traces.first().ok_or(MetricError::Empty)?;
    if let Some(t) = traces.iter().find(|t| t.dim() != first.dim()) {
        return Err(MetricError::MixedDimensions(first.dim(), t.dim()));
    }
    Ok(())
}

/// Per-trace metrics averaged over traces (typically the instances an
/// algorithm was run on). The exploitation percentage is set to
/// `100 - exploration` after averaging so the pair stays complementary.
pub fn behaviour_vector(
    traces: &[Trace],
    cfg: &MetricsConfig,
) -> Result<BehaviourVector, MetricError> {
    check_batch(traces)?;
    cfg.validate()?;
    let per_trace: Vec<BehaviourVector> = par::map(traces, |t| trace_behaviour(t, cfg))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let n = per_trace.len() as f64;
    let mut out = BehaviourVector::default();
    for m in Metric::ALL {
        out.set(m, per_trace.iter().map(|v| v.get(m)).sum::<f64>() / n);
    }
    out.exploitation_pct = 100.0 - out.exploration_pct;
    Ok(out)
}

/// Like [`behaviour_vector`] but computes only the requested metrics, which
/// skips the quadratic ones when they are not needed.
pub fn behaviour_subset(
    traces: &[Trace],
    metrics: &[Metric],
    cfg: &MetricsConfig,
) -> Result<MetricValues, MetricError> {
    check_batch(traces)?;
    cfg.validate()?;
    let per_trace: Vec<Vec<f64>> = par::map(traces, |t| {
        metrics
            .iter()
            .map(|m| compute_metric(t, *m, cfg))
            .collect::<Result<Vec<_>, _>>()
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    let n = per_trace.len() as f64;
    let mut out = MetricValues::new();
    for (k, m) in metrics.iter().enumerate() {
        out.insert(*m, per_trace.iter().map(|v| v[k]).sum::<f64>() / n);
    }
    if let Some(e) = out.get(&Metric::ExplorationPct).copied() {
        if out.contains_key(&Metric::ExploitationPct) {
            out.insert(Metric::ExploitationPct, 100.0 - e);
        }
    }
    Ok(out)
}
