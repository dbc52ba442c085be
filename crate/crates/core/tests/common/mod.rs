//! Naive reference implementations of the behaviour metrics and AOCC, written
//! directly from their definitions with plain loops, plus random trace
//! generators shared by the integration suites.

#![allow(dead_code)]

use bspace::trace::{SearchDomain, Trace, TraceMeta};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

fn pts(t: &Trace) -> Vec<Vec<f64>> {
    (0..t.len()).map(|i| t.point(i).to_vec()).collect()
}

pub fn nn_dist(t: &Trace) -> f64 {
    let p = pts(t);
    let mut total = 0.0;
    for i in 0..p.len() {
        let mut best = f64::MAX;
        for j in 0..p.len() {
            if i != j {
                let d = euclid(&p[i], &p[j]);
                if d < best {
                    best = d;
                }
            }
        }
        total += best;
    }
    total / p.len() as f64
}

/// Mean over all ordered pairs of distinct indices.
pub fn diversity(p: &[Vec<f64>]) -> f64 {
    let n = p.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += euclid(&p[i], &p[j]);
            }
        }
    }
    total / (n * (n - 1)) as f64
}

pub fn d_rand(dom: &SearchDomain) -> f64 {
    let d = dom.dim();
    let mut w = 0.0;
    for k in 0..d {
        w += dom.upper()[k] - dom.lower()[k];
    }
    (w / d as f64) * (d as f64 / 6.0).sqrt()
}

pub fn exploration_pct(t: &Trace, chunk: usize) -> f64 {
    let p = pts(t);
    let reference = d_rand(t.domain());
    let mut scores = Vec::new();
    let mut start = 0;
    while start < p.len() {
        let end = (start + chunk).min(p.len());
        let c = &p[start..end];
        scores.push(if c.len() < 2 {
            0.0
        } else {
            let e = 100.0 * diversity(c) / reference;
            if e > 100.0 {
                100.0
            } else {
                e
            }
        });
        start = end;
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

/// Index of the first occurrence of the minimum among `values[..end]`.
fn argmin_prefix(values: &[f64], end: usize) -> usize {
    let mut b = 0;
    for i in 1..end {
        if values[i] < values[b] {
            b = i;
        }
    }
    b
}

fn dists_to_prior_best(t: &Trace) -> Vec<f64> {
    let p = pts(t);
    let v = t.values();
    (1..p.len())
        .map(|i| euclid(&p[i], &p[argmin_prefix(v, i)]))
        .collect()
}

pub fn dist_to_best(t: &Trace) -> f64 {
    let d = dists_to_prior_best(t);
    d.iter().sum::<f64>() / d.len() as f64
}

pub fn intensification(t: &Trace, frac: f64) -> f64 {
    let dom = t.domain();
    let mut w = 0.0;
    for k in 0..dom.dim() {
        w += dom.upper()[k] - dom.lower()[k];
    }
    let r = frac * w / dom.dim() as f64;
    let d = dists_to_prior_best(t);
    d.iter().filter(|x| **x <= r).count() as f64 / d.len() as f64
}

fn best_so_far(v: &[f64]) -> Vec<f64> {
    (0..v.len()).map(|i| v[argmin_prefix(v, i + 1)]).collect()
}

pub fn conv_rate(t: &Trace, eps: f64) -> f64 {
    let f = t.optimum_value().unwrap();
    let b = best_so_far(t.values());
    let e1 = (b[0] - f).max(eps);
    let en = (b[b.len() - 1] - f).max(eps);
    if en >= e1 {
        1.0
    } else {
        (en / e1).powf(1.0 / (b.len() - 1) as f64)
    }
}

pub fn norm_error(v: f64, f: f64, lo: f64, hi: f64) -> f64 {
    let mut e = v - f;
    if e < lo {
        e = lo;
    }
    if e > hi {
        e = hi;
    }
    (e / lo).log10() / (hi / lo).log10()
}

/// (avg_improvement, success_rate, longest streak, last-improvement fraction)
pub fn improvement(t: &Trace) -> (f64, f64, usize, f64) {
    let v = t.values();
    let f = t.optimum_value().unwrap();
    let b = best_so_far(v);
    let n = v.len();
    let mut gains = Vec::new();
    let mut flags = Vec::new();
    for i in 1..n {
        let improved = v[i] < b[i - 1];
        flags.push(improved);
        if improved {
            gains.push(norm_error(b[i - 1], f, 1e-8, 1e2) - norm_error(b[i], f, 1e-8, 1e2));
        }
    }
    let mut longest = 0;
    let mut run = 0;
    for fl in &flags {
        run = if *fl { 0 } else { run + 1 };
        longest = longest.max(run);
    }
    let last = flags.iter().rposition(|x| *x).map_or(1, |k| k + 2);
    let avg = if gains.is_empty() {
        0.0
    } else {
        gains.iter().sum::<f64>() / gains.len() as f64
    };
    (
        avg,
        gains.len() as f64 / (n - 1) as f64,
        longest,
        (n - last) as f64 / n as f64,
    )
}

/// Halton point `index` (from 1) in base-`b` digit expansion, built by
/// reversing the digit string rather than by accumulation.
pub fn halton(index: u64, base: u64) -> f64 {
    let mut digits = Vec::new();
    let mut i = index;
    while i > 0 {
        digits.push(i % base);
        i /= base;
    }
    let mut num = 0u128;
    let mut den = 1u128;
    for d in &digits {
        num = num * base as u128 + *d as u128;
        den *= base as u128;
    }
    num as f64 / den as f64
}

pub fn dispersion(t: &Trace, m: usize, seed: u64) -> f64 {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    let dom = t.domain();
    let d = dom.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let p = pts(t);
    let mut worst: f64 = 0.0;
    for i in 1..=m as u64 {
        let y: Vec<f64> = (0..d)
            .map(|k| {
                let mut u = halton(i, PRIMES[k]) + shift[k];
                if u >= 1.0 {
                    u -= 1.0;
                }
                let x = dom.lower()[k] + u * (dom.upper()[k] - dom.lower()[k]);
                x.min(dom.upper()[k])
            })
            .collect();
        let nearest = p.iter().map(|x| euclid(&y, x)).fold(f64::MAX, f64::min);
        worst = worst.max(nearest);
    }
    worst
}

pub fn aocc(t: &Trace) -> f64 {
    let f = t.optimum_value().unwrap();
    let b = best_so_far(t.values());
    let budget = t.meta().budget;
    let mut s = 0.0;
    for k in 0..budget {
        let v = b[k.min(b.len() - 1)];
        s += 1.0 - norm_error(v, f, 1e-8, 1e2);
    }
    s / budget as f64
}

pub fn meta(budget: usize) -> TraceMeta {
    TraceMeta {
        algorithm_id: "a001".into(),
        function_id: "sphere".into(),
        instance_id: 1,
        run_seed: 1,
        budget,
    }
}

/// Random trace mixing uniform jumps and local steps around the incumbent,
/// with values from a shifted sphere plus noise so improvements are sparse.
pub fn random_trace(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Trace {
    let dom = SearchDomain::cube(d, -5.0, 5.0).unwrap();
    let local = rng.random_range(0.0..1.0);
    let step = 10f64.powf(rng.random_range(-3.0..0.0));
    let center: Vec<f64> = (0..d).map(|_| rng.random_range(-4.0..4.0)).collect();
    let mut points = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..n {
        let x: Vec<f64> = match &best {
            Some((b, _)) if rng.random::<f64>() < local => b
                .iter()
                .map(|v| (v + rng.random_range(-step..step)).clamp(-5.0, 5.0))
                .collect(),
            _ => (0..d).map(|_| rng.random_range(-5.0..=5.0)).collect(),
        };
        let f = x
            .iter()
            .zip(&center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            + 1e-3 * (rng.next_u32() % 7) as f64;
        if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
            best = Some((x.clone(), f));
        }
        points.push(x);
        values.push(f);
    }
    let budget = n + rng.random_range(0..=n / 4);
    Trace::from_points(
        dom,
        &points,
        values,
        Some(-rng.random_range(0.0..1e-3)),
        meta(budget),
    )
    .unwrap()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(a.abs()) || (a - b).abs() < 1e-300
}

/// Arbitrary valid trace for format round trips: random box, extreme
/// magnitudes, optional optimum.
pub fn arbitrary_trace(rng: &mut ChaCha8Rng) -> Trace {
    let d = rng.random_range(1..=6);
    let lower: Vec<f64> = (0..d)
        .map(|_| -10f64.powf(rng.random_range(-3.0..3.0)))
        .collect();
    let upper: Vec<f64> = lower
        .iter()
        .map(|l| l + 10f64.powf(rng.random_range(-3.0..4.0)))
        .collect();
    let dom = SearchDomain::new(lower.clone(), upper.clone()).unwrap();
    let n = rng.random_range(1..=60);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|k| rng.random_range(lower[k]..=upper[k]))
                .collect()
        })
        .collect();
    let values: Vec<f64> = (0..n)
        .map(|_| {
            let mag = 10f64.powf(rng.random_range(-300.0..300.0));
            if rng.random::<bool>() {
                mag
            } else {
                -mag * rng.random::<f64>()
            }
        })
        .collect();
    let optimum = rng.random::<bool>().then(|| rng.random_range(-1e3..1e3));
    let m = TraceMeta {
        algorithm_id: format!("a{:03}", rng.random_range(0..1000)),
        function_id: ["sphere", "rastrigin", "katsuura-lite"][rng.random_range(0..3)].to_string(),
        instance_id: rng.random_range(1..100),
        run_seed: rng.next_u64(),
        budget: n + rng.random_range(0..10),
    };
    Trace::from_points(dom, &points, values, optimum, m).unwrap()
}

/// Arbitrary valid lineage with awkward code text.
pub fn arbitrary_lineage(rng: &mut ChaCha8Rng) -> Vec<bspace::trace::LineageRecord> {
    const PIECES: [&str; 8] = [
        "def f(x):\n",
        "\treturn x\n",
        "\"quoted\"",
        "\\",
        "é∑",
        "\u{0}",
        "# comment\r\n",
        "    ",
    ];
    let n = rng.random_range(1..=20);
    let mut out: Vec<bspace::trace::LineageRecord> = Vec::with_capacity(n);
    for i in 0..n {
        let parent = (i > 0 && rng.random::<f64>() < 0.8).then(|| rng.random_range(0..i));
        let generation = parent.map_or(0, |p| out[p].generation + 1);
        let code: String = (0..rng.random_range(1..12))
            .map(|_| PIECES[rng.random_range(0..PIECES.len())])
            .collect();
        out.push(bspace::trace::LineageRecord {
            algorithm_id: format!("a{i:03}"),
            parent_ids: parent.map(|p| vec![format!("a{p:03}")]).unwrap_or_default(),
            generation,
            code_text: code,
            fitness: rng.random::<f64>(),
            variant_id: "llamea-3".into(),
            run_id: format!("s{}", rng.random_range(1..6)),
        });
    }
    out
}
