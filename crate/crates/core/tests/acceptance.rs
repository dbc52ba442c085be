//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances are pinned below.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use bspace::benchmarks::{baseline_one_plus_one_es, baseline_random_search, make_function};
use bspace::ceg::{
    build_ceg, code_growth_series, growth_series_csv, CegGraph, FitnessNorm, IndentTreeProvider,
};
use bspace::graph::is_simple_path;
use bspace::harness::{
    run_experiment, run_variant, ExperimentConfig, MemorySink, ProblemSet, SurrogateMutator,
    VariantConfig, PRESET_IDS,
};
use bspace::metrics::{
    behaviour_subset, convergence_rate, dispersion, dist_to_best, exploration_percentage,
    improvement_stats, intensification_ratio, nn_distance, trace_behaviour, Metric, MetricsConfig,
};
use bspace::par;
use bspace::performance::{aocc, correlation_matrix, AoccConfig};
use bspace::pipeline::{discover_runs, load_lineages, run_behaviours, stn_run};
use bspace::stn::{bounds_of, build_stn, stats_csv, StnConfig, StnRun, StnStep};
use bspace::trace::{
    format_lineage, format_trace, parse_lineage, parse_trace, read_lineage, read_trace,
    write_lineage, write_trace, SearchDomain, Trace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative error allowed between library metrics and the naive oracles.
const ORACLE_REL: f64 = 1e-9;
/// Absolute tolerance for the hand-computed cases and AOCC anchors.
const EXACT_ABS: f64 = 1e-12;
/// Allowed distance of the complementary correlation from -1.
const CORR_ABS: f64 = 1e-12;
const ORACLE_LIMIT: Duration = Duration::from_secs(60);
const STRUCTURE_LIMIT: Duration = Duration::from_secs(300);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let mut results: Vec<(u8, &str, Verdict)> = vec![
        (1, "metric oracles", metric_oracles()),
        (2, "hand-computed cases", hand_cases()),
        (
            3,
            "exploration/exploitation complementarity",
            complementarity(),
        ),
        (4, "AOCC anchors", aocc_anchors()),
    ];
    let started = Instant::now();
    let data = HarnessData::generate();
    let generation = started.elapsed();
    results.push((
        5,
        "elitist chains vs population branching",
        elitist_structure(&data, generation),
    ));
    results.push((6, "STN granularity", stn_granularity(&data)));
    results.push((
        7,
        "behaviour separation (1+1)-ES vs random search",
        behaviour_separation(),
    ));
    let tmp = tempfile::tempdir().expect("temp dir");
    results.push((8, "determinism", determinism(tmp.path())));
    results.push((9, "budget accounting", budget_accounting(tmp.path())));
    results.push((10, "round trips", round_trips(tmp.path())));

    let mut failed = 0;
    for (id, name, v) in &results {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!v.pass);
        println!("{tag} [{id:>2}] {name}: {}", v.detail);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn metric_oracles() -> Verdict {
    let started = Instant::now();
    let cfg = MetricsConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20260101);
    let specs: Vec<(usize, usize, u64)> = (0..200)
        .map(|i| {
            let d = [1, 2, 5][i % 3];
            let n = if i % 10 == 0 {
                2000
            } else {
                rng.random_range(2..=2000)
            };
            (d, n, rng.random())
        })
        .collect();
    let failures: Vec<String> = par::map(&specs, |&(d, n, seed)| {
        let t = common::random_trace(&mut ChaCha8Rng::seed_from_u64(seed), d, n);
        let imp = improvement_stats(&t, &cfg).unwrap();
        let expl = exploration_percentage(&t, &cfg).unwrap();
        let (avg, succ, streak, last) = common::improvement(&t);
        let checks = [
            ("nn_dist", nn_distance(&t).unwrap(), common::nn_dist(&t)),
            (
                "dispersion",
                dispersion(&t, &cfg).unwrap(),
                common::dispersion(&t, cfg.dispersion_samples, cfg.dispersion_seed),
            ),
            (
                "exploration_pct",
                expl.exploration_pct,
                common::exploration_pct(&t, cfg.chunk_size),
            ),
            (
                "exploitation_pct",
                expl.exploitation_pct,
                100.0 - common::exploration_pct(&t, cfg.chunk_size),
            ),
            (
                "dist_to_best",
                dist_to_best(&t).unwrap(),
                common::dist_to_best(&t),
            ),
            (
                "intensification_ratio",
                intensification_ratio(&t, &cfg).unwrap(),
                common::intensification(&t, cfg.intensification_radius_frac),
            ),
            (
                "conv_rate",
                convergence_rate(&t, &cfg).unwrap(),
                common::conv_rate(&t, cfg.epsilon_error),
            ),
            ("avg_improvement", imp.avg_improvement, avg),
            ("success_rate", imp.success_rate, succ),
            ("no_imp_streak", imp.no_imp_streak as f64, streak as f64),
            ("last_imp_fraction", imp.last_imp_fraction, last),
            (
                "aocc",
                aocc(&t, &AoccConfig::default()).unwrap(),
                common::aocc(&t),
            ),
        ];
        checks
            .iter()
            .filter(|(_, got, want)| !common::close(*got, *want, ORACLE_REL))
            .map(|(m, got, want)| format!("{m} d={d} n={n}: {got:?} vs {want:?}"))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let elapsed = started.elapsed();
    let pass = failures.is_empty() && elapsed < ORACLE_LIMIT;
    let mut detail = format!(
        "200 traces, 11 metrics + AOCC within {ORACLE_REL:e} rel, {:.1}s",
        elapsed.as_secs_f64()
    );
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; {} mismatches, first: {f}", failures.len()));
    }
    verdict(pass, detail)
}

fn trace_1d(xs: &[f64], values: &[f64], lo: f64, hi: f64, f_star: f64) -> Trace {
    let dom = SearchDomain::cube(1, lo, hi).unwrap();
    let pts: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
    Trace::from_points(
        dom,
        &pts,
        values.to_vec(),
        Some(f_star),
        common::meta(xs.len()),
    )
    .unwrap()
}

fn hand_cases() -> Verdict {
    let cfg = MetricsConfig::default();
    let nn = nn_distance(&trace_1d(&[0.0, 1.0, 3.0], &[1.0; 3], 0.0, 3.0, 0.0)).unwrap();
    let div = bspace::metrics::pairwise_diversity(&[[0.0], [1.0], [2.0]]).unwrap();
    let conv = convergence_rate(
        &trace_1d(&[0.0; 4], &[8.0, 4.0, 2.0, 1.0], 0.0, 1.0, 0.0),
        &cfg,
    )
    .unwrap();
    let imp = improvement_stats(
        &trace_1d(&[0.0; 5], &[3.0, 2.0, 2.0, 2.0, 1.0], 0.0, 1.0, 0.0),
        &cfg,
    )
    .unwrap();
    let got = [
        ("NN-dist", nn, 4.0 / 3.0),
        ("D", div, 4.0 / 3.0),
        ("conv_rate", conv, 0.5),
        ("success_rate", imp.success_rate, 0.5),
        ("no_imp_streak", imp.no_imp_streak as f64, 2.0),
        ("last_imp_fraction", imp.last_imp_fraction, 0.0),
    ];
    let bad: Vec<String> = got
        .iter()
        .filter(|(_, g, w)| (g - w).abs() > EXACT_ABS)
        .map(|(n, g, w)| format!("{n}={g:?} expected {w:?}"))
        .collect();
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!("6 values exact to {EXACT_ABS:e}")
        } else {
            bad.join("; ")
        },
    )
}

fn complementarity() -> Verdict {
    let cfg = MetricsConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut exact = 0;
    let mut samples = Vec::new();
    let total = 60;
    for i in 0..total {
        let t = common::random_trace(&mut rng, [1, 2, 5][i % 3], 150 + 10 * i);
        let e = exploration_percentage(&t, &cfg).unwrap();
        exact += usize::from(e.exploration_pct + e.exploitation_pct == 100.0);
        let b = trace_behaviour(&t, &cfg).unwrap();
        exact += usize::from(b.exploration_pct + b.exploitation_pct == 100.0);
        samples.push((b, aocc(&t, &AoccConfig::default()).unwrap()));
    }
    let m = correlation_matrix(&samples).unwrap();
    let r = m.get("exploration_pct", "exploitation_pct");
    let r_ok = r.is_some_and(|r| (r + 1.0).abs() <= CORR_ABS);
    verdict(
        exact == 2 * total && r_ok,
        format!(
            "sum == 100 exactly on {exact}/{} checks; r(expl, eplt) = {r:?} (tol {CORR_ABS:e})",
            2 * total
        ),
    )
}

fn aocc_anchors() -> Verdict {
    let cfg = AoccConfig::default();
    let constant = |err: f64| {
        let n = 50;
        aocc(&trace_1d(&vec![0.0; n], &vec![err; n], 0.0, 1.0, 0.0), &cfg).unwrap()
    };
    let cases = [
        ("error 1e-8", constant(1e-8), 1.0),
        ("error 1e-12", constant(1e-12), 1.0),
        ("error 1e2", constant(1e2), 0.0),
        ("error 1e5", constant(1e5), 0.0),
        ("error 1e-3", constant(1e-3), 0.5),
    ];
    let bad: Vec<String> = cases
        .iter()
        .filter(|(_, g, w)| (g - w).abs() > EXACT_ABS)
        .map(|(n, g, w)| format!("{n}: {g:?} expected {w:?}"))
        .collect();
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} anchors within {EXACT_ABS:e}", cases.len())
        } else {
            bad.join("; ")
        },
    )
}

/// Harness runs shared by criteria 5 and 6.
struct HarnessData {
    /// (variant, seed) -> (CEG-ready lineage, STN run)
    runs: BTreeMap<(String, u64), (Vec<bspace::trace::LineageRecord>, StnRun)>,
}

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

impl HarnessData {
    fn generate() -> Self {
        let problems = ProblemSet {
            dim: 5,
            functions: vec!["sphere".into(), "rastrigin".into(), "rosenbrock".into()],
            train_instances: vec![1, 2],
            test_instances: vec![],
        };
        let jobs: Vec<(&str, u64)> = PRESET_IDS
            .iter()
            .flat_map(|v| SEEDS.map(|s| (*v, s)))
            .collect();
        let cfg = MetricsConfig::default();
        let out = par::map(&jobs, |&(v, seed)| {
            let mut vc = VariantConfig::preset(v).unwrap();
            vc.algo_budget = 100;
            vc.eval_budget_per_algo = Some(200 * problems.dim);
            let mut sink = MemorySink::default();
            run_variant(&vc, &problems, seed, &mut SurrogateMutator, &mut sink).unwrap();
            let steps = sink
                .records
                .iter()
                .zip(&sink.traces)
                .filter(|(_, t)| !t.is_empty())
                .map(|(r, t)| {
                    let values = behaviour_subset(t, &Metric::STN_DEFAULT, &cfg).unwrap();
                    StnStep::from_source(
                        &r.algorithm_id,
                        r.parent_ids.first().map(String::as_str),
                        &values,
                        r.fitness,
                        &Metric::STN_DEFAULT,
                    )
                    .unwrap()
                })
                .collect();
            let run = StnRun {
                label: format!("{v}/s{seed}"),
                steps,
            };
            ((v.to_string(), seed), (sink.records, run))
        });
        HarnessData {
            runs: out.into_iter().collect(),
        }
    }

    fn variant_runs(&self, v: &str) -> Vec<StnRun> {
        self.runs
            .iter()
            .filter(|((id, _), _)| id == v)
            .map(|(_, (_, r))| r.clone())
            .collect()
    }

    fn all_runs(&self) -> Vec<StnRun> {
        self.runs.values().map(|(_, r)| r.clone()).collect()
    }

    fn ceg(&self, v: &str) -> CegGraph {
        let records: Vec<_> = self
            .runs
            .iter()
            .filter(|((id, _), _)| id == v)
            .flat_map(|(_, (r, _))| r.clone())
            .collect();
        build_ceg(&records, None, FitnessNorm::PerRun).unwrap()
    }
}

fn elitist_structure(data: &HarnessData, generation: Duration) -> Verdict {
    let started = Instant::now();
    let mut problems = Vec::new();
    let cell = 0.01;
    let mut stn_cfg = StnConfig::with_cell_size(cell);
    stn_cfg.bounds = Some(bounds_of(&data.all_runs(), Metric::STN_DEFAULT.len()));
    let mut chain_lengths = Vec::new();
    for v in ["llamea-4", "llamea-6"] {
        let g = data.ceg(v);
        for (variant, run) in g.runs() {
            let (nodes, edges) = g.accepted_lineage(&variant, &run);
            chain_lengths.push(nodes.len());
            if !is_simple_path(&edges, &nodes) {
                problems.push(format!("{variant}/{run}: accepted lineage is not a path"));
            }
        }
        for r in data.variant_runs(v) {
            let stn = build_stn(std::slice::from_ref(&r), &stn_cfg).unwrap();
            if !is_simple_path(&stn.improving_edges(), &[]) {
                problems.push(format!("{}: improving STN edges are not a path", r.label));
            }
        }
    }
    let mut branching = Vec::new();
    for v in ["llamea-1", "llamea-2", "llamea-3", "llamea-5"] {
        let max = data.ceg(v).out_degrees().into_iter().max().unwrap_or(0);
        branching.push(format!("{v}:{max}"));
        if max < 2 {
            problems.push(format!("{v}: max out-degree {max}"));
        }
    }
    let elapsed = generation + started.elapsed();
    if elapsed >= STRUCTURE_LIMIT {
        problems.push(format!("took {:.0}s", elapsed.as_secs_f64()));
    }
    let detail = format!(
        "10 elitist runs, accepted chain lengths {}..={}; STN cell {cell}; max out-degree {}; {:.1}s incl. generation",
        chain_lengths.iter().min().unwrap_or(&0),
        chain_lengths.iter().max().unwrap_or(&0),
        branching.join(" "),
        elapsed.as_secs_f64()
    );
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            detail
        } else {
            format!("{detail}; {}", problems.join("; "))
        },
    )
}

fn stn_granularity(data: &HarnessData) -> Verdict {
    let bounds = bounds_of(&data.all_runs(), Metric::STN_DEFAULT.len());
    let cfg = |cell: f64| {
        let mut c = StnConfig::with_cell_size(cell);
        c.bounds = Some(bounds.clone());
        c
    };
    let (coarse, fine) = (cfg(0.1), cfg(0.01));
    let mut problems = Vec::new();
    let mut nodes_at_coarse = Vec::new();
    for v in PRESET_IDS {
        let runs = data.variant_runs(v);
        let a = build_stn(&runs, &coarse).unwrap().stats();
        let b = build_stn(&runs, &fine).unwrap().stats();
        nodes_at_coarse.push(format!("{v}:{}/{}", a.n_nodes, b.n_nodes));
        if a.n_nodes > b.n_nodes || a.n_components > b.n_components {
            problems.push(format!(
                "{v}: 0.1 gives {:?} vs 0.01 {:?}",
                (a.n_nodes, a.n_components),
                (b.n_nodes, b.n_components)
            ));
        }
    }
    let mut wins = 0;
    for seed in SEEDS {
        let counts: Vec<(&str, usize)> = PRESET_IDS
            .iter()
            .map(|v| {
                let run = &data.runs[&(v.to_string(), seed)].1;
                (
                    *v,
                    build_stn(std::slice::from_ref(run), &coarse)
                        .unwrap()
                        .stats()
                        .n_nodes,
                )
            })
            .collect();
        let random_new = counts.iter().find(|(v, _)| *v == "llamea-2").unwrap().1;
        wins += usize::from(counts.iter().all(|(_, n)| *n <= random_new));
    }
    if wins < 3 {
        problems.push(format!("random-new variant largest in only {wins}/5 seeds"));
    }
    let detail = format!(
        "nodes at 0.1/0.01 per variant {}; random-new largest at 0.1 in {wins}/5 seeds",
        nodes_at_coarse.join(" ")
    );
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            detail
        } else {
            format!("{detail}; {}", problems.join("; "))
        },
    )
}

fn behaviour_separation() -> Verdict {
    let cfg = MetricsConfig::default();
    let f = make_function("sphere", 5, 1).unwrap();
    let budget = 2000;
    let mut pairs = Vec::new();
    for seed in SEEDS {
        let es =
            trace_behaviour(&baseline_one_plus_one_es(&f, budget, seed).unwrap(), &cfg).unwrap();
        let rs = trace_behaviour(&baseline_random_search(&f, budget, seed).unwrap(), &cfg).unwrap();
        pairs.push((
            es.exploitation_pct > rs.exploitation_pct && es.conv_rate < rs.conv_rate,
            es,
            rs,
        ));
    }
    let ok = pairs.iter().filter(|p| p.0).count();
    let (es, rs) = (&pairs[0].1, &pairs[0].2);
    verdict(
        ok == 5,
        format!(
            "{ok}/5 seed pairs; seed 1 exploitation {:.2} vs {:.2}, conv_rate {:.4} vs {:.4}",
            es.exploitation_pct, rs.exploitation_pct, es.conv_rate, rs.conv_rate
        ),
    )
}

const DET_CONFIG: &str = r#"
seeds = [1, 2]
variants = ["llamea-3", "llamea-6"]
dim = 3
functions = ["sphere", "schwefel"]
train_instances = [1, 2]
test_instances = [6, 7]
algo_budget = 12
eval_budget_per_algo = 150
"#;

fn files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

/// Every exporter over one run directory, as (name, bytes).
fn export_all(runs_dir: &Path) -> Vec<(String, String)> {
    let cfg = MetricsConfig::default();
    let runs = discover_runs(runs_dir).unwrap();
    let mut stn_runs = Vec::new();
    let mut metric_rows = Vec::new();
    for r in &runs {
        let rows = run_behaviours(r, &Metric::STN_DEFAULT, &cfg).unwrap().rows;
        stn_runs.push(stn_run(&r.label(), &rows, &Metric::STN_DEFAULT).unwrap());
        metric_rows.extend(rows);
    }
    let stn = build_stn(&stn_runs, &StnConfig::with_cell_size(0.1)).unwrap();
    let ceg = build_ceg(
        &load_lineages(&runs).unwrap(),
        Some(&IndentTreeProvider),
        FitnessNorm::PerRun,
    )
    .unwrap();
    vec![
        (
            "metrics.csv".into(),
            bspace::pipeline::behaviour_csv(&metric_rows, &Metric::STN_DEFAULT),
        ),
        ("stn.dot".into(), stn.to_dot()),
        ("stn.graphml".into(), stn.to_graphml()),
        (
            "stn_stats.csv".into(),
            stats_csv(&[("all".into(), stn.stats())]),
        ),
        ("ceg.dot".into(), ceg.to_dot()),
        ("ceg.graphml".into(), ceg.to_graphml()),
        (
            "growth.csv".into(),
            growth_series_csv(&code_growth_series(&ceg)),
        ),
    ]
}

fn generate_into(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml(DET_CONFIG).unwrap();
    cfg.out_dir = dir.to_path_buf();
    run_experiment(&cfg).unwrap();
    cfg
}

fn determinism(tmp: &Path) -> Verdict {
    let (a, b) = (tmp.join("det_a"), tmp.join("det_b"));
    generate_into(&a);
    generate_into(&b);
    let (fa, fb) = (files(&a), files(&b));
    let same_files = fa == fb;
    let (ea, eb) = (export_all(&a), export_all(&b));
    let same_exports = ea == eb;
    let mut detail = format!(
        "{} generated files and {} exports compared byte for byte",
        fa.len(),
        ea.len()
    );
    if !same_files {
        let diff = fa
            .iter()
            .zip(&fb)
            .find(|(x, y)| x != y)
            .map(|(x, _)| x.0.display().to_string());
        detail.push_str(&format!("; generated files differ ({diff:?})"));
    }
    if !same_exports {
        let diff = ea
            .iter()
            .zip(&eb)
            .find(|(x, y)| x != y)
            .map(|(x, _)| x.0.clone());
        detail.push_str(&format!("; exports differ ({diff:?})"));
    }
    verdict(same_files && same_exports && fa.len() > 4, detail)
}

fn budget_accounting(tmp: &Path) -> Verdict {
    let dir = tmp.join("det_a");
    let cfg = ExperimentConfig::from_toml(DET_CONFIG).unwrap();
    let algo_budget = cfg.algo_budget.unwrap();
    let evals = cfg.eval_budget_per_algo.unwrap();
    let mut problems = Vec::new();
    let mut n_traces = 0;
    let runs = discover_runs(&dir).unwrap();
    for r in &runs {
        let records = read_lineage(&r.lineage_path()).unwrap();
        if records.len() != algo_budget {
            problems.push(format!("{}: {} lineage records", r.label(), records.len()));
        }
        for sub in ["traces", "test_traces"] {
            for (p, _) in files(&r.path.join(sub)) {
                let t = read_trace(&r.path.join(sub).join(&p)).unwrap();
                n_traces += 1;
                if t.len() != evals {
                    problems.push(format!("{}/{}: {} rows", r.label(), p.display(), t.len()));
                }
            }
        }
    }
    let expected = runs.len() * (algo_budget * 4 + 4);
    if n_traces != expected {
        problems.push(format!("{n_traces} trace files, expected {expected}"));
    }
    let detail = format!(
        "{} runs x {algo_budget} records, {n_traces} trace files x {evals} rows",
        runs.len()
    );
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            detail
        } else {
            format!("{detail}; {}", problems.join("; "))
        },
    )
}

fn round_trips(tmp: &Path) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut bad = Vec::new();
    let path_t = tmp.join("rt.trace");
    let path_l = tmp.join("rt.jsonl");
    for i in 0..1000 {
        let t = common::arbitrary_trace(&mut rng);
        write_trace(&t, &path_t).unwrap();
        let back = read_trace(&path_t).unwrap();
        let text = fs::read_to_string(&path_t).unwrap();
        if back != t || format_trace(&back) != text || parse_trace(&text).ok().as_ref() != Some(&t)
        {
            bad.push(format!("trace {i}"));
        }
        let l = common::arbitrary_lineage(&mut rng);
        write_lineage(&l, &path_l).unwrap();
        let back = read_lineage(&path_l).unwrap();
        let text = fs::read_to_string(&path_l).unwrap();
        if back != l
            || format_lineage(&back) != text
            || parse_lineage(&text).ok().as_ref() != Some(&l)
        {
            bad.push(format!("lineage {i}"));
        }
    }
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            "1000 traces and 1000 lineages identical after write/read".to_string()
        } else {
            format!("{} failures, first {}", bad.len(), bad[0])
        },
    )
}
