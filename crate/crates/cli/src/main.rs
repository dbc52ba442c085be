//! `bspace`: generate harness runs and analyse run directories.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bspace::ceg::{
    build_ceg, code_growth_series, growth_series_csv, FitnessNorm, IndentTreeProvider,
};
use bspace::harness::{run_experiment, ExperimentConfig};
use bspace::metrics::{Metric, MetricsConfig};
use bspace::performance::{
    best_fitness_series, correlation_of_columns, curves_csv, mean_best_curve, AoccConfig,
    ConvergenceCurve,
};
use bspace::pipeline::{
    aocc_rows, behaviour_csv, discover_runs, load_lineages, read_numeric_columns, run_behaviours,
    run_result, stn_run, AlgorithmBehaviour,
};
use bspace::report::{
    convergence_svg, parallel_coordinates, summary_table, ParallelRow, RunOutcome,
};
use bspace::stn::{bounds_of, build_stn, stats_csv, EdgeOrder, StnConfig};

#[derive(Parser)]
#[command(
    name = "bspace",
    version,
    about = "Behaviour-space analysis of optimisation algorithm runs"
)]
struct Cli {
    /// Seed override: the only run seed for `generate`, the dispersion probe
    /// seed elsewhere.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment configuration (TOML); required by `generate`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory; stdout for single tables when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured (variant, seed) pair of the harness.
    Generate,
    /// One behaviour row per generated algorithm.
    Metrics {
        runs: PathBuf,
        /// Comma-separated metric names, or `all`.
        #[arg(long, default_value = "all")]
        metrics: String,
    },
    /// AOCC of every training trace.
    Aocc { runs: PathBuf },
    /// Search trajectory network over behaviour space.
    Stn {
        runs: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        cell_size: f64,
        /// Comma-separated metric names; defaults to the five STN axes.
        #[arg(long)]
        metrics: Option<String>,
        #[arg(long, value_enum, default_value_t = Order::Lineage)]
        edge_order: Order,
    },
    /// Code evolution graph over all lineages.
    Ceg {
        runs: PathBuf,
        #[arg(long, value_enum, default_value_t = Norm::PerRun)]
        norm: Norm,
    },
    /// Pearson matrix of the numeric columns of a metrics table.
    Correlate { metrics_csv: PathBuf },
    /// Convergence plot, parallel coordinates and summary table.
    Report {
        runs: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Lineage,
    Sequence,
}

#[derive(Clone, Copy, ValueEnum)]
enum Norm {
    PerRun,
    Global,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type Res<T> = Result<T, Failure>;

fn rt<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Res<()> {
    let mut mcfg = MetricsConfig::default();
    if let Some(s) = cli.seed {
        mcfg.dispersion_seed = s;
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Generate => generate(cli),
        Command::Metrics { runs, metrics } => {
            let metrics = parse_metrics(metrics, &Metric::ALL)?;
            let rows = behaviours(runs, &metrics, &mcfg)?;
            emit(out, &behaviour_csv(&rows, &metrics))
        }
        Command::Aocc { runs } => {
            let aocc = AoccConfig::default();
            let mut s =
                String::from("variant_id,run_id,algorithm_id,function_id,instance_id,aocc\n");
            for r in discover_runs(runs).map_err(rt)? {
                for (alg, f, i, a) in aocc_rows(&r, &aocc).map_err(rt)? {
                    s.push_str(&format!(
                        "{},{},{alg},{f},{i},{a:?}\n",
                        r.variant_id, r.run_id
                    ));
                }
            }
            emit(out, &s)
        }
        Command::Stn {
            runs,
            cell_size,
            metrics,
            edge_order,
        } => {
            let metrics = parse_metrics(metrics.as_deref().unwrap_or("stn"), &Metric::STN_DEFAULT)?;
            let dir = out_dir(out)?;
            stn(runs, *cell_size, &metrics, *edge_order, &mcfg, &dir)
        }
        Command::Ceg { runs, norm } => {
            let dir = out_dir(out)?;
            let records = load_lineages(&discover_runs(runs).map_err(rt)?).map_err(rt)?;
            let norm = match norm {
                Norm::PerRun => FitnessNorm::PerRun,
                Norm::Global => FitnessNorm::Global,
            };
            let g = build_ceg(&records, Some(&IndentTreeProvider), norm).map_err(rt)?;
            write(&dir.join("ceg.dot"), &g.to_dot())?;
            write(&dir.join("ceg.graphml"), &g.to_graphml())?;
            write(
                &dir.join("code_growth.csv"),
                &growth_series_csv(&code_growth_series(&g)),
            )?;
            log::info!("ceg: {} nodes, {} edges", g.nodes.len(), g.edges.len());
            Ok(())
        }
        Command::Correlate { metrics_csv } => {
            let cols = read_numeric_columns(metrics_csv).map_err(rt)?;
            let (names, columns): (Vec<String>, Vec<Vec<f64>>) =
                cols.into_iter().filter(|(n, _)| n != "generation").unzip();
            let m = correlation_of_columns(names, &columns).map_err(rt)?;
            emit(out, &m.to_csv())
        }
        Command::Report { runs, confidence } => {
            let dir = out_dir(out)?;
            report(runs, *confidence, &mcfg, &dir)
        }
    }
}

fn generate(cli: &Cli) -> Res<()> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::Usage("generate needs --config <path>".into()))?;
    if !path.is_file() {
        return Err(Failure::Usage(format!(
            "config file not found: {}",
            path.display()
        )));
    }
    let mut cfg = ExperimentConfig::load(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    if cfg.llm.is_some() {
        return Err(Failure::Usage(format!(
            "{}: the [llm] section is only usable through the library API",
            path.display()
        )));
    }
    cfg.variant_configs()
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    cfg.problem_set()
        .validate()
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let summaries = run_experiment(&cfg).map_err(rt)?;
    let runs: Vec<serde_json::Value> = summaries
        .iter()
        .map(|s| {
            serde_json::json!({
                "variant_id": s.variant_id,
                "run_id": s.run_id,
                "n_candidates": s.n_candidates,
                "best_id": s.best_id,
                "best_fitness": s.best_fitness,
                "test_fitness": s.test_fitness,
            })
        })
        .collect();
    let summary = serde_json::json!({
        "status": "ok",
        "out_dir": cfg.out_dir.display().to_string(),
        "runs": runs,
    });
    println!("{summary}");
    Ok(())
}

fn parse_metrics(spec: &str, default: &[Metric]) -> Res<Vec<Metric>> {
    match spec {
        "all" => Ok(Metric::ALL.to_vec()),
        "stn" => Ok(default.to_vec()),
        s => s
            .split(',')
            .map(|m| {
                m.trim()
                    .parse::<Metric>()
                    .map_err(|e| Failure::Usage(e.to_string()))
            })
            .collect(),
    }
}

fn behaviours(
    root: &Path,
    metrics: &[Metric],
    cfg: &MetricsConfig,
) -> Res<Vec<AlgorithmBehaviour>> {
    let runs = discover_runs(root).map_err(rt)?;
    let mut rows = Vec::new();
    for r in &runs {
        rows.extend(run_behaviours(r, metrics, cfg).map_err(rt)?.rows);
    }
    if rows.is_empty() {
        return Err(Failure::Runtime(format!(
            "no readable traces under {}",
            root.display()
        )));
    }
    Ok(rows)
}

fn stn(
    root: &Path,
    cell_size: f64,
    metrics: &[Metric],
    order: Order,
    mcfg: &MetricsConfig,
    dir: &Path,
) -> Res<()> {
    let runs = discover_runs(root).map_err(rt)?;
    let mut stn_runs = Vec::new();
    for r in &runs {
        let rows = run_behaviours(r, metrics, mcfg).map_err(rt)?.rows;
        if !rows.is_empty() {
            stn_runs.push(stn_run(&r.label(), &rows, metrics).map_err(rt)?);
        }
    }
    if stn_runs.is_empty() {
        return Err(Failure::Runtime(format!(
            "no readable traces under {}",
            root.display()
        )));
    }
    let mut cfg = StnConfig::with_cell_size(cell_size);
    cfg.metrics = metrics.to_vec();
    cfg.edge_order = match order {
        Order::Lineage => EdgeOrder::Lineage,
        Order::Sequence => EdgeOrder::Sequence,
    };
    // shared bounds keep per-variant cells comparable with the combined graph
    cfg.bounds = Some(bounds_of(&stn_runs, metrics.len()));
    let all = build_stn(&stn_runs, &cfg).map_err(rt)?;
    let mut stats = vec![("all".to_string(), all.stats())];
    let mut variants: Vec<String> = runs.iter().map(|r| r.variant_id.clone()).collect();
    variants.dedup();
    for v in variants {
        let prefix = format!("{v}/");
        let sub: Vec<_> = stn_runs
            .iter()
            .filter(|r| r.label.starts_with(&prefix))
            .cloned()
            .collect();
        if !sub.is_empty() {
            stats.push((v, build_stn(&sub, &cfg).map_err(rt)?.stats()));
        }
    }
    write(&dir.join("stn.dot"), &all.to_dot())?;
    write(&dir.join("stn.graphml"), &all.to_graphml())?;
    write(&dir.join("stn_stats.csv"), &stats_csv(&stats))
}

fn report(root: &Path, confidence: f64, mcfg: &MetricsConfig, dir: &Path) -> Res<()> {
    let runs = discover_runs(root).map_err(rt)?;
    let aocc = AoccConfig::default();
    let results = runs
        .iter()
        .map(|r| run_result(r, &aocc))
        .collect::<Result<Vec<_>, _>>()
        .map_err(rt)?;

    let mut variants: Vec<String> = results.iter().map(|r| r.variant_id.clone()).collect();
    variants.dedup();
    let mut curves = Vec::new();
    for v in &variants {
        let mut series: Vec<Vec<f64>> = results
            .iter()
            .filter(|r| &r.variant_id == v)
            .map(|r| best_fitness_series(&r.fitness))
            .collect();
        let len = series.iter().map(Vec::len).min().unwrap_or(0);
        if series.iter().any(|s| s.len() != len) {
            log::warn!("{v}: runs differ in length, curves truncated to {len}");
        }
        series.iter_mut().for_each(|s| s.truncate(len));
        let curve = if series.len() == 1 {
            let m = series.pop().expect("one run");
            ConvergenceCurve {
                evals: (1..=m.len()).collect(),
                ci_low: m.clone(),
                ci_high: m.clone(),
                mean: m,
                n_runs: 1,
            }
        } else {
            mean_best_curve(&series, confidence).map_err(rt)?
        };
        curves.push((v.clone(), curve));
    }
    write(&dir.join("convergence.csv"), &curves_csv(&curves))?;
    write(
        &dir.join("convergence.svg"),
        &convergence_svg(&curves).map_err(rt)?,
    )?;

    let rows = behaviours(root, &Metric::ALL, mcfg)?;
    let axes: Vec<&str> = Metric::ALL.iter().map(|m| m.name()).collect();
    let prows: Vec<ParallelRow> = rows
        .iter()
        .map(|b| ParallelRow {
            label: format!("{}/{}/{}", b.variant_id, b.run_id, b.algorithm_id),
            values: Metric::ALL.iter().map(|m| b.values[m]).collect(),
            fitness: b.fitness,
        })
        .collect();
    let pc = parallel_coordinates(&axes, &prows).map_err(rt)?;
    write(&dir.join("parallel_coordinates.csv"), &pc.csv)?;
    write(&dir.join("parallel_coordinates.svg"), &pc.svg)?;

    let outcomes: Vec<RunOutcome> = results
        .iter()
        .map(|r| RunOutcome {
            variant_id: r.variant_id.clone(),
            final_fitness: r.best_fitness,
            test_aocc: r.test_aocc.clone(),
        })
        .collect();
    let table = summary_table(&outcomes).map_err(rt)?;
    write(&dir.join("summary.csv"), &table.to_csv())?;
    write(&dir.join("summary.txt"), &table.to_text())?;
    print!("{}", table.to_text());
    Ok(())
}

fn out_dir(out: Option<&Path>) -> Res<PathBuf> {
    let dir = out.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    fs::create_dir_all(&dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Res<()> {
    fs::write(path, text)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Res<()> {
    match out {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(rt)?;
            }
            write(p, text)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
