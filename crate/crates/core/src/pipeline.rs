//! Loading run directories and turning them into analysis inputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::metrics::{behaviour_subset, Metric, MetricValues, MetricsConfig};
use crate::performance::{aocc as aocc_of, AoccConfig, PerfError};
use crate::stn::{StnRun, StnStep};
use crate::trace::{read_lineage, read_trace, LineageRecord, Trace, TraceError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no runs found under {0}")]
    NoRuns(PathBuf),
    #[error("no traces found under {0}")]
    NoTraces(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Perf(#[from] PerfError),
    #[error("{path}, line {line}: {msg}")]
    Csv {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

fn io(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One `<variant_id>/<run_id>` directory holding a `lineage.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RunDir {
    pub variant_id: String,
    pub run_id: String,
    pub path: PathBuf,
}

impl RunDir {
    pub fn label(&self) -> String {
        format!("{}/{}", self.variant_id, self.run_id)
    }

    pub fn lineage_path(&self) -> PathBuf {
        self.path.join("lineage.jsonl")
    }

    fn trace_dir(&self, test: bool) -> PathBuf {
        self.path.join(if test { "test_traces" } else { "traces" })
    }
}

fn subdirs(path: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out = Vec::new();
    for e in fs::read_dir(path).map_err(|e| io(path, e))? {
        let p = e.map_err(|e| io(path, e))?.path();
        if p.is_dir() {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Finds runs below `root`, which may be a runs root, one variant directory
/// or one run directory. Sorted by variant and run id.
pub fn discover_runs(root: &Path) -> Result<Vec<RunDir>, PipelineError> {
    let as_run = |p: &Path| -> Option<RunDir> {
        p.join("lineage.jsonl").is_file().then(|| RunDir {
            variant_id: p.parent().map(file_name).unwrap_or_default(),
            run_id: file_name(p),
            path: p.to_path_buf(),
        })
    };
    let mut runs = Vec::new();
    if let Some(r) = as_run(root) {
        runs.push(r);
    } else if root.is_dir() {
        for a in subdirs(root)? {
            if let Some(r) = as_run(&a) {
                runs.push(r);
                continue;
            }
            for b in subdirs(&a)? {
                runs.extend(as_run(&b));
            }
        }
    }
    if runs.is_empty() {
        return Err(PipelineError::NoRuns(root.to_path_buf()));
    }
    runs.sort();
    Ok(runs)
}

/// Trace files of one algorithm, sorted by file name; empty if the algorithm
/// has none (for example after a failed evaluation).
pub fn algorithm_traces(
    run: &RunDir,
    algorithm_id: &str,
    test: bool,
) -> Result<Vec<Trace>, PipelineError> {
    let dir = run.trace_dir(test).join(algorithm_id);
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| io(&dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| io(&dir, e)))
        .collect::<Result<_, _>>()?;
    files.retain(|p| p.extension().is_some_and(|x| x == "trace"));
    files.sort();
    files
        .iter()
        .map(|p| read_trace(p).map_err(Into::into))
        .collect()
}

/// Behaviour of one generated algorithm, aggregated over its traces.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmBehaviour {
    pub variant_id: String,
    pub run_id: String,
    pub algorithm_id: String,
    pub parent_id: Option<String>,
    pub generation: u32,
    pub fitness: f64,
    pub values: MetricValues,
}

/// Behaviours of one run plus the number of algorithms skipped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunBehaviours {
    pub rows: Vec<AlgorithmBehaviour>,
    pub skipped: usize,
}

/// Metric values of every algorithm of `run` in lineage order. Algorithms
/// without traces, with an unreadable trace or with a metric error are
/// skipped with a warning.
pub fn run_behaviours(
    run: &RunDir,
    metrics: &[Metric],
    cfg: &MetricsConfig,
) -> Result<RunBehaviours, PipelineError> {
    let records = read_lineage(&run.lineage_path())?;
    let mut out = RunBehaviours::default();
    for r in &records {
        let traces = match algorithm_traces(run, &r.algorithm_id, false) {
            Ok(t) if t.is_empty() => {
                log::warn!("{}/{}: no traces, skipped", run.label(), r.algorithm_id);
                out.skipped += 1;
                continue;
            }
            Ok(t) => t,
            Err(e) => {
                log::warn!("{}/{}: {e}, skipped", run.label(), r.algorithm_id);
                out.skipped += 1;
                continue;
            }
        };
        let values = match behaviour_subset(&traces, metrics, cfg) {
            Ok(v) => v,
            Err(e) => {
                log::warn!("{}/{}: {e}, skipped", run.label(), r.algorithm_id);
                out.skipped += 1;
                continue;
            }
        };
        out.rows.push(AlgorithmBehaviour {
            variant_id: r.variant_id.clone(),
            run_id: r.run_id.clone(),
            algorithm_id: r.algorithm_id.clone(),
            parent_id: r.parent_ids.first().cloned(),
            generation: r.generation,
            fitness: r.fitness,
            values,
        });
    }
    Ok(out)
}

/// STN input of one run; the label is `<variant_id>/<run_id>`.
pub fn stn_run(
    label: &str,
    behaviours: &[AlgorithmBehaviour],
    metrics: &[Metric],
) -> Result<StnRun, crate::stn::StnError> {
    let steps = behaviours
        .iter()
        .map(|b| {
            StnStep::from_source(
                &b.algorithm_id,
                b.parent_id.as_deref(),
                &b.values,
                b.fitness,
                metrics,
            )
        })
        .collect::<Result<_, _>>()?;
    Ok(StnRun {
        label: label.to_string(),
        steps,
    })
}

/// All lineage records of the given runs, concatenated in run order.
pub fn load_lineages(runs: &[RunDir]) -> Result<Vec<LineageRecord>, PipelineError> {
    let mut out = Vec::new();
    for r in runs {
        out.extend(read_lineage(&r.lineage_path())?);
    }
    Ok(out)
}

/// Header of the behaviour table written by [`behaviour_csv`].
pub fn behaviour_header(metrics: &[Metric]) -> String {
    let mut h = String::from("variant_id,run_id,algorithm_id,generation,fitness");
    for m in metrics {
        h.push(',');
        h.push_str(m.name());
    }
    h
}

pub fn behaviour_csv(rows: &[AlgorithmBehaviour], metrics: &[Metric]) -> String {
    let mut s = behaviour_header(metrics);
    s.push('\n');
    for b in rows {
        write!(
            s,
            "{},{},{},{},{:?}",
            b.variant_id, b.run_id, b.algorithm_id, b.generation, b.fitness
        )
        .unwrap();
        for m in metrics {
            write!(s, ",{:?}", b.values[m]).unwrap();
        }
        s.push('\n');
    }
    s
}

/// Numeric columns of a CSV table with a header row. Columns whose every
/// value parses as a real are kept, in header order.
pub fn read_numeric_columns(path: &Path) -> Result<Vec<(String, Vec<f64>)>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| PipelineError::Csv {
        path: path.to_path_buf(),
        line: 1,
        msg: "empty file".into(),
    })?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut cols: Vec<Option<Vec<f64>>> = vec![Some(Vec::new()); names.len()];
    for (i, line) in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() {
            return Err(PipelineError::Csv {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected {} fields, found {}", names.len(), cells.len()),
            });
        }
        for (c, cell) in cols.iter_mut().zip(cells) {
            if let Some(v) = c {
                match cell.trim().parse::<f64>() {
                    Ok(x) => v.push(x),
                    Err(_) => *c = None,
                }
            }
        }
    }
    Ok(names
        .into_iter()
        .zip(cols)
        .filter_map(|(n, c)| c.map(|c| (n, c)))
        .collect())
}

/// Per-run summary used by reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub variant_id: String,
    pub run_id: String,
    /// Fitness of every candidate in lineage order.
    pub fitness: Vec<f64>,
    pub best_id: String,
    pub best_fitness: f64,
    /// AOCC of each test trace of the best algorithm, in file-name order.
    pub test_aocc: Vec<f64>,
}

pub fn run_result(run: &RunDir, aocc: &AoccConfig) -> Result<RunResult, PipelineError> {
    let records = read_lineage(&run.lineage_path())?;
    let first = records
        .first()
        .ok_or_else(|| PipelineError::NoRuns(run.path.clone()))?;
    let best = records
        .iter()
        .fold(first, |b, r| if r.fitness > b.fitness { r } else { b });
    let test = algorithm_traces(run, &best.algorithm_id, true)?;
    let test_aocc = test
        .iter()
        .map(|t| aocc_of(t, aocc))
        .collect::<Result<_, _>>()?;
    Ok(RunResult {
        variant_id: run.variant_id.clone(),
        run_id: run.run_id.clone(),
        fitness: records.iter().map(|r| r.fitness).collect(),
        best_id: best.algorithm_id.clone(),
        best_fitness: best.fitness,
        test_aocc,
    })
}

/// Per-algorithm AOCC table: one row per (algorithm, trace file).
pub fn aocc_rows(
    run: &RunDir,
    aocc: &AoccConfig,
) -> Result<Vec<(String, String, u64, f64)>, PipelineError> {
    let records = read_lineage(&run.lineage_path())?;
    let mut rows = Vec::new();
    for r in &records {
        for t in algorithm_traces(run, &r.algorithm_id, false)? {
            let a = aocc_of(&t, aocc)?;
            rows.push((
                r.algorithm_id.clone(),
                t.meta().function_id.clone(),
                t.meta().instance_id,
                a,
            ));
        }
    }
    Ok(rows)
}

/// Groups items by `(variant_id, run_id)` preserving first-seen order.
pub fn group_by_run(
    rows: &[AlgorithmBehaviour],
) -> BTreeMap<(String, String), Vec<AlgorithmBehaviour>> {
    let mut m: BTreeMap<(String, String), Vec<AlgorithmBehaviour>> = BTreeMap::new();
    for r in rows {
        m.entry((r.variant_id.clone(), r.run_id.clone()))
            .or_default()
            .push(r.clone());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_variant, DirectorySink, ProblemSet, SurrogateMutator, VariantConfig};
    use crate::trace::RunLayout;

    fn generate(root: &Path, variant: &str, seed: u64, test: bool) {
        let mut v = VariantConfig::preset(variant).unwrap();
        v.algo_budget = 6;
        v.eval_budget_per_algo = Some(30);
        let p = ProblemSet {
            dim: 2,
            functions: vec!["sphere".into(), "rastrigin".into()],
            train_instances: vec![1, 2],
            test_instances: if test { vec![6] } else { vec![] },
        };
        let mut sink =
            DirectorySink::create(RunLayout::new(root), variant, &format!("s{seed}")).unwrap();
        run_variant(&v, &p, seed, &mut SurrogateMutator, &mut sink).unwrap();
    }

    #[test]
    fn malformed_traces_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        generate(dir.path(), "llamea-4", 1, false);
        let run = &discover_runs(dir.path()).unwrap()[0];
        let bad = run.path.join("traces/a001/sphere_i1.trace");
        fs::write(&bad, "not a trace\n").unwrap();
        let out = run_behaviours(run, &Metric::STN_DEFAULT, &MetricsConfig::default()).unwrap();
        assert_eq!(out.skipped, 1);
        assert_eq!(out.rows.len(), 5);
        assert!(out.rows.iter().all(|r| r.algorithm_id != "a001"));
    }

    #[test]
    fn discovery_at_every_level() {
        let dir = tempfile::tempdir().unwrap();
        generate(dir.path(), "llamea-4", 1, false);
        generate(dir.path(), "llamea-4", 2, false);
        generate(dir.path(), "llamea-1", 1, false);
        let all = discover_runs(dir.path()).unwrap();
        let labels: Vec<String> = all.iter().map(RunDir::label).collect();
        assert_eq!(labels, vec!["llamea-1/s1", "llamea-4/s1", "llamea-4/s2"]);
        assert_eq!(
            discover_runs(&dir.path().join("llamea-4")).unwrap().len(),
            2
        );
        assert_eq!(
            discover_runs(&dir.path().join("llamea-4/s2"))
                .unwrap()
                .len(),
            1
        );
        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(
            discover_runs(empty.path()),
            Err(PipelineError::NoRuns(_))
        ));
    }

    #[test]
    fn behaviours_match_direct_computation() {
        let dir = tempfile::tempdir().unwrap();
        generate(dir.path(), "llamea-4", 3, true);
        let run = &discover_runs(dir.path()).unwrap()[0];
        let cfg = MetricsConfig::default();
        let rows = run_behaviours(run, &Metric::STN_DEFAULT, &cfg)
            .unwrap()
            .rows;
        assert_eq!(rows.len(), 6);
        let traces = algorithm_traces(run, "a002", false).unwrap();
        assert_eq!(traces.len(), 4);
        let direct = behaviour_subset(&traces, &Metric::STN_DEFAULT, &cfg).unwrap();
        assert_eq!(rows[2].values, direct);
        let stn = stn_run(&run.label(), &rows, &Metric::STN_DEFAULT).unwrap();
        assert_eq!(stn.steps.len(), 6);
        let res = run_result(run, &AoccConfig::default()).unwrap();
        assert_eq!(res.fitness.len(), 6);
        assert_eq!(res.test_aocc.len(), 2);
        let csv = behaviour_csv(&rows, &Metric::STN_DEFAULT);
        let path = dir.path().join("m.csv");
        fs::write(&path, &csv).unwrap();
        let cols = read_numeric_columns(&path).unwrap();
        let names: Vec<&str> = cols.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names[..2], ["generation", "fitness"]);
        assert_eq!(cols.len(), 2 + Metric::STN_DEFAULT.len());
        assert_eq!(cols[1].1, res.fitness);
    }
}
