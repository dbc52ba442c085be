//! Search domains, evaluation traces, lineage records and their on-disk
//! formats.
//!
//! A trace file is UTF-8 and line based. The first line is a single-line JSON
//! object with the keys `dim`, `lower`, `upper`, `algorithm_id`,
//! `function_id`, `instance_id`, `run_seed`, `budget` and, optionally,
//! `optimum_value`. Every further line is one evaluation:
//!
//! ```text
//! eval_index<TAB>f_value<TAB>x_1<TAB>...<TAB>x_d
//! ```
//!
//! with `eval_index` starting at 1 and increasing by one per row. Reals are
//! written in shortest round-trip form so a read after a write reproduces the
//! exact bits.
//!
//! Lineage files hold one JSON object per line with the fields of
//! [`LineageRecord`].

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("row {row}: expected {expected} coordinates, found {found}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: coordinate {coord} = {value} lies outside [{lower}, {upper}]")]
    OutOfDomain {
        row: usize,
        coord: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("row {row}: {msg}")]
    MalformedRow { row: usize, msg: String },
    #[error("trace has no evaluations")]
    Empty,
    #[error("trace has {evaluations} evaluations but budget {budget}")]
    BudgetExceeded { evaluations: usize, budget: usize },
    #[error("lineage line {line}: {msg}")]
    MalformedLineage { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl TraceError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        TraceError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Axis-aligned box `[l_1,u_1] x ... x [l_d,u_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, TraceError> {
        if lower.is_empty() {
            return Err(TraceError::InvalidDomain(
                "dimension must be positive".into(),
            ));
        }
        if lower.len() != upper.len() {
            return Err(TraceError::InvalidDomain(format!(
                "{} lower bounds but {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (k, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(TraceError::InvalidDomain(format!(
                    "coordinate {k}: need finite l < u, got [{l}, {u}]"
                )));
            }
        }
        Ok(SearchDomain { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self, TraceError> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l)
    }

    pub fn mean_width(&self) -> f64 {
        self.widths().sum::<f64>() / self.dim() as f64
    }

    /// Length of the main diagonal.
    pub fn diameter(&self) -> f64 {
        self.widths().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Componentwise clamp into the box.
    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    fn check_point(&self, row: usize, x: &[f64]) -> Result<(), TraceError> {
        if x.len() != self.dim() {
            return Err(TraceError::DimensionMismatch {
                row,
                expected: self.dim(),
                found: x.len(),
            });
        }
        for (k, v) in x.iter().enumerate() {
            let (l, u) = (self.lower[k], self.upper[k]);
            if !(l <= *v && *v <= u) {
                return Err(TraceError::OutOfDomain {
                    row,
                    coord: k + 1,
                    value: *v,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceMeta {
    pub algorithm_id: String,
    pub function_id: String,
    pub instance_id: u64,
    pub run_seed: u64,
    pub budget: usize,
}

/// Ordered record of every objective evaluation made by one optimizer run.
///
/// Points are stored row-major in one buffer; use [`Trace::point`] or
/// [`Trace::points`] to read them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    domain: SearchDomain,
    coords: Vec<f64>,
    values: Vec<f64>,
    optimum_value: Option<f64>,
    meta: TraceMeta,
}

impl Trace {
    /// Builds a trace from row-major coordinates. Rows are numbered from 1 in
    /// errors, matching `eval_index`.
    pub fn new(
        domain: SearchDomain,
        coords: Vec<f64>,
        values: Vec<f64>,
        optimum_value: Option<f64>,
        meta: TraceMeta,
    ) -> Result<Self, TraceError> {
        let d = domain.dim();
        if values.is_empty() {
            return Err(TraceError::Empty);
        }
        if coords.len() != values.len() * d {
            return Err(TraceError::DimensionMismatch {
                row: coords.len() / d + 1,
                expected: d,
                found: coords.len() % d,
            });
        }
        for (i, x) in coords.chunks_exact(d).enumerate() {
            domain.check_point(i + 1, x)?;
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(TraceError::MalformedRow {
                row: i + 1,
                msg: format!("objective value {} is not finite", values[i]),
            });
        }
        if let Some(f) = optimum_value {
            if !f.is_finite() {
                return Err(TraceError::MalformedHeader(
                    "optimum_value must be finite".into(),
                ));
            }
        }
        if values.len() > meta.budget {
            return Err(TraceError::BudgetExceeded {
                evaluations: values.len(),
                budget: meta.budget,
            });
        }
        Ok(Trace {
            domain,
            coords,
            values,
            optimum_value,
            meta,
        })
    }

    /// Convenience constructor from one vector per evaluation.
    pub fn from_points(
        domain: SearchDomain,
        points: &[Vec<f64>],
        values: Vec<f64>,
        optimum_value: Option<f64>,
        meta: TraceMeta,
    ) -> Result<Self, TraceError> {
        let d = domain.dim();
        let mut coords = Vec::with_capacity(points.len() * d);
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(TraceError::DimensionMismatch {
                    row: i + 1,
                    expected: d,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        if points.len() != values.len() {
            return Err(TraceError::MalformedRow {
                row: points.len().min(values.len()) + 1,
                msg: format!("{} points but {} values", points.len(), values.len()),
            });
        }
        Self::new(domain, coords, values, optimum_value, meta)
    }

    pub fn domain(&self) -> &SearchDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Number of evaluations N.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn optimum_value(&self) -> Option<f64> {
        self.optimum_value
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    /// Running minimum of the objective values.
    pub fn best_so_far(&self) -> Vec<f64> {
        best_so_far(&self.values)
    }

    /// Index of the best evaluation among the first `i + 1`, for every `i`
    /// (earliest index on ties).
    pub fn best_index_so_far(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = i;
            }
            out.push(best);
        }
        out
    }
}

/// `out[i] = min(values[0..=i])`.
pub fn best_so_far(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(f64::INFINITY, |best, v| {
            *best = best.min(*v);
            Some(*best)
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceHeader {
    dim: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    algorithm_id: String,
    function_id: String,
    instance_id: u64,
    run_seed: u64,
    budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    optimum_value: Option<f64>,
}

/// Shortest decimal that parses back to the same `f64`.
pub(crate) fn fmt_real(out: &mut String, v: f64) {
    write!(out, "{v:?}").expect("writing to a String cannot fail");
}

/// Renders a trace in the on-disk format.
pub fn format_trace(trace: &Trace) -> String {
    let header = TraceHeader {
        dim: trace.dim(),
        lower: trace.domain.lower.clone(),
        upper: trace.domain.upper.clone(),
        algorithm_id: trace.meta.algorithm_id.clone(),
        function_id: trace.meta.function_id.clone(),
        instance_id: trace.meta.instance_id,
        run_seed: trace.meta.run_seed,
        budget: trace.meta.budget,
        optimum_value: trace.optimum_value,
    };
    let mut out = serde_json::to_string(&header).expect("header serialises");
    out.push('\n');
    for (i, (x, f)) in trace.points().zip(&trace.values).enumerate() {
        write!(out, "{}\t", i + 1).unwrap();
        fmt_real(&mut out, *f);
        for v in x {
            out.push('\t');
            fmt_real(&mut out, *v);
        }
        out.push('\n');
    }
    out
}

/// Parses the on-disk trace format.
pub fn parse_trace(text: &str) -> Result<Trace, TraceError> {
    let mut lines = text.lines();
    let first = lines
        .next()
        .ok_or_else(|| TraceError::MalformedHeader("file is empty".into()))?;
    let header: TraceHeader =
        serde_json::from_str(first).map_err(|e| TraceError::MalformedHeader(e.to_string()))?;
    if header.lower.len() != header.dim || header.upper.len() != header.dim {
        return Err(TraceError::MalformedHeader(format!(
            "dim = {} but {} lower / {} upper bounds",
            header.dim,
            header.lower.len(),
            header.upper.len()
        )));
    }
    let domain = SearchDomain::new(header.lower, header.upper)
        .map_err(|e| TraceError::MalformedHeader(e.to_string()))?;
    let d = domain.dim();

    let mut coords = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let row = values.len() + 1;
        let mut fields = line.split('\t');
        let idx: usize =
            fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| TraceError::MalformedRow {
                    row,
                    msg: "missing or invalid eval_index".into(),
                })?;
        if idx != row {
            return Err(TraceError::MalformedRow {
                row,
                msg: format!("eval_index {idx} out of sequence"),
            });
        }
        let parse = |s: &str, what: &str| -> Result<f64, TraceError> {
            s.parse::<f64>().map_err(|_| TraceError::MalformedRow {
                row,
                msg: format!("invalid {what} `{s}`"),
            })
        };
        let f = parse(
            fields.next().ok_or_else(|| TraceError::MalformedRow {
                row,
                msg: "missing f_value".into(),
            })?,
            "f_value",
        )?;
        let start = coords.len();
        for s in fields {
            coords.push(parse(s, "coordinate")?);
        }
        let found = coords.len() - start;
        if found != d {
            return Err(TraceError::DimensionMismatch {
                row,
                expected: d,
                found,
            });
        }
        domain.check_point(row, &coords[start..])?;
        values.push(f);
    }
    if values.is_empty() {
        return Err(TraceError::Empty);
    }
    let meta = TraceMeta {
        algorithm_id: header.algorithm_id,
        function_id: header.function_id,
        instance_id: header.instance_id,
        run_seed: header.run_seed,
        budget: header.budget,
    };
    Trace::new(domain, coords, values, header.optimum_value, meta)
}

pub fn read_trace(path: &Path) -> Result<Trace, TraceError> {
    let text = fs::read_to_string(path).map_err(|e| TraceError::io(path, e))?;
    parse_trace(&text)
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<(), TraceError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| TraceError::io(dir, e))?;
    }
    fs::write(path, format_trace(trace)).map_err(|e| TraceError::io(path, e))
}

/// One generated algorithm in an evolution run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageRecord {
    pub algorithm_id: String,
    pub parent_ids: Vec<String>,
    pub generation: u32,
    pub code_text: String,
    /// Mean AOCC over the training instances.
    pub fitness: f64,
    pub variant_id: String,
    pub run_id: String,
}

/// Checks the per-file lineage invariants: unique ids, fitness in `[0, 1]`,
/// parents present with a strictly smaller generation.
pub fn validate_lineage(records: &[LineageRecord]) -> Result<(), TraceError> {
    let mut generation_of: HashMap<&str, u32> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        let line = i + 1;
        if !(0.0..=1.0).contains(&r.fitness) {
            return Err(TraceError::MalformedLineage {
                line,
                msg: format!("fitness {} outside [0, 1]", r.fitness),
            });
        }
        if generation_of
            .insert(&r.algorithm_id, r.generation)
            .is_some()
        {
            return Err(TraceError::MalformedLineage {
                line,
                msg: format!("duplicate algorithm_id `{}`", r.algorithm_id),
            });
        }
    }
    for (i, r) in records.iter().enumerate() {
        for p in &r.parent_ids {
            match generation_of.get(p.as_str()) {
                None => {
                    return Err(TraceError::MalformedLineage {
                        line: i + 1,
                        msg: format!("unknown parent `{p}`"),
                    })
                }
                Some(g) if *g >= r.generation => {
                    return Err(TraceError::MalformedLineage {
                        line: i + 1,
                        msg: format!(
                            "parent `{p}` has generation {g}, not below {}",
                            r.generation
                        ),
                    })
                }
                Some(_) => {}
            }
        }
    }
    Ok(())
}

pub fn format_lineage(records: &[LineageRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serialises"));
        out.push('\n');
    }
    out
}

pub fn parse_lineage(text: &str) -> Result<Vec<LineageRecord>, TraceError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: LineageRecord =
            serde_json::from_str(line).map_err(|e| TraceError::MalformedLineage {
                line: i + 1,
                msg: e.to_string(),
            })?;
        records.push(r);
    }
    validate_lineage(&records)?;
    Ok(records)
}

pub fn read_lineage(path: &Path) -> Result<Vec<LineageRecord>, TraceError> {
    let file = fs::File::open(path).map_err(|e| TraceError::io(path, e))?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        text.push_str(&line.map_err(|e| TraceError::io(path, e))?);
        text.push('\n');
    }
    parse_lineage(&text)
}

pub fn write_lineage(records: &[LineageRecord], path: &Path) -> Result<(), TraceError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| TraceError::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| TraceError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(format_lineage(records).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| TraceError::io(path, e))
}

/// Paths of the run directory layout:
/// `runs/<variant_id>/<run_id>/lineage.jsonl` and
/// `runs/<variant_id>/<run_id>/traces/<algorithm_id>/<function_id>_i<instance_id>.trace`.
#[derive(Debug, Clone)]
pub struct RunLayout {
    root: PathBuf,
}

impl RunLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunLayout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_dir(&self, variant_id: &str, run_id: &str) -> PathBuf {
        self.root.join(variant_id).join(run_id)
    }

    pub fn lineage_path(&self, variant_id: &str, run_id: &str) -> PathBuf {
        self.run_dir(variant_id, run_id).join("lineage.jsonl")
    }

    pub fn trace_path(
        &self,
        variant_id: &str,
        run_id: &str,
        algorithm_id: &str,
        function_id: &str,
        instance_id: u64,
    ) -> PathBuf {
        self.run_dir(variant_id, run_id)
            .join("traces")
            .join(algorithm_id)
            .join(trace_file_name(function_id, instance_id))
    }

    /// Held-out evaluations of a run's final algorithm live beside the
    /// training traces under `test_traces/`.
    pub fn test_trace_path(
        &self,
        variant_id: &str,
        run_id: &str,
        algorithm_id: &str,
        function_id: &str,
        instance_id: u64,
    ) -> PathBuf {
        self.run_dir(variant_id, run_id)
            .join("test_traces")
            .join(algorithm_id)
            .join(trace_file_name(function_id, instance_id))
    }
}

pub fn trace_file_name(function_id: &str, instance_id: u64) -> String {
    format!("{function_id}_i{instance_id}.trace")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(budget: usize) -> TraceMeta {
        TraceMeta {
            algorithm_id: "a".into(),
            function_id: "f".into(),
            instance_id: 1,
            run_seed: 7,
            budget,
        }
    }

    const HEADER_1D: &str = r#"{"dim":1,"lower":[-5.0],"upper":[5.0],"algorithm_id":"a","function_id":"f","instance_id":1,"run_seed":7,"budget":10}"#;

    #[test]
    fn parses_two_row_file() {
        let text = format!("{HEADER_1D}\n1\t2.0\t0.0\n2\t1.0\t1.0\n");
        let t = parse_trace(&text).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.best_so_far(), vec![2.0, 1.0]);
        assert_eq!(t.point(1), &[1.0]);
        assert_eq!(t.optimum_value(), None);
    }

    #[test]
    fn out_of_domain_names_row() {
        let text = format!("{HEADER_1D}\n1\t2.0\t0.0\n2\t1.0\t1.0\n3\t0.5\t6.0\n");
        match parse_trace(&text) {
            Err(TraceError::OutOfDomain { row: 3, .. }) => {}
            other => panic!("expected out-of-domain at row 3, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(
            parse_trace(""),
            Err(TraceError::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_trace("{not json"),
            Err(TraceError::MalformedHeader(_))
        ));
        assert!(matches!(parse_trace(HEADER_1D), Err(TraceError::Empty)));
        let wrong_dim = format!("{HEADER_1D}\n1\t2.0\t0.0\t1.0\n");
        assert!(matches!(
            parse_trace(&wrong_dim),
            Err(TraceError::DimensionMismatch {
                row: 1,
                expected: 1,
                found: 2
            })
        ));
        let skipped = format!("{HEADER_1D}\n1\t2.0\t0.0\n3\t1.0\t1.0\n");
        assert!(matches!(
            parse_trace(&skipped),
            Err(TraceError::MalformedRow { row: 2, .. })
        ));
        let header_mismatch = HEADER_1D.replace("\"dim\":1", "\"dim\":2");
        assert!(matches!(
            parse_trace(&format!("{header_mismatch}\n1\t0.0\t0.0\t0.0\n")),
            Err(TraceError::MalformedHeader(_))
        ));
    }

    #[test]
    fn best_so_far_examples() {
        assert_eq!(best_so_far(&[3.0, 5.0, 2.0, 2.0]), vec![3.0, 3.0, 2.0, 2.0]);
        assert_eq!(best_so_far(&[4.0, 3.0, 1.0]), vec![4.0, 3.0, 1.0]);
        assert_eq!(best_so_far(&[7.5; 4]), vec![7.5; 4]);
    }

    #[test]
    fn single_row_and_large_file() {
        let dom = SearchDomain::cube(2, -5.0, 5.0).unwrap();
        let t = Trace::new(dom.clone(), vec![0.0, 0.0], vec![1.0], None, meta(1)).unwrap();
        let text = format_trace(&t);
        assert_eq!(text.lines().count(), 2);

        let n = 10_000;
        let coords: Vec<f64> = (0..2 * n).map(|i| (i % 10) as f64 * 0.5 - 2.5).collect();
        let values: Vec<f64> = (0..n).map(|i| 1.0 / (i + 1) as f64).collect();
        let t = Trace::new(dom, coords, values, Some(0.0), meta(n)).unwrap();
        assert_eq!(format_trace(&t).lines().count() - 1, n);
    }

    #[test]
    fn budget_must_cover_evaluations() {
        let dom = SearchDomain::cube(1, 0.0, 1.0).unwrap();
        let err = Trace::new(dom, vec![0.0, 1.0], vec![1.0, 2.0], None, meta(1)).unwrap_err();
        assert!(matches!(err, TraceError::BudgetExceeded { .. }));
    }

    #[test]
    fn domain_validation() {
        assert!(SearchDomain::new(vec![], vec![]).is_err());
        assert!(SearchDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(SearchDomain::new(vec![0.0, 0.0], vec![1.0]).is_err());
        let d = SearchDomain::new(vec![-5.0, 0.0], vec![5.0, 2.0]).unwrap();
        assert_eq!(d.mean_width(), 6.0);
        assert!(d.contains(&[5.0, 0.0]));
        assert!(!d.contains(&[5.1, 0.0]));
    }

    #[test]
    fn best_index_prefers_earliest() {
        let dom = SearchDomain::cube(1, 0.0, 3.0).unwrap();
        let t = Trace::new(
            dom,
            vec![0.0, 1.0, 2.0, 3.0],
            vec![1.0, 0.5, 0.5, 0.2],
            None,
            meta(4),
        )
        .unwrap();
        assert_eq!(t.best_index_so_far(), vec![0, 1, 1, 3]);
    }

    #[test]
    fn lineage_validation() {
        let rec = |id: &str, parents: &[&str], g: u32| LineageRecord {
            algorithm_id: id.into(),
            parent_ids: parents.iter().map(|s| s.to_string()).collect(),
            generation: g,
            code_text: "x = 1".into(),
            fitness: 0.5,
            variant_id: "v".into(),
            run_id: "r".into(),
        };
        let ok = vec![rec("a", &[], 0), rec("b", &["a"], 1)];
        let text = format_lineage(&ok);
        assert_eq!(parse_lineage(&text).unwrap(), ok);
        assert!(validate_lineage(&[rec("a", &[], 0), rec("b", &["a"], 0)]).is_err());
        assert!(validate_lineage(&[rec("b", &["zz"], 1)]).is_err());
        assert!(validate_lineage(&[rec("a", &[], 0), rec("a", &[], 0)]).is_err());
        let mut bad = rec("a", &[], 0);
        bad.fitness = 1.5;
        assert!(validate_lineage(&[bad]).is_err());
    }

    #[test]
    fn layout_paths() {
        let l = RunLayout::new("runs");
        assert_eq!(
            l.trace_path("llamea-4", "s1", "a001", "sphere", 3),
            PathBuf::from("runs/llamea-4/s1/traces/a001/sphere_i3.trace")
        );
        assert_eq!(
            l.lineage_path("v", "r"),
            PathBuf::from("runs/v/r/lineage.jsonl")
        );
    }
}
