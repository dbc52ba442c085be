//! Search trajectory networks over behaviour space.
//!
//! Each generated algorithm is one point of behaviour space (its selected
//! metrics, min-max normalised with bounds shared by all compared runs). The
//! unit hypercube is cut into cells of side `cell_size`; a node is a visited
//! cell and an edge is an observed move between the cells of two algorithms,
//! classed by whether the second algorithm's fitness is higher (improving),
//! lower (deteriorating) or equal (neutral).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{bfs_hops, undirected_components, AttrValue, ExportGraph};
use crate::metrics::{BehaviourSource, Metric};

#[derive(Debug, Error, PartialEq)]
pub enum StnError {
    #[error("no runs, or a run without steps")]
    Empty,
    #[error("metric `{0}` is missing from a behaviour vector")]
    MissingMetric(Metric),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("step has {found} values, expected {expected}")]
    Arity { expected: usize, found: usize },
    #[error("non-finite value for metric `{0}`")]
    NonFinite(Metric),
}

/// How consecutive locations are connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeOrder {
    /// Parent to child, following each step's `parent_id`.
    #[default]
    Lineage,
    /// Each step to the next in logging order.
    Sequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StnConfig {
    pub metrics: Vec<Metric>,
    pub cell_size: f64,
    /// Per-metric `(min, max)`; computed from all runs when `None`.
    pub bounds: Option<Vec<(f64, f64)>>,
    pub edge_order: EdgeOrder,
}

impl Default for StnConfig {
    fn default() -> Self {
        StnConfig {
            metrics: Metric::STN_DEFAULT.to_vec(),
            cell_size: 0.1,
            bounds: None,
            edge_order: EdgeOrder::Lineage,
        }
    }
}

impl StnConfig {
    pub fn with_cell_size(cell_size: f64) -> Self {
        StnConfig {
            cell_size,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), StnError> {
        if !(self.cell_size > 0.0 && self.cell_size <= 1.0) {
            return Err(StnError::Config(format!(
                "cell size must be in (0, 1], got {}",
                self.cell_size
            )));
        }
        if self.metrics.is_empty() {
            return Err(StnError::Config("no metrics selected".into()));
        }
        let distinct: BTreeSet<_> = self.metrics.iter().collect();
        if distinct.len() != self.metrics.len() {
            return Err(StnError::Config("metrics must be distinct".into()));
        }
        if let Some(b) = &self.bounds {
            if b.len() != self.metrics.len() {
                return Err(StnError::Config(
                    "one bound pair per metric is required".into(),
                ));
            }
            if b.iter()
                .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi))
            {
                return Err(StnError::Config(
                    "bounds must be finite with min <= max".into(),
                ));
            }
        }
        Ok(())
    }

    /// Number of cells per axis; the top cell is closed so normalised 1.0
    /// falls inside it.
    pub fn cells_per_axis(&self) -> i64 {
        let m = 1.0 / self.cell_size;
        if (m - m.round()).abs() < 1e-9 {
            m.round() as i64
        } else {
            m.ceil() as i64
        }
    }
}

/// One logged algorithm of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct StnStep {
    pub algorithm_id: String,
    pub parent_id: Option<String>,
    /// Metric values in the order of [`StnConfig::metrics`].
    pub values: Vec<f64>,
    pub fitness: f64,
}

impl StnStep {
    pub fn from_source(
        algorithm_id: &str,
        parent_id: Option<&str>,
        source: &impl BehaviourSource,
        fitness: f64,
        metrics: &[Metric],
    ) -> Result<Self, StnError> {
        let values = metrics
            .iter()
            .map(|m| source.metric(*m).ok_or(StnError::MissingMetric(*m)))
            .collect::<Result<_, _>>()?;
        Ok(StnStep {
            algorithm_id: algorithm_id.to_string(),
            parent_id: parent_id.map(str::to_string),
            values,
            fitness,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StnRun {
    pub label: String,
    pub steps: Vec<StnStep>,
}

/// Global per-metric bounds over all steps of all runs.
pub fn bounds_of(runs: &[StnRun], n_metrics: usize) -> Vec<(f64, f64)> {
    let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); n_metrics];
    for s in runs.iter().flat_map(|r| &r.steps) {
        for (k, v) in s.values.iter().enumerate() {
            b[k].0 = b[k].0.min(*v);
            b[k].1 = b[k].1.max(*v);
        }
    }
    b
}

/// Value scaled into `[0, 1]`; 0 on a degenerate axis.
pub fn normalize(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Cell index of each normalised coordinate: `floor(x / cell_size)`, with
/// the upper boundary folded into the top cell. When `1 / cell_size` is an
/// integer `m`, the quotient is computed as `x * m`, so boundaries such as
/// 0.3 at cell size 0.1 land in the upper cell.
pub fn cell_key(normalized: &[f64], cfg: &StnConfig) -> Vec<i64> {
    let cells = cfg.cells_per_axis();
    let m = 1.0 / cfg.cell_size;
    let integral = (m - m.round()).abs() < 1e-9;
    normalized
        .iter()
        .map(|x| {
            let q = if integral {
                x * m.round()
            } else {
                x / cfg.cell_size
            };
            (q.floor() as i64).clamp(0, cells - 1)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Improving,
    Deteriorating,
    Neutral,
}

impl EdgeKind {
    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::Improving => "improving",
            EdgeKind::Deteriorating => "deteriorating",
            EdgeKind::Neutral => "neutral",
        }
    }

    fn of(parent_fitness: f64, child_fitness: f64) -> Self {
        if child_fitness > parent_fitness {
            EdgeKind::Improving
        } else if child_fitness < parent_fitness {
            EdgeKind::Deteriorating
        } else {
            EdgeKind::Neutral
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StnNode {
    pub key: Vec<i64>,
    pub visit_count: usize,
    /// Best fitness seen in the cell.
    pub fitness: f64,
    pub is_start: bool,
    pub is_end: bool,
    pub is_best: bool,
}

impl StnNode {
    pub fn id(&self) -> String {
        self.key
            .iter()
            .map(i64::to_string)
            .collect::<Vec<_>>()
            .join("_")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StnEdge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub count: usize,
}

impl StnEdge {
    pub fn is_self_loop(&self) -> bool {
        self.from == self.to
    }
}

/// Nodes sorted by cell key; edges sorted by `(from, to, kind)`. A pair of
/// cells has one edge per kind observed between them.
#[derive(Debug, Clone, PartialEq)]
pub struct StnGraph {
    pub metrics: Vec<Metric>,
    pub cell_size: f64,
    pub bounds: Vec<(f64, f64)>,
    pub runs: usize,
    pub nodes: Vec<StnNode>,
    pub edges: Vec<StnEdge>,
}

pub fn build_stn(runs: &[StnRun], cfg: &StnConfig) -> Result<StnGraph, StnError> {
    cfg.validate()?;
    if runs.is_empty() || runs.iter().any(|r| r.steps.is_empty()) {
        return Err(StnError::Empty);
    }
    let d = cfg.metrics.len();
    for s in runs.iter().flat_map(|r| &r.steps) {
        if s.values.len() != d {
            return Err(StnError::Arity {
                expected: d,
                found: s.values.len(),
            });
        }
        if let Some(k) = s.values.iter().position(|v| !v.is_finite()) {
            return Err(StnError::NonFinite(cfg.metrics[k]));
        }
    }
    let bounds = cfg.bounds.clone().unwrap_or_else(|| bounds_of(runs, d));
    let best_fitness = runs
        .iter()
        .flat_map(|r| &r.steps)
        .map(|s| s.fitness)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut nodes: BTreeMap<Vec<i64>, StnNode> = BTreeMap::new();
    let mut edges: BTreeMap<(Vec<i64>, Vec<i64>, EdgeKind), usize> = BTreeMap::new();
    for run in runs {
        let keys: Vec<Vec<i64>> = run
            .steps
            .iter()
            .map(|s| {
                let norm: Vec<f64> = s
                    .values
                    .iter()
                    .zip(&bounds)
                    .map(|(v, b)| normalize(*v, *b))
                    .collect();
                cell_key(&norm, cfg)
            })
            .collect();
        for (s, k) in run.steps.iter().zip(&keys) {
            let n = nodes.entry(k.clone()).or_insert_with(|| StnNode {
                key: k.clone(),
                visit_count: 0,
                fitness: f64::NEG_INFINITY,
                is_start: false,
                is_end: false,
                is_best: false,
            });
            n.visit_count += 1;
            n.fitness = n.fitness.max(s.fitness);
            n.is_best |= s.fitness == best_fitness;
        }
        nodes.get_mut(&keys[0]).expect("visited").is_start = true;
        nodes
            .get_mut(&keys[keys.len() - 1])
            .expect("visited")
            .is_end = true;

        let mut add = |a: usize, b: usize| {
            let kind = EdgeKind::of(run.steps[a].fitness, run.steps[b].fitness);
            *edges
                .entry((keys[a].clone(), keys[b].clone(), kind))
                .or_insert(0) += 1;
        };
        match cfg.edge_order {
            EdgeOrder::Sequence => (1..run.steps.len()).for_each(|i| add(i - 1, i)),
            EdgeOrder::Lineage => {
                let mut seen: HashMap<&str, usize> = HashMap::new();
                for (i, s) in run.steps.iter().enumerate() {
                    if let Some(p) = s.parent_id.as_deref().and_then(|p| seen.get(p)) {
                        add(*p, i);
                    }
                    seen.insert(&s.algorithm_id, i);
                }
            }
        }
    }
    let index: HashMap<&Vec<i64>, usize> = nodes.keys().enumerate().map(|(i, k)| (k, i)).collect();
    let edges = edges
        .iter()
        .map(|((a, b, kind), count)| StnEdge {
            from: index[a],
            to: index[b],
            kind: *kind,
            count: *count,
        })
        .collect();
    Ok(StnGraph {
        metrics: cfg.metrics.clone(),
        cell_size: cfg.cell_size,
        bounds,
        runs: runs.len(),
        nodes: nodes.into_values().collect(),
        edges,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StnStats {
    pub n_nodes: usize,
    /// Distinct directed cell pairs, self-loops included.
    pub n_edges: usize,
    pub n_components: usize,
    pub n_start_nodes: usize,
    /// Mean over start nodes that reach a best node of the fewest hops to
    /// one; `None` if none does.
    pub mean_shortest_path_to_best: Option<f64>,
    pub unreachable_starts: usize,
}

impl StnGraph {
    fn pairs(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self.edges.iter().map(|e| (e.from, e.to)).collect();
        set.into_iter().collect()
    }

    pub fn total_visits(&self) -> usize {
        self.nodes.iter().map(|n| n.visit_count).sum()
    }

    pub fn total_transitions(&self) -> usize {
        self.edges.iter().map(|e| e.count).sum()
    }

    /// Distinct improving cell moves, self-loops excluded.
    pub fn improving_edges(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Improving && !e.is_self_loop())
            .map(|e| (e.from, e.to))
            .collect();
        set.into_iter().collect()
    }

    pub fn stats(&self) -> StnStats {
        let pairs = self.pairs();
        let n = self.nodes.len();
        let best: Vec<usize> = (0..n).filter(|i| self.nodes[*i].is_best).collect();
        let starts: Vec<usize> = (0..n).filter(|i| self.nodes[*i].is_start).collect();
        let mut hops = Vec::new();
        for &s in &starts {
            let dist = bfs_hops(n, &pairs, s);
            if let Some(h) = best.iter().filter_map(|b| dist[*b]).min() {
                hops.push(h as f64);
            }
        }
        StnStats {
            n_nodes: n,
            n_edges: pairs.len(),
            n_components: undirected_components(n, &pairs),
            n_start_nodes: starts.len(),
            mean_shortest_path_to_best: (!hops.is_empty())
                .then(|| hops.iter().sum::<f64>() / hops.len() as f64),
            unreachable_starts: starts.len() - hops.len(),
        }
    }

    fn export_graph(&self) -> ExportGraph {
        let max_visits = self.nodes.iter().map(|n| n.visit_count).max().unwrap_or(1) as f64;
        let max_count = self.edges.iter().map(|e| e.count).max().unwrap_or(1) as f64;
        let bounds = self
            .metrics
            .iter()
            .zip(&self.bounds)
            .map(|(m, (lo, hi))| format!("{m}:{lo:?}:{hi:?}"))
            .collect::<Vec<_>>()
            .join(";");
        ExportGraph {
            name: "stn".into(),
            graph_attrs: vec![
                ("cell_size", AttrValue::Real(self.cell_size)),
                ("runs", AttrValue::Int(self.runs as i64)),
                ("bounds", AttrValue::Str(bounds)),
            ],
            nodes: self
                .nodes
                .iter()
                .map(|n| {
                    let (shape, color) = if n.is_best {
                        ("star", "red")
                    } else if n.is_start {
                        ("square", "gold")
                    } else if n.is_end {
                        ("triangle", "gray30")
                    } else {
                        ("circle", "steelblue")
                    };
                    let attrs = vec![
                        ("visit_count", AttrValue::Int(n.visit_count as i64)),
                        ("fitness", AttrValue::Real(n.fitness)),
                        ("is_start", AttrValue::Bool(n.is_start)),
                        ("is_end", AttrValue::Bool(n.is_end)),
                        ("is_best", AttrValue::Bool(n.is_best)),
                        (
                            "width",
                            AttrValue::Real(0.2 + 0.8 * n.visit_count as f64 / max_visits),
                        ),
                        ("shape", AttrValue::Str(shape.into())),
                        ("color", AttrValue::Str(color.into())),
                    ];
                    (n.id(), attrs)
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| {
                    let color = match e.kind {
                        EdgeKind::Improving => "forestgreen",
                        EdgeKind::Deteriorating => "firebrick",
                        EdgeKind::Neutral => "gray50",
                    };
                    let attrs = vec![
                        ("count", AttrValue::Int(e.count as i64)),
                        ("kind", AttrValue::Str(e.kind.name().into())),
                        ("self_loop", AttrValue::Bool(e.is_self_loop())),
                        (
                            "penwidth",
                            AttrValue::Real(1.0 + 4.0 * e.count as f64 / max_count),
                        ),
                        ("color", AttrValue::Str(color.into())),
                    ];
                    (e.from, e.to, attrs)
                })
                .collect(),
        }
    }

    pub fn to_dot(&self) -> String {
        self.export_graph().to_dot()
    }

    pub fn to_graphml(&self) -> String {
        self.export_graph().to_graphml()
    }
}

pub const STATS_HEADER: &str = "label,n_nodes,n_edges,n_components,n_start_nodes,mean_shortest_path_to_best,unreachable_starts";

/// CSV rows for labelled stats; missing path means render as `NA`.
pub fn stats_csv(rows: &[(String, StnStats)]) -> String {
    let mut s = format!("{STATS_HEADER}\n");
    for (label, st) in rows {
        let path = st
            .mean_shortest_path_to_best
            .map_or("NA".to_string(), |v| format!("{v:?}"));
        writeln!(
            s,
            "{label},{},{},{},{},{path},{}",
            st.n_nodes, st.n_edges, st.n_components, st.n_start_nodes, st.unreachable_starts
        )
        .unwrap();
    }
    s
}
