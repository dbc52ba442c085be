//! Code evolution graphs: lineage DAGs of generated algorithms annotated with
//! static code features and normalised fitness.

mod lexer;
mod syntax;

pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use syntax::{IndentTreeProvider, SyntaxProvider, SyntaxTree};

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{topological_order, AttrValue, ExportGraph};
use crate::par;
use crate::trace::LineageRecord;

#[derive(Debug, Error, PartialEq)]
pub enum CegError {
    #[error("empty code")]
    EmptyCode,
    #[error("cannot tokenize code: {0}")]
    Lex(#[from] LexError),
    #[error("syntax provider failed: {0}")]
    Syntax(String),
    #[error("no lineage records")]
    Empty,
    #[error("duplicate algorithm `{0}`")]
    Duplicate(String),
    #[error("`{child}` names unknown parent `{parent}`")]
    DanglingParent { child: String, parent: String },
    #[error("lineage contains a cycle")]
    Cycle,
    #[error("generation of `{child}` is not greater than that of its parent `{parent}`")]
    GenerationOrder { child: String, parent: String },
}

/// Tokens that add a decision point to the cyclomatic estimate.
pub const PYTHON_BRANCH_TOKENS: [&str; 10] = [
    "if", "elif", "for", "while", "except", "and", "or", "case", "&&", "||",
];

/// Reserved words, not counted as identifiers.
pub const PYTHON_KEYWORDS: [&str; 35] = [
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub branch_tokens: Vec<String>,
    pub keywords: Vec<String>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            branch_tokens: PYTHON_BRANCH_TOKENS.iter().map(|s| s.to_string()).collect(),
            keywords: PYTHON_KEYWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Static features of one program. The structural fields are `None` when no
/// syntax provider was given.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeFeatures {
    pub token_count: usize,
    pub distinct_identifiers: usize,
    pub cyclomatic_estimate: usize,
    pub ast_nodes: Option<usize>,
    pub ast_edges: Option<usize>,
    pub mean_degree: Option<f64>,
    pub clustering_coeff: Option<f64>,
    pub parameter_count: Option<usize>,
}

pub fn extract_features(
    code: &str,
    provider: Option<&dyn SyntaxProvider>,
) -> Result<CodeFeatures, CegError> {
    extract_features_with(code, provider, &FeatureConfig::default())
}

pub fn extract_features_with(
    code: &str,
    provider: Option<&dyn SyntaxProvider>,
    cfg: &FeatureConfig,
) -> Result<CodeFeatures, CegError> {
    let tokens = tokenize(code)?;
    if tokens.is_empty() {
        return Err(CegError::EmptyCode);
    }
    let branches = tokens
        .iter()
        .filter(|t| t.kind != TokenKind::Str && cfg.branch_tokens.contains(&t.text))
        .count();
    let identifiers: BTreeSet<&str> = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Identifier && !cfg.keywords.contains(&t.text))
        .map(|t| t.text.as_str())
        .collect();
    let mut f = CodeFeatures {
        token_count: tokens.len(),
        distinct_identifiers: identifiers.len(),
        cyclomatic_estimate: 1 + branches,
        ast_nodes: None,
        ast_edges: None,
        mean_degree: None,
        clustering_coeff: None,
        parameter_count: None,
    };
    if let Some(p) = provider {
        let tree = p.parse(code)?;
        let edges = tree.edges();
        let n = tree.len();
        f.ast_nodes = Some(n);
        f.ast_edges = Some(edges.len());
        f.mean_degree = Some(if n == 0 {
            0.0
        } else {
            2.0 * edges.len() as f64 / n as f64
        });
        f.clustering_coeff = Some(average_clustering(n, &edges));
        f.parameter_count = Some(tree.count_kind("parameter"));
    }
    Ok(f)
}

/// Mean local clustering coefficient of the undirected projection; nodes of
/// degree below 2 contribute 0.
pub fn average_clustering(n: usize, edges: &[(usize, usize)]) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut adj = vec![BTreeSet::new(); n];
    for &(a, b) in edges {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    let total: f64 = (0..n)
        .map(|u| {
            let k = adj[u].len();
            if k < 2 {
                return 0.0;
            }
            let nb: Vec<usize> = adj[u].iter().copied().collect();
            let mut links = 0usize;
            for i in 0..k {
                for j in i + 1..k {
                    if adj[nb[i]].contains(&nb[j]) {
                        links += 1;
                    }
                }
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .sum();
    total / n as f64
}

/// Population over which fitness is min-max normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitnessNorm {
    #[default]
    PerRun,
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CegNode {
    pub variant_id: String,
    pub run_id: String,
    pub algorithm_id: String,
    pub generation: u32,
    pub features: CodeFeatures,
    pub fitness: f64,
    /// Min-max normalised fitness; 1 when all fitness values of the
    /// normalisation population are equal.
    pub fitness_norm: f64,
    /// Number of children, i.e. how often the node was selected as parent.
    pub parent_frequency: usize,
}

impl CegNode {
    pub fn key(&self) -> String {
        format!("{}/{}/{}", self.variant_id, self.run_id, self.algorithm_id)
    }
}

/// Nodes in input order; edges `(parent, child)` as node indices, ordered by
/// child then parent position.
#[derive(Debug, Clone, PartialEq)]
pub struct CegGraph {
    pub nodes: Vec<CegNode>,
    pub edges: Vec<(usize, usize)>,
}

/// Builds the graph of lineage records from one or more runs. Algorithm ids
/// are scoped by `(variant_id, run_id)`.
pub fn build_ceg(
    records: &[LineageRecord],
    provider: Option<&(dyn SyntaxProvider + Sync)>,
    norm: FitnessNorm,
) -> Result<CegGraph, CegError> {
    if records.is_empty() {
        return Err(CegError::Empty);
    }
    let key =
        |r: &LineageRecord, id: &str| (r.variant_id.clone(), r.run_id.clone(), id.to_string());
    let mut index = HashMap::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if index.insert(key(r, &r.algorithm_id), i).is_some() {
            return Err(CegError::Duplicate(format!(
                "{}/{}/{}",
                r.variant_id, r.run_id, r.algorithm_id
            )));
        }
    }
    let mut edges = Vec::new();
    for (i, r) in records.iter().enumerate() {
        for p in &r.parent_ids {
            let j = *index
                .get(&key(r, p))
                .ok_or_else(|| CegError::DanglingParent {
                    child: r.algorithm_id.clone(),
                    parent: p.clone(),
                })?;
            edges.push((j, i));
        }
    }
    if topological_order(records.len(), &edges).is_none() {
        return Err(CegError::Cycle);
    }
    for &(p, c) in &edges {
        if records[c].generation <= records[p].generation {
            return Err(CegError::GenerationOrder {
                child: records[c].algorithm_id.clone(),
                parent: records[p].algorithm_id.clone(),
            });
        }
    }

    let features = par::map(records, |r| match provider {
        Some(p) => extract_features(&r.code_text, Some(p)),
        None => extract_features(&r.code_text, None),
    });
    let mut out_degree = vec![0usize; records.len()];
    for &(p, _) in &edges {
        out_degree[p] += 1;
    }
    let group = |r: &LineageRecord| match norm {
        FitnessNorm::PerRun => (r.variant_id.clone(), r.run_id.clone()),
        FitnessNorm::Global => (String::new(), String::new()),
    };
    let mut bounds: HashMap<(String, String), (f64, f64)> = HashMap::new();
    for r in records {
        let b = bounds
            .entry(group(r))
            .or_insert((f64::INFINITY, f64::NEG_INFINITY));
        b.0 = b.0.min(r.fitness);
        b.1 = b.1.max(r.fitness);
    }
    let mut nodes = Vec::with_capacity(records.len());
    for ((r, f), deg) in records.iter().zip(features).zip(out_degree) {
        let (lo, hi) = bounds[&group(r)];
        let fitness_norm = if hi > lo {
            (r.fitness - lo) / (hi - lo)
        } else {
            1.0
        };
        nodes.push(CegNode {
            variant_id: r.variant_id.clone(),
            run_id: r.run_id.clone(),
            algorithm_id: r.algorithm_id.clone(),
            generation: r.generation,
            features: f?,
            fitness: r.fitness,
            fitness_norm,
            parent_frequency: deg,
        });
    }
    Ok(CegGraph { nodes, edges })
}

impl CegGraph {
    /// Indices of the nodes of one run.
    pub fn run_nodes(&self, variant_id: &str, run_id: &str) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|i| self.nodes[*i].variant_id == variant_id && self.nodes[*i].run_id == run_id)
            .collect()
    }

    /// `(variant_id, run_id)` pairs in first-seen order.
    pub fn runs(&self) -> Vec<(String, String)> {
        let mut seen = Vec::new();
        for n in &self.nodes {
            let k = (n.variant_id.clone(), n.run_id.clone());
            if !seen.contains(&k) {
                seen.push(k);
            }
        }
        seen
    }

    /// Selected-lineage subgraph of one run: the nodes that were chosen as a
    /// parent at least once plus the run's best node (earliest on ties), with
    /// the edges among them.
    pub fn accepted_lineage(
        &self,
        variant_id: &str,
        run_id: &str,
    ) -> (Vec<usize>, Vec<(usize, usize)>) {
        let run = self.run_nodes(variant_id, run_id);
        let best = run.iter().copied().reduce(|a, b| {
            if self.nodes[b].fitness > self.nodes[a].fitness {
                b
            } else {
                a
            }
        });
        let keep: BTreeSet<usize> = run
            .iter()
            .copied()
            .filter(|i| self.nodes[*i].parent_frequency > 0 || Some(*i) == best)
            .collect();
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|(a, b)| keep.contains(a) && keep.contains(b))
            .collect();
        (keep.into_iter().collect(), edges)
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.parent_frequency).collect()
    }

    fn export_graph(&self) -> ExportGraph {
        ExportGraph {
            name: "ceg".into(),
            graph_attrs: Vec::new(),
            nodes: self
                .nodes
                .iter()
                .map(|n| {
                    let attrs = vec![
                        ("variant_id", AttrValue::Str(n.variant_id.clone())),
                        ("run_id", AttrValue::Str(n.run_id.clone())),
                        ("algorithm_id", AttrValue::Str(n.algorithm_id.clone())),
                        ("generation", AttrValue::Int(i64::from(n.generation))),
                        ("token_count", AttrValue::Int(n.features.token_count as i64)),
                        (
                            "cyclomatic_estimate",
                            AttrValue::Int(n.features.cyclomatic_estimate as i64),
                        ),
                        ("fitness", AttrValue::Real(n.fitness)),
                        ("fitness_norm", AttrValue::Real(n.fitness_norm)),
                        (
                            "parent_frequency",
                            AttrValue::Int(n.parent_frequency as i64),
                        ),
                    ];
                    (n.key(), attrs)
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| (a, b, Vec::new()))
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

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthPoint {
    pub variant_id: String,
    pub run_id: String,
    pub generation: u32,
    pub algorithm_id: String,
    pub token_count: usize,
    pub fitness_norm: f64,
}

/// One point per node, ordered by variant, run, generation and algorithm id.
pub fn code_growth_series(graph: &CegGraph) -> Vec<GrowthPoint> {
    let mut s: Vec<GrowthPoint> = graph
        .nodes
        .iter()
        .map(|n| GrowthPoint {
            variant_id: n.variant_id.clone(),
            run_id: n.run_id.clone(),
            generation: n.generation,
            algorithm_id: n.algorithm_id.clone(),
            token_count: n.features.token_count,
            fitness_norm: n.fitness_norm,
        })
        .collect();
    s.sort_by(|a, b| {
        (&a.variant_id, &a.run_id, a.generation, &a.algorithm_id).cmp(&(
            &b.variant_id,
            &b.run_id,
            b.generation,
            &b.algorithm_id,
        ))
    });
    s
}

pub fn growth_series_csv(series: &[GrowthPoint]) -> String {
    let mut s =
        String::from("variant_id,run_id,generation,algorithm_id,token_count,fitness_norm\n");
    for p in series {
        writeln!(
            s,
            "{},{},{},{},{},{:?}",
            p.variant_id, p.run_id, p.generation, p.algorithm_id, p.token_count, p.fitness_norm
        )
        .unwrap();
    }
    s
}
