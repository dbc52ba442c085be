//! Attributed-graph export (DOT, GraphML) and the few graph algorithms the
//! analyses need. Nodes are dense indices `0..n`.

use std::collections::VecDeque;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(String),
}

impl AttrValue {
    fn graphml_type(&self) -> &'static str {
        match self {
            AttrValue::Int(_) => "long",
            AttrValue::Real(_) => "double",
            AttrValue::Bool(_) => "boolean",
            AttrValue::Str(_) => "string",
        }
    }

    fn text(&self) -> String {
        match self {
            AttrValue::Int(v) => v.to_string(),
            AttrValue::Real(v) => format!("{v:?}"),
            AttrValue::Bool(v) => v.to_string(),
            AttrValue::Str(s) => s.clone(),
        }
    }
}

pub type Attrs = Vec<(&'static str, AttrValue)>;

/// Graph ready for serialisation. Every node (edge) carries the same
/// attribute names in the same order.
#[derive(Debug, Clone, Default)]
pub struct ExportGraph {
    pub name: String,
    pub graph_attrs: Attrs,
    pub nodes: Vec<(String, Attrs)>,
    pub edges: Vec<(usize, usize, Attrs)>,
}

fn dot_quote(s: &str) -> String {
    format!(
        "\"{}\"",
        s.replace('\\', "\\\\")
            .replace('"', "\\\"")
            .replace('\n', "\\n")
    )
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dot_attrs(attrs: &Attrs) -> String {
    attrs
        .iter()
        .map(|(k, v)| format!("{k}={}", dot_quote(&v.text())))
        .collect::<Vec<_>>()
        .join(", ")
}

impl ExportGraph {
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        writeln!(s, "digraph {} {{", dot_quote(&self.name)).unwrap();
        for (k, v) in &self.graph_attrs {
            writeln!(s, "  {k}={};", dot_quote(&v.text())).unwrap();
        }
        for (id, attrs) in &self.nodes {
            writeln!(s, "  {} [{}];", dot_quote(id), dot_attrs(attrs)).unwrap();
        }
        for (a, b, attrs) in &self.edges {
            writeln!(
                s,
                "  {} -> {} [{}];",
                dot_quote(&self.nodes[*a].0),
                dot_quote(&self.nodes[*b].0),
                dot_attrs(attrs)
            )
            .unwrap();
        }
        s.push_str("}\n");
        s
    }

    pub fn to_graphml(&self) -> String {
        let mut s = String::new();
        s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
        let mut key = |scope: &str, prefix: &str, attrs: &Attrs| {
            for (k, v) in attrs {
                writeln!(
                    s,
                    "  <key id=\"{prefix}_{k}\" for=\"{scope}\" attr.name=\"{k}\" attr.type=\"{}\"/>",
                    v.graphml_type()
                )
                .unwrap();
            }
        };
        key("graph", "g", &self.graph_attrs);
        if let Some((_, a)) = self.nodes.first() {
            key("node", "n", a);
        }
        if let Some((_, _, a)) = self.edges.first() {
            key("edge", "e", a);
        }
        writeln!(
            s,
            "  <graph id=\"{}\" edgedefault=\"directed\">",
            xml_escape(&self.name)
        )
        .unwrap();
        let data = |s: &mut String, indent: &str, prefix: &str, attrs: &Attrs| {
            for (k, v) in attrs {
                writeln!(
                    s,
                    "{indent}<data key=\"{prefix}_{k}\">{}</data>",
                    xml_escape(&v.text())
                )
                .unwrap();
            }
        };
        data(&mut s, "    ", "g", &self.graph_attrs);
        for (id, attrs) in &self.nodes {
            writeln!(s, "    <node id=\"{}\">", xml_escape(id)).unwrap();
            data(&mut s, "      ", "n", attrs);
            s.push_str("    </node>\n");
        }
        for (i, (a, b, attrs)) in self.edges.iter().enumerate() {
            writeln!(
                s,
                "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\">",
                xml_escape(&self.nodes[*a].0),
                xml_escape(&self.nodes[*b].0)
            )
            .unwrap();
            data(&mut s, "      ", "e", attrs);
            s.push_str("    </edge>\n");
        }
        s.push_str("  </graph>\n</graphml>\n");
        s
    }
}

/// Connected components of the undirected projection.
pub fn undirected_components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut count = n;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            count -= 1;
        }
    }
    count
}

/// Unweighted directed hop distances from `src`; `None` if unreachable.
pub fn bfs_hops(n: usize, edges: &[(usize, usize)], src: usize) -> Vec<Option<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    let mut dist = vec![None; n];
    dist[src] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        let d = dist[u].expect("queued nodes have a distance");
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

/// Whether the directed graph on the nodes touched by `edges` (plus
/// `extra_nodes`) is one simple path: connected, acyclic, every in- and
/// out-degree at most 1. Duplicate edges count separately.
pub fn is_simple_path(edges: &[(usize, usize)], extra_nodes: &[usize]) -> bool {
    let mut nodes: Vec<usize> = edges
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .chain(extra_nodes.iter().copied())
        .collect();
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.is_empty() {
        return true;
    }
    if edges.len() != nodes.len() - 1 {
        return false;
    }
    let idx = |x: usize| nodes.binary_search(&x).expect("node listed");
    let mut indeg = vec![0usize; nodes.len()];
    let mut outdeg = vec![0usize; nodes.len()];
    let mut local = Vec::with_capacity(edges.len());
    for &(a, b) in edges {
        if a == b {
            return false;
        }
        let (ia, ib) = (idx(a), idx(b));
        outdeg[ia] += 1;
        indeg[ib] += 1;
        local.push((ia, ib));
    }
    if indeg.iter().chain(&outdeg).any(|d| *d > 1) {
        return false;
    }
    // n - 1 edges, degrees <= 1 and connected means a single path
    undirected_components(nodes.len(), &local) == 1
}

/// Order of a DAG by Kahn's algorithm, smallest index first among ready
/// nodes; `None` if there is a cycle.
pub fn topological_order(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        indeg[b] += 1;
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|i| indeg[*i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = ready.pop_first() {
        order.push(u);
        for &v in &adj[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.insert(v);
            }
        }
    }
    (order.len() == n).then_some(order)
}
