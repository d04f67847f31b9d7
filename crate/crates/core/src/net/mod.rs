//! Topology, demand and path modeling shared by every planning stage.

mod parse;
mod paths;

pub use parse::{parse_demands, parse_topology};
pub(crate) use paths::remove_loops;
pub use paths::{
    candidate_path_pairs, k_shortest_paths, shortest_disjoint_pair, shortest_path,
    shortest_path_weighted, PathConstraints,
};

use std::collections::HashMap;
use std::fmt;

use num_traits::{Float, FromPrimitive};
use thiserror::Error;

pub type NodeId = usize;
pub type SpanId = usize;
pub type DemandId = usize;

/// Fiber propagation delay used when nothing else is configured (about 2e8 m/s).
pub const DEFAULT_MS_PER_KM: f64 = 0.005;

/// Span costs are kept as integers in meters so optimality checks stay exact.
pub const COST_SCALE: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: node `{name}` declared twice")]
    DuplicateNode { line: usize, name: String },
    #[error("line {line}: duplicate span between `{a}` and `{b}`")]
    DuplicateSpan { line: usize, a: String, b: String },
    #[error("line {line}: unknown node `{name}`")]
    UnknownNode { line: usize, name: String },
    #[error("line {line}: span length must be positive, got {value}")]
    NonPositiveLength { line: usize, value: f64 },
    #[error("line {line}: span `{name}`-`{name}` is a self-loop")]
    SelfLoop { line: usize, name: String },
    #[error("topology is disconnected: `{unreachable}` cannot be reached from `{root}`")]
    Disconnected { root: String, unreachable: String },
    #[error("topology has no nodes")]
    Empty,
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("no two link-disjoint paths exist between `{a}` and `{b}`")]
    NoDisjointPair { a: String, b: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Span {
    pub id: SpanId,
    pub a: NodeId,
    pub b: NodeId,
    pub length_km: f64,
    /// `length_km` scaled to integer meters.
    pub cost: i64,
}

impl Span {
    pub fn other(&self, node: NodeId) -> Option<NodeId> {
        if node == self.a {
            Some(self.b)
        } else if node == self.b {
            Some(self.a)
        } else {
            None
        }
    }

    pub fn touches(&self, node: NodeId) -> bool {
        self.a == node || self.b == node
    }
}

/// Undirected, connected, simple graph of named nodes and weighted spans.
#[derive(Debug, Clone)]
pub struct Topology {
    names: Vec<String>,
    spans: Vec<Span>,
    /// Per node: `(span, neighbor)` sorted by span id.
    adjacency: Vec<Vec<(SpanId, NodeId)>>,
    by_name: HashMap<String, NodeId>,
    by_pair: HashMap<(NodeId, NodeId), SpanId>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.spans == other.spans
    }
}

fn pair_key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

impl Topology {
    /// Builds a topology from node names and `(a, b, length_km)` span triples.
    /// Span ids follow the order of `spans`.
    pub fn new(names: Vec<String>, spans: &[(NodeId, NodeId, f64)]) -> Result<Self, NetError> {
        let mut topo = TopologyBuilder::default();
        for name in names {
            topo.add_node(name, 0)?;
        }
        for &(a, b, len) in spans {
            topo.add_span(a, b, len, 0)?;
        }
        topo.finish()
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn span_count(&self) -> usize {
        self.spans.len()
    }

    pub fn node_name(&self, node: NodeId) -> &str {
        &self.names[node]
    }

    pub fn node_names(&self) -> &[String] {
        &self.names
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    pub fn span(&self, id: SpanId) -> &Span {
        &self.spans[id]
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn neighbors(&self, node: NodeId) -> &[(SpanId, NodeId)] {
        &self.adjacency[node]
    }

    pub fn span_between(&self, a: NodeId, b: NodeId) -> Option<SpanId> {
        self.by_pair.get(&pair_key(a, b)).copied()
    }

    pub fn span_label(&self, id: SpanId) -> String {
        let s = &self.spans[id];
        format!("{}-{}", self.names[s.a], self.names[s.b])
    }

    /// Sum of span costs (integer meters).
    pub fn cost_of(&self, spans: &[SpanId]) -> i64 {
        spans.iter().map(|&s| self.spans[s].cost).sum()
    }

    /// Renders the topology in the line-oriented file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for name in &self.names {
            out.push_str("node ");
            out.push_str(name);
            out.push('\n');
        }
        for s in &self.spans {
            out.push_str(&format!(
                "span {} {} {}\n",
                self.names[s.a], self.names[s.b], s.length_km
            ));
        }
        out
    }

    /// Spans whose removal disconnects the graph.
    pub fn bridges(&self) -> Vec<SpanId> {
        (0..self.span_count())
            .filter(|&s| {
                let mut banned = vec![false; self.span_count()];
                banned[s] = true;
                let span = &self.spans[s];
                shortest_path(self, span.a, span.b, &PathConstraints::banning_spans(banned))
                    .is_none()
            })
            .collect()
    }
}

#[derive(Default)]
pub(crate) struct TopologyBuilder {
    names: Vec<String>,
    spans: Vec<Span>,
    by_name: HashMap<String, NodeId>,
    by_pair: HashMap<(NodeId, NodeId), SpanId>,
}

impl TopologyBuilder {
    pub(crate) fn node_id(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    pub(crate) fn add_node(&mut self, name: String, line: usize) -> Result<NodeId, NetError> {
        if self.by_name.contains_key(&name) {
            return Err(NetError::DuplicateNode { line, name });
        }
        let id = self.names.len();
        self.by_name.insert(name.clone(), id);
        self.names.push(name);
        Ok(id)
    }

    pub(crate) fn add_span(
        &mut self,
        a: NodeId,
        b: NodeId,
        length_km: f64,
        line: usize,
    ) -> Result<SpanId, NetError> {
        if a >= self.names.len() || b >= self.names.len() {
            return Err(NetError::UnknownNode {
                line,
                name: format!("#{}", a.max(b)),
            });
        }
        if a == b {
            return Err(NetError::SelfLoop {
                line,
                name: self.names[a].clone(),
            });
        }
        if !(length_km > 0.0) || !length_km.is_finite() {
            return Err(NetError::NonPositiveLength {
                line,
                value: length_km,
            });
        }
        let key = pair_key(a, b);
        if self.by_pair.contains_key(&key) {
            return Err(NetError::DuplicateSpan {
                line,
                a: self.names[a].clone(),
                b: self.names[b].clone(),
            });
        }
        let id = self.spans.len();
        self.by_pair.insert(key, id);
        self.spans.push(Span {
            id,
            a,
            b,
            length_km,
            cost: (length_km * COST_SCALE).round() as i64,
        });
        Ok(id)
    }

    pub(crate) fn finish(self) -> Result<Topology, NetError> {
        if self.names.is_empty() {
            return Err(NetError::Empty);
        }
        let mut adjacency = vec![Vec::new(); self.names.len()];
        for s in &self.spans {
            adjacency[s.a].push((s.id, s.b));
            adjacency[s.b].push((s.id, s.a));
        }
        let mut seen = vec![false; self.names.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for &(_, m) in &adjacency[n] {
                if !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        if let Some(lost) = seen.iter().position(|&s| !s) {
            return Err(NetError::Disconnected {
                root: self.names[0].clone(),
                unreachable: self.names[lost].clone(),
            });
        }
        Ok(Topology {
            names: self.names,
            spans: self.spans,
            adjacency,
            by_name: self.by_name,
            by_pair: self.by_pair,
        })
    }
}

/// A bidirectional connection request between two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Demand {
    pub id: DemandId,
    pub a: NodeId,
    pub b: NodeId,
    pub units: u32,
}

/// One unit of traffic between every unordered node pair, ordered lexicographically.
pub fn generate_uniform_demands(topology: &Topology) -> Vec<Demand> {
    let n = topology.node_count();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            out.push(Demand {
                id: out.len(),
                a,
                b,
                units: 1,
            });
        }
    }
    out
}

/// A simple path stored as its span sequence together with the node walk.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    spans: Vec<SpanId>,
    nodes: Vec<NodeId>,
}

impl Path {
    /// Zero-hop path sitting on `node`.
    pub fn trivial(node: NodeId) -> Self {
        Path {
            spans: Vec::new(),
            nodes: vec![node],
        }
    }

    /// Walks `spans` starting at `start`, rejecting non-adjacent or repeating sequences.
    pub fn from_spans(topology: &Topology, start: NodeId, spans: &[SpanId]) -> Result<Self, NetError> {
        if start >= topology.node_count() {
            return Err(NetError::InvalidPath(format!("unknown start node {start}")));
        }
        let mut nodes = Vec::with_capacity(spans.len() + 1);
        nodes.push(start);
        let mut at = start;
        for &s in spans {
            if s >= topology.span_count() {
                return Err(NetError::InvalidPath(format!("unknown span {s}")));
            }
            let next = topology.span(s).other(at).ok_or_else(|| {
                NetError::InvalidPath(format!(
                    "span {} does not touch node {}",
                    topology.span_label(s),
                    topology.node_name(at)
                ))
            })?;
            nodes.push(next);
            at = next;
        }
        let path = Path {
            spans: spans.to_vec(),
            nodes,
        };
        if !path.is_simple() {
            return Err(NetError::InvalidPath("path repeats a node".into()));
        }
        Ok(path)
    }

    /// Builds a path from a node walk.
    pub fn from_nodes(topology: &Topology, nodes: &[NodeId]) -> Result<Self, NetError> {
        let first = *nodes
            .first()
            .ok_or_else(|| NetError::InvalidPath("empty node walk".into()))?;
        let spans = nodes
            .windows(2)
            .map(|w| {
                topology.span_between(w[0], w[1]).ok_or_else(|| {
                    NetError::InvalidPath(format!("no span between nodes {} and {}", w[0], w[1]))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Path::from_spans(topology, first, &spans)
    }

    fn is_simple(&self) -> bool {
        let mut nodes = self.nodes.clone();
        nodes.sort_unstable();
        nodes.windows(2).all(|w| w[0] != w[1])
    }

    pub fn spans(&self) -> &[SpanId] {
        &self.spans
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    pub fn hop_count(&self) -> usize {
        self.spans.len()
    }

    pub fn contains_span(&self, span: SpanId) -> bool {
        self.spans.contains(&span)
    }

    pub fn cost(&self, topology: &Topology) -> i64 {
        topology.cost_of(&self.spans)
    }

    pub fn length_km(&self, topology: &Topology) -> f64 {
        self.spans.iter().map(|&s| topology.span(s).length_km).sum()
    }

    /// The same path walked from the other end.
    pub fn reversed(&self) -> Path {
        let mut spans = self.spans.clone();
        spans.reverse();
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Path { spans, nodes }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.spans.iter().map(|s| s.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// True iff the two paths share no span.
pub fn link_disjoint(a: &Path, b: &Path) -> bool {
    a.spans.iter().all(|s| !b.spans.contains(s))
}

/// Primary and protection route of one demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathPair {
    pub demand: DemandId,
    pub primary: Path,
    pub protection: Path,
}

impl PathPair {
    pub fn total_cost(&self, topology: &Topology) -> i64 {
        self.primary.cost(topology) + self.protection.cost(topology)
    }

    pub fn is_valid(&self) -> bool {
        self.primary.source() == self.protection.source()
            && self.primary.target() == self.protection.target()
            && link_disjoint(&self.primary, &self.protection)
    }
}

/// Propagation delay along `path` in milliseconds.
pub fn propagation_delay_ms<T: Float + FromPrimitive>(
    topology: &Topology,
    path: &Path,
    ms_per_km: T,
) -> T {
    path.spans()
        .iter()
        .map(|&s| T::from_f64(topology.span(s).length_km).unwrap() * ms_per_km)
        .fold(T::zero(), |acc, d| acc + d)
}

/// Bundled reference topologies.
pub mod datasets {
    use super::{parse_topology, Topology};

    pub const COST239: &str = include_str!("../../../../data/cost239.topo");
    pub const NSFNET: &str = include_str!("../../../../data/nsfnet.topo");

    pub fn cost239() -> Topology {
        parse_topology(COST239).expect("bundled COST 239 data is valid")
    }

    pub fn nsfnet() -> Topology {
        parse_topology(NSFNET).expect("bundled NSFNET data is valid")
    }

    pub fn by_name(name: &str) -> Option<Topology> {
        match name.to_ascii_lowercase().as_str() {
            "cost239" => Some(cost239()),
            "nsfnet" => Some(nsfnet()),
            _ => None,
        }
    }
}
