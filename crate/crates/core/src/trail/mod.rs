//! Coding group protection topologies, cycle elimination, and flattening of
//! the resulting trees into linear 1+N coding trails.

mod build;
mod cycles;
mod text;
mod verify;

pub use build::{build_trails, build_trails_with, TrailChoice};
pub use cycles::{eliminate_cycles, Elimination, Step};
pub use text::parse_trail_set;
pub use verify::{verify_topology, verify_trail_plan, TopologyIssue, TrailViolation};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::cpp::{CodingPlan, Mode, UnionFind};
use crate::net::{DemandId, NodeId, SpanId, Topology};
use crate::spp::SppSolution;

/// Index of a vertex in a group topology. Several vertices may sit on one
/// physical node once a separation point has been split.
pub type VNode = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    Source,
    Target,
}

/// One end of one demand, written `S3` or `T3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndpointLabel {
    pub demand: DemandId,
    pub end: End,
}

impl EndpointLabel {
    pub fn source(demand: DemandId) -> Self {
        EndpointLabel {
            demand,
            end: End::Source,
        }
    }

    pub fn target(demand: DemandId) -> Self {
        EndpointLabel {
            demand,
            end: End::Target,
        }
    }

    pub fn partner(self) -> Self {
        EndpointLabel {
            demand: self.demand,
            end: match self.end {
                End::Source => End::Target,
                End::Target => End::Source,
            },
        }
    }
}

impl fmt::Display for EndpointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.end {
            End::Source => 'S',
            End::Target => 'T',
        };
        write!(f, "{tag}{}", self.demand)
    }
}

impl std::str::FromStr for EndpointLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (end, rest) = match s.as_bytes().first() {
            Some(b'S') => (End::Source, &s[1..]),
            Some(b'T') => (End::Target, &s[1..]),
            _ => return Err(format!("bad endpoint label `{s}`")),
        };
        let demand = rest.parse().map_err(|_| format!("bad endpoint label `{s}`"))?;
        Ok(EndpointLabel { demand, end })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrailError {
    #[error("endpoint {0} is not on the group topology")]
    EndpointOffTopology(EndpointLabel),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Path a member's coded data takes through its group topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub source: VNode,
    pub target: VNode,
    pub spans: Vec<SpanId>,
}

/// Protection subgraph of one coding group, every span with unit capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupTopology {
    pub group: usize,
    pub members: Vec<DemandId>,
    /// Physical node of each vertex.
    pub vnodes: Vec<NodeId>,
    pub edges: BTreeMap<SpanId, (VNode, VNode)>,
    pub routes: BTreeMap<DemandId, Route>,
}

impl GroupTopology {
    /// Union of the members' protection paths, one vertex per physical node.
    pub fn from_members(spp: &SppSolution, group: usize, members: &[DemandId]) -> Self {
        let mut vnodes: Vec<NodeId> = Vec::new();
        let mut vnode_of: BTreeMap<NodeId, VNode> = BTreeMap::new();
        let mut intern = |n: NodeId, vnodes: &mut Vec<NodeId>| {
            *vnode_of.entry(n).or_insert_with(|| {
                vnodes.push(n);
                vnodes.len() - 1
            })
        };
        let mut edges = BTreeMap::new();
        let mut routes = BTreeMap::new();
        for &d in members {
            let path = spp.protection(d);
            let nodes = path.nodes();
            for (k, &s) in path.spans().iter().enumerate() {
                let a = intern(nodes[k], &mut vnodes);
                let b = intern(nodes[k + 1], &mut vnodes);
                edges.entry(s).or_insert((a.min(b), a.max(b)));
            }
            let source = intern(path.source(), &mut vnodes);
            let target = intern(path.target(), &mut vnodes);
            routes.insert(
                d,
                Route {
                    source,
                    target,
                    spans: path.spans().to_vec(),
                },
            );
        }
        let mut members = members.to_vec();
        members.sort_unstable();
        GroupTopology {
            group,
            members,
            vnodes,
            edges,
            routes,
        }
    }

    /// One topology per group of `coding`, in group order.
    pub fn for_plan(spp: &SppSolution, coding: &CodingPlan) -> Vec<Self> {
        coding
            .groups
            .iter()
            .enumerate()
            .map(|(g, members)| Self::from_members(spp, g, members))
            .collect()
    }

    pub fn span_count(&self) -> usize {
        self.edges.len()
    }

    pub fn spans(&self) -> Vec<SpanId> {
        self.edges.keys().copied().collect()
    }

    pub fn cost(&self, topology: &Topology) -> i64 {
        self.edges.keys().map(|&s| topology.span(s).cost).sum()
    }

    pub fn other_end(&self, span: SpanId, v: VNode) -> Option<VNode> {
        let &(a, b) = self.edges.get(&span)?;
        if a == v {
            Some(b)
        } else if b == v {
            Some(a)
        } else {
            None
        }
    }

    /// Incident `(span, neighbour)` lists, sorted by span id.
    pub fn adjacency(&self) -> Vec<Vec<(SpanId, VNode)>> {
        let mut adj = vec![Vec::new(); self.vnodes.len()];
        for (&s, &(a, b)) in &self.edges {
            adj[a].push((s, b));
            adj[b].push((s, a));
        }
        adj
    }

    /// Endpoint labels grouped by the vertex they sit on.
    pub fn endpoint_map(&self) -> BTreeMap<VNode, Vec<EndpointLabel>> {
        let mut map: BTreeMap<VNode, Vec<EndpointLabel>> = BTreeMap::new();
        for (&d, r) in &self.routes {
            map.entry(r.source).or_default().push(EndpointLabel::source(d));
            map.entry(r.target).or_default().push(EndpointLabel::target(d));
        }
        for labels in map.values_mut() {
            labels.sort_unstable();
        }
        map
    }

    pub fn endpoint_vnode(&self, label: EndpointLabel) -> Option<VNode> {
        let r = self.routes.get(&label.demand)?;
        Some(match label.end {
            End::Source => r.source,
            End::Target => r.target,
        })
    }

    /// Vertex sequence of a member's route, or `None` if it does not walk
    /// the topology's edges.
    pub fn route_nodes(&self, demand: DemandId) -> Option<Vec<VNode>> {
        let r = self.routes.get(&demand)?;
        let mut nodes = vec![r.source];
        for &s in &r.spans {
            let next = self.other_end(s, *nodes.last()?)?;
            nodes.push(next);
        }
        (*nodes.last()? == r.target).then_some(nodes)
    }

    /// Members whose route crosses `span`.
    pub fn users_of(&self, span: SpanId) -> Vec<DemandId> {
        self.routes
            .iter()
            .filter(|(_, r)| r.spans.contains(&span))
            .map(|(&d, _)| d)
            .collect()
    }

    pub fn is_acyclic(&self) -> bool {
        let mut uf = UnionFind::new(self.vnodes.len());
        self.edges.values().all(|&(a, b)| uf.union(a, b))
    }

    /// Some cycle as parallel vertex and span lists: `spans[i]` joins
    /// `nodes[i]` and `nodes[(i + 1) % len]`. The cycle closed by the lowest
    /// span id that joins two already connected vertices is returned.
    pub fn find_cycle(&self) -> Option<(Vec<VNode>, Vec<SpanId>)> {
        let mut uf = UnionFind::new(self.vnodes.len());
        let mut forest: Vec<Vec<(SpanId, VNode)>> = vec![Vec::new(); self.vnodes.len()];
        for (&s, &(a, b)) in &self.edges {
            if uf.union(a, b) {
                forest[a].push((s, b));
                forest[b].push((s, a));
                continue;
            }
            // Forest path from b back to a.
            let mut prev: BTreeMap<VNode, (VNode, SpanId)> = BTreeMap::new();
            let mut stack = vec![b];
            let mut seen = BTreeSet::from([b]);
            while let Some(v) = stack.pop() {
                if v == a {
                    break;
                }
                for &(t, w) in &forest[v] {
                    if seen.insert(w) {
                        prev.insert(w, (v, t));
                        stack.push(w);
                    }
                }
            }
            let mut nodes = vec![a];
            let mut spans = Vec::new();
            let mut cur = a;
            while cur != b {
                let (p, t) = prev[&cur];
                spans.push(t);
                nodes.push(p);
                cur = p;
            }
            spans.push(s);
            return Some((nodes, spans));
        }
        None
    }

    /// Removes spans no route uses; returns them.
    pub(crate) fn prune_unused(&mut self) -> Vec<SpanId> {
        let used: BTreeSet<SpanId> = self.routes.values().flat_map(|r| r.spans.iter().copied()).collect();
        let unused: Vec<SpanId> = self.edges.keys().copied().filter(|s| !used.contains(s)).collect();
        for s in &unused {
            self.edges.remove(s);
        }
        unused
    }

    /// Vertices grouped into connected components, ordered by lowest span id.
    pub fn components(&self) -> Vec<Vec<VNode>> {
        let mut uf = UnionFind::new(self.vnodes.len());
        for &(a, b) in self.edges.values() {
            uf.union(a, b);
        }
        let mut by_root: BTreeMap<usize, (SpanId, Vec<VNode>)> = BTreeMap::new();
        for (&s, &(a, _)) in &self.edges {
            let r = uf.find(a);
            by_root.entry(r).or_insert((s, Vec::new()));
        }
        for v in 0..self.vnodes.len() {
            let r = uf.find(v);
            if let Some(entry) = by_root.get_mut(&r) {
                entry.1.push(v);
            }
        }
        let mut comps: Vec<(SpanId, Vec<VNode>)> = by_root.into_values().collect();
        comps.sort();
        comps.into_iter().map(|(_, vs)| vs).collect()
    }
}

/// Entry attached to a trail position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entry {
    /// Endpoints sitting on the trail node itself.
    Endpoint(Vec<EndpointLabel>),
    /// A lone endpoint hanging off the trail on a dedicated path.
    Spur {
        label: EndpointLabel,
        /// Vertices from the trail node (exclusive) out to the endpoint.
        nodes: Vec<VNode>,
        /// Physical node of each of `nodes`.
        phys: Vec<NodeId>,
        spans: Vec<SpanId>,
    },
    /// Several endpoints behind one link, merged; the complete pairs inside
    /// are left out of the label.
    Branch {
        merged: Vec<EndpointLabel>,
        child: usize,
    },
    /// First element of a branch trail: the complement of its branch point.
    Complement(Vec<EndpointLabel>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrailNode {
    pub vnode: VNode,
    pub node: NodeId,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trail {
    /// `(parent trail, position on it)` for branch trails.
    pub parent: Option<(usize, usize)>,
    pub nodes: Vec<TrailNode>,
    /// `spans[k]` joins `nodes[k]` and `nodes[k + 1]`.
    pub spans: Vec<SpanId>,
}

impl Trail {
    pub fn hop_count(&self) -> usize {
        self.spans.len()
    }
}

/// The trails of one coding group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrailPlan {
    pub group: usize,
    pub members: Vec<DemandId>,
    pub trails: Vec<Trail>,
}

impl TrailPlan {
    /// Every span used by a trail or a spur, with multiplicity.
    pub fn covered_spans(&self) -> Vec<SpanId> {
        let mut out = Vec::new();
        for t in &self.trails {
            out.extend_from_slice(&t.spans);
            for n in &t.nodes {
                for e in &n.entries {
                    if let Entry::Spur { spans, .. } = e {
                        out.extend_from_slice(spans);
                    }
                }
            }
        }
        out
    }

    /// Undirected links `(span, a, b)` between vertices, as the plan lays them out.
    pub fn links(&self) -> Vec<(SpanId, VNode, VNode)> {
        let mut out = Vec::new();
        for t in &self.trails {
            for (k, &s) in t.spans.iter().enumerate() {
                out.push((s, t.nodes[k].vnode, t.nodes[k + 1].vnode));
            }
            for n in &t.nodes {
                for e in &n.entries {
                    if let Entry::Spur { nodes, spans, .. } = e {
                        let mut prev = n.vnode;
                        for (&v, &s) in nodes.iter().zip(spans) {
                            out.push((s, prev, v));
                            prev = v;
                        }
                    }
                }
            }
        }
        out
    }

    /// Links on the coded route between the two endpoints of `demand`.
    pub fn coded_hops(&self, demand: DemandId) -> Option<usize> {
        let sites = self.endpoint_sites();
        let at = |l: EndpointLabel| sites.iter().find(|x| x.0 == l).map(|x| x.1);
        let (from, to) = (at(EndpointLabel::source(demand))?, at(EndpointLabel::target(demand))?);
        let mut adj: BTreeMap<VNode, Vec<VNode>> = BTreeMap::new();
        for (_, a, b) in self.links() {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut dist = BTreeMap::from([(from, 0usize)]);
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            if v == to {
                return Some(dist[&v]);
            }
            for &w in adj.get(&v).into_iter().flatten() {
                if !dist.contains_key(&w) {
                    dist.insert(w, dist[&v] + 1);
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Where each endpoint sits as a single entity: `(vertex, physical node)`.
    pub fn endpoint_sites(&self) -> Vec<(EndpointLabel, VNode, NodeId)> {
        let mut out = Vec::new();
        for t in &self.trails {
            for n in &t.nodes {
                for e in &n.entries {
                    match e {
                        Entry::Endpoint(labels) => {
                            out.extend(labels.iter().map(|&l| (l, n.vnode, n.node)));
                        }
                        Entry::Spur { label, nodes, phys, .. } => {
                            let v = nodes.last().copied().unwrap_or(n.vnode);
                            let p = phys.last().copied().unwrap_or(n.node);
                            out.push((*label, v, p));
                        }
                        _ => {}
                    }
                }
            }
        }
        out
    }

    /// Physical node of every vertex that appears in the plan.
    pub fn vnode_table(&self) -> BTreeMap<VNode, NodeId> {
        let mut map = BTreeMap::new();
        for t in &self.trails {
            for n in &t.nodes {
                map.insert(n.vnode, n.node);
                for e in &n.entries {
                    if let Entry::Spur { nodes, phys, .. } = e {
                        map.extend(nodes.iter().copied().zip(phys.iter().copied()));
                    }
                }
            }
        }
        map
    }

    pub fn branch_count(&self) -> usize {
        self.trails.len().saturating_sub(1)
    }
}

/// Everything downstream of conversion: trail plans for every coding group
/// plus the 1+1 fallback singletons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrailSet {
    pub mode: Mode,
    pub plans: Vec<TrailPlan>,
    /// Demands ejected to dedicated protection during relaxed elimination.
    pub fallback: Vec<DemandId>,
    /// Spare cost given back by cycle elimination (negative if fallback
    /// capacity outweighs it).
    pub savings: i64,
    /// Coded spare cost after elimination, fallback capacity included.
    pub spare_cost: i64,
}

impl TrailSet {
    /// Eliminates cycles in every group, splits fallback demands out as
    /// singletons, and builds and checks the trails.
    pub fn build(
        topology: &Topology,
        spp: &SppSolution,
        coding: &CodingPlan,
        choice: TrailChoice,
    ) -> Result<Self, TrailError> {
        Self::build_with_topologies(topology, spp, coding, choice).map(|(set, _)| set)
    }

    /// [`TrailSet::build`] that also hands back the final group topologies,
    /// fallback singletons included, in group order.
    pub fn build_with_topologies(
        topology: &Topology,
        spp: &SppSolution,
        coding: &CodingPlan,
        choice: TrailChoice,
    ) -> Result<(Self, Vec<GroupTopology>), TrailError> {
        let mut plans = Vec::new();
        let mut fallback = Vec::new();
        let mut savings = 0;
        let mut spare_cost = 0;
        let mut topologies = Vec::new();
        for group in GroupTopology::for_plan(spp, coding) {
            let out = eliminate_cycles(topology, group, spp, coding.mode);
            savings += out.savings;
            fallback.extend_from_slice(&out.fallback);
            topologies.push(out.topology);
        }
        fallback.sort_unstable();
        let mut next_group = topologies.len();
        for &d in &fallback {
            topologies.push(GroupTopology::from_members(spp, next_group, &[d]));
            next_group += 1;
        }
        for t in &topologies {
            spare_cost += t.cost(topology);
            if t.members.is_empty() {
                continue;
            }
            plans.push(build_trails_with(t, choice)?);
        }
        let set = TrailSet {
            mode: coding.mode,
            plans,
            fallback,
            savings,
            spare_cost,
        };
        Ok((set, topologies))
    }

    pub fn plan_for(&self, demand: DemandId) -> Option<&TrailPlan> {
        self.plans.iter().find(|p| p.members.contains(&demand))
    }
}

/// Plan checks that need only the physical network, not the group topology
/// the plan came from.
pub fn check_plan(plan: &TrailPlan, topology: &Topology) -> Vec<TrailViolation> {
    verify::check_structure(plan, Some(topology))
}
