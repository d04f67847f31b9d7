use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use super::{Demand, NetError, NodeId, Path, PathPair, SpanId, Topology};

/// Spans and nodes a path search must avoid.
#[derive(Debug, Clone, Default)]
pub struct PathConstraints {
    banned_spans: Vec<bool>,
    banned_nodes: Vec<bool>,
}

impl PathConstraints {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn banning_spans(banned: Vec<bool>) -> Self {
        PathConstraints {
            banned_spans: banned,
            banned_nodes: Vec::new(),
        }
    }

    pub fn ban_span(&mut self, span: SpanId) {
        if self.banned_spans.len() <= span {
            self.banned_spans.resize(span + 1, false);
        }
        self.banned_spans[span] = true;
    }

    pub fn ban_spans(&mut self, spans: &[SpanId]) {
        for &s in spans {
            self.ban_span(s);
        }
    }

    pub fn ban_node(&mut self, node: NodeId) {
        if self.banned_nodes.len() <= node {
            self.banned_nodes.resize(node + 1, false);
        }
        self.banned_nodes[node] = true;
    }

    pub fn span_ok(&self, span: SpanId) -> bool {
        !self.banned_spans.get(span).copied().unwrap_or(false)
    }

    pub fn node_ok(&self, node: NodeId) -> bool {
        !self.banned_nodes.get(node).copied().unwrap_or(false)
    }
}

/// Dijkstra over span costs.
pub fn shortest_path(
    topology: &Topology,
    from: NodeId,
    to: NodeId,
    constraints: &PathConstraints,
) -> Option<Path> {
    shortest_path_weighted(topology, from, to, constraints, |s| topology.span(s).cost)
}

/// Dijkstra with caller-supplied non-negative span weights.
pub fn shortest_path_weighted(
    topology: &Topology,
    from: NodeId,
    to: NodeId,
    constraints: &PathConstraints,
    weight: impl Fn(SpanId) -> i64,
) -> Option<Path> {
    if !constraints.node_ok(from) || !constraints.node_ok(to) {
        return None;
    }
    let n = topology.node_count();
    let mut dist = vec![i64::MAX; n];
    let mut pred: Vec<Option<(SpanId, NodeId)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0;
    heap.push(Reverse((0i64, from)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == to {
            break;
        }
        for &(s, v) in topology.neighbors(u) {
            if !constraints.span_ok(s) || !constraints.node_ok(v) {
                continue;
            }
            let nd = d + weight(s);
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some((s, u));
                heap.push(Reverse((nd, v)));
            }
        }
    }
    if dist[to] == i64::MAX {
        return None;
    }
    let mut spans = Vec::new();
    let mut at = to;
    while at != from {
        let (s, p) = pred[at]?;
        spans.push(s);
        at = p;
    }
    spans.reverse();
    Path::from_spans(topology, from, &spans).ok()
}

/// Minimum total-cost pair of span-disjoint paths (Bhandari's variant of Suurballe).
/// The cheaper path comes first.
pub fn shortest_disjoint_pair(topology: &Topology, from: NodeId, to: NodeId) -> Option<(Path, Path)> {
    let first = shortest_path(topology, from, to, &PathConstraints::none())?;
    // Directed arcs: (tail, head, span, cost). The first path's arcs are
    // removed and their reverses get negated costs.
    let mut on_first = vec![None; topology.span_count()];
    for (i, &s) in first.spans().iter().enumerate() {
        on_first[s] = Some(first.nodes()[i]);
    }
    let mut arcs: Vec<(NodeId, NodeId, SpanId, i64)> = Vec::new();
    for span in topology.spans() {
        for (u, v) in [(span.a, span.b), (span.b, span.a)] {
            match on_first[span.id] {
                Some(tail) if tail == u => {}
                Some(_) => arcs.push((u, v, span.id, -span.cost)),
                None => arcs.push((u, v, span.id, span.cost)),
            }
        }
    }
    let n = topology.node_count();
    let mut dist = vec![i64::MAX; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    dist[from] = 0;
    for _ in 0..n {
        let mut changed = false;
        for (idx, &(u, v, _, c)) in arcs.iter().enumerate() {
            if dist[u] != i64::MAX && dist[u] + c < dist[v] {
                dist[v] = dist[u] + c;
                pred[v] = Some(idx);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if dist[to] == i64::MAX {
        return None;
    }
    let mut second_arcs = Vec::new();
    let mut at = to;
    let mut guard = 0;
    while at != from {
        let idx = pred[at]?;
        second_arcs.push(idx);
        at = arcs[idx].0;
        guard += 1;
        if guard > arcs.len() {
            return None;
        }
    }
    // Union of both arc sets with opposite traversals of the same span cancelled.
    let mut used: Vec<(NodeId, NodeId, SpanId)> = first
        .spans()
        .iter()
        .enumerate()
        .map(|(i, &s)| (first.nodes()[i], first.nodes()[i + 1], s))
        .collect();
    for idx in second_arcs {
        let (u, v, s, _) = arcs[idx];
        if on_first[s].is_some() {
            used.retain(|&(_, _, t)| t != s);
        } else {
            used.push((u, v, s));
        }
    }
    let mut paths = Vec::new();
    for _ in 0..2 {
        let mut walk_nodes = vec![from];
        let mut walk_spans = Vec::new();
        let mut at = from;
        while at != to {
            let pos = used
                .iter()
                .enumerate()
                .filter(|(_, &(u, _, _))| u == at)
                .min_by_key(|(_, &(_, _, s))| s)
                .map(|(i, _)| i)?;
            let (_, v, s) = used.swap_remove(pos);
            walk_spans.push(s);
            walk_nodes.push(v);
            at = v;
        }
        let (nodes, spans) = remove_loops(&walk_nodes, &walk_spans);
        paths.push(Path::from_spans(topology, nodes[0], &spans).ok()?);
    }
    let mut b = paths.pop()?;
    let mut a = paths.pop()?;
    if (b.cost(topology), b.spans()) < (a.cost(topology), a.spans()) {
        std::mem::swap(&mut a, &mut b);
    }
    Some((a, b))
}

/// Cuts closed sub-walks out of a walk, leaving a simple path with the same ends.
pub(crate) fn remove_loops(nodes: &[NodeId], spans: &[SpanId]) -> (Vec<NodeId>, Vec<SpanId>) {
    let mut out_nodes: Vec<NodeId> = Vec::new();
    let mut out_spans: Vec<SpanId> = Vec::new();
    for (i, &n) in nodes.iter().enumerate() {
        if let Some(pos) = out_nodes.iter().position(|&m| m == n) {
            out_nodes.truncate(pos + 1);
            out_spans.truncate(pos);
        } else {
            if i > 0 {
                out_spans.push(spans[i - 1]);
            }
            out_nodes.push(n);
        }
    }
    (out_nodes, out_spans)
}

/// Yen's k shortest simple paths, ordered by cost then span sequence.
pub fn k_shortest_paths(topology: &Topology, from: NodeId, to: NodeId, k: usize) -> Vec<Path> {
    let mut found: Vec<Path> = Vec::new();
    let Some(first) = shortest_path(topology, from, to, &PathConstraints::none()) else {
        return found;
    };
    found.push(first);
    let mut pool: BTreeSet<(i64, Vec<SpanId>, Path)> = BTreeSet::new();
    while found.len() < k {
        let last = found.last().unwrap().clone();
        for i in 0..last.hop_count() {
            let spur = last.nodes()[i];
            let root_spans = &last.spans()[..i];
            let mut cons = PathConstraints::none();
            for p in &found {
                if p.hop_count() > i && &p.spans()[..i] == root_spans {
                    cons.ban_span(p.spans()[i]);
                }
            }
            for &n in &last.nodes()[..i] {
                cons.ban_node(n);
            }
            if let Some(tail) = shortest_path(topology, spur, to, &cons) {
                let mut spans = root_spans.to_vec();
                spans.extend_from_slice(tail.spans());
                if let Ok(p) = Path::from_spans(topology, from, &spans) {
                    if !found.contains(&p) {
                        pool.insert((p.cost(topology), p.spans().to_vec(), p));
                    }
                }
            }
        }
        match pool.pop_first() {
            Some((_, _, p)) => found.push(p),
            None => break,
        }
    }
    found
}

/// Up to `k` span-disjoint primary/protection pairs for `demand`, cheapest first.
pub fn candidate_path_pairs(
    topology: &Topology,
    demand: &Demand,
    k: usize,
) -> Result<Vec<PathPair>, NetError> {
    let k = k.max(1);
    let no_pair = || NetError::NoDisjointPair {
        a: topology.node_name(demand.a).to_string(),
        b: topology.node_name(demand.b).to_string(),
    };
    let (best_a, best_b) = shortest_disjoint_pair(topology, demand.a, demand.b).ok_or_else(no_pair)?;
    let mut pool: Vec<(Path, Path)> = vec![(best_a.clone(), best_b.clone()), (best_b, best_a)];
    for primary in k_shortest_paths(topology, demand.a, demand.b, 2 * k) {
        let mut cons = PathConstraints::none();
        cons.ban_spans(primary.spans());
        if let Some(protection) = shortest_path(topology, demand.a, demand.b, &cons) {
            pool.push((primary, protection));
        }
    }
    pool.sort_by(|x, y| {
        let cx = x.0.cost(topology) + x.1.cost(topology);
        let cy = y.0.cost(topology) + y.1.cost(topology);
        cx.cmp(&cy)
            .then_with(|| x.0.spans().cmp(y.0.spans()))
            .then_with(|| x.1.spans().cmp(y.1.spans()))
    });
    pool.dedup();
    pool.truncate(k);
    Ok(pool
        .into_iter()
        .map(|(primary, protection)| PathPair {
            demand: demand.id,
            primary,
            protection,
        })
        .collect())
}
