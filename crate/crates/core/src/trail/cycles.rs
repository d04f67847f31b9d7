use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::{GroupTopology, Route, VNode};
use crate::cpp::{Mode, UnionFind};
use crate::net::{remove_loops, DemandId, NodeId, SpanId, Topology};
use crate::spp::SppSolution;

/// What one elimination pass did, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// The longest span of the cycle was dropped.
    RemovedLongest(SpanId),
    /// The longest span was refused; a shorter one on the same cycle went.
    RemovedShorter(SpanId),
    /// A vertex on the cycle was split into independent vertices.
    Separated(NodeId),
    /// Members were moved off `span` through the residual graph, and the span dropped.
    Rerouted { span: SpanId, demands: Vec<DemandId> },
    /// Members handed to dedicated 1+1 protection so `span` could go.
    Ejected { span: SpanId, demands: Vec<DemandId> },
}

#[derive(Debug, Clone)]
pub struct Elimination {
    pub topology: GroupTopology,
    /// Initial group cost minus final group cost and fallback capacity.
    pub savings: i64,
    pub fallback: Vec<DemandId>,
    pub steps: Vec<Step>,
    /// Spans that left the group, including ones no route used any more.
    pub removed: Vec<SpanId>,
}

/// Makes `group` acyclic.
///
/// Strict mode drops the longest span of each cycle in turn. Relaxed mode
/// only drops a span if every member using it can take the rest of the cycle
/// without touching its own primary, and otherwise tries splitting a vertex,
/// rerouting through the residual graph, and finally ejecting members.
pub fn eliminate_cycles(
    topology: &Topology,
    mut group: GroupTopology,
    spp: &SppSolution,
    mode: Mode,
) -> Elimination {
    let initial = group.cost(topology);
    let mut steps = Vec::new();
    let mut removed = group.prune_unused();
    let mut fallback = Vec::new();
    let mut reroute_budget = group.span_count();

    while let Some((nodes, spans)) = group.find_cycle() {
        let mut order: Vec<usize> = (0..spans.len()).collect();
        order.sort_by_key(|&q| (Reverse(topology.span(spans[q]).cost), spans[q]));

        if mode == Mode::Strict {
            let q = order[0];
            let routes = cycle_reroutes(&group, &nodes, &spans, q);
            apply_routes(&mut group, routes);
            steps.push(Step::RemovedLongest(spans[q]));
            removed.extend(drop_span(&mut group, spans[q]));
            continue;
        }

        let mut done = false;
        for (rank, &q) in order.iter().enumerate() {
            let routes = cycle_reroutes(&group, &nodes, &spans, q);
            if routes.iter().all(|(d, r)| !touches_primary(spp, *d, &r.spans)) {
                apply_routes(&mut group, routes);
                steps.push(if rank == 0 {
                    Step::RemovedLongest(spans[q])
                } else {
                    Step::RemovedShorter(spans[q])
                });
                removed.extend(drop_span(&mut group, spans[q]));
                done = true;
                break;
            }
        }
        if done {
            continue;
        }

        if let Some(k) = separation_point(&group, &nodes, &spans) {
            steps.push(Step::Separated(group.vnodes[nodes[k]]));
            split_vertex(&mut group, nodes[k]);
            continue;
        }

        let q = order[0];
        let e = spans[q];
        let routes = cycle_reroutes(&group, &nodes, &spans, q);
        let (bad, good): (Vec<_>, Vec<_>) = routes
            .into_iter()
            .partition(|(d, r)| touches_primary(spp, *d, &r.spans));
        let conflicting: Vec<DemandId> = bad.iter().map(|(d, _)| *d).collect();

        if reroute_budget > 0 {
            let mut trial = group.clone();
            apply_routes(&mut trial, good.clone());
            let ok = conflicting
                .iter()
                .all(|&d| reroute_residual(topology, &mut trial, spp, d, e));
            if ok {
                reroute_budget -= 1;
                group = trial;
                steps.push(Step::Rerouted {
                    span: e,
                    demands: conflicting,
                });
                removed.extend(drop_span(&mut group, e));
                continue;
            }
        }

        apply_routes(&mut group, good);
        for &d in &conflicting {
            group.routes.remove(&d);
            group.members.retain(|&m| m != d);
        }
        fallback.extend_from_slice(&conflicting);
        steps.push(Step::Ejected {
            span: e,
            demands: conflicting,
        });
        removed.extend(drop_span(&mut group, e));
    }

    fallback.sort_unstable();
    let dedicated: i64 = fallback.iter().map(|&d| spp.protection(d).cost(topology)).sum();
    let savings = initial - group.cost(topology) - dedicated;
    Elimination {
        topology: group,
        savings,
        fallback,
        steps,
        removed,
    }
}

fn touches_primary(spp: &SppSolution, demand: DemandId, spans: &[SpanId]) -> bool {
    let primary = spp.primary(demand).spans();
    spans.iter().any(|s| primary.contains(s))
}

/// New routes for every member using `spans[q]`, sent round the rest of the cycle.
fn cycle_reroutes(
    group: &GroupTopology,
    nodes: &[VNode],
    spans: &[SpanId],
    q: usize,
) -> Vec<(DemandId, Route)> {
    let e = spans[q];
    let len = spans.len();
    let mut out = Vec::new();
    for d in group.users_of(e) {
        let route = &group.routes[&d];
        let walk = group.route_nodes(d).expect("route walks its group");
        let p = route.spans.iter().position(|&s| s == e).expect("user crosses span");
        let (from, to) = (walk[p], walk[p + 1]);
        // Remainder of the cycle from `from` to `to`, avoiding spans[q].
        let (mut det_nodes, mut det_spans) = (vec![from], Vec::new());
        if from == nodes[q] {
            let mut k = q;
            while nodes[k] != to {
                let prev = (k + len - 1) % len;
                det_spans.push(spans[prev]);
                det_nodes.push(nodes[prev]);
                k = prev;
            }
        } else {
            let mut k = (q + 1) % len;
            while nodes[k] != to {
                det_spans.push(spans[k]);
                k = (k + 1) % len;
                det_nodes.push(nodes[k]);
            }
        }
        let mut w_nodes = walk[..=p].to_vec();
        w_nodes.extend_from_slice(&det_nodes[1..]);
        w_nodes.extend_from_slice(&walk[p + 2..]);
        let mut w_spans = route.spans[..p].to_vec();
        w_spans.extend_from_slice(&det_spans);
        w_spans.extend_from_slice(&route.spans[p + 1..]);
        let (_, spans_out) = remove_loops(&w_nodes, &w_spans);
        out.push((
            d,
            Route {
                source: route.source,
                target: route.target,
                spans: spans_out,
            },
        ));
    }
    out
}

fn apply_routes(group: &mut GroupTopology, routes: Vec<(DemandId, Route)>) {
    for (d, r) in routes {
        group.routes.insert(d, r);
    }
}

/// Removes `span` (which no route may use any more) and anything left unused.
fn drop_span(group: &mut GroupTopology, span: SpanId) -> Vec<SpanId> {
    debug_assert!(group.users_of(span).is_empty());
    group.edges.remove(&span);
    let mut gone = vec![span];
    gone.extend(group.prune_unused());
    gone
}

/// Partition of the spans at `v` into classes that exchange data through `v`.
fn span_classes(group: &GroupTopology, v: VNode) -> Vec<Vec<SpanId>> {
    let incident: Vec<SpanId> = group.adjacency()[v].iter().map(|&(s, _)| s).collect();
    let index: BTreeMap<SpanId, usize> = incident.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut uf = UnionFind::new(incident.len());
    for &d in group.routes.keys() {
        let walk = group.route_nodes(d).expect("route walks its group");
        let spans = &group.routes[&d].spans;
        for k in 1..walk.len().saturating_sub(1) {
            if walk[k] == v {
                uf.union(index[&spans[k - 1]], index[&spans[k]]);
            }
        }
    }
    uf.classes()
        .into_iter()
        .map(|c| c.into_iter().map(|i| incident[i]).collect())
        .collect()
}

/// Position on the cycle of a vertex whose two cycle spans never carry a
/// common route through it.
fn separation_point(group: &GroupTopology, nodes: &[VNode], spans: &[SpanId]) -> Option<usize> {
    let len = spans.len();
    (0..len).find(|&k| {
        let (before, after) = (spans[(k + len - 1) % len], spans[k]);
        let classes = span_classes(group, nodes[k]);
        let class_of = |s: SpanId| classes.iter().position(|c| c.contains(&s));
        class_of(before) != class_of(after)
    })
}

/// Gives each data class at `v` its own vertex on the same physical node.
fn split_vertex(group: &mut GroupTopology, v: VNode) {
    let classes = span_classes(group, v);
    let mut home: BTreeMap<SpanId, VNode> = BTreeMap::new();
    for (k, class) in classes.iter().enumerate() {
        let target = if k == 0 {
            v
        } else {
            group.vnodes.push(group.vnodes[v]);
            group.vnodes.len() - 1
        };
        for &s in class {
            home.insert(s, target);
        }
    }
    for (s, ends) in group.edges.iter_mut() {
        if let Some(&nv) = home.get(s) {
            let (a, b) = *ends;
            let (a, b) = if a == v { (nv, b) } else { (a, nv) };
            *ends = (a.min(b), a.max(b));
        }
    }
    for r in group.routes.values_mut() {
        if r.source == v {
            r.source = home[r.spans.first().expect("non-empty route")];
        }
        if r.target == v {
            r.target = home[r.spans.last().expect("non-empty route")];
        }
    }
}

/// Shortest route for `demand` avoiding `banned` and its own primary, over
/// the group's spans (unit weight) or new spans (their cost). New spans may
/// only attach to physical nodes that have at most one vertex.
fn reroute_residual(
    topology: &Topology,
    group: &mut GroupTopology,
    spp: &SppSolution,
    demand: DemandId,
    banned: SpanId,
) -> bool {
    let primary: BTreeSet<SpanId> = spp.primary(demand).spans().iter().copied().collect();
    let nv = group.vnodes.len();
    let mut per_phys: BTreeMap<NodeId, Vec<VNode>> = BTreeMap::new();
    for (v, &n) in group.vnodes.iter().enumerate() {
        per_phys.entry(n).or_default().push(v);
    }
    let state_of = |n: NodeId| match per_phys.get(&n).map(Vec::as_slice) {
        None | Some([]) => Some(nv + n),
        Some([v]) => Some(*v),
        Some(_) => None,
    };
    let phys_of = |x: usize| if x < nv { group.vnodes[x] } else { x - nv };
    let adjacency = group.adjacency();
    let route = &group.routes[&demand];
    let (src, dst) = (route.source, route.target);

    let mut dist: BTreeMap<usize, i64> = BTreeMap::from([(src, 0)]);
    let mut prev: BTreeMap<usize, (usize, SpanId)> = BTreeMap::new();
    let mut heap = BinaryHeap::from([Reverse((0i64, src))]);
    while let Some(Reverse((dx, x))) = heap.pop() {
        if dx > dist[&x] {
            continue;
        }
        if x == dst {
            break;
        }
        let mut steps: Vec<(usize, SpanId, i64)> = Vec::new();
        if x < nv {
            for &(s, w) in &adjacency[x] {
                steps.push((w, s, 1));
            }
        }
        for &(s, n) in topology.neighbors(phys_of(x)) {
            if group.edges.contains_key(&s) {
                continue;
            }
            if let Some(y) = state_of(n) {
                steps.push((y, s, topology.span(s).cost + 1));
            }
        }
        for (y, s, w) in steps {
            if s == banned || primary.contains(&s) {
                continue;
            }
            let dy = dx + w;
            if dist.get(&y).is_none_or(|&old| dy < old) {
                dist.insert(y, dy);
                prev.insert(y, (x, s));
                heap.push(Reverse((dy, y)));
            }
        }
    }
    if !dist.contains_key(&dst) {
        return false;
    }
    let mut hops = Vec::new();
    let mut cur = dst;
    while cur != src {
        let (p, s) = prev[&cur];
        hops.push((p, s, cur));
        cur = p;
    }
    hops.reverse();

    let mut made: BTreeMap<usize, VNode> = BTreeMap::new();
    let mut real = |x: usize, group: &mut GroupTopology| -> VNode {
        if x < nv {
            return x;
        }
        *made.entry(x).or_insert_with(|| {
            group.vnodes.push(x - nv);
            group.vnodes.len() - 1
        })
    };
    let mut spans = Vec::new();
    for (a, s, b) in hops {
        let (va, vb) = (real(a, group), real(b, group));
        group.edges.entry(s).or_insert((va.min(vb), va.max(vb)));
        spans.push(s);
    }
    group.routes.get_mut(&demand).expect("member").spans = spans;
    true
}
