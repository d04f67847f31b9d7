use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{EndpointLabel, Entry, GroupTopology, TrailPlan, VNode};
use crate::cpp::Mode;
use crate::net::{DemandId, SpanId, Topology};
use crate::spp::SppSolution;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrailViolation {
    MissingEndpoint(EndpointLabel),
    DuplicateEndpoint(EndpointLabel),
    StrayEndpoint(EndpointLabel),
    MisplacedEndpoint(EndpointLabel),
    BrokenWalk { trail: usize, position: usize },
    RepeatedNode { trail: usize },
    BadSpur { trail: usize, position: usize },
    SpanMissing(SpanId),
    SpanRepeated(SpanId),
    SpanUnknown(SpanId),
    UnknownVertex(VNode),
    BadParent { trail: usize },
    ParentCycle { trail: usize },
    BadComplement { trail: usize },
    BadMerged { trail: usize, position: usize },
    LinksCyclic,
}

impl fmt::Display for TrailViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TrailViolation::*;
        match self {
            MissingEndpoint(l) => write!(f, "endpoint {l} is not on any trail"),
            DuplicateEndpoint(l) => write!(f, "endpoint {l} appears more than once"),
            StrayEndpoint(l) => write!(f, "endpoint {l} does not belong to the group"),
            MisplacedEndpoint(l) => write!(f, "endpoint {l} sits on the wrong vertex"),
            BrokenWalk { trail, position } => write!(f, "trail {trail} breaks at position {position}"),
            RepeatedNode { trail } => write!(f, "trail {trail} revisits a vertex"),
            BadSpur { trail, position } => write!(f, "spur at trail {trail} position {position} does not walk"),
            SpanMissing(s) => write!(f, "span {s} is covered by no trail"),
            SpanRepeated(s) => write!(f, "span {s} is covered twice"),
            SpanUnknown(s) => write!(f, "span {s} is not in the group topology"),
            UnknownVertex(v) => write!(f, "vertex {v} is not in the group topology"),
            BadParent { trail } => write!(f, "trail {trail} has an inconsistent parent link"),
            ParentCycle { trail } => write!(f, "trail {trail} has a cyclic parent chain"),
            BadComplement { trail } => write!(f, "trail {trail} does not start with its branch complement"),
            BadMerged { trail, position } => {
                write!(f, "branch label at trail {trail} position {position} disagrees with its subtree")
            }
            LinksCyclic => write!(f, "plan links contain a cycle"),
        }
    }
}

fn unpaired(entities: &BTreeSet<EndpointLabel>) -> Vec<EndpointLabel> {
    entities.iter().copied().filter(|l| !entities.contains(&l.partner())).collect()
}

/// Single entities placed on trail `t` and everything below it.
fn entities_below(plan: &TrailPlan, t: usize, out: &mut BTreeSet<EndpointLabel>, depth: usize) {
    if depth > plan.trails.len() {
        return;
    }
    for n in &plan.trails[t].nodes {
        for e in &n.entries {
            match e {
                Entry::Endpoint(ls) => out.extend(ls),
                Entry::Spur { label, .. } => {
                    out.insert(*label);
                }
                Entry::Branch { child, .. } if *child < plan.trails.len() => {
                    entities_below(plan, *child, out, depth + 1)
                }
                _ => {}
            }
        }
    }
}

/// Physical-topology-independent checks of a plan, plus physical span ends
/// when `topology` is given.
pub(crate) fn check_structure(plan: &TrailPlan, topology: Option<&Topology>) -> Vec<TrailViolation> {
    use TrailViolation::*;
    let mut out = Vec::new();
    let nt = plan.trails.len();
    let phys = plan.vnode_table();

    for (t, trail) in plan.trails.iter().enumerate() {
        if trail.nodes.len() != trail.spans.len() + 1 {
            out.push(BrokenWalk { trail: t, position: 0 });
            continue;
        }
        let distinct: BTreeSet<VNode> = trail.nodes.iter().map(|n| n.vnode).collect();
        if distinct.len() != trail.nodes.len() {
            out.push(RepeatedNode { trail: t });
        }
        if let Some(topo) = topology {
            for (k, &s) in trail.spans.iter().enumerate() {
                let (a, b) = (trail.nodes[k].node, trail.nodes[k + 1].node);
                if s >= topo.span_count() || !(topo.span(s).touches(a) && topo.span(s).other(a) == Some(b)) {
                    out.push(BrokenWalk { trail: t, position: k });
                }
            }
        }
        for (k, n) in trail.nodes.iter().enumerate() {
            for e in &n.entries {
                match e {
                    Entry::Spur { nodes, phys: pn, spans, .. } => {
                        let mut ok = !nodes.is_empty() && nodes.len() == spans.len() && pn.len() == nodes.len();
                        if ok {
                            if let Some(topo) = topology {
                                let mut prev = n.node;
                                for (&p, &s) in pn.iter().zip(spans) {
                                    ok &= s < topo.span_count() && topo.span(s).other(prev) == Some(p);
                                    prev = p;
                                }
                            }
                        }
                        if !ok {
                            out.push(BadSpur { trail: t, position: k });
                        }
                    }
                    Entry::Branch { merged, child } => {
                        let c = *child;
                        if c >= nt || plan.trails[c].parent != Some((t, k)) {
                            out.push(BadParent { trail: c.min(nt.saturating_sub(1)) });
                            continue;
                        }
                        let mut below = BTreeSet::new();
                        entities_below(plan, c, &mut below, 0);
                        if *merged != unpaired(&below) {
                            out.push(BadMerged { trail: t, position: k });
                        }
                        let want: BTreeSet<EndpointLabel> = merged.iter().map(|l| l.partner()).collect();
                        let head = &plan.trails[c].nodes[0].entries;
                        let good = matches!(head.as_slice(), [Entry::Complement(ls)]
                            if ls.iter().copied().collect::<BTreeSet<_>>() == want && ls.len() == want.len());
                        if !good {
                            out.push(BadComplement { trail: c });
                        }
                    }
                    Entry::Complement(_) if k != 0 || trail.parent.is_none() => {
                        out.push(BadComplement { trail: t });
                    }
                    _ => {}
                }
            }
        }
        if let Some((p, k)) = trail.parent {
            let ok = p < nt
                && k < plan.trails[p].nodes.len()
                && plan.trails[p].nodes[k].vnode == trail.nodes[0].vnode
                && plan.trails[p].nodes[k]
                    .entries
                    .iter()
                    .any(|e| matches!(e, Entry::Branch { child, .. } if *child == t));
            if !ok {
                out.push(BadParent { trail: t });
            }
            let mut cur = p;
            let mut steps = 0;
            while let Some((q, _)) = plan.trails.get(cur).and_then(|x| x.parent) {
                cur = q;
                steps += 1;
                if steps > nt {
                    out.push(ParentCycle { trail: t });
                    break;
                }
            }
        }
    }

    // Coverage of member endpoints.
    let mut seen: BTreeMap<EndpointLabel, usize> = BTreeMap::new();
    for (l, _, _) in plan.endpoint_sites() {
        *seen.entry(l).or_default() += 1;
    }
    let members: BTreeSet<DemandId> = plan.members.iter().copied().collect();
    for &d in &members {
        for l in [EndpointLabel::source(d), EndpointLabel::target(d)] {
            match seen.get(&l) {
                None => out.push(MissingEndpoint(l)),
                Some(&n) if n > 1 => out.push(DuplicateEndpoint(l)),
                _ => {}
            }
        }
    }
    for l in seen.keys() {
        if !members.contains(&l.demand) {
            out.push(StrayEndpoint(*l));
        }
    }

    // Links must form a forest without repeats.
    let links = plan.links();
    let mut count: BTreeMap<SpanId, usize> = BTreeMap::new();
    for &(s, _, _) in &links {
        *count.entry(s).or_default() += 1;
    }
    for (&s, &n) in &count {
        if n > 1 {
            out.push(SpanRepeated(s));
        }
    }
    let max_v = phys.keys().max().map_or(0, |v| v + 1);
    let mut uf = crate::cpp::UnionFind::new(max_v.max(1));
    if links.iter().any(|&(_, a, b)| a >= max_v || b >= max_v || !uf.union(a, b)) && count.values().all(|&n| n == 1) {
        out.push(LinksCyclic);
    }
    out
}

/// All plan invariants, and agreement with the group topology it came from.
pub fn verify_trail_plan(plan: &TrailPlan, group: &GroupTopology) -> Vec<TrailViolation> {
    use TrailViolation::*;
    let mut out = check_structure(plan, None);
    let mut covered: BTreeMap<SpanId, usize> = BTreeMap::new();
    for (s, a, b) in plan.links() {
        *covered.entry(s).or_default() += 1;
        match group.edges.get(&s) {
            None => out.push(SpanUnknown(s)),
            Some(&(x, y)) if (x, y) != (a.min(b), a.max(b)) => {
                if let Some((t, k)) = locate(plan, s) {
                    out.push(BrokenWalk { trail: t, position: k });
                }
            }
            _ => {}
        }
    }
    for &s in group.edges.keys() {
        if !covered.contains_key(&s) {
            out.push(SpanMissing(s));
        }
    }
    for (l, v, _) in plan.endpoint_sites() {
        if group.routes.contains_key(&l.demand) && group.endpoint_vnode(l) != Some(v) {
            out.push(MisplacedEndpoint(l));
        }
    }
    for (v, n) in plan.vnode_table() {
        if group.vnodes.get(v) != Some(&n) {
            out.push(UnknownVertex(v));
        }
    }
    if plan.members != group.members {
        for &d in &group.members {
            if !plan.members.contains(&d) {
                out.push(MissingEndpoint(EndpointLabel::source(d)));
            }
        }
    }
    out
}

fn locate(plan: &TrailPlan, span: SpanId) -> Option<(usize, usize)> {
    for (t, trail) in plan.trails.iter().enumerate() {
        if let Some(k) = trail.spans.iter().position(|&s| s == span) {
            return Some((t, k));
        }
        for (k, n) in trail.nodes.iter().enumerate() {
            for e in &n.entries {
                if matches!(e, Entry::Spur { spans, .. } if spans.contains(&span)) {
                    return Some((t, k));
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyIssue {
    Cyclic,
    RouteBroken(DemandId),
    RouteTouchesPrimary(DemandId),
    /// A strict-mode group span lies on some member's primary.
    SpanOnPrimary { span: SpanId, demand: DemandId },
    EndpointMisplaced(EndpointLabel),
    UnusedSpan(SpanId),
    SpanMismatch(SpanId),
}

/// Checks a group topology against the physical network and the primaries.
pub fn verify_topology(
    topology: &Topology,
    group: &GroupTopology,
    spp: &SppSolution,
    mode: Mode,
) -> Vec<TopologyIssue> {
    use TopologyIssue::*;
    let mut out = Vec::new();
    if !group.is_acyclic() {
        out.push(Cyclic);
    }
    for (&s, &(a, b)) in &group.edges {
        let span = topology.span(s);
        if span.other(group.vnodes[a]) != Some(group.vnodes[b]) {
            out.push(SpanMismatch(s));
        }
        if group.users_of(s).is_empty() {
            out.push(UnusedSpan(s));
        }
        if mode == Mode::Strict {
            for &d in &group.members {
                if spp.primary(d).contains_span(s) {
                    out.push(SpanOnPrimary { span: s, demand: d });
                }
            }
        }
    }
    for (&d, r) in &group.routes {
        if group.route_nodes(d).is_none() {
            out.push(RouteBroken(d));
        }
        if r.spans.iter().any(|&s| spp.primary(d).contains_span(s)) {
            out.push(RouteTouchesPrimary(d));
        }
        let prot = spp.protection(d);
        if group.vnodes.get(r.source) != Some(&prot.source()) {
            out.push(EndpointMisplaced(EndpointLabel::source(d)));
        }
        if group.vnodes.get(r.target) != Some(&prot.target()) {
            out.push(EndpointMisplaced(EndpointLabel::target(d)));
        }
    }
    out
}
