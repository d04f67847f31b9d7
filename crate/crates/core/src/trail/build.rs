use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EndpointLabel, Entry, GroupTopology, Trail, TrailError, TrailNode, TrailPlan, VNode};
use crate::net::SpanId;

/// How a trail is extended where the tree forks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TrailChoice {
    /// Seed each truck trail at the lowest span id and always continue along
    /// the lowest-numbered free span.
    #[default]
    LowestSpan,
    /// Random seed span and continuations, reproducible from the seed.
    Seeded(u64),
}

struct Builder<'a> {
    group: &'a GroupTopology,
    adjacency: Vec<Vec<(SpanId, VNode)>>,
    endpoints: BTreeMap<VNode, Vec<EndpointLabel>>,
    used: BTreeSet<SpanId>,
    rng: Option<ChaCha8Rng>,
}

impl Builder<'_> {
    fn pick(&mut self, options: &[(SpanId, VNode)]) -> Option<(SpanId, VNode)> {
        match &mut self.rng {
            _ if options.is_empty() => None,
            None => options.first().copied(),
            Some(rng) => Some(options[rng.gen_range(0..options.len())]),
        }
    }

    fn free(&self, v: VNode) -> Vec<(SpanId, VNode)> {
        self.adjacency[v]
            .iter()
            .copied()
            .filter(|(s, _)| !self.used.contains(s))
            .collect()
    }

    /// Walks from `v` along free spans until a leaf, consuming them.
    fn extend(&mut self, mut v: VNode) -> Vec<(SpanId, VNode)> {
        let mut out = Vec::new();
        loop {
            let options = self.free(v);
            let Some((s, w)) = self.pick(&options) else {
                return out;
            };
            self.used.insert(s);
            out.push((s, w));
            v = w;
        }
    }

    fn node(&self, v: VNode) -> TrailNode {
        TrailNode {
            vnode: v,
            node: self.group.vnodes[v],
            entries: Vec::new(),
        }
    }

    /// Vertices behind `span` as seen from `from`, over free spans.
    fn subtree(&self, from: VNode, span: SpanId, first: VNode) -> Vec<VNode> {
        let mut seen = BTreeSet::from([from, first]);
        let mut stack = vec![first];
        let mut out = Vec::new();
        while let Some(v) = stack.pop() {
            out.push(v);
            for &(s, w) in &self.adjacency[v] {
                if s != span && !self.used.contains(&s) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        out
    }

    /// Vertices and spans of a bare path from `first` out to a leaf, if the
    /// subtree is one.
    fn bare_path(&self, span: SpanId, first: VNode) -> Option<(Vec<VNode>, Vec<SpanId>)> {
        let (mut nodes, mut spans) = (vec![first], vec![span]);
        let mut came = span;
        loop {
            let v = *nodes.last()?;
            let onward: Vec<_> = self.adjacency[v]
                .iter()
                .filter(|&&(s, _)| s != came && !self.used.contains(&s))
                .collect();
            match onward.as_slice() {
                [] => return Some((nodes, spans)),
                [&(s, w)] => {
                    nodes.push(w);
                    spans.push(s);
                    came = s;
                }
                _ => return None,
            }
        }
    }

    /// Fills the entries of `trails[t]` from position `start` on, appending
    /// any branch trails it spawns.
    fn place(&mut self, trails: &mut Vec<Trail>, t: usize, start: usize, queue: &mut VecDeque<usize>) {
        for k in start..trails[t].nodes.len() {
            let v = trails[t].nodes[k].vnode;
            if let Some(labels) = self.endpoints.get(&v) {
                trails[t].nodes[k].entries.push(Entry::Endpoint(labels.clone()));
            }
            for (s, w) in self.free(v) {
                if self.used.contains(&s) {
                    continue;
                }
                let behind = self.subtree(v, s, w);
                let entities: Vec<EndpointLabel> = behind
                    .iter()
                    .flat_map(|u| self.endpoints.get(u).cloned().unwrap_or_default())
                    .collect();
                if let ([label], Some((nodes, spans))) = (entities.as_slice(), self.bare_path(s, w)) {
                    if self.endpoints.get(nodes.last().expect("path")).is_some() {
                        for &x in &spans {
                            self.used.insert(x);
                        }
                        let phys = nodes.iter().map(|&u| self.group.vnodes[u]).collect();
                        trails[t].nodes[k].entries.push(Entry::Spur {
                            label: *label,
                            nodes,
                            phys,
                            spans,
                        });
                        continue;
                    }
                }
                let merged = unpaired(&entities);
                let mut head = self.node(v);
                head.entries
                    .push(Entry::Complement(merged.iter().map(|l| l.partner()).collect::<BTreeSet<_>>().into_iter().collect()));
                self.used.insert(s);
                let mut nodes = vec![head, self.node(w)];
                let mut spans = vec![s];
                for (x, u) in self.extend(w) {
                    spans.push(x);
                    nodes.push(self.node(u));
                }
                let child = trails.len();
                trails.push(Trail {
                    parent: Some((t, k)),
                    nodes,
                    spans,
                });
                trails[t].nodes[k].entries.push(Entry::Branch { merged, child });
                queue.push_back(child);
            }
        }
    }
}

/// Entities whose partner is not in the same set, sorted.
fn unpaired(entities: &[EndpointLabel]) -> Vec<EndpointLabel> {
    let set: BTreeSet<EndpointLabel> = entities.iter().copied().collect();
    set.iter().copied().filter(|l| !set.contains(&l.partner())).collect()
}

pub fn build_trails(group: &GroupTopology) -> Result<TrailPlan, TrailError> {
    build_trails_with(group, TrailChoice::LowestSpan)
}

/// Flattens an acyclic group topology into a truck trail per component
/// plus branch trails.
pub fn build_trails_with(group: &GroupTopology, choice: TrailChoice) -> Result<TrailPlan, TrailError> {
    let adjacency = group.adjacency();
    for (&v, labels) in &group.endpoint_map() {
        if v >= group.vnodes.len() || adjacency[v].is_empty() {
            return Err(TrailError::EndpointOffTopology(labels[0]));
        }
    }
    let mut b = Builder {
        group,
        adjacency,
        endpoints: group.endpoint_map(),
        used: BTreeSet::new(),
        rng: match choice {
            TrailChoice::LowestSpan => None,
            TrailChoice::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed ^ group.group as u64)),
        },
    };
    let mut trails: Vec<Trail> = Vec::new();
    for comp in group.components() {
        let mut spans: Vec<(SpanId, VNode)> = Vec::new();
        for &v in &comp {
            spans.extend(b.adjacency[v].iter().filter(|&&(_, w)| w > v).map(|&(s, w)| (s, w)));
        }
        spans.sort_unstable();
        let Some((seed, _)) = b.pick(&spans) else { continue };
        let (x, y) = group.edges[&seed];
        b.used.insert(seed);
        let left = b.extend(x);
        let right = b.extend(y);
        let mut nodes: Vec<TrailNode> = left.iter().rev().map(|&(_, u)| b.node(u)).collect();
        let mut tspans: Vec<SpanId> = left.iter().rev().map(|&(s, _)| s).collect();
        nodes.push(b.node(x));
        nodes.push(b.node(y));
        tspans.push(seed);
        for &(s, u) in &right {
            tspans.push(s);
            nodes.push(b.node(u));
        }
        let root = trails.len();
        trails.push(Trail {
            parent: None,
            nodes,
            spans: tspans,
        });
        let mut queue = VecDeque::from([root]);
        let mut first = true;
        while let Some(t) = queue.pop_front() {
            let start = if first { 0 } else { 1 };
            first = false;
            b.place(&mut trails, t, start, &mut queue);
        }
    }
    Ok(TrailPlan {
        group: group.group,
        members: group.members.clone(),
        trails,
    })
}
