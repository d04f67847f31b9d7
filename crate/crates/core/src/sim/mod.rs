//! Slot-level XOR coding simulation of trail plans under single span failures.
//!
//! Each symbol is a 64-bit word, so one simulated slot exercises 64 bit
//! lanes at once. Streams are aligned by symbol index: a node combines the
//! inputs that belong to the same index, and the slot at which each symbol
//! crosses a span decides whether a failure hits it.

mod run;

pub use run::{simulate, sweep_all_failures, DirectionReport, FailureScenario, SimReport, Sweep, SweepLine};

use std::collections::{BTreeMap, BTreeSet};

use crate::cpp::Mode;
use crate::net::{DemandId, NodeId, SpanId, Topology};
use crate::spp::SppSolution;
use crate::trail::{EndpointLabel, End, TrailSet, TrailViolation, VNode};

pub type Symbol = u64;

/// XOR of a set of symbols; decoding one from the parity of all is the same
/// sum over the rest.
pub fn xor_all(symbols: impl IntoIterator<Item = Symbol>) -> Symbol {
    symbols.into_iter().fold(0, |a, b| a ^ b)
}

/// Directed stream: symbols sent on `span` by vertex `from`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stream {
    pub span: SpanId,
    pub from: VNode,
}

/// `out` carries the XOR of `inputs` and the parity of `local` endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorRule {
    pub out: Stream,
    pub inputs: Vec<Stream>,
    pub local: Vec<EndpointLabel>,
}

/// What an endpoint reads off the protection side to recover its partner's data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tap {
    pub label: EndpointLabel,
    pub inputs: Vec<Stream>,
    pub local: Vec<EndpointLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeProgram {
    pub group: usize,
    pub vnode: VNode,
    pub node: NodeId,
    pub rules: Vec<XorRule>,
    pub taps: Vec<Tap>,
    /// Relaxed groups: endpoints here stop sending parity when their
    /// protection side reports loss of signal and their primary is still
    /// lit one primary traversal later.
    pub terminate_on_los: bool,
}

impl NodeProgram {
    /// Passes one stream through unchanged in each direction and hosts no endpoint.
    pub fn is_forwarder(&self) -> bool {
        self.taps.is_empty() && self.rules.iter().all(|r| r.inputs.len() == 1 && r.local.is_empty())
    }

    pub fn rule_for(&self, out: Stream) -> Option<&XorRule> {
        self.rules.iter().find(|r| r.out == out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupProgram {
    pub group: usize,
    pub members: Vec<DemandId>,
    pub nodes: Vec<NodeProgram>,
    /// `(span, a, b)` for every link the group codes over.
    pub links: Vec<(SpanId, VNode, VNode)>,
}

/// Compiled programs for a whole trail set plus the primaries they protect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Programs {
    pub mode: Mode,
    pub groups: Vec<GroupProgram>,
    /// Primary spans of each demand, source to target.
    pub primaries: BTreeMap<DemandId, Vec<SpanId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("group {group} cannot be compiled: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    UncompilablePlan {
        group: usize,
        violations: Vec<TrailViolation>,
    },
    #[error("group {group}: endpoint {label} is not at its demand's end node")]
    EndpointMismatch { group: usize, label: EndpointLabel },
    #[error("span {0} does not exist")]
    UnknownSpan(SpanId),
}

/// Turns each trail plan into per-vertex XOR rules: every link out of a
/// vertex carries the sum of everything arriving on its other links plus the
/// parities of the endpoints sitting there.
pub fn compile_programs(set: &TrailSet, spp: &SppSolution, topology: &Topology) -> Result<Programs, SimError> {
    let mut groups = Vec::new();
    for plan in &set.plans {
        let violations = crate::trail::check_plan(plan, topology);
        if !violations.is_empty() {
            return Err(SimError::UncompilablePlan {
                group: plan.group,
                violations,
            });
        }
        let sites = plan.endpoint_sites();
        for &(label, _, node) in &sites {
            let p = spp.primary(label.demand);
            let want = match label.end {
                End::Source => p.source(),
                End::Target => p.target(),
            };
            if node != want {
                return Err(SimError::EndpointMismatch {
                    group: plan.group,
                    label,
                });
            }
        }
        let links = plan.links();
        let mut incident: BTreeMap<VNode, Vec<(SpanId, VNode)>> = BTreeMap::new();
        for &(s, a, b) in &links {
            incident.entry(a).or_default().push((s, b));
            incident.entry(b).or_default().push((s, a));
        }
        let mut local: BTreeMap<VNode, Vec<EndpointLabel>> = BTreeMap::new();
        for &(label, v, _) in &sites {
            local.entry(v).or_default().push(label);
        }
        let table = plan.vnode_table();
        let vertices: BTreeSet<VNode> = incident.keys().chain(local.keys()).copied().collect();
        let mut nodes = Vec::new();
        for v in vertices {
            let inc = incident.get(&v).cloned().unwrap_or_default();
            let here = local.get(&v).cloned().unwrap_or_default();
            let arriving = |skip: Option<SpanId>| -> Vec<Stream> {
                inc.iter()
                    .filter(|(s, _)| Some(*s) != skip)
                    .map(|&(s, w)| Stream { span: s, from: w })
                    .collect()
            };
            let rules = inc
                .iter()
                .map(|&(s, _)| XorRule {
                    out: Stream { span: s, from: v },
                    inputs: arriving(Some(s)),
                    local: here.clone(),
                })
                .collect();
            let taps = here
                .iter()
                .map(|&label| Tap {
                    label,
                    inputs: arriving(None),
                    local: here.iter().copied().filter(|&l| l != label).collect(),
                })
                .collect();
            nodes.push(NodeProgram {
                group: plan.group,
                vnode: v,
                node: table[&v],
                rules,
                taps,
                terminate_on_los: set.mode == Mode::Relaxed,
            });
        }
        groups.push(GroupProgram {
            group: plan.group,
            members: plan.members.clone(),
            nodes,
            links,
        });
    }
    let primaries = (0..spp.demand_count())
        .map(|d| (d, spp.primary(d).spans().to_vec()))
        .collect();
    Ok(Programs {
        mode: set.mode,
        groups,
        primaries,
    })
}
