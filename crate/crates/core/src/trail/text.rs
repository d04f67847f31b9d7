//! Indented text form of a [`TrailSet`], one line per trail entry.

use std::fmt::Write;

use super::{EndpointLabel, Entry, Trail, TrailError, TrailNode, TrailPlan, TrailSet};
use crate::cpp::Mode;
use crate::net::Topology;

const HEADER: &str = "cpprot-trails 1";

fn labels(ls: &[EndpointLabel]) -> String {
    if ls.is_empty() {
        return "-".into();
    }
    ls.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

fn id_list(ids: &[usize]) -> String {
    if ids.is_empty() {
        return "-".into();
    }
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

impl TrailSet {
    pub fn to_text(&self, topology: &Topology) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "mode {}", self.mode);
        let _ = writeln!(out, "savings {}", self.savings);
        let _ = writeln!(out, "spare {}", self.spare_cost);
        let _ = writeln!(out, "fallback {}", id_list(&self.fallback));
        for plan in &self.plans {
            let _ = writeln!(out, "plan {} members {}", plan.group, id_list(&plan.members));
            for (t, trail) in plan.trails.iter().enumerate() {
                let parent = trail.parent.map_or("-".to_string(), |(p, k)| format!("{p}:{k}"));
                let _ = writeln!(out, "trail {t} parent {parent} spans {}", id_list(&trail.spans));
                for n in &trail.nodes {
                    let _ = writeln!(out, "  node {} {}", n.vnode, topology.node_name(n.node));
                    for e in &n.entries {
                        let line = match e {
                            Entry::Endpoint(ls) => format!("endpoint {}", labels(ls)),
                            Entry::Spur {
                                label,
                                nodes,
                                phys,
                                spans,
                            } => {
                                let hops: Vec<String> = spans
                                    .iter()
                                    .zip(nodes)
                                    .zip(phys)
                                    .map(|((s, v), p)| format!("{s}:{v}:{}", topology.node_name(*p)))
                                    .collect();
                                format!("spur {label} via {}", hops.join(" "))
                            }
                            Entry::Branch { merged, child } => {
                                format!("branch {} child {child}", labels(merged))
                            }
                            Entry::Complement(ls) => format!("complement {}", labels(ls)),
                        };
                        let _ = writeln!(out, "    {line}");
                    }
                }
            }
        }
        out.push_str("end\n");
        out
    }
}

fn err(line: usize, message: impl Into<String>) -> TrailError {
    TrailError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_ids(line: usize, s: &str) -> Result<Vec<usize>, TrailError> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| x.parse().map_err(|_| err(line, format!("bad id `{x}`"))))
        .collect()
}

fn parse_labels(line: usize, words: &[&str]) -> Result<Vec<EndpointLabel>, TrailError> {
    if words == ["-"] {
        return Ok(Vec::new());
    }
    words.iter().map(|w| w.parse().map_err(|m: String| err(line, m))).collect()
}

/// Reads the output of [`TrailSet::to_text`].
pub fn parse_trail_set(topology: &Topology, text: &str) -> Result<TrailSet, TrailError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let mut next = |what: &str| lines.next().ok_or_else(|| err(0, format!("missing {what}")));
    let (n, h) = next("header")?;
    if h.trim() != HEADER {
        return Err(err(n, "not a trail file"));
    }
    let mut field = |key: &str| -> Result<(usize, String), TrailError> {
        let (n, l) = next(key)?;
        let rest = l
            .trim()
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| err(n, format!("expected `{key}`")))?;
        Ok((n, rest.to_string()))
    };
    let (n, mode) = field("mode")?;
    let mode: Mode = mode.parse().map_err(|m: String| err(n, m))?;
    let (n, v) = field("savings")?;
    let savings = v.parse().map_err(|_| err(n, "bad savings"))?;
    let (n, v) = field("spare")?;
    let spare_cost = v.parse().map_err(|_| err(n, "bad spare cost"))?;
    let (n, v) = field("fallback")?;
    let fallback = parse_ids(n, &v)?;

    let node_of = |line: usize, name: &str| topology.node_id(name).ok_or_else(|| err(line, format!("unknown node `{name}`")));
    let mut plans: Vec<TrailPlan> = Vec::new();
    let mut ended = false;
    for (n, raw) in lines {
        let words: Vec<&str> = raw.split_whitespace().collect();
        match words.as_slice() {
            ["end"] => {
                ended = true;
                break;
            }
            ["plan", g, "members", m] => plans.push(TrailPlan {
                group: g.parse().map_err(|_| err(n, "bad group id"))?,
                members: parse_ids(n, m)?,
                trails: Vec::new(),
            }),
            ["trail", _, "parent", p, "spans", s] => {
                let plan = plans.last_mut().ok_or_else(|| err(n, "trail outside a plan"))?;
                let parent = match *p {
                    "-" => None,
                    p => {
                        let (a, b) = p.split_once(':').ok_or_else(|| err(n, "bad parent"))?;
                        Some((
                            a.parse().map_err(|_| err(n, "bad parent"))?,
                            b.parse().map_err(|_| err(n, "bad parent"))?,
                        ))
                    }
                };
                plan.trails.push(Trail {
                    parent,
                    nodes: Vec::new(),
                    spans: parse_ids(n, s)?,
                });
            }
            ["node", v, name] => {
                let trail = plans
                    .last_mut()
                    .and_then(|p| p.trails.last_mut())
                    .ok_or_else(|| err(n, "node outside a trail"))?;
                trail.nodes.push(TrailNode {
                    vnode: v.parse().map_err(|_| err(n, "bad vertex"))?,
                    node: node_of(n, name)?,
                    entries: Vec::new(),
                });
            }
            [role, rest @ ..] => {
                let node = plans
                    .last_mut()
                    .and_then(|p| p.trails.last_mut())
                    .and_then(|t| t.nodes.last_mut())
                    .ok_or_else(|| err(n, "entry outside a node"))?;
                let entry = match (*role, rest) {
                    ("endpoint", ls) => Entry::Endpoint(parse_labels(n, ls)?),
                    ("complement", ls) => Entry::Complement(parse_labels(n, ls)?),
                    ("branch", [ls @ .., "child", c]) => Entry::Branch {
                        merged: parse_labels(n, ls)?,
                        child: c.parse().map_err(|_| err(n, "bad child"))?,
                    },
                    ("spur", [label, "via", hops @ ..]) => {
                        let (mut nodes, mut phys, mut spans) = (Vec::new(), Vec::new(), Vec::new());
                        for h in hops {
                            let parts: Vec<&str> = h.splitn(3, ':').collect();
                            let [s, v, name] = parts.as_slice() else {
                                return Err(err(n, format!("bad spur hop `{h}`")));
                            };
                            spans.push(s.parse().map_err(|_| err(n, "bad span"))?);
                            nodes.push(v.parse().map_err(|_| err(n, "bad vertex"))?);
                            phys.push(node_of(n, name)?);
                        }
                        Entry::Spur {
                            label: label.parse().map_err(|m: String| err(n, m))?,
                            nodes,
                            phys,
                            spans,
                        }
                    }
                    _ => return Err(err(n, format!("unrecognised line `{}`", raw.trim()))),
                };
                node.entries.push(entry);
            }
            [] => {}
        }
    }
    if !ended {
        return Err(err(0, "missing `end`"));
    }
    Ok(TrailSet {
        mode,
        plans,
        fallback,
        savings,
        spare_cost,
    })
}
