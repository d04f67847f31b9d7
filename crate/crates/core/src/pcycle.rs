//! p-cycle spare placement over an enumerated candidate set.

use std::collections::BTreeSet;
use std::fmt::Write;

use num_traits::{Float, FromPrimitive};

use crate::ilp::{self, Direction, IlpModel, Limits, Sense};
use crate::net::{NodeId, SpanId, Topology};

pub const DEFAULT_MAX_HOPS: usize = 8;
pub const DEFAULT_MAX_COUNT: usize = 5000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PCycleError {
    #[error("span {0} carries working capacity but no candidate cycle protects it")]
    Uncoverable(SpanId),
    #[error(transparent)]
    Ilp(#[from] ilp::IlpError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A simple cycle. `nodes` starts at its smallest node and `spans[i]` joins
/// `nodes[i]` to `nodes[i + 1]` (wrapping).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cycle {
    pub nodes: Vec<NodeId>,
    pub spans: Vec<SpanId>,
}

impl Cycle {
    pub fn hop_count(&self) -> usize {
        self.spans.len()
    }

    pub fn cost(&self, topology: &Topology) -> i64 {
        topology.cost_of(&self.spans)
    }

    pub fn contains_span(&self, span: SpanId) -> bool {
        self.spans.contains(&span)
    }

    /// Protection units one copy offers a failure of `span`: 1 on the cycle,
    /// 2 if both ends are on it but the span is not.
    pub fn protects(&self, topology: &Topology, span: SpanId) -> u32 {
        if self.contains_span(span) {
            return 1;
        }
        let s = topology.span(span);
        if self.nodes.contains(&s.a) && self.nodes.contains(&s.b) {
            2
        } else {
            0
        }
    }

    fn key(&self) -> (usize, Vec<SpanId>) {
        let mut s = self.spans.clone();
        s.sort_unstable();
        (s.len(), s)
    }

    /// Longest propagation delay between two nodes along the cycle: the whole
    /// loop minus its shortest span.
    pub fn longest_delay_ms<T: Float + FromPrimitive>(&self, topology: &Topology, ms_per_km: T) -> T {
        let lens: Vec<f64> = self.spans.iter().map(|&s| topology.span(s).length_km).collect();
        let total: f64 = lens.iter().sum();
        let shortest = lens.iter().copied().fold(f64::INFINITY, f64::min);
        T::from_f64(total - shortest).unwrap() * ms_per_km
    }
}

/// All simple cycles of at most `max_hops` spans, ordered by length and then
/// by sorted span ids, cut at `max_count`.
pub fn enumerate_cycles(topology: &Topology, max_hops: usize, max_count: usize) -> Vec<Cycle> {
    let n = topology.node_count();
    let mut found = Vec::new();
    let mut nodes = Vec::new();
    let mut spans = Vec::new();
    let mut on_path = vec![false; n];
    fn dfs(
        t: &Topology,
        start: NodeId,
        u: NodeId,
        max_hops: usize,
        nodes: &mut Vec<NodeId>,
        spans: &mut Vec<SpanId>,
        on_path: &mut Vec<bool>,
        found: &mut Vec<Cycle>,
    ) {
        for &(s, w) in t.neighbors(u) {
            if w == start {
                // each cycle is met in both directions; keep one
                if nodes.len() >= 3 && nodes[1] < nodes[nodes.len() - 1] {
                    let mut sp = spans.clone();
                    sp.push(s);
                    found.push(Cycle { nodes: nodes.clone(), spans: sp });
                }
            } else if w > start && !on_path[w] && nodes.len() < max_hops {
                on_path[w] = true;
                nodes.push(w);
                spans.push(s);
                dfs(t, start, w, max_hops, nodes, spans, on_path, found);
                nodes.pop();
                spans.pop();
                on_path[w] = false;
            }
        }
    }
    for s in 0..n {
        nodes.push(s);
        on_path[s] = true;
        dfs(topology, s, s, max_hops, &mut nodes, &mut spans, &mut on_path, &mut found);
        on_path[s] = false;
        nodes.clear();
    }
    found.sort_by_cached_key(Cycle::key);
    found.dedup_by(|a, b| a.key() == b.key());
    found.truncate(max_count);
    found
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PCycleSolution {
    /// Chosen cycles with their copy counts, in candidate order.
    pub cycles: Vec<(Cycle, u32)>,
    pub spare: Vec<u32>,
    pub spare_cost: i64,
    pub optimal: bool,
}

/// Per chosen cycle: nodes on it and its longest node-to-node delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleStats<T> {
    pub nodes: usize,
    pub delay_ms: T,
}

impl PCycleSolution {
    fn from_choice(topology: &Topology, cycles: Vec<(Cycle, u32)>, optimal: bool) -> Self {
        let mut spare = vec![0u32; topology.span_count()];
        for (c, m) in &cycles {
            for &s in &c.spans {
                spare[s] += m;
            }
        }
        let spare_cost = crate::spp::capacity_cost(topology, &spare);
        PCycleSolution {
            cycles,
            spare,
            spare_cost,
            optimal,
        }
    }

    /// Protection units available to a failure of `span`.
    pub fn protection_for(&self, topology: &Topology, span: SpanId) -> u32 {
        self.cycles.iter().map(|(c, m)| m * c.protects(topology, span)).sum()
    }

    pub fn stats<T: Float + FromPrimitive>(&self, topology: &Topology, ms_per_km: T) -> Vec<CycleStats<T>> {
        self.cycles
            .iter()
            .map(|(c, _)| CycleStats {
                nodes: c.nodes.len(),
                delay_ms: c.longest_delay_ms(topology, ms_per_km),
            })
            .collect()
    }

    pub fn to_text(&self, topology: &Topology) -> String {
        let mut out = String::from("cpprot-pcycle 1\n");
        let _ = writeln!(out, "optimal {}", self.optimal);
        let _ = writeln!(out, "spare_cost {}", self.spare_cost);
        for (c, m) in &self.cycles {
            let names: Vec<&str> = c.nodes.iter().map(|&v| topology.node_name(v)).collect();
            let _ = writeln!(out, "cycle {m} {}", names.join(" "));
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(topology: &Topology, text: &str) -> Result<Self, PCycleError> {
        let err = |line: usize, m: &str| PCycleError::Parse {
            line,
            message: m.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, "cpprot-pcycle 1")) => {}
            Some((n, _)) => return Err(err(n, "not a p-cycle file")),
            None => return Err(err(0, "empty input")),
        }
        let mut optimal = None;
        let mut cost = None;
        let mut cycles = Vec::new();
        let mut ended = false;
        for (n, l) in lines {
            let w: Vec<&str> = l.split_whitespace().collect();
            match w.as_slice() {
                ["optimal", v] => optimal = Some(v.parse::<bool>().map_err(|_| err(n, "bad flag"))?),
                ["spare_cost", v] => cost = Some(v.parse::<i64>().map_err(|_| err(n, "bad cost"))?),
                ["cycle", m, names @ ..] if names.len() >= 3 => {
                    let m: u32 = m.parse().map_err(|_| err(n, "bad multiplicity"))?;
                    let nodes = names
                        .iter()
                        .map(|s| topology.node_id(s).ok_or_else(|| err(n, &format!("unknown node `{s}`"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    let mut spans = Vec::new();
                    for i in 0..nodes.len() {
                        let (a, b) = (nodes[i], nodes[(i + 1) % nodes.len()]);
                        spans.push(topology.span_between(a, b).ok_or_else(|| err(n, "nodes not adjacent"))?);
                    }
                    if nodes.iter().collect::<BTreeSet<_>>().len() != nodes.len() {
                        return Err(err(n, "cycle repeats a node"));
                    }
                    cycles.push((Cycle { nodes, spans }, m));
                }
                ["end"] => {
                    ended = true;
                    break;
                }
                _ => return Err(err(n, &format!("unrecognised line `{l}`"))),
            }
        }
        if !ended {
            return Err(err(0, "missing `end`"));
        }
        let sol = Self::from_choice(topology, cycles, optimal.ok_or_else(|| err(0, "missing optimal"))?);
        if cost != Some(sol.spare_cost) {
            return Err(err(0, "spare_cost does not match the cycles"));
        }
        Ok(sol)
    }
}

/// Result of [`build_pcycle_model`]: one copy-count variable per candidate.
pub struct PCycleModel {
    pub model: IlpModel,
    /// Protection coefficient rows `(span, [(candidate, units)])`.
    pub rows: Vec<(SpanId, Vec<(usize, u32)>)>,
}

pub fn build_pcycle_model(topology: &Topology, working: &[u32], cycles: &[Cycle]) -> Result<PCycleModel, PCycleError> {
    let mut rows = Vec::new();
    for (e, &w) in working.iter().enumerate() {
        if w == 0 {
            continue;
        }
        let row: Vec<(usize, u32)> = cycles
            .iter()
            .enumerate()
            .filter_map(|(c, cy)| Some((c, cy.protects(topology, e))).filter(|x| x.1 > 0))
            .collect();
        if row.is_empty() {
            return Err(PCycleError::Uncoverable(e));
        }
        rows.push((e, row));
    }
    let mut model = IlpModel::new();
    let top = working.iter().copied().max().unwrap_or(0) as i64;
    for c in 0..cycles.len() {
        model.add_integer(format!("n{c}"), 0, top);
    }
    for (e, row) in &rows {
        model.add_constraint(
            format!("cover{e}"),
            row.iter().map(|&(c, k)| (c, k as i64)).collect(),
            Sense::Ge,
            working[*e] as i64,
        );
    }
    model.set_objective(
        Direction::Minimize,
        cycles.iter().enumerate().map(|(c, cy)| (c, cy.cost(topology))).collect(),
    );
    Ok(PCycleModel { model, rows })
}

/// Cheapest copy counts over `cycles` covering every working unit; the root
/// relaxation rounded up seeds the search.
pub fn plan_pcycle(
    topology: &Topology,
    working: &[u32],
    cycles: &[Cycle],
    limits: &Limits,
) -> Result<PCycleSolution, PCycleError> {
    let pm = build_pcycle_model(topology, working, cycles)?;
    let mut warm: Vec<i64> = match ilp::solve_relaxation(&pm.model, limits)? {
        Some(x) => x.iter().map(|v| (v - 1e-9).ceil().max(0.0) as i64).collect(),
        None => vec![0; cycles.len()],
    };
    // top up anything rounding left short with the cheapest protecting cycle
    for (e, row) in &pm.rows {
        let have: i64 = row.iter().map(|&(c, k)| warm[c] * k as i64).sum();
        let need = working[*e] as i64 - have;
        if need > 0 {
            let &(c, k) = row.iter().min_by_key(|&&(c, _)| (cycles[c].cost(topology), c)).unwrap();
            warm[c] += (need + k as i64 - 1) / k as i64;
        }
    }
    let top = pm.model.variables.first().map_or(0, |v| v.upper);
    for v in &mut warm {
        *v = (*v).min(top);
    }
    let sol = ilp::solve_with::<f64>(&pm.model, limits, Some(&warm))?;
    let chosen = sol
        .values
        .iter()
        .enumerate()
        .filter(|&(_, &m)| m > 0)
        .map(|(c, &m)| (cycles[c].clone(), m as u32))
        .collect();
    Ok(PCycleSolution::from_choice(topology, chosen, sol.is_optimal()))
}
