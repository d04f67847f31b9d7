//! Shared path protection planning over fixed candidate pair sets.

use std::fmt::Write;

use crate::ilp::{self, Direction, IlpModel, Limits, Sense, VarId};
use crate::net::{link_disjoint, Demand, DemandId, Path, PathPair, SpanId, Topology};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SppError {
    #[error("demand {0} has no candidate path pair")]
    Infeasible(DemandId),
    #[error("solver budget exhausted without a plan")]
    BudgetExhausted,
    #[error("{0}")]
    Domain(String),
    #[error("unknown demand {0}")]
    UnknownDemand(DemandId),
    #[error("a demand cannot be compared with itself ({0})")]
    SameDemand(DemandId),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Ilp(#[from] ilp::IlpError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SppSolution {
    pub demands: Vec<Demand>,
    pub pairs: Vec<PathPair>,
    /// Index of the chosen pair in each demand's candidate list.
    pub choice: Vec<usize>,
    pub working: Vec<u32>,
    pub spare: Vec<u32>,
    /// `d_table[i][e]`: protection of demand `i` uses span `e`.
    pub d_table: Vec<Vec<bool>>,
    /// Symmetric; `m_table[i][j]` is true when the primaries are span-disjoint.
    pub m_table: Vec<Vec<bool>>,
    pub working_cost: i64,
    pub spare_cost: i64,
    pub optimal: bool,
}

/// Spare each span needs so that any single failure of another span is
/// restorable, given the chosen pairs.
pub fn shared_spare(topology: &Topology, demands: &[Demand], pairs: &[PathPair]) -> Vec<u32> {
    let n = topology.span_count();
    let mut load = vec![vec![0u32; n]; n];
    for (d, p) in demands.iter().zip(pairs) {
        for &e in p.protection.spans() {
            for &f in p.primary.spans() {
                load[e][f] += d.units;
            }
        }
    }
    (0..n)
        .map(|e| (0..n).filter(|&f| f != e).map(|f| load[e][f]).max().unwrap_or(0))
        .collect()
}

/// Spare with one dedicated unit per protection path crossing the span.
pub fn dedicated_spare(topology: &Topology, demands: &[Demand], pairs: &[PathPair]) -> Vec<u32> {
    let mut spare = vec![0u32; topology.span_count()];
    for (d, p) in demands.iter().zip(pairs) {
        for &e in p.protection.spans() {
            spare[e] += d.units;
        }
    }
    spare
}

pub fn capacity_cost(topology: &Topology, capacity: &[u32]) -> i64 {
    capacity
        .iter()
        .enumerate()
        .map(|(e, &c)| topology.span(e).cost * c as i64)
        .sum()
}

/// Spare capacity as a percentage of working capacity, both in cost units.
pub fn compute_scp(working_cost: i64, spare_cost: i64) -> Result<f64, SppError> {
    if working_cost <= 0 {
        return Err(SppError::Domain(
            "spare capacity percentage undefined for zero working capacity".into(),
        ));
    }
    Ok(100.0 * spare_cost as f64 / working_cost as f64)
}

impl SppSolution {
    pub fn from_pairs(
        topology: &Topology,
        demands: &[Demand],
        pairs: Vec<PathPair>,
        choice: Vec<usize>,
        optimal: bool,
    ) -> Self {
        let n = topology.span_count();
        let mut working = vec![0u32; n];
        for (d, p) in demands.iter().zip(&pairs) {
            for &e in p.primary.spans() {
                working[e] += d.units;
            }
        }
        let spare = shared_spare(topology, demands, &pairs);
        let d_table = pairs
            .iter()
            .map(|p| {
                let mut row = vec![false; n];
                for &e in p.protection.spans() {
                    row[e] = true;
                }
                row
            })
            .collect();
        let m_table = pairs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                pairs
                    .iter()
                    .enumerate()
                    .map(|(j, b)| i != j && link_disjoint(&a.primary, &b.primary))
                    .collect()
            })
            .collect();
        SppSolution {
            demands: demands.to_vec(),
            working_cost: capacity_cost(topology, &working),
            spare_cost: capacity_cost(topology, &spare),
            working,
            spare,
            d_table,
            m_table,
            pairs,
            choice,
            optimal,
        }
    }

    pub fn demand_count(&self) -> usize {
        self.demands.len()
    }

    pub fn scp(&self) -> Result<f64, SppError> {
        compute_scp(self.working_cost, self.spare_cost)
    }

    pub fn total_cost(&self) -> i64 {
        self.working_cost + self.spare_cost
    }

    pub fn primary(&self, i: DemandId) -> &Path {
        &self.pairs[i].primary
    }

    pub fn protection(&self, i: DemandId) -> &Path {
        &self.pairs[i].protection
    }

    pub fn to_text(&self, topology: &Topology) -> String {
        let join = |spans: &[SpanId]| {
            spans
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = String::from("cpprot-spp 1\n");
        let _ = writeln!(out, "optimal {}", self.optimal);
        for (d, (p, c)) in self.demands.iter().zip(self.pairs.iter().zip(&self.choice)) {
            let _ = writeln!(
                out,
                "demand {} {} {} {} pair {} primary {} protection {}",
                d.id,
                topology.node_name(d.a),
                topology.node_name(d.b),
                d.units,
                c,
                join(p.primary.spans()),
                join(p.protection.spans()),
            );
        }
        for e in 0..topology.span_count() {
            let _ = writeln!(
                out,
                "span {e} working {} spare {}",
                self.working[e], self.spare[e]
            );
        }
        out
    }

    /// Reads [`SppSolution::to_text`] output and rechecks every derived field.
    pub fn from_text(topology: &Topology, text: &str) -> Result<Self, SppError> {
        let err = |line: usize, message: String| SppError::Parse { line, message };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, "cpprot-spp 1")) => {}
            _ => return Err(err(1, "missing `cpprot-spp 1` header".into())),
        }
        let mut optimal = false;
        let mut demands = Vec::new();
        let mut pairs = Vec::new();
        let mut choice = Vec::new();
        let mut spans_seen = Vec::new();
        for (idx, line) in lines {
            let no = idx + 1;
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                ["optimal", v] => {
                    optimal = v.parse().map_err(|_| err(no, format!("bad flag `{v}`")))?;
                }
                ["demand", id, a, b, units, "pair", c, "primary", prim, "protection", prot] => {
                    let num = |s: &str| -> Result<usize, SppError> {
                        s.parse().map_err(|_| err(no, format!("bad number `{s}`")))
                    };
                    let node = |s: &str| {
                        topology
                            .node_id(s)
                            .ok_or_else(|| err(no, format!("unknown node `{s}`")))
                    };
                    let list = |s: &str| -> Result<Vec<SpanId>, SppError> {
                        if s == "-" {
                            return Ok(Vec::new());
                        }
                        s.split(',').map(num).collect()
                    };
                    if num(id)? != demands.len() {
                        return Err(err(no, "demand ids must be dense and ordered".into()));
                    }
                    let d = Demand {
                        id: demands.len(),
                        a: node(a)?,
                        b: node(b)?,
                        units: num(units)? as u32,
                    };
                    let path = |s: &str| -> Result<Path, SppError> {
                        let spans = list(s)?;
                        if spans.iter().any(|&e| e >= topology.span_count()) {
                            return Err(err(no, "span id out of range".into()));
                        }
                        Path::from_spans(topology, d.a, &spans).map_err(|e| err(no, e.to_string()))
                    };
                    let pair = PathPair {
                        demand: d.id,
                        primary: path(prim)?,
                        protection: path(prot)?,
                    };
                    if !pair.is_valid() || pair.primary.target() != d.b {
                        return Err(err(no, "invalid path pair".into()));
                    }
                    choice.push(num(c)?);
                    pairs.push(pair);
                    demands.push(d);
                }
                ["span", e, "working", w, "spare", s] => {
                    let parse = |s: &str| -> Result<u32, SppError> {
                        s.parse().map_err(|_| err(no, format!("bad number `{s}`")))
                    };
                    spans_seen.push((no, parse(e)? as usize, parse(w)?, parse(s)?));
                }
                _ => return Err(err(no, format!("unrecognized line `{line}`"))),
            }
        }
        let sol = SppSolution::from_pairs(topology, &demands, pairs, choice, optimal);
        if spans_seen.len() != topology.span_count() {
            return Err(err(0, "span table does not match topology".into()));
        }
        for (no, e, w, s) in spans_seen {
            if e >= topology.span_count() || sol.working[e] != w || sol.spare[e] != s {
                return Err(err(no, format!("capacity of span {e} inconsistent with paths")));
            }
        }
        Ok(sol)
    }
}

/// True when the two demands' primaries are span-disjoint.
pub fn sharing_compatibility(
    solution: &SppSolution,
    i: DemandId,
    j: DemandId,
) -> Result<bool, SppError> {
    let n = solution.demand_count();
    for d in [i, j] {
        if d >= n {
            return Err(SppError::UnknownDemand(d));
        }
    }
    if i == j {
        return Err(SppError::SameDemand(i));
    }
    Ok(solution.m_table[i][j])
}

/// Variable handles of the SPP model.
#[derive(Clone, Debug)]
pub struct SppModel {
    pub model: IlpModel,
    pub x: Vec<Vec<VarId>>,
    pub spare: Vec<VarId>,
}

pub fn build_spp_model(
    topology: &Topology,
    demands: &[Demand],
    candidates: &[Vec<PathPair>],
) -> Result<SppModel, SppError> {
    let n = topology.span_count();
    if let Some(i) = candidates.iter().position(Vec::is_empty) {
        return Err(SppError::Infeasible(i));
    }
    if candidates.len() != demands.len() {
        return Err(SppError::Infeasible(candidates.len().min(demands.len())));
    }
    let mut model = IlpModel::new();
    let mut objective = Vec::new();
    let x: Vec<Vec<VarId>> = candidates
        .iter()
        .enumerate()
        .map(|(i, cands)| {
            (0..cands.len())
                .map(|p| model.add_binary(format!("x_{i}_{p}")))
                .collect()
        })
        .collect();
    let mut reach = vec![0i64; n];
    for (d, cands) in demands.iter().zip(candidates) {
        let mut any = vec![false; n];
        for c in cands {
            for &e in c.protection.spans() {
                any[e] = true;
            }
        }
        for e in 0..n {
            if any[e] {
                reach[e] += d.units as i64;
            }
        }
    }
    let spare: Vec<VarId> = (0..n)
        .map(|e| model.add_integer(format!("spare_{e}"), 0, reach[e]))
        .collect();
    for (i, (d, cands)) in demands.iter().zip(candidates).enumerate() {
        model.add_constraint(
            format!("assign_{i}"),
            x[i].iter().map(|&v| (v, 1)).collect(),
            Sense::Eq,
            1,
        );
        for (p, c) in cands.iter().enumerate() {
            objective.push((x[i][p], d.units as i64 * c.primary.cost(topology)));
        }
    }
    for e in 0..n {
        objective.push((spare[e], topology.span(e).cost));
    }
    // spare_e >= load on e when f fails
    let mut terms: Vec<Vec<Vec<(VarId, i64)>>> = vec![vec![Vec::new(); n]; n];
    for (i, (d, cands)) in demands.iter().zip(candidates).enumerate() {
        for (p, c) in cands.iter().enumerate() {
            for &e in c.protection.spans() {
                for &f in c.primary.spans() {
                    terms[e][f].push((x[i][p], -(d.units as i64)));
                }
            }
        }
    }
    for (e, row) in terms.into_iter().enumerate() {
        for (f, mut t) in row.into_iter().enumerate() {
            if t.is_empty() || e == f {
                continue;
            }
            t.insert(0, (spare[e], 1));
            model.add_constraint(format!("share_{e}_{f}"), t, Sense::Ge, 0);
        }
    }
    model.set_objective(Direction::Minimize, objective);
    Ok(SppModel { model, x, spare })
}

/// Incremental evaluator for a pair assignment, used by the local search.
struct LoadState<'a> {
    topology: &'a Topology,
    demands: &'a [Demand],
    candidates: &'a [Vec<PathPair>],
    load: Vec<Vec<u32>>,
    spare: Vec<u32>,
    choice: Vec<usize>,
}

impl<'a> LoadState<'a> {
    fn new(topology: &'a Topology, demands: &'a [Demand], candidates: &'a [Vec<PathPair>]) -> Self {
        let n = topology.span_count();
        let mut s = LoadState {
            topology,
            demands,
            candidates,
            load: vec![vec![0; n]; n],
            spare: vec![0; n],
            choice: vec![0; demands.len()],
        };
        for i in 0..demands.len() {
            s.apply(i, 0, true);
        }
        for e in 0..n {
            s.refresh(e);
        }
        s
    }

    fn apply(&mut self, i: usize, p: usize, add: bool) {
        let c = &self.candidates[i][p];
        let u = self.demands[i].units;
        for &e in c.protection.spans() {
            for &f in c.primary.spans() {
                if add {
                    self.load[e][f] += u;
                } else {
                    self.load[e][f] -= u;
                }
            }
        }
    }

    fn refresh(&mut self, e: usize) {
        self.spare[e] = self.load[e]
            .iter()
            .enumerate()
            .filter(|&(f, _)| f != e)
            .map(|(_, &l)| l)
            .max()
            .unwrap_or(0);
    }

    fn spare_cost_of(&self, spans: &[SpanId]) -> i64 {
        spans
            .iter()
            .map(|&e| self.topology.span(e).cost * self.spare[e] as i64)
            .sum()
    }

    /// Cost change of moving demand `i` to candidate `q`; state is restored.
    fn delta(&mut self, i: usize, q: usize) -> i64 {
        let p = self.choice[i];
        if p == q {
            return 0;
        }
        let u = self.demands[i].units as i64;
        let (cp, cq) = (&self.candidates[i][p], &self.candidates[i][q]);
        let mut touched: Vec<SpanId> = cp
            .protection
            .spans()
            .iter()
            .chain(cq.protection.spans())
            .copied()
            .collect();
        touched.sort_unstable();
        touched.dedup();
        let work = u * (cq.primary.cost(self.topology) - cp.primary.cost(self.topology));
        let before = self.spare_cost_of(&touched);
        let saved: Vec<u32> = touched.iter().map(|&e| self.spare[e]).collect();
        self.apply(i, p, false);
        self.apply(i, q, true);
        for &e in &touched {
            self.refresh(e);
        }
        let after = self.spare_cost_of(&touched);
        self.apply(i, q, false);
        self.apply(i, p, true);
        for (&e, s) in touched.iter().zip(saved) {
            self.spare[e] = s;
        }
        work + after - before
    }

    fn commit(&mut self, i: usize, q: usize) {
        let p = self.choice[i];
        let mut touched: Vec<SpanId> = self.candidates[i][p]
            .protection
            .spans()
            .iter()
            .chain(self.candidates[i][q].protection.spans())
            .copied()
            .collect();
        touched.sort_unstable();
        touched.dedup();
        self.apply(i, p, false);
        self.apply(i, q, true);
        self.choice[i] = q;
        for e in touched {
            self.refresh(e);
        }
    }
}

/// Best-improvement pair reassignment starting from every demand's cheapest
/// candidate. Deterministic.
pub fn local_search_choice(
    topology: &Topology,
    demands: &[Demand],
    candidates: &[Vec<PathPair>],
) -> Vec<usize> {
    let mut state = LoadState::new(topology, demands, candidates);
    loop {
        let mut improved = false;
        for i in 0..demands.len() {
            let mut best = (0i64, state.choice[i]);
            for q in 0..candidates[i].len() {
                let d = state.delta(i, q);
                if d < best.0 {
                    best = (d, q);
                }
            }
            if best.1 != state.choice[i] {
                state.commit(i, best.1);
                improved = true;
            }
        }
        if !improved {
            return state.choice;
        }
    }
}

/// Picks one candidate pair per demand minimizing working plus shared spare
/// cost. The result is flagged non-optimal when the search budget runs out.
pub fn plan_spp(
    topology: &Topology,
    demands: &[Demand],
    candidates: &[Vec<PathPair>],
    limits: &Limits,
) -> Result<SppSolution, SppError> {
    let spp = build_spp_model(topology, demands, candidates)?;
    let warm_choice = local_search_choice(topology, demands, candidates);
    let mut warm = vec![0i64; spp.model.var_count()];
    for (i, &p) in warm_choice.iter().enumerate() {
        warm[spp.x[i][p]] = 1;
    }
    let chosen: Vec<PathPair> = warm_choice
        .iter()
        .enumerate()
        .map(|(i, &p)| candidates[i][p].clone())
        .collect();
    for (e, s) in shared_spare(topology, demands, &chosen).into_iter().enumerate() {
        warm[spp.spare[e]] = s as i64;
    }
    let sol = match ilp::solve_with::<f64>(&spp.model, limits, Some(&warm)) {
        Ok(s) => s,
        Err(ilp::IlpError::BudgetExhaustedNoIncumbent { .. }) => return Err(SppError::BudgetExhausted),
        Err(e) => return Err(e.into()),
    };
    if sol.status == ilp::SolveStatus::Infeasible {
        return Err(SppError::Infeasible(0));
    }
    let choice: Vec<usize> = spp
        .x
        .iter()
        .map(|vars| vars.iter().position(|&v| sol.value(v) == 1).unwrap())
        .collect();
    let pairs = choice
        .iter()
        .enumerate()
        .map(|(i, &p)| candidates[i][p].clone())
        .collect();
    Ok(SppSolution::from_pairs(
        topology,
        demands,
        pairs,
        choice,
        sol.is_optimal(),
    ))
}
