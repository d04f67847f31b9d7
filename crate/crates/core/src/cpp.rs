//! Conversion of a shared-protection plan into XOR coding groups.

use std::collections::BTreeMap;
use std::fmt::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ilp::{self, Direction, IlpModel, Limits, Sense, VarId};
use crate::net::{DemandId, SpanId, Topology};
use crate::spp::SppSolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Members are pairwise primary-disjoint and no member's primary touches
    /// another member's protection.
    #[default]
    Strict,
    /// Only primary-primary disjointness is required.
    Relaxed,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Strict => "strict",
            Mode::Relaxed => "relaxed",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Mode::Strict),
            "relaxed" => Ok(Mode::Relaxed),
            other => Err(format!("unknown mode `{other}` (expected strict or relaxed)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CppError {
    #[error("demand {0} has {1} units; coding groups carry unit connections only")]
    UnsupportedUnits(DemandId, u32),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Ilp(#[from] ilp::IlpError),
}

fn overlaps(a: &[SpanId], b: &[SpanId]) -> bool {
    a.iter().any(|s| b.contains(s))
}

/// Whether demands `i` and `j` may sit in one coding group under `mode`.
pub fn compatible(spp: &SppSolution, i: DemandId, j: DemandId, mode: Mode) -> bool {
    if i == j {
        return true;
    }
    if !spp.m_table[i][j] {
        return false;
    }
    match mode {
        Mode::Relaxed => true,
        Mode::Strict => {
            let (pi, pj) = (&spp.pairs[i], &spp.pairs[j]);
            !overlaps(pi.primary.spans(), pj.protection.spans())
                && !overlaps(pj.primary.spans(), pi.protection.spans())
        }
    }
}

/// Cost of a partition: every group pays each span its members' protections use once.
pub fn partition_cost(topology: &Topology, spp: &SppSolution, groups: &[Vec<DemandId>]) -> i64 {
    coded_capacity(topology, spp, groups)
        .iter()
        .enumerate()
        .map(|(e, &c)| topology.span(e).cost * c as i64)
        .sum()
}

fn coded_capacity(topology: &Topology, spp: &SppSolution, groups: &[Vec<DemandId>]) -> Vec<u32> {
    let mut cap = vec![0u32; topology.span_count()];
    for g in groups {
        let mut used = vec![false; topology.span_count()];
        for &i in g {
            for &e in spp.protection(i).spans() {
                used[e] = true;
            }
        }
        for (e, u) in used.into_iter().enumerate() {
            cap[e] += u as u32;
        }
    }
    cap
}

/// True iff every pair inside every group is compatible.
pub fn partition_is_valid(spp: &SppSolution, groups: &[Vec<DemandId>], mode: Mode) -> bool {
    groups.iter().all(|g| {
        g.iter()
            .enumerate()
            .all(|(a, &i)| g[a + 1..].iter().all(|&j| compatible(spp, i, j, mode)))
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodingPlan {
    pub mode: Mode,
    /// Sorted members, groups ordered by smallest member.
    pub groups: Vec<Vec<DemandId>>,
    pub group_of: Vec<usize>,
    /// Symmetric same-group indicator (diagonal false).
    pub n_table: Vec<Vec<bool>>,
    /// Per span, the coded pairs `(i, j)` with `i < j`.
    pub r_table: Vec<Vec<(DemandId, DemandId)>>,
    /// `s_table[i][e]`: demand `i` rides on an earlier group member's unit on `e`.
    pub s_table: Vec<Vec<bool>>,
    pub coded_spare: Vec<u32>,
    pub coded_spare_cost: i64,
    pub extra_cost: i64,
    pub optimal: bool,
}

impl CodingPlan {
    /// Canonical tables for a partition.
    pub fn from_groups(
        topology: &Topology,
        spp: &SppSolution,
        mode: Mode,
        mut groups: Vec<Vec<DemandId>>,
        optimal: bool,
    ) -> Self {
        let n = spp.demand_count();
        let spans = topology.span_count();
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.retain(|g| !g.is_empty());
        groups.sort();
        let mut group_of = vec![usize::MAX; n];
        for (k, g) in groups.iter().enumerate() {
            for &i in g {
                group_of[i] = k;
            }
        }
        let mut n_table = vec![vec![false; n]; n];
        let mut r_table = vec![Vec::new(); spans];
        let mut s_table = vec![vec![false; spans]; n];
        for g in &groups {
            for (a, &i) in g.iter().enumerate() {
                for &j in &g[a + 1..] {
                    n_table[i][j] = true;
                    n_table[j][i] = true;
                    for e in 0..spans {
                        if spp.d_table[i][e] && spp.d_table[j][e] {
                            r_table[e].push((i, j));
                            s_table[j][e] = true;
                        }
                    }
                }
            }
        }
        for r in &mut r_table {
            r.sort_unstable();
            r.dedup();
        }
        let coded_spare = coded_capacity(topology, spp, &groups);
        let coded_spare_cost: i64 = coded_spare
            .iter()
            .enumerate()
            .map(|(e, &c)| topology.span(e).cost * c as i64)
            .sum();
        CodingPlan {
            mode,
            groups,
            group_of,
            n_table,
            r_table,
            s_table,
            coded_spare,
            coded_spare_cost,
            extra_cost: coded_spare_cost - spp.spare_cost,
            optimal,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("cpprot-cpp 1\n");
        let _ = writeln!(out, "mode {}", self.mode);
        let _ = writeln!(out, "optimal {}", self.optimal);
        for (k, g) in self.groups.iter().enumerate() {
            let members: Vec<String> = g.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(out, "group {k} members {}", members.join(","));
        }
        for (e, c) in self.coded_spare.iter().enumerate() {
            let _ = writeln!(out, "span {e} coded {c}");
        }
        let _ = writeln!(out, "cost coded {} extra {}", self.coded_spare_cost, self.extra_cost);
        out
    }

    pub fn from_text(topology: &Topology, spp: &SppSolution, text: &str) -> Result<Self, CppError> {
        let err = |line: usize, message: String| CppError::Parse { line, message };
        let mut mode = None;
        let mut optimal = false;
        let mut groups = Vec::new();
        let mut coded = Vec::new();
        let mut header = false;
        for (idx, line) in text.lines().enumerate() {
            let no = idx + 1;
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                [] => {}
                ["cpprot-cpp", "1"] => header = true,
                ["mode", m] => mode = Some(m.parse::<Mode>().map_err(|e| err(no, e))?),
                ["optimal", v] => optimal = *v == "true",
                ["group", _, "members", list] => {
                    let members: Result<Vec<usize>, _> = list.split(',').map(str::parse).collect();
                    let members = members.map_err(|_| err(no, format!("bad member list `{list}`")))?;
                    if members.iter().any(|&i| i >= spp.demand_count()) {
                        return Err(err(no, "member id out of range".into()));
                    }
                    groups.push(members);
                }
                ["span", _, "coded", c] => {
                    coded.push(c.parse::<u32>().map_err(|_| err(no, format!("bad count `{c}`")))?);
                }
                ["cost", ..] => {}
                _ => return Err(err(no, format!("unrecognized line `{line}`"))),
            }
        }
        if !header {
            return Err(err(1, "missing `cpprot-cpp 1` header".into()));
        }
        let mode = mode.ok_or_else(|| err(0, "missing mode line".into()))?;
        let plan = CodingPlan::from_groups(topology, spp, mode, groups, optimal);
        if plan.coded_spare != coded {
            return Err(err(0, "coded capacities inconsistent with groups".into()));
        }
        Ok(plan)
    }
}

/// Variable handles of a conversion model over a subset of demands.
#[derive(Clone, Debug)]
pub struct ConversionModel {
    pub model: IlpModel,
    pub members: Vec<DemandId>,
    /// `n[(a, b)]` for local indices `a < b`.
    pub n: BTreeMap<(usize, usize), VarId>,
    pub r: BTreeMap<(SpanId, usize, usize), VarId>,
    pub s: BTreeMap<(SpanId, usize), VarId>,
}

/// The full conversion model over every demand of `spp`.
pub fn build_conversion_model(topology: &Topology, spp: &SppSolution, mode: Mode) -> ConversionModel {
    let all: Vec<DemandId> = (0..spp.demand_count()).collect();
    build_model_for(topology, spp, mode, &all)
}

fn build_model_for(
    topology: &Topology,
    spp: &SppSolution,
    mode: Mode,
    members: &[DemandId],
) -> ConversionModel {
    let k = members.len();
    let spans = topology.span_count();
    let d = |a: usize, e: SpanId| spp.d_table[members[a]][e];
    let mut model = IlpModel::new();
    let mut n = BTreeMap::new();
    for a in 0..k {
        for b in a + 1..k {
            let v = model.add_binary(format!("n_{}_{}", members[a], members[b]));
            n.insert((a, b), v);
        }
    }
    let nv = |a: usize, b: usize| n[&(a.min(b), a.max(b))];
    let mut r = BTreeMap::new();
    for e in 0..spans {
        for a in 0..k {
            for b in a + 1..k {
                if d(a, e) && d(b, e) {
                    let v = model.add_binary(format!("r_{e}_{}_{}", members[a], members[b]));
                    r.insert((e, a, b), v);
                }
            }
        }
    }
    let mut s = BTreeMap::new();
    for e in 0..spans {
        for b in 0..k {
            if d(b, e) && (0..b).any(|a| d(a, e)) {
                let v = model.add_binary(format!("s_{e}_{}", members[b]));
                s.insert((e, b), v);
            }
        }
    }
    let mut constant = 0i64;
    for e in 0..spans {
        for a in 0..k {
            if d(a, e) {
                constant += topology.span(e).cost;
            }
        }
    }
    let objective = s
        .iter()
        .map(|(&(e, _), &v)| (v, -topology.span(e).cost))
        .collect();
    model.set_objective(Direction::Minimize, objective);
    model.objective_constant = constant;

    // coded pairs need a shared group
    for (&(e, a, b), &v) in &r {
        model.add_constraint(
            format!("pair_{e}_{}_{}", members[a], members[b]),
            vec![(v, 1), (nv(a, b), -1)],
            Sense::Le,
            0,
        );
    }
    for a in 0..k {
        for b in a + 1..k {
            let (i, j) = (members[a], members[b]);
            let m = spp.m_table[i][j] as i64;
            model.add_constraint(format!("disjoint_{i}_{j}"), vec![(nv(a, b), 1)], Sense::Le, m);
            if mode == Mode::Strict && m == 1 && !compatible(spp, i, j, mode) {
                model.add_constraint(format!("cross_{i}_{j}"), vec![(nv(a, b), 1)], Sense::Eq, 0);
            }
        }
    }
    for a in 0..k {
        for b in a + 1..k {
            for c in 0..k {
                if c == a || c == b {
                    continue;
                }
                model.add_constraint(
                    format!("trans_{}_{}_{}", members[a], members[b], members[c]),
                    vec![(nv(a, b), 1), (nv(a, c), -1), (nv(b, c), -1)],
                    Sense::Ge,
                    -1,
                );
            }
        }
    }
    for (&(e, b), &v) in &s {
        let mut terms = vec![(v, 1)];
        for a in 0..b {
            if let Some(&rv) = r.get(&(e, a, b)) {
                terms.push((rv, -1));
            }
        }
        model.add_constraint(format!("save_{e}_{}", members[b]), terms, Sense::Le, 0);
    }
    ConversionModel {
        model,
        members: members.to_vec(),
        n,
        r,
        s,
    }
}

impl ConversionModel {
    /// Variable assignment realizing a partition of `members` (local indices).
    pub fn assignment_for(&self, spp: &SppSolution, groups: &[Vec<usize>]) -> Vec<i64> {
        let k = self.members.len();
        let mut group = vec![usize::MAX; k];
        for (g, block) in groups.iter().enumerate() {
            for &a in block {
                group[a] = g;
            }
        }
        let mut x = vec![0i64; self.model.var_count()];
        for (&(a, b), &v) in &self.n {
            x[v] = (group[a] == group[b]) as i64;
        }
        for (&(_, a, b), &v) in &self.r {
            x[v] = (group[a] == group[b]) as i64;
        }
        for (&(e, b), &v) in &self.s {
            x[v] = (0..b).any(|a| group[a] == group[b] && spp.d_table[self.members[a]][e]) as i64;
        }
        x
    }

    /// Groups (local indices) from the `n` values via union-find.
    pub fn groups_from(&self, values: &[i64]) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.members.len());
        for (&(a, b), &v) in &self.n {
            if values[v] == 1 {
                uf.union(a, b);
            }
        }
        uf.classes()
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        true
    }

    /// Classes in order of smallest element, members sorted.
    pub(crate) fn classes(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..n {
            let r = self.find(x);
            by_root.entry(r).or_default().push(x);
        }
        by_root.into_values().collect()
    }
}

/// How [`convert_with`] splits the work.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Decomposition {
    /// Solve one model per connected component of the "compatible and
    /// protections overlap" graph; exact, and much smaller models.
    #[default]
    ByInteraction,
    Whole,
}

/// Components of the interaction graph, each sorted, ordered by smallest id.
pub fn interaction_components(spp: &SppSolution, mode: Mode) -> Vec<Vec<DemandId>> {
    let n = spp.demand_count();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if compatible(spp, i, j, mode)
                && overlaps(spp.protection(i).spans(), spp.protection(j).spans())
            {
                uf.union(i, j);
            }
        }
    }
    uf.classes()
}

/// Working state for partition search over a subset of demands.
struct PartitionSearch<'a> {
    cost_of: Vec<i64>,
    prot: Vec<&'a [SpanId]>,
    compat: Vec<Vec<bool>>,
    group: Vec<usize>,
    members: Vec<Vec<usize>>,
    usage: Vec<Vec<u32>>,
}

impl<'a> PartitionSearch<'a> {
    fn new(topology: &Topology, spp: &'a SppSolution, mode: Mode, ids: &[DemandId]) -> Self {
        let k = ids.len();
        let spans = topology.span_count();
        let mut s = PartitionSearch {
            cost_of: (0..spans).map(|e| topology.span(e).cost).collect(),
            prot: ids.iter().map(|&i| spp.protection(i).spans()).collect(),
            compat: (0..k)
                .map(|a| (0..k).map(|b| compatible(spp, ids[a], ids[b], mode)).collect())
                .collect(),
            group: vec![0; k],
            members: Vec::new(),
            usage: Vec::new(),
        };
        for a in 0..k {
            s.group[a] = s.members.len();
            s.members.push(vec![a]);
            let mut u = vec![0u32; spans];
            for &e in s.prot[a] {
                u[e] += 1;
            }
            s.usage.push(u);
        }
        s
    }

    fn fits(&self, a: usize, g: usize) -> bool {
        self.members[g].iter().all(|&b| b == a || self.compat[a][b])
    }

    /// Cost change of moving `a` into group `g` (`g == members.len()` opens a new one).
    fn move_delta(&self, a: usize, g: usize) -> i64 {
        let from = self.group[a];
        let mut d = 0;
        for &e in self.prot[a] {
            if self.usage[from][e] == 1 {
                d -= self.cost_of[e];
            }
            if g == self.members.len() || self.usage[g][e] == 0 {
                d += self.cost_of[e];
            }
        }
        d
    }

    fn apply_move(&mut self, a: usize, g: usize) {
        let from = self.group[a];
        if g == self.members.len() {
            self.members.push(Vec::new());
            self.usage.push(vec![0; self.cost_of.len()]);
        }
        self.members[from].retain(|&x| x != a);
        self.members[g].push(a);
        for &e in self.prot[a] {
            self.usage[from][e] -= 1;
            self.usage[g][e] += 1;
        }
        self.group[a] = g;
        if self.members[from].is_empty() {
            let last = self.members.len() - 1;
            self.members.swap_remove(from);
            self.usage.swap_remove(from);
            if from != last {
                for &x in &self.members[from] {
                    self.group[x] = from;
                }
            }
        }
    }

    fn merge_gain(&self, g: usize, h: usize) -> i64 {
        (0..self.cost_of.len())
            .filter(|&e| self.usage[g][e] > 0 && self.usage[h][e] > 0)
            .map(|e| self.cost_of[e])
            .sum()
    }

    fn greedy_merge(&mut self) {
        loop {
            let mut best: Option<(i64, usize, usize)> = None;
            for g in 0..self.members.len() {
                for h in g + 1..self.members.len() {
                    if !self.members[h].iter().all(|&b| self.fits(b, g)) {
                        continue;
                    }
                    let gain = self.merge_gain(g, h);
                    if gain > 0 && best.map_or(true, |(b, _, _)| gain > b) {
                        best = Some((gain, g, h));
                    }
                }
            }
            let Some((_, g, h)) = best else { return };
            for b in self.members[h].clone() {
                self.apply_move(b, g);
            }
        }
    }

    /// Best-improvement single moves until none improves.
    fn descend(&mut self) {
        loop {
            let mut improved = false;
            for a in 0..self.group.len() {
                let from = self.group[a];
                let mut best: Option<(i64, usize)> = None;
                for g in 0..=self.members.len() {
                    if g == from
                        || (g == self.members.len() && self.members[from].len() == 1)
                        || (g < self.members.len() && !self.fits(a, g))
                    {
                        continue;
                    }
                    let d = self.move_delta(a, g);
                    if d < 0 && best.map_or(true, |(b, _)| d < b) {
                        best = Some((d, g));
                    }
                }
                if let Some((_, g)) = best {
                    self.apply_move(a, g);
                    improved = true;
                }
            }
            if !improved {
                return;
            }
        }
    }

    fn cost(&self) -> i64 {
        self.usage
            .iter()
            .map(|u| {
                u.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(e, _)| self.cost_of[e])
                    .sum::<i64>()
            })
            .sum()
    }

    fn snapshot(&self) -> Vec<Vec<usize>> {
        let mut g: Vec<Vec<usize>> = self
            .members
            .iter()
            .map(|m| {
                let mut m = m.clone();
                m.sort_unstable();
                m
            })
            .collect();
        g.sort();
        g
    }

    fn restore(&mut self, groups: &[Vec<usize>]) {
        let spans = self.cost_of.len();
        self.members = groups.to_vec();
        self.usage = groups
            .iter()
            .map(|b| {
                let mut u = vec![0u32; spans];
                for &a in b {
                    for &e in self.prot[a] {
                        u[e] += 1;
                    }
                }
                u
            })
            .collect();
        for (g, b) in groups.iter().enumerate() {
            for &a in b {
                self.group[a] = g;
            }
        }
    }
}

/// Number of perturbation rounds [`heuristic_partition`] spends per component.
pub const SEARCH_ROUNDS: usize = 2000;

/// Greedy merging, then seeded iterated local search over single-demand
/// moves. Deterministic for fixed inputs.
pub fn heuristic_partition(
    topology: &Topology,
    spp: &SppSolution,
    mode: Mode,
    members: &[DemandId],
) -> Vec<Vec<DemandId>> {
    let mut search = PartitionSearch::new(topology, spp, mode, members);
    search.greedy_merge();
    search.descend();
    let mut best = (search.cost(), search.snapshot());
    let k = members.len();
    if k > 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        for _ in 0..SEARCH_ROUNDS {
            for _ in 0..rng.gen_range(1..=3.min(k)) {
                let a = rng.gen_range(0..k);
                let options: Vec<usize> = (0..=search.members.len())
                    .filter(|&g| {
                        g != search.group[a]
                            && (g == search.members.len() || search.fits(a, g))
                    })
                    .collect();
                if let Some(&g) = options.get(rng.gen_range(0..options.len().max(1))) {
                    if !(g == search.members.len() && search.members[search.group[a]].len() == 1) {
                        search.apply_move(a, g);
                    }
                }
            }
            search.descend();
            let c = search.cost();
            if c < best.0 {
                best = (c, search.snapshot());
            } else if c > best.0 {
                search.restore(&best.1);
            }
        }
    }
    let mut groups: Vec<Vec<DemandId>> = best
        .1
        .into_iter()
        .map(|g| g.into_iter().map(|a| members[a]).collect())
        .collect();
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort();
    groups
}

pub fn convert(
    topology: &Topology,
    spp: &SppSolution,
    mode: Mode,
    limits: &Limits,
) -> Result<CodingPlan, CppError> {
    convert_with(topology, spp, mode, limits, Decomposition::ByInteraction)
}

/// Minimum-cost coding groups for `spp`. Budget exhaustion yields the best
/// partition found, with `optimal == false`.
pub fn convert_with(
    topology: &Topology,
    spp: &SppSolution,
    mode: Mode,
    limits: &Limits,
    decomposition: Decomposition,
) -> Result<CodingPlan, CppError> {
    if let Some(d) = spp.demands.iter().find(|d| d.units != 1) {
        return Err(CppError::UnsupportedUnits(d.id, d.units));
    }
    let parts = match decomposition {
        Decomposition::ByInteraction => interaction_components(spp, mode),
        Decomposition::Whole => vec![(0..spp.demand_count()).collect()],
    };
    let mut groups = Vec::new();
    let mut optimal = true;
    for members in parts {
        if members.len() == 1 {
            groups.push(members);
            continue;
        }
        let cm = build_model_for(topology, spp, mode, &members);
        let local: BTreeMap<DemandId, usize> =
            members.iter().enumerate().map(|(a, &i)| (i, a)).collect();
        let warm_groups: Vec<Vec<usize>> = heuristic_partition(topology, spp, mode, &members)
            .into_iter()
            .map(|g| g.iter().map(|i| local[i]).collect())
            .collect();
        let warm = cm.assignment_for(spp, &warm_groups);
        debug_assert!(cm.model.is_feasible(&warm));
        let sol = ilp::solve_with::<f64>(&cm.model, limits, Some(&warm))?;
        optimal &= sol.is_optimal();
        for g in cm.groups_from(&sol.values) {
            groups.push(g.into_iter().map(|a| members[a]).collect());
        }
    }
    Ok(CodingPlan::from_groups(topology, spp, mode, groups, optimal))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Not every demand is in exactly one group.
    NotPartition(DemandId),
    PrimariesOverlap { group: usize, i: DemandId, j: DemandId },
    PrimaryMeetsProtection { group: usize, i: DemandId, j: DemandId },
    Transitivity { i: DemandId, j: DemandId, k: DemandId },
    TablesDisagree(DemandId, DemandId),
    CapacityIdentity(SpanId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotPartition(i) => write!(f, "demand {i} is not in exactly one group"),
            Violation::PrimariesOverlap { group, i, j } => {
                write!(f, "group {group}: primaries of {i} and {j} share a span")
            }
            Violation::PrimaryMeetsProtection { group, i, j } => write!(
                f,
                "group {group}: primary of one of {i}/{j} meets the other's protection"
            ),
            Violation::Transitivity { i, j, k } => {
                write!(f, "same-group relation not transitive on {i}, {j}, {k}")
            }
            Violation::TablesDisagree(i, j) => write!(f, "pair ({i}, {j}) tables disagree with groups"),
            Violation::CapacityIdentity(e) => {
                write!(f, "span {e}: coded capacity differs from group count")
            }
        }
    }
}

pub fn validate_groups(
    topology: &Topology,
    plan: &CodingPlan,
    spp: &SppSolution,
    mode: Mode,
) -> Vec<Violation> {
    let n = spp.demand_count();
    let mut out = Vec::new();
    let mut count = vec![0usize; n];
    for g in &plan.groups {
        for &i in g {
            if i < n {
                count[i] += 1;
            }
        }
    }
    for (i, &c) in count.iter().enumerate() {
        if c != 1 {
            out.push(Violation::NotPartition(i));
        }
    }
    for (k, g) in plan.groups.iter().enumerate() {
        for (a, &i) in g.iter().enumerate() {
            for &j in &g[a + 1..] {
                if i >= n || j >= n {
                    continue;
                }
                if !spp.m_table[i][j] {
                    out.push(Violation::PrimariesOverlap { group: k, i, j });
                } else if mode == Mode::Strict && !compatible(spp, i, j, mode) {
                    out.push(Violation::PrimaryMeetsProtection { group: k, i, j });
                }
            }
        }
    }
    if plan.n_table.len() == n && plan.group_of.len() == n {
        for i in 0..n {
            for j in i + 1..n {
                let same = plan.group_of[i] == plan.group_of[j];
                if plan.n_table[i][j] != same || plan.n_table[j][i] != same {
                    out.push(Violation::TablesDisagree(i, j));
                }
                if !plan.n_table[i][j] {
                    continue;
                }
                for k in 0..n {
                    if k != i && k != j && plan.n_table[i][k] && !plan.n_table[j][k] {
                        out.push(Violation::Transitivity { i, j, k });
                    }
                }
            }
        }
    }
    let groups_on = coded_capacity(topology, spp, &plan.groups);
    for e in 0..topology.span_count() {
        let paid: usize = (0..n)
            .filter(|&i| spp.d_table[i][e] && !plan.s_table.get(i).is_some_and(|r| r[e]))
            .count();
        if paid as u32 != groups_on[e] || plan.coded_spare.get(e) != Some(&groups_on[e]) {
            out.push(Violation::CapacityIdentity(e));
        }
    }
    out
}
