//! Depth-first branch-and-bound with bound propagation and LP bounding.

use std::collections::VecDeque;
use std::marker::PhantomData;
use std::rc::Rc;
use std::time::{Duration, Instant};

use super::lp::{solve_lp, LpOutcome, LpProblem, LpRow};
use super::{Direction, IlpError, IlpModel, Sense, VarId, VarKind};
use crate::scalar::Scalar;

/// Work budget for a single solve. Without a time limit the search is fully
/// deterministic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_nodes: u64,
    pub max_lp_iterations: usize,
    /// Relaxations whose dense tableau would exceed this many cells fall back
    /// to the combinatorial bound.
    pub max_lp_cells: usize,
    pub time_limit: Option<Duration>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_nodes: 200_000,
            max_lp_iterations: 50_000,
            max_lp_cells: 4_000_000,
            time_limit: None,
        }
    }
}

impl Limits {
    pub fn with_nodes(max_nodes: u64) -> Self {
        Limits {
            max_nodes,
            ..Limits::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    LimitReached,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IlpSolution {
    pub status: SolveStatus,
    /// Empty when infeasible.
    pub values: Vec<i64>,
    pub objective: Option<i64>,
    pub nodes: u64,
}

impl IlpSolution {
    pub fn value(&self, v: VarId) -> i64 {
        self.values[v]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// A constraint side in `Σ a x <= rhs` form.
struct LeRow {
    terms: Vec<(VarId, i64)>,
    rhs: i128,
}

struct Search<'m, S> {
    model: &'m IlpModel,
    limits: &'m Limits,
    /// Objective in minimization form.
    cost: Vec<i64>,
    rows: Vec<LeRow>,
    var_rows: Vec<Vec<usize>>,
    incumbent: Option<(i64, Vec<i64>)>,
    nodes: u64,
    started: Instant,
    _scalar: PhantomData<S>,
}

type Bounds = Vec<(i64, i64)>;

struct Node {
    parent: Rc<Bounds>,
    change: Option<(VarId, i64, i64)>,
}

enum Relaxation<S> {
    Pruned,
    Integral(Vec<i64>),
    Fractional { bound: i64, values: Vec<(VarId, S)> },
    NoLp { bound: i64 },
}

impl<'m, S: Scalar> Search<'m, S> {
    fn new(model: &'m IlpModel, limits: &'m Limits) -> Self {
        let n = model.var_count();
        let sign = if model.direction == Direction::Maximize {
            -1
        } else {
            1
        };
        let mut cost = vec![0i64; n];
        for &(v, c) in &model.objective {
            cost[v] += sign * c;
        }
        let mut rows = Vec::new();
        for c in &model.constraints {
            let mut terms: Vec<(VarId, i64)> = Vec::with_capacity(c.terms.len());
            for &(v, a) in &c.terms {
                match terms.iter_mut().find(|(w, _)| *w == v) {
                    Some(t) => t.1 += a,
                    None => terms.push((v, a)),
                }
            }
            terms.retain(|t| t.1 != 0);
            let neg = || terms.iter().map(|&(v, a)| (v, -a)).collect::<Vec<_>>();
            match c.sense {
                Sense::Le => rows.push(LeRow {
                    terms: terms.clone(),
                    rhs: c.rhs as i128,
                }),
                Sense::Ge => rows.push(LeRow {
                    terms: neg(),
                    rhs: -(c.rhs as i128),
                }),
                Sense::Eq => {
                    rows.push(LeRow {
                        terms: terms.clone(),
                        rhs: c.rhs as i128,
                    });
                    rows.push(LeRow {
                        terms: neg(),
                        rhs: -(c.rhs as i128),
                    });
                }
            }
        }
        let mut var_rows = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &(v, _) in &row.terms {
                var_rows[v].push(r);
            }
        }
        Search {
            model,
            limits,
            cost,
            rows,
            var_rows,
            incumbent: None,
            nodes: 0,
            started: Instant::now(),
            _scalar: PhantomData,
        }
    }

    fn internal_objective(&self, values: &[i64]) -> i64 {
        self.cost.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    fn offer(&mut self, values: Vec<i64>) {
        debug_assert!(self.model.is_feasible(&values));
        let obj = self.internal_objective(&values);
        if self.incumbent.as_ref().map_or(true, |(best, _)| obj < *best) {
            self.incumbent = Some((obj, values));
        }
    }

    /// Tightens `bounds` to a fixpoint. Returns false on proven infeasibility.
    fn propagate(&self, bounds: &mut Bounds, seeds: Option<VarId>) -> bool {
        let mut queued = vec![false; self.rows.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        match seeds {
            Some(v) => {
                for &r in &self.var_rows[v] {
                    queued[r] = true;
                    queue.push_back(r);
                }
            }
            None => {
                queue.extend(0..self.rows.len());
                queued.iter_mut().for_each(|q| *q = true);
            }
        }
        while let Some(r) = queue.pop_front() {
            queued[r] = false;
            let row = &self.rows[r];
            let mut minact: i128 = 0;
            for &(v, a) in &row.terms {
                let (lo, hi) = bounds[v];
                minact += a as i128 * if a > 0 { lo } else { hi } as i128;
            }
            if minact > row.rhs {
                return false;
            }
            let slack = row.rhs - minact;
            for &(v, a) in &row.terms {
                let (lo, hi) = bounds[v];
                let changed = if a > 0 {
                    let cap = lo as i128 + slack / a as i128;
                    if cap < hi as i128 {
                        bounds[v].1 = cap as i64;
                        true
                    } else {
                        false
                    }
                } else {
                    let floor = hi as i128 - slack / (-a) as i128;
                    if floor > lo as i128 {
                        bounds[v].0 = floor as i64;
                        true
                    } else {
                        false
                    }
                };
                if changed {
                    if bounds[v].0 > bounds[v].1 {
                        return false;
                    }
                    for &r2 in &self.var_rows[v] {
                        if !queued[r2] && r2 != r {
                            queued[r2] = true;
                            queue.push_back(r2);
                        }
                    }
                }
            }
        }
        true
    }

    fn combinatorial_bound(&self, bounds: &Bounds) -> i64 {
        self.cost
            .iter()
            .zip(bounds)
            .map(|(&c, &(lo, hi))| if c >= 0 { c * lo } else { c * hi })
            .sum()
    }

    fn relax(&self, bounds: &Bounds) -> Relaxation<S> {
        let n = bounds.len();
        let mut col_of = vec![usize::MAX; n];
        let mut free = Vec::new();
        for (v, &(lo, hi)) in bounds.iter().enumerate() {
            if lo < hi {
                col_of[v] = free.len();
                free.push(v);
            }
        }
        let fixed_obj: i64 = self
            .cost
            .iter()
            .zip(bounds)
            .filter(|(_, (lo, hi))| lo == hi)
            .map(|(c, (lo, _))| c * lo)
            .sum();
        if free.is_empty() {
            return Relaxation::Integral(bounds.iter().map(|b| b.0).collect());
        }
        let mut lp_rows: Vec<LpRow<S>> = Vec::new();
        for c in &self.model.constraints {
            let mut fixed: i128 = 0;
            let (mut minact, mut maxact) = (0i128, 0i128);
            let mut coefs: Vec<(usize, i64)> = Vec::new();
            for &(v, a) in &c.terms {
                let (lo, hi) = bounds[v];
                if lo == hi {
                    fixed += a as i128 * lo as i128;
                } else {
                    match coefs.iter_mut().find(|(j, _)| *j == col_of[v]) {
                        Some(t) => t.1 += a,
                        None => coefs.push((col_of[v], a)),
                    }
                }
            }
            coefs.retain(|t| t.1 != 0);
            if coefs.is_empty() {
                continue;
            }
            for &(j, a) in &coefs {
                let (lo, hi) = bounds[free[j]];
                let (x, y) = (a as i128 * lo as i128, a as i128 * hi as i128);
                minact += x.min(y);
                maxact += x.max(y);
            }
            let rhs = c.rhs as i128 - fixed;
            let redundant = match c.sense {
                Sense::Le => maxact <= rhs,
                Sense::Ge => minact >= rhs,
                Sense::Eq => false,
            };
            if redundant {
                continue;
            }
            lp_rows.push(LpRow {
                coefs: coefs.into_iter().map(|(j, a)| (j, S::from_int(a))).collect(),
                sense: c.sense,
                rhs: S::from_int(rhs as i64),
            });
        }
        let cells = lp_rows.len().saturating_mul(free.len() + 2 * lp_rows.len());
        if cells > self.limits.max_lp_cells {
            return Relaxation::NoLp {
                bound: self.combinatorial_bound(bounds),
            };
        }
        let problem = LpProblem {
            cost: free.iter().map(|&v| S::from_int(self.cost[v])).collect(),
            lower: free.iter().map(|&v| S::from_int(bounds[v].0)).collect(),
            upper: free.iter().map(|&v| S::from_int(bounds[v].1)).collect(),
            rows: lp_rows,
        };
        match solve_lp(&problem, self.limits.max_lp_iterations) {
            LpOutcome::Infeasible => Relaxation::Pruned,
            LpOutcome::Unbounded | LpOutcome::IterationLimit => Relaxation::NoLp {
                bound: self.combinatorial_bound(bounds),
            },
            LpOutcome::Optimal { x, objective } => {
                let total = objective + S::from_int(fixed_obj);
                let bound = integer_bound(&total);
                let mut frac = Vec::new();
                let mut rounded: Vec<i64> = bounds.iter().map(|b| b.0).collect();
                for (j, xv) in x.into_iter().enumerate() {
                    let v = free[j];
                    match integral_value(&xv) {
                        Some(k) => rounded[v] = k.clamp(bounds[v].0, bounds[v].1),
                        None => frac.push((v, xv)),
                    }
                }
                if frac.is_empty() {
                    if self.model.is_feasible(&rounded) {
                        return Relaxation::Integral(rounded);
                    }
                    // numerically integral but not exactly feasible
                    return Relaxation::NoLp { bound };
                }
                Relaxation::Fractional {
                    bound,
                    values: frac,
                }
            }
        }
    }

    fn prunable(&self, bound: i64) -> bool {
        self.incumbent.as_ref().is_some_and(|(best, _)| bound >= *best)
    }

    fn out_of_budget(&self) -> bool {
        if self.nodes >= self.limits.max_nodes {
            return true;
        }
        self.limits
            .time_limit
            .is_some_and(|t| self.started.elapsed() >= t)
    }

    /// Returns true when the tree was exhausted within budget.
    fn run(&mut self) -> bool {
        let mut root: Bounds = self
            .model
            .variables
            .iter()
            .map(|v| (v.lower, v.upper))
            .collect();
        if !self.propagate(&mut root, None) {
            return true;
        }
        let mut stack = vec![Node {
            parent: Rc::new(root),
            change: None,
        }];
        while let Some(node) = stack.pop() {
            if self.out_of_budget() {
                return false;
            }
            self.nodes += 1;
            let mut bounds = (*node.parent).clone();
            drop(node.parent);
            if let Some((v, lo, hi)) = node.change {
                bounds[v].0 = bounds[v].0.max(lo);
                bounds[v].1 = bounds[v].1.min(hi);
                if bounds[v].0 > bounds[v].1 || !self.propagate(&mut bounds, Some(v)) {
                    continue;
                }
            }
            if self.prunable(self.combinatorial_bound(&bounds)) {
                continue;
            }
            let (bound, branch) = match self.relax(&bounds) {
                Relaxation::Pruned => continue,
                Relaxation::Integral(values) => {
                    self.offer(values);
                    continue;
                }
                Relaxation::Fractional { bound, values } => {
                    let (v, x) = &values[0];
                    (bound, Some((*v, x.floor_i64(), x.ceil_i64())))
                }
                Relaxation::NoLp { bound } => (bound, None),
            };
            if self.prunable(bound) {
                continue;
            }
            let (v, down_hi, up_lo) = match branch {
                Some(b) => b,
                None => {
                    let Some(v) = bounds.iter().position(|b| b.0 < b.1) else {
                        let values: Vec<i64> = bounds.iter().map(|b| b.0).collect();
                        if self.model.is_feasible(&values) {
                            self.offer(values);
                        }
                        continue;
                    };
                    let (lo, hi) = bounds[v];
                    if self.model.variables[v].kind == VarKind::Binary || self.cost[v] < 0 {
                        (v, hi - 1, hi)
                    } else {
                        (v, lo, lo + 1)
                    }
                }
            };
            let shared = Rc::new(bounds);
            let prefer_down = self.model.variables[v].kind == VarKind::Integer
                && branch.is_none()
                && self.cost[v] >= 0;
            let down = Node {
                parent: Rc::clone(&shared),
                change: Some((v, i64::MIN, down_hi)),
            };
            let up = Node {
                parent: shared,
                change: Some((v, up_lo, i64::MAX)),
            };
            if prefer_down {
                stack.push(up);
                stack.push(down);
            } else {
                stack.push(down);
                stack.push(up);
            }
        }
        true
    }
}

fn integral_value<S: Scalar>(x: &S) -> Option<i64> {
    if S::is_exact() {
        let f = x.floor_i64();
        (S::from_int(f) == *x).then_some(f)
    } else {
        let v = x.to_f64();
        let r = v.round();
        ((v - r).abs() <= 1e-6).then_some(r as i64)
    }
}

fn integer_bound<S: Scalar>(x: &S) -> i64 {
    if S::is_exact() {
        x.ceil_i64()
    } else {
        let v = x.to_f64();
        (v - 1e-6 * v.abs().max(1.0)).ceil() as i64
    }
}

/// Solves with `f64` relaxations.
pub fn solve(model: &IlpModel, limits: &Limits) -> Result<IlpSolution, IlpError> {
    solve_with::<f64>(model, limits, None)
}

/// Solves with a caller-chosen LP scalar and an optional feasible starting
/// assignment. Infeasible warm starts are ignored.
pub fn solve_with<S: Scalar>(
    model: &IlpModel,
    limits: &Limits,
    warm_start: Option<&[i64]>,
) -> Result<IlpSolution, IlpError> {
    model.validate()?;
    let mut search = Search::<S>::new(model, limits);
    if let Some(w) = warm_start {
        if model.is_feasible(w) {
            search.offer(w.to_vec());
        }
    }
    let exhausted = search.run();
    let nodes = search.nodes;
    match (exhausted, search.incumbent) {
        (true, None) => Ok(IlpSolution {
            status: SolveStatus::Infeasible,
            values: Vec::new(),
            objective: None,
            nodes,
        }),
        (false, None) => Err(IlpError::BudgetExhaustedNoIncumbent { nodes }),
        (exhausted, Some((_, values))) => Ok(IlpSolution {
            status: if exhausted {
                SolveStatus::Optimal
            } else {
                SolveStatus::LimitReached
            },
            objective: Some(model.evaluate(&values)),
            values,
            nodes,
        }),
    }
}

/// Optimal values of the root linear relaxation, if it solves.
pub fn solve_relaxation(model: &IlpModel, limits: &Limits) -> Result<Option<Vec<f64>>, IlpError> {
    model.validate()?;
    let search = Search::<f64>::new(model, limits);
    let bounds: Bounds = model.variables.iter().map(|v| (v.lower, v.upper)).collect();
    let problem = LpProblem {
        cost: search.cost.iter().map(|&c| c as f64).collect(),
        lower: bounds.iter().map(|b| b.0 as f64).collect(),
        upper: bounds.iter().map(|b| b.1 as f64).collect(),
        rows: model
            .constraints
            .iter()
            .map(|c| LpRow {
                coefs: c.terms.iter().map(|&(v, a)| (v, a as f64)).collect(),
                sense: c.sense,
                rhs: c.rhs as f64,
            })
            .collect(),
    };
    Ok(match solve_lp(&problem, limits.max_lp_iterations) {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    })
}
