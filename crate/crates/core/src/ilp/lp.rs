//! Dense bounded-variable primal simplex over a generic [`Scalar`].

use super::Sense;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct LpRow<S> {
    pub coefs: Vec<(usize, S)>,
    pub sense: Sense,
    pub rhs: S,
}

/// `min cost·x` subject to `rows` and `lower <= x <= upper` (all finite).
#[derive(Clone, Debug)]
pub struct LpProblem<S> {
    pub cost: Vec<S>,
    pub lower: Vec<S>,
    pub upper: Vec<S>,
    pub rows: Vec<LpRow<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { x: Vec<S>, objective: S },
    Infeasible,
    Unbounded,
    IterationLimit,
}

struct Tableau<S> {
    m: usize,
    width: usize,
    a: Vec<S>,
    beta: Vec<S>,
    basis: Vec<usize>,
    at_upper: Vec<bool>,
    ub: Vec<Option<S>>,
    banned: Vec<bool>,
    dj: Vec<S>,
    iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Limit,
    Continue,
}

impl<S: Scalar> Tableau<S> {
    fn at(&self, i: usize, j: usize) -> &S {
        &self.a[i * self.width + j]
    }

    fn nonbasic_value(&self, j: usize) -> S {
        if self.at_upper[j] {
            self.ub[j].clone().unwrap_or_else(S::zero)
        } else {
            S::zero()
        }
    }

    fn price(&mut self, costs: &[S]) {
        let mut dj = costs.to_vec();
        for i in 0..self.m {
            let cb = &costs[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (j, d) in dj.iter_mut().enumerate() {
                let aij = self.at(i, j);
                if !aij.is_zero() {
                    *d = d.clone() - cb.clone() * aij.clone();
                }
            }
        }
        self.dj = dj;
    }

    fn objective(&self, costs: &[S]) -> S {
        let mut z = S::zero();
        for i in 0..self.m {
            z = z + costs[self.basis[i]].clone() * self.beta[i].clone();
        }
        for j in 0..self.width {
            if self.at_upper[j] {
                z = z + costs[j].clone() * self.nonbasic_value(j);
            }
        }
        z
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let piv = self.a[r * w + q].clone();
        for j in 0..w {
            let v = &mut self.a[r * w + j];
            if !v.is_zero() {
                *v = v.clone() / piv.clone();
            }
        }
        let pivot_row: Vec<(usize, S)> = (0..w)
            .filter_map(|j| {
                let v = &self.a[r * w + j];
                (!v.is_zero()).then(|| (j, v.clone()))
            })
            .collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * w + q].clone();
            if f.is_zero() {
                continue;
            }
            for (j, v) in &pivot_row {
                let cell = &mut self.a[i * w + j];
                *cell = cell.clone() - f.clone() * v.clone();
            }
            if !S::is_exact() {
                self.a[i * w + q] = S::zero();
            }
        }
        let f = self.dj[q].clone();
        if !f.is_zero() {
            for (j, v) in &pivot_row {
                self.dj[*j] = self.dj[*j].clone() - f.clone() * v.clone();
            }
            if !S::is_exact() {
                self.dj[q] = S::zero();
            }
        }
        self.basis[r] = q;
    }

    fn step(&mut self, bland: bool, max_iters: usize, degenerate: &mut usize) -> Step {
        if self.iterations >= max_iters {
            return Step::Limit;
        }
        let is_basic = {
            let mut v = vec![false; self.width];
            for &b in &self.basis {
                v[b] = true;
            }
            v
        };
        // entering column
        let mut entering: Option<(usize, S)> = None;
        for j in 0..self.width {
            if is_basic[j] || self.banned[j] {
                continue;
            }
            let d = &self.dj[j];
            let improving = if self.at_upper[j] { d.is_pos() } else { d.is_neg() };
            if !improving {
                continue;
            }
            let mag = d.abs();
            match &entering {
                None => entering = Some((j, mag)),
                Some((_, best)) if !bland && mag > *best => entering = Some((j, mag)),
                _ => {}
            }
            if bland {
                break;
            }
        }
        let Some((q, _)) = entering else {
            return Step::Optimal;
        };
        self.iterations += 1;
        let increasing = !self.at_upper[q];
        let pivot_tol = if S::is_exact() {
            S::zero()
        } else {
            S::tolerance()
        };
        // ratio test: (limit, row, leaves_at_upper)
        let mut best: Option<(S, usize, bool, S)> = None;
        for i in 0..self.m {
            let alpha = self.at(i, q).clone();
            if alpha.abs() <= pivot_tol {
                continue;
            }
            // rate of change of basic i per unit step
            let rate = if increasing { -alpha.clone() } else { alpha.clone() };
            let (limit, to_upper) = if rate.is_negative() {
                let room = self.beta[i].clone();
                (clamp0(room) / (-rate), false)
            } else {
                match &self.ub[self.basis[i]] {
                    Some(u) => (clamp0(u.clone() - self.beta[i].clone()) / rate, true),
                    None => continue,
                }
            };
            let better = match &best {
                None => true,
                Some((bl, br, _, ba)) => {
                    if limit < *bl {
                        true
                    } else if limit == *bl || (!S::is_exact() && (limit.clone() - bl.clone()).is_near_zero()) {
                        if bland {
                            self.basis[i] < self.basis[*br]
                        } else {
                            alpha.abs() > *ba
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                best = Some((limit, i, to_upper, alpha.abs()));
            }
        }
        let own = self.ub[q].clone();
        let flip = match (&own, &best) {
            (Some(u), Some((limit, ..))) => *u <= *limit,
            (Some(_), None) => true,
            (None, None) => return Step::Unbounded,
            (None, Some(_)) => false,
        };
        let t = if flip {
            own.unwrap()
        } else {
            best.as_ref().unwrap().0.clone()
        };
        if t.is_near_zero() {
            *degenerate += 1;
        } else {
            *degenerate = 0;
        }
        let signed_t = if increasing { t.clone() } else { -t.clone() };
        for i in 0..self.m {
            let alpha = self.at(i, q).clone();
            if !alpha.is_zero() {
                self.beta[i] = self.beta[i].clone() - alpha * signed_t.clone();
            }
        }
        if flip {
            self.at_upper[q] = !self.at_upper[q];
            return Step::Continue;
        }
        let (_, r, to_upper, _) = best.unwrap();
        let leaving = self.basis[r];
        let entering_value = if increasing {
            t
        } else {
            self.ub[q].clone().unwrap() - t
        };
        self.pivot(r, q);
        self.beta[r] = entering_value;
        self.at_upper[q] = false;
        self.at_upper[leaving] = to_upper;
        Step::Continue
    }

    fn run(&mut self, max_iters: usize) -> Step {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate > 50 || S::is_exact() && degenerate > 0;
            match self.step(bland, max_iters, &mut degenerate) {
                Step::Continue => continue,
                other => return other,
            }
        }
    }
}

fn clamp0<S: Scalar>(v: S) -> S {
    if v.is_negative() {
        S::zero()
    } else {
        v
    }
}

/// Solves `problem` with at most `max_iters` pivots and bound flips.
pub fn solve_lp<S: Scalar>(problem: &LpProblem<S>, max_iters: usize) -> LpOutcome<S> {
    let n = problem.cost.len();
    let m = problem.rows.len();
    if problem.lower.iter().zip(&problem.upper).any(|(l, u)| l > u) {
        return LpOutcome::Infeasible;
    }
    let slack_rows: Vec<usize> = (0..m)
        .filter(|&i| problem.rows[i].sense != Sense::Eq)
        .collect();
    let mut slack_of = vec![usize::MAX; m];
    for (k, &i) in slack_rows.iter().enumerate() {
        slack_of[i] = n + k;
    }
    // shifted right-hand sides and per-row orientation
    let mut rhs = Vec::with_capacity(m);
    for row in &problem.rows {
        let mut b = row.rhs.clone();
        for (j, a) in &row.coefs {
            b = b - a.clone() * problem.lower[*j].clone();
        }
        rhs.push(b);
    }
    let mut needs_art = vec![false; m];
    let mut negate = vec![false; m];
    for i in 0..m {
        let b = &rhs[i];
        match problem.rows[i].sense {
            Sense::Le => {
                if b.is_negative() {
                    needs_art[i] = true;
                    negate[i] = true;
                }
            }
            Sense::Ge => {
                negate[i] = true;
                if b.is_positive() {
                    needs_art[i] = true;
                    negate[i] = false;
                }
            }
            Sense::Eq => {
                needs_art[i] = true;
                negate[i] = b.is_negative();
            }
        }
    }
    let art_rows: Vec<usize> = (0..m).filter(|&i| needs_art[i]).collect();
    let width = n + slack_rows.len() + art_rows.len();
    let mut art_of = vec![usize::MAX; m];
    for (k, &i) in art_rows.iter().enumerate() {
        art_of[i] = n + slack_rows.len() + k;
    }
    let mut a = vec![S::zero(); m * width];
    let mut beta = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if negate[i] { -S::one() } else { S::one() };
        for (j, v) in &problem.rows[i].coefs {
            let cell = &mut a[i * width + j];
            *cell = cell.clone() + sign.clone() * v.clone();
        }
        if slack_of[i] != usize::MAX {
            let sigma = if problem.rows[i].sense == Sense::Le {
                S::one()
            } else {
                -S::one()
            };
            a[i * width + slack_of[i]] = sign.clone() * sigma;
        }
        if needs_art[i] {
            a[i * width + art_of[i]] = S::one();
            basis.push(art_of[i]);
        } else {
            basis.push(slack_of[i]);
        }
        beta.push(sign * rhs[i].clone());
    }
    let mut ub: Vec<Option<S>> = Vec::with_capacity(width);
    for j in 0..n {
        ub.push(Some(problem.upper[j].clone() - problem.lower[j].clone()));
    }
    ub.extend(std::iter::repeat(None).take(slack_rows.len() + art_rows.len()));
    let mut tab = Tableau {
        m,
        width,
        a,
        beta,
        basis,
        at_upper: vec![false; width],
        ub,
        banned: vec![false; width],
        dj: Vec::new(),
        iterations: 0,
    };

    if !art_rows.is_empty() {
        let mut phase1 = vec![S::zero(); width];
        for &i in &art_rows {
            phase1[art_of[i]] = S::one();
        }
        tab.price(&phase1);
        match tab.run(max_iters) {
            Step::Limit => return LpOutcome::IterationLimit,
            Step::Unbounded => return LpOutcome::Infeasible,
            _ => {}
        }
        let infeas = tab.objective(&phase1);
        let scale = rhs
            .iter()
            .fold(S::one(), |acc, b| acc + b.abs());
        let threshold = if S::is_exact() {
            S::zero()
        } else {
            S::tolerance() * S::from_int(100) * scale
        };
        if infeas > threshold {
            return LpOutcome::Infeasible;
        }
        for &i in &art_rows {
            let col = art_of[i];
            tab.banned[col] = true;
            tab.ub[col] = Some(S::zero());
        }
    }

    let mut costs = vec![S::zero(); width];
    let cost_scale = if S::is_exact() {
        S::one()
    } else {
        problem
            .cost
            .iter()
            .fold(S::zero(), |acc, c| if c.abs() > acc { c.abs() } else { acc })
    };
    let cost_scale = if cost_scale.is_zero() {
        S::one()
    } else {
        cost_scale
    };
    for j in 0..n {
        costs[j] = problem.cost[j].clone() / cost_scale.clone();
    }
    tab.price(&costs);
    match tab.run(max_iters) {
        Step::Limit => return LpOutcome::IterationLimit,
        Step::Unbounded => return LpOutcome::Unbounded,
        _ => {}
    }
    let mut x: Vec<S> = (0..n).map(|j| tab.nonbasic_value(j)).collect();
    for i in 0..m {
        let b = tab.basis[i];
        if b < n {
            x[b] = tab.beta[i].clone();
        }
    }
    for (j, xj) in x.iter_mut().enumerate() {
        *xj = xj.clone() + problem.lower[j].clone();
        if !S::is_exact() {
            if *xj < problem.lower[j] {
                *xj = problem.lower[j].clone();
            }
            if *xj > problem.upper[j] {
                *xj = problem.upper[j].clone();
            }
        }
    }
    let objective = x
        .iter()
        .zip(&problem.cost)
        .fold(S::zero(), |acc, (xj, c)| acc + xj.clone() * c.clone());
    LpOutcome::Optimal { x, objective }
}
