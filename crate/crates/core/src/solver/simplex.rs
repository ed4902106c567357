//! Dense two-phase primal simplex over exact rationals.
//!
//! Pivoting follows Bland's rule: the entering column is the lowest-index
//! column with positive reduced cost, the leaving row is the minimum-ratio
//! row whose basic variable has the lowest index. Bland's rule cannot cycle.

use crate::lp::Relation;
use crate::units::Q;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub terms: Vec<(Q, usize)>,
    pub relation: Relation,
    pub rhs: Q,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
    PivotLimit,
}

struct Tableau {
    /// `m` rows of `cols + 1` entries; the last entry is the right-hand side.
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    cols: usize,
    /// Reduced costs, `cost_j - c_B B^-1 A_j`.
    reduced: Vec<Q>,
    value: Q,
}

impl Tableau {
    fn price(&mut self, cost: &[Q]) {
        let mut reduced = cost.to_vec();
        let mut value = Q::zero();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (j, a) in row[..self.cols].iter().enumerate() {
                if !a.is_zero() {
                    reduced[j] -= cb * a;
                }
            }
            value += cb * &row[self.cols];
        }
        self.reduced = reduced;
        self.value = value;
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let piv = self.rows[r][col].clone();
        if !piv.is_one() {
            for a in self.rows[r].iter_mut() {
                if !a.is_zero() {
                    *a /= &piv;
                }
            }
        }
        let pr: Vec<(usize, Q)> = self.rows[r]
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(k, a)| (k, a.clone()))
            .collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (k, a) in &pr {
                row[*k] -= &f * a;
            }
        }
        let f = self.reduced[col].clone();
        if !f.is_zero() {
            for (k, a) in &pr {
                if *k < self.cols {
                    self.reduced[*k] -= &f * a;
                } else {
                    self.value += &f * a;
                }
            }
        }
        self.basis[r] = col;
    }

    /// Runs simplex iterations until optimal, unbounded or out of pivots.
    fn optimize(&mut self, allowed: &[bool], pivots: &mut u64, limit: u64) -> LpOutcome {
        loop {
            let Some(col) = (0..self.cols).find(|&j| allowed[j] && self.reduced[j].is_positive()) else {
                return LpOutcome::Optimal {
                    x: Vec::new(),
                    value: self.value.clone(),
                };
            };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = &row[col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &row[self.cols] / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return LpOutcome::Unbounded;
            };
            if *pivots >= limit {
                return LpOutcome::PivotLimit;
            }
            *pivots += 1;
            self.pivot(r, col);
        }
    }
}

/// Maximizes `c·x` over `x ≥ 0` subject to `rows`.
pub(crate) fn solve_lp(c: &[Q], rows: &[Row], pivots: &mut u64, limit: u64) -> LpOutcome {
    let n = c.len();
    let m = rows.len();
    // normalize to nonnegative right-hand sides
    let mut dense: Vec<(Vec<Q>, Relation, Q)> = Vec::with_capacity(m);
    for row in rows {
        let mut a = vec![Q::zero(); n];
        for (coef, v) in &row.terms {
            a[*v] += coef;
        }
        let (mut rel, mut rhs) = (row.relation, row.rhs.clone());
        if rhs.is_negative() {
            for x in a.iter_mut() {
                *x = -x.clone();
            }
            rhs = -rhs;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        dense.push((a, rel, rhs));
    }
    let extra: usize = dense
        .iter()
        .map(|(_, rel, _)| if *rel == Relation::Ge { 2 } else { 1 })
        .sum();
    let cols = n + extra;
    let mut is_art = vec![false; cols];
    let mut tab_rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next = n;
    for (a, rel, rhs) in dense {
        let mut row = a;
        row.resize(cols + 1, Q::zero());
        row[cols] = rhs;
        match rel {
            Relation::Le => {
                row[next] = Q::one();
                basis.push(next);
                next += 1;
            }
            Relation::Ge => {
                row[next] = -Q::one();
                row[next + 1] = Q::one();
                is_art[next + 1] = true;
                basis.push(next + 1);
                next += 2;
            }
            Relation::Eq => {
                row[next] = Q::one();
                is_art[next] = true;
                basis.push(next);
                next += 1;
            }
        }
        tab_rows.push(row);
    }
    let mut t = Tableau {
        rows: tab_rows,
        basis,
        cols,
        reduced: Vec::new(),
        value: Q::zero(),
    };

    // phase 1: maximize -Σ artificials
    if is_art.iter().any(|&a| a) {
        let cost: Vec<Q> = is_art.iter().map(|&a| if a { -Q::one() } else { Q::zero() }).collect();
        t.price(&cost);
        let allowed = vec![true; cols];
        match t.optimize(&allowed, pivots, limit) {
            LpOutcome::Optimal { .. } => {}
            LpOutcome::PivotLimit => return LpOutcome::PivotLimit,
            // phase 1 is bounded above by 0
            LpOutcome::Unbounded | LpOutcome::Infeasible => unreachable!("phase 1 objective is bounded"),
        }
        if t.value.is_negative() {
            return LpOutcome::Infeasible;
        }
        // drive zero-valued artificials out of the basis; drop redundant rows
        let mut i = 0;
        while i < t.rows.len() {
            if !is_art[t.basis[i]] {
                i += 1;
                continue;
            }
            match (0..cols).find(|&j| !is_art[j] && !t.rows[i][j].is_zero()) {
                Some(j) => {
                    if *pivots >= limit {
                        return LpOutcome::PivotLimit;
                    }
                    *pivots += 1;
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            }
        }
    }

    // phase 2
    let mut cost = c.to_vec();
    cost.resize(cols, Q::zero());
    t.price(&cost);
    let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
    match t.optimize(&allowed, pivots, limit) {
        LpOutcome::Optimal { .. } => {}
        other => return other,
    }
    let mut x = vec![Q::zero(); n];
    for (row, &b) in t.rows.iter().zip(&t.basis) {
        if b < n {
            x[b] = row[cols].clone();
        }
    }
    LpOutcome::Optimal { x, value: t.value }
}
