//! Exact mixed-integer solver: rational simplex plus depth-first
//! branch-and-bound.
//!
//! Branching picks the most fractional integer variable (lowest index on
//! ties) and explores the `x ≥ ⌈v⌉` child before `x ≤ ⌊v⌋`. Nodes whose LP
//! bound does not beat the incumbent are pruned, so the first optimum found
//! is kept. Results are a pure function of the problem and the config.

mod simplex;

use crate::lp::{IlpProblem, Relation};
use crate::units::{ratio, Q};
use num_traits::{Signed, Zero};
use simplex::{solve_lp, LpOutcome, Row};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub max_pivots: u64,
    pub max_nodes: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_pivots: 1_000_000,
            max_nodes: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Pivot or node limit hit before optimality was proven.
    ResourceLimit,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub pivots: u64,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpSolution {
    pub status: SolveStatus,
    /// Zero unless `status` is `Optimal`.
    pub objective_value: Q,
    /// Indexed like `IlpProblem::variables`; empty unless optimal.
    pub assignment: Vec<Q>,
    pub stats: SolverStats,
}

impl IlpSolution {
    fn without_value(status: SolveStatus, stats: SolverStats) -> Self {
        IlpSolution {
            status,
            objective_value: Q::zero(),
            assignment: Vec::new(),
            stats,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value_of(&self, problem: &IlpProblem, name: &str) -> Option<&Q> {
        problem.var_index(name).and_then(|i| self.assignment.get(i))
    }

    pub fn assignment_map(&self, problem: &IlpProblem) -> BTreeMap<String, Q> {
        problem
            .variables
            .iter()
            .zip(&self.assignment)
            .map(|(v, x)| (v.name.clone(), x.clone()))
            .collect()
    }
}

fn base_rows(problem: &IlpProblem) -> Vec<Row> {
    problem
        .constraints
        .iter()
        .map(|c| Row {
            terms: c.terms.clone(),
            relation: c.relation,
            rhs: c.rhs.clone(),
        })
        .collect()
}

/// Optimum of the LP relaxation (integrality dropped).
pub fn solve_relaxation(problem: &IlpProblem, config: &SolverConfig) -> IlpSolution {
    let mut pivots = 0;
    let out = solve_lp(
        &problem.objective_dense(),
        &base_rows(problem),
        &mut pivots,
        config.max_pivots,
    );
    let stats = SolverStats { pivots, nodes: 1 };
    match out {
        LpOutcome::Optimal { x, value } => IlpSolution {
            status: SolveStatus::Optimal,
            objective_value: value,
            assignment: x,
            stats,
        },
        LpOutcome::Infeasible => IlpSolution::without_value(SolveStatus::Infeasible, stats),
        LpOutcome::Unbounded => IlpSolution::without_value(SolveStatus::Unbounded, stats),
        LpOutcome::PivotLimit => IlpSolution::without_value(SolveStatus::ResourceLimit, stats),
    }
}

/// Distance of the fractional part of `v` from the nearest integer.
fn fractionality(v: &Q) -> Q {
    let f = v - v.floor();
    let g = Q::from_integer(1.into()) - &f;
    if f < g {
        f
    } else {
        g
    }
}

/// Exact optimum of the mixed-integer problem.
pub fn solve(problem: &IlpProblem, config: &SolverConfig) -> IlpSolution {
    let c = problem.objective_dense();
    let base = base_rows(problem);
    let mut stats = SolverStats::default();
    let mut incumbent: Option<(Vec<Q>, Q)> = None;
    let mut stack: Vec<Vec<Row>> = vec![Vec::new()];
    while let Some(extra) = stack.pop() {
        if stats.nodes >= config.max_nodes {
            return IlpSolution::without_value(SolveStatus::ResourceLimit, stats);
        }
        stats.nodes += 1;
        let rows: Vec<Row> = base.iter().cloned().chain(extra.iter().cloned()).collect();
        let (x, value) = match solve_lp(&c, &rows, &mut stats.pivots, config.max_pivots) {
            LpOutcome::Optimal { x, value } => (x, value),
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => return IlpSolution::without_value(SolveStatus::Unbounded, stats),
            LpOutcome::PivotLimit => return IlpSolution::without_value(SolveStatus::ResourceLimit, stats),
        };
        if let Some((_, best)) = &incumbent {
            if value <= *best {
                continue;
            }
        }
        let half = ratio(1, 2);
        let mut branch: Option<(usize, Q)> = None;
        for (i, v) in problem.variables.iter().enumerate() {
            if !v.integer || x[i].is_integer() {
                continue;
            }
            let f = fractionality(&x[i]);
            let better = match &branch {
                None => true,
                Some((_, bf)) => f > *bf,
            };
            if better {
                branch = Some((i, f));
            }
            if branch.as_ref().is_some_and(|(_, bf)| *bf == half) {
                break;
            }
        }
        match branch {
            None => incumbent = Some((x, value)),
            Some((i, _)) => {
                let v = &x[i];
                let mut down = extra.clone();
                down.push(Row {
                    terms: vec![(Q::from_integer(1.into()), i)],
                    relation: Relation::Le,
                    rhs: v.floor(),
                });
                let mut up = extra;
                up.push(Row {
                    terms: vec![(Q::from_integer(1.into()), i)],
                    relation: Relation::Ge,
                    rhs: v.ceil(),
                });
                stack.push(down);
                stack.push(up);
            }
        }
    }
    match incumbent {
        Some((x, value)) => IlpSolution {
            status: SolveStatus::Optimal,
            objective_value: value,
            assignment: x,
            stats,
        },
        None => IlpSolution::without_value(SolveStatus::Infeasible, stats),
    }
}

/// Re-checks an optimal solution from scratch: nonnegativity, integrality,
/// every constraint, and the reported objective value.
pub fn check_certificate(problem: &IlpProblem, solution: &IlpSolution) -> bool {
    if solution.status != SolveStatus::Optimal || solution.assignment.len() != problem.variables.len() {
        return false;
    }
    let x = &solution.assignment;
    for (v, val) in problem.variables.iter().zip(x) {
        if val.is_negative() || (v.integer && !val.is_integer()) {
            return false;
        }
    }
    for c in &problem.constraints {
        if c.terms.iter().any(|(_, v)| *v >= x.len()) {
            return false;
        }
        if !c.relation.holds(&c.lhs(x), &c.rhs) {
            return false;
        }
    }
    if problem.objective.iter().any(|(_, v)| *v >= x.len()) {
        return false;
    }
    problem.objective_value(x) == solution.objective_value
}
