//! Integer linear programs over exact rationals, and their LP-file rendering.

use crate::program::BlockId;
use crate::units::{format_exact, format_sig, pow10, Q};
use num_traits::{One, Signed, Zero};
use std::fmt::Write as _;

/// What an IPET objective measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    WcetCycles,
    WcecAlwaysOn,
    WcecDeviceAware,
}

impl Objective {
    pub const ALL: [Objective; 3] = [
        Objective::WcetCycles,
        Objective::WcecAlwaysOn,
        Objective::WcecDeviceAware,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::WcetCycles => "wcet_cycles",
            Objective::WcecAlwaysOn => "wcec_always_on",
            Objective::WcecDeviceAware => "wcec_device_aware",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wcet" | "wcet_cycles" => Some(Objective::WcetCycles),
            "always-on" | "always_on" | "wcec_always_on" => Some(Objective::WcecAlwaysOn),
            "device-aware" | "device_aware" | "wcec_device_aware" => Some(Objective::WcecDeviceAware),
            _ => None,
        }
    }

    pub fn is_energy(self) -> bool {
        !matches!(self, Objective::WcetCycles)
    }
}

/// What a variable counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarOrigin {
    Block(BlockId),
    Edge {
        from: BlockId,
        to: BlockId,
    },
    /// Flow from an exit block into the virtual sink.
    Sink(BlockId),
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub integer: bool,
    pub origin: VarOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn holds(self, lhs: &Q, rhs: &Q) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// `Σ coef·x[var] <rel> rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(Q, usize)>,
    pub relation: Relation,
    pub rhs: Q,
}

impl Constraint {
    pub fn lhs(&self, x: &[Q]) -> Q {
        self.terms.iter().fold(Q::zero(), |acc, (c, v)| acc + c * &x[*v])
    }
}

/// A maximization problem; every variable has lower bound 0 and no upper
/// bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpProblem {
    pub name: String,
    pub kind: Objective,
    pub variables: Vec<Variable>,
    pub objective: Vec<(Q, usize)>,
    pub constraints: Vec<Constraint>,
}

impl IlpProblem {
    pub fn new(name: impl Into<String>, kind: Objective) -> Self {
        IlpProblem {
            name: name.into(),
            kind,
            variables: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, integer: bool, origin: VarOrigin) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            integer,
            origin,
        });
        self.variables.len() - 1
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(Q, usize)>, relation: Relation, rhs: Q) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn objective_value(&self, x: &[Q]) -> Q {
        self.objective.iter().fold(Q::zero(), |acc, (c, v)| acc + c * &x[*v])
    }

    /// Dense objective vector.
    pub fn objective_dense(&self) -> Vec<Q> {
        let mut c = vec![Q::zero(); self.variables.len()];
        for (coef, v) in &self.objective {
            c[*v] += coef;
        }
        c
    }
}

/// Factor applied to objective coefficients on export: energy objectives are
/// written in picojoules so external solvers do not see 1e-9-sized
/// coefficients.
pub fn export_scale(kind: Objective) -> Q {
    if kind.is_energy() {
        Q::from_integer(pow10(12))
    } else {
        Q::one()
    }
}

fn render_coef(value: &Q) -> String {
    let s = format_exact(value);
    if s.contains('/') {
        format_sig(value, 30)
    } else {
        s
    }
}

fn render_expr(out: &mut String, terms: &[(Q, usize)], vars: &[Variable], scale: &Q) {
    let mut first = true;
    let mut any = false;
    for (coef, v) in terms {
        let c = coef * scale;
        if c.is_zero() {
            continue;
        }
        any = true;
        let neg = c.is_negative();
        let mag = c.abs();
        match (first, neg) {
            (true, true) => out.push_str(" -"),
            (true, false) => {}
            (false, true) => out.push_str(" -"),
            (false, false) => out.push_str(" +"),
        }
        if mag.is_one() {
            let _ = write!(out, " {}", vars[*v].name);
        } else {
            let _ = write!(out, " {} {}", render_coef(&mag), vars[*v].name);
        }
        first = false;
    }
    if !any {
        // LP format needs at least one term
        let _ = write!(out, " 0 {}", vars.first().map(|v| v.name.as_str()).unwrap_or("x"));
    }
}

/// Renders the problem in the CPLEX LP file format. Output depends only on
/// the problem, so identical inputs give identical bytes.
pub fn export_lp(problem: &IlpProblem) -> String {
    let scale = export_scale(problem.kind);
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {}", problem.name);
    let unit = if problem.kind.is_energy() { "pJ" } else { "cycles" };
    let _ = writeln!(out, "\\ Objective: {} ({unit})", problem.kind.as_str());
    out.push_str("Maximize\n obj:");
    render_expr(&mut out, &problem.objective, &problem.variables, &scale);
    out.push_str("\nSubject To\n");
    for c in &problem.constraints {
        let _ = write!(out, " {}:", c.name);
        render_expr(&mut out, &c.terms, &problem.variables, &Q::one());
        let _ = writeln!(out, " {} {}", c.relation.symbol(), render_coef(&c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &problem.variables {
        let _ = writeln!(out, " {} >= 0", v.name);
    }
    let ints: Vec<&str> = problem
        .variables
        .iter()
        .filter(|v| v.integer)
        .map(|v| v.name.as_str())
        .collect();
    if !ints.is_empty() {
        out.push_str("Generals\n");
        for chunk in ints.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{q, ratio};

    fn one_var() -> IlpProblem {
        let mut p = IlpProblem::new("deinit", Objective::WcetCycles);
        let x = p.add_var("f_b0", true, VarOrigin::Block("b0".into()));
        p.objective.push((q(48), x));
        p.add_constraint("entry", vec![(q(1), x)], Relation::Eq, q(1));
        p
    }

    #[test]
    fn skeleton() {
        let text = export_lp(&one_var());
        assert!(text.contains("Maximize\n obj: 48 f_b0\n"));
        assert!(text.contains(" entry: f_b0 = 1\n"));
        assert!(text.contains("Generals\n f_b0\n"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn energy_objective_is_exported_in_picojoules() {
        let mut p = one_var();
        p.kind = Objective::WcecAlwaysOn;
        p.objective[0].0 = ratio(48 * 6_455_625, 1_000_000_000) / q(1_000_000);
        let text = export_lp(&p);
        assert!(text.contains("obj: 309870 f_b0"), "{text}");
    }

    #[test]
    fn signs_and_relations() {
        let mut p = IlpProblem::new("s", Objective::WcetCycles);
        let x = p.add_var("x", true, VarOrigin::Other);
        let y = p.add_var("y", false, VarOrigin::Other);
        p.objective = vec![(q(1), x), (q(1), y)];
        p.add_constraint("c1", vec![(q(1), x), (q(-3), y)], Relation::Le, q(0));
        p.add_constraint("c2", vec![(q(-1), x)], Relation::Ge, ratio(-5, 2));
        let text = export_lp(&p);
        assert!(text.contains(" c1: x - 3 y <= 0\n"));
        assert!(text.contains(" c2: - x >= -2.5\n"));
        assert!(text.contains("Generals\n x\n"));
    }

    #[test]
    fn objective_names_parse() {
        for o in Objective::ALL {
            assert_eq!(Objective::parse(o.as_str()), Some(o));
        }
        assert_eq!(Objective::parse("bogus"), None);
    }
}
