use super::loops::{natural_loops, LoopError};
use super::{BlockId, EdgeKind, WcirProgram};
use std::collections::{BTreeSet, HashSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Block or edge the diagnostic is about, when there is one.
    pub location: Option<String>,
    pub message: String,
}

impl Diagnostic {
    pub fn error(location: impl Into<Option<String>>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn warning(location: impl Into<Option<String>>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match &self.location {
            Some(loc) => write!(f, "{sev}[{loc}]: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

/// Checks every structural invariant of a program. An empty result means the
/// program can be analyzed.
pub fn validate(program: &WcirProgram) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for b in &program.blocks {
        if !super::is_identifier(b.id.as_str()) {
            out.push(Diagnostic::error(
                b.id.to_string(),
                format!("`{}` is not a valid identifier", b.id),
            ));
        }
        if !ids.insert(&b.id) {
            out.push(Diagnostic::error(
                b.id.to_string(),
                format!("duplicate block id `{}`", b.id),
            ));
        }
    }
    let mut dangling = false;
    let mut seen_edges = HashSet::new();
    for e in &program.edges {
        for end in [&e.from, &e.to] {
            if !ids.contains(end) {
                dangling = true;
                out.push(Diagnostic::error(
                    format!("{}→{}", e.from, e.to),
                    format!("edge names undefined block `{end}`"),
                ));
            }
        }
        if !seen_edges.insert((&e.from, &e.to)) {
            out.push(Diagnostic::error(format!("{}→{}", e.from, e.to), "duplicate edge"));
        }
    }
    if !ids.contains(&program.entry) {
        out.push(Diagnostic::error(
            program.entry.to_string(),
            format!("entry block `{}` is not defined", program.entry),
        ));
        return out;
    }
    if program.exits.is_empty() {
        out.push(Diagnostic::error(None, "program has no exit block"));
    }
    let mut exit_set = BTreeSet::new();
    for x in &program.exits {
        if !ids.contains(x) {
            out.push(Diagnostic::error(
                x.to_string(),
                format!("exit block `{x}` is not defined"),
            ));
        }
        if !exit_set.insert(x) {
            out.push(Diagnostic::error(x.to_string(), format!("exit `{x}` declared twice")));
        }
    }
    if dangling {
        return out;
    }

    let succ = program.successors();
    for e in &program.edges {
        if e.to == program.entry {
            out.push(Diagnostic::error(
                format!("{}→{}", e.from, e.to),
                "entry block must not have incoming edges",
            ));
        }
    }
    for x in &program.exits {
        if succ.get(x).is_some_and(|s| !s.is_empty()) {
            out.push(Diagnostic::error(
                x.to_string(),
                format!("exit block `{x}` has outgoing edges"),
            ));
        }
    }
    for b in &program.blocks {
        if succ.get(&b.id).is_some_and(|s| s.is_empty()) && !exit_set.contains(&b.id) {
            out.push(Diagnostic::error(
                b.id.to_string(),
                format!("block `{}` has no successors and is not an exit", b.id),
            ));
        }
    }

    // reachability from entry
    let mut reached: HashSet<&BlockId> = HashSet::from([&program.entry]);
    let mut work = vec![&program.entry];
    while let Some(b) = work.pop() {
        for s in succ.get(b).into_iter().flatten() {
            if reached.insert(*s) {
                work.push(*s);
            }
        }
    }
    for b in &program.blocks {
        if !reached.contains(&b.id) {
            out.push(Diagnostic::error(
                b.id.to_string(),
                format!("block `{}` is unreachable", b.id),
            ));
        }
    }

    // loop bounds
    let mut bounded = HashSet::new();
    for lb in &program.loop_bounds {
        if !ids.contains(&lb.header) {
            out.push(Diagnostic::error(
                lb.header.to_string(),
                format!("loop bound names undefined block `{}`", lb.header),
            ));
            continue;
        }
        if lb.bound == 0 {
            out.push(Diagnostic::error(
                lb.header.to_string(),
                "loop bound must be at least 1",
            ));
        }
        if !bounded.insert(&lb.header) {
            out.push(Diagnostic::error(
                lb.header.to_string(),
                format!("more than one loop bound for header `{}`", lb.header),
            ));
        }
        let is_header = program
            .edges
            .iter()
            .any(|e| e.kind == EdgeKind::Back && e.to == lb.header);
        if !is_header {
            out.push(Diagnostic::error(
                lb.header.to_string(),
                format!("loop bound on `{}`, which is not the target of a back edge", lb.header),
            ));
        }
    }
    for e in program.edges.iter().filter(|e| e.kind == EdgeKind::Back) {
        if !bounded.contains(&e.to) {
            out.push(Diagnostic::error(
                format!("{}→{}", e.from, e.to),
                format!("unbounded back edge {}→{}", e.from, e.to),
            ));
        }
    }
    if let Err(LoopError::Irreducible { from, to }) = natural_loops(program) {
        out.push(Diagnostic::error(format!("{from}→{to}"), "irreducible control flow"));
    }
    out
}
