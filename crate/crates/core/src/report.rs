//! End-to-end analysis of one program and the result-table rendering.

use crate::device::{DeviceError, DeviceGraph, PlatformModel, PowerMode, StateId};
use crate::ipet::{build_ilp, IpetError};
use crate::lp::{IlpProblem, Objective};
use crate::program::{validate, Diagnostic, Severity, WcirProgram};
use crate::solver::{check_certificate, solve, IlpSolution, SolveStatus, SolverConfig};
use crate::states::{analyze_states, check_ops, StateMap};
use crate::units::{format_exact, format_sig, micro, q_u64, PS_PER_NS, PS_PER_S, Q};
use num_traits::{ToPrimitive, Zero};
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("{}", render_diagnostics(.0))]
    Diagnostics(Vec<Diagnostic>),
    #[error(transparent)]
    Ipet(#[from] IpetError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error("{objective} problem: solver returned {status:?}")]
    Solver {
        objective: &'static str,
        status: SolveStatus,
    },
    #[error("{0} solution failed certification")]
    Certificate(&'static str),
    #[error("always-on bound {solver} disagrees with recomputation {recomputed}")]
    Mismatch { solver: String, recomputed: String },
}

fn render_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

/// One objective's problem, solution and certificate verdict.
#[derive(Debug, Clone)]
pub struct Solved {
    pub problem: IlpProblem,
    pub solution: IlpSolution,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub name: String,
    pub wcet_cycles: u64,
    /// Joules.
    pub wcec_always_on: Q,
    /// Joules.
    pub wcec_device_aware: Q,
    pub states: StateMap,
    pub solved: Vec<Solved>,
    pub warnings: Vec<Diagnostic>,
    pub clock_hz: u64,
}

impl Analysis {
    pub fn wcet_seconds(&self) -> Q {
        Q::new(self.wcet_cycles.into(), self.clock_hz.into())
    }

    pub fn solved(&self, objective: Objective) -> Option<&Solved> {
        self.solved.iter().find(|s| s.problem.kind == objective)
    }

    pub fn bound(&self, objective: Objective) -> Q {
        match objective {
            Objective::WcetCycles => q_u64(self.wcet_cycles),
            Objective::WcecAlwaysOn => self.wcec_always_on.clone(),
            Objective::WcecDeviceAware => self.wcec_device_aware.clone(),
        }
    }
}

/// The state analysis starts from the program's first declared entry state,
/// or the graph's initial state when none is declared.
pub fn initial_state(program: &WcirProgram, graph: &DeviceGraph) -> StateId {
    program
        .entry_states
        .first()
        .cloned()
        .unwrap_or_else(|| graph.initial.clone())
}

/// parse-free pipeline: validate, state analysis, three IPET problems,
/// solve, certify, and cross-check the always-on figure.
pub fn analyze_program(
    program: &WcirProgram,
    graph: &DeviceGraph,
    platform: &PlatformModel,
    config: &SolverConfig,
) -> Result<Analysis, AnalysisError> {
    graph.check()?;
    platform.check()?;
    let mut diags = validate(program);
    diags.extend(check_ops(program, graph));
    let (errors, warnings): (Vec<_>, Vec<_>) = diags.into_iter().partition(|d| d.severity == Severity::Error);
    if !errors.is_empty() {
        return Err(AnalysisError::Diagnostics(errors));
    }
    let states = analyze_states(program, graph, platform, &initial_state(program, graph))?;
    let mut solved = Vec::with_capacity(3);
    for objective in Objective::ALL {
        let problem = build_ilp(program, Some(&states), graph, platform, objective)?;
        let solution = solve(&problem, config);
        if solution.status != SolveStatus::Optimal {
            return Err(AnalysisError::Solver {
                objective: objective.as_str(),
                status: solution.status,
            });
        }
        if !check_certificate(&problem, &solution) {
            return Err(AnalysisError::Certificate(objective.as_str()));
        }
        solved.push(Solved { problem, solution });
    }
    let value = |k: usize| solved[k].solution.objective_value.clone();
    let cycles = value(0)
        .to_integer()
        .to_u64()
        .expect("WCET of a valid program is a non-negative integer");
    let aon = value(1);
    let recomputed = q_u64(cycles) * graph.energy_per_cycle(platform, &PowerMode::AlwaysOn)?;
    let penalties = graph.transitions.iter().any(|t| !t.energy_penalty_j.is_zero());
    // penalties can move the energy-maximal path away from the WCET path
    let consistent = if penalties {
        aon >= recomputed
    } else {
        aon == recomputed
    };
    if !consistent {
        return Err(AnalysisError::Mismatch {
            solver: format_exact(&aon),
            recomputed: format_exact(&recomputed),
        });
    }
    Ok(Analysis {
        name: program.name.clone(),
        wcet_cycles: cycles,
        wcec_always_on: aon,
        wcec_device_aware: value(2),
        states,
        solved,
        warnings,
        clock_hz: platform.clock_hz,
    })
}

/// A rendered result-table row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub name: String,
    pub cycles: u64,
    pub time_us: String,
    pub always_on_uj: String,
    pub device_aware_uj: String,
    /// Exact decimal fields of the machine-readable line.
    pub time_ns_exact: String,
    pub always_on_pj_exact: String,
    pub device_aware_pj_exact: String,
}

pub const TIME_SIG: u32 = 3;
pub const ENERGY_SIG: u32 = 4;

pub fn row(a: &Analysis) -> Row {
    let secs = a.wcet_seconds();
    let pico = q_u64(PS_PER_S);
    Row {
        name: a.name.clone(),
        cycles: a.wcet_cycles,
        time_us: format_sig(&micro(&secs), TIME_SIG),
        always_on_uj: format_sig(&micro(&a.wcec_always_on), ENERGY_SIG),
        device_aware_uj: format_sig(&micro(&a.wcec_device_aware), ENERGY_SIG),
        time_ns_exact: format_exact(&(&secs * &pico / q_u64(PS_PER_NS))),
        always_on_pj_exact: format_exact(&(&a.wcec_always_on * &pico)),
        device_aware_pj_exact: format_exact(&(&a.wcec_device_aware * &pico)),
    }
}

/// Aligned text table.
pub fn render_table(rows: &[Row]) -> String {
    let name_w = rows
        .iter()
        .map(|r| r.name.len())
        .max()
        .unwrap_or(0)
        .max("program".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<name_w$}  {:>8}  {:>8}  {:>14}  {:>17}",
        "program", "cycles", "us", "always-on uJ", "device-aware uJ"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<name_w$}  {:>8}  {:>8}  {:>14}  {:>17}",
            r.name, r.cycles, r.time_us, r.always_on_uj, r.device_aware_uj
        );
    }
    out
}

/// `row <name> <cycles> <ns> <aon_pJ> <da_pJ>` lines.
pub fn render_lines(rows: &[Row]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(
            out,
            "row {} {} {} {} {}",
            r.name, r.cycles, r.time_ns_exact, r.always_on_pj_exact, r.device_aware_pj_exact
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::default_esp32c3_model;
    use crate::program::{BasicBlock, ProgramBuilder};

    #[test]
    fn single_block_row() {
        let p = ProgramBuilder::new("wifi_hw_deinit")
            .block(BasicBlock::new("b0", 48))
            .exit("b0")
            .build();
        let (g, pl) = default_esp32c3_model();
        let a = analyze_program(&p, &g, &pl, &SolverConfig::default()).unwrap();
        let r = row(&a);
        assert_eq!(
            (r.cycles, r.time_us.as_str(), r.always_on_uj.as_str()),
            (48, "0.3", "0.3099")
        );
        assert_eq!(r.time_ns_exact, "300");
        assert_eq!(r.always_on_pj_exact, "309870");
        // no ops, initial Sleep: CPU only
        assert_eq!(r.device_aware_pj_exact, "27720");
        assert_eq!(render_lines(&[r]), "row wifi_hw_deinit 48 300 309870 27720\n");
    }

    #[test]
    fn invalid_programs_report_diagnostics() {
        let p = ProgramBuilder::new("x")
            .block(BasicBlock::new("a", 1).with_ops(["warp"]))
            .exit("a")
            .build();
        let (g, pl) = default_esp32c3_model();
        assert!(matches!(
            analyze_program(&p, &g, &pl, &SolverConfig::default()),
            Err(AnalysisError::Diagnostics(_))
        ));
    }
}
