//! Implicit path enumeration: WCIR program to integer linear program.
//!
//! Variables are `f_<block>` (block frequency), `e<k>_<from>_<to>` (edge
//! frequency, `k` the edge's index) and `t_<exit>` (flow from an exit into a
//! virtual sink). Constraints:
//!
//! * `f_entry = 1` and `Σ t_x = 1`;
//! * for every block, in-flow equals `f_b` equals out-flow;
//! * for every loop header `h` with bound `N`:
//!   `Σ f(back edges into h) − N · Σ f(entry edges into h) ≤ 0`.

use crate::device::{DeviceError, DeviceGraph, PlatformModel, PowerMode};
use crate::lp::{IlpProblem, Objective, Relation, VarOrigin};
use crate::program::{natural_loops, validate, BlockId, Diagnostic, EdgeKind, LoopError, Severity, WcirProgram};
use crate::states::StateMap;
use crate::units::{q, q_u64, Q};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, thiserror::Error)]
pub enum IpetError {
    #[error("device-aware objective requires a state map")]
    MissingStateMap,
    #[error("state map has no entry for block `{0}`")]
    IncompleteStateMap(BlockId),
    #[error("program is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// Per-block objective coefficient.
pub fn block_coefficient(
    program: &WcirProgram,
    block: &BlockId,
    statemap: Option<&StateMap>,
    graph: &DeviceGraph,
    platform: &PlatformModel,
    objective: Objective,
) -> Result<Q, IpetError> {
    let b = program
        .block(block)
        .ok_or_else(|| IpetError::Invalid(vec![Diagnostic::error(block.to_string(), "no such block")]))?;
    let cycles = q_u64(b.cycles);
    Ok(match objective {
        Objective::WcetCycles => cycles,
        Objective::WcecAlwaysOn => {
            let e = cycles * graph.energy_per_cycle(platform, &PowerMode::AlwaysOn)?;
            let starts: Vec<_> = graph.states.iter().map(|s| s.id.clone()).collect();
            e + max_penalty(graph, &starts, b)?
        }
        Objective::WcecDeviceAware => {
            let map = statemap.ok_or(IpetError::MissingStateMap)?;
            let st = map
                .blocks
                .get(block)
                .ok_or_else(|| IpetError::IncompleteStateMap(block.clone()))?;
            let e = cycles * graph.energy_per_cycle(platform, &PowerMode::State(st.cost_state.clone()))?;
            let starts: Vec<_> = st.entry.iter().cloned().collect();
            e + max_penalty(graph, &starts, b)?
        }
    })
}

/// Largest summed transition penalty the block's ops can incur from any of
/// `starts`.
fn max_penalty(
    graph: &DeviceGraph,
    starts: &[crate::device::StateId],
    block: &crate::program::BasicBlock,
) -> Result<Q, DeviceError> {
    let mut best = Q::zero();
    if block.device_ops.is_empty() {
        return Ok(best);
    }
    for s in starts {
        let mut cur = s.clone();
        let mut total = Q::zero();
        for op in &block.device_ops {
            let step = graph.step(&cur, op)?;
            total += step.energy_penalty_j;
            cur = step.state;
        }
        if total > best {
            best = total;
        }
    }
    Ok(best)
}

/// Builds the IPET problem for `program`.
pub fn build_ilp(
    program: &WcirProgram,
    statemap: Option<&StateMap>,
    graph: &DeviceGraph,
    platform: &PlatformModel,
    objective: Objective,
) -> Result<IlpProblem, IpetError> {
    let errors: Vec<Diagnostic> = validate(program)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        return Err(IpetError::Invalid(errors));
    }
    if objective == Objective::WcecDeviceAware && statemap.is_none() {
        return Err(IpetError::MissingStateMap);
    }
    let loops = natural_loops(program)?;

    let mut p = IlpProblem::new(program.name.clone(), objective);
    let mut block_var: HashMap<&BlockId, usize> = HashMap::new();
    for b in &program.blocks {
        let v = p.add_var(format!("f_{}", b.id), true, VarOrigin::Block(b.id.clone()));
        block_var.insert(&b.id, v);
        let c = block_coefficient(program, &b.id, statemap, graph, platform, objective)?;
        if !c.is_zero() {
            p.objective.push((c, v));
        }
    }
    let mut in_edges: BTreeMap<&BlockId, Vec<usize>> = BTreeMap::new();
    let mut out_edges: BTreeMap<&BlockId, Vec<usize>> = BTreeMap::new();
    let mut edge_var = Vec::with_capacity(program.edges.len());
    for (k, e) in program.edges.iter().enumerate() {
        let v = p.add_var(
            format!("e{k}_{}_{}", e.from, e.to),
            true,
            VarOrigin::Edge {
                from: e.from.clone(),
                to: e.to.clone(),
            },
        );
        edge_var.push(v);
        out_edges.entry(&e.from).or_default().push(v);
        in_edges.entry(&e.to).or_default().push(v);
    }
    let mut sink_terms = Vec::new();
    for x in &program.exits {
        let v = p.add_var(format!("t_{x}"), true, VarOrigin::Sink(x.clone()));
        out_edges.entry(x).or_default().push(v);
        sink_terms.push((Q::one(), v));
    }

    p.add_constraint(
        "entry",
        vec![(Q::one(), block_var[&program.entry])],
        Relation::Eq,
        Q::one(),
    );
    p.add_constraint("sink", sink_terms, Relation::Eq, Q::one());
    for b in &program.blocks {
        let f = block_var[&b.id];
        if b.id != program.entry {
            let mut terms: Vec<(Q, usize)> = in_edges
                .get(&b.id)
                .into_iter()
                .flatten()
                .map(|&v| (Q::one(), v))
                .collect();
            terms.push((q(-1), f));
            p.add_constraint(format!("in_{}", b.id), terms, Relation::Eq, Q::zero());
        }
        let mut terms = vec![(Q::one(), f)];
        terms.extend(out_edges.get(&b.id).into_iter().flatten().map(|&v| (q(-1), v)));
        p.add_constraint(format!("out_{}", b.id), terms, Relation::Eq, Q::zero());
    }
    for l in &loops {
        let bound = program
            .loop_bound(&l.header)
            .expect("validated programs bound every loop header");
        let mut terms = Vec::new();
        for (k, e) in program.edges.iter().enumerate() {
            if e.to != l.header {
                continue;
            }
            if e.kind == EdgeKind::Back {
                terms.push((Q::one(), edge_var[k]));
            } else {
                terms.push((-q_u64(bound.bound), edge_var[k]));
            }
        }
        p.add_constraint(format!("loop_{}", l.header), terms, Relation::Le, Q::zero());
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::default_esp32c3_model;
    use crate::program::{BasicBlock, BoundOrigin, ProgramBuilder};

    #[test]
    fn single_block_problem() {
        let p = ProgramBuilder::new("deinit")
            .block(BasicBlock::new("b0", 48))
            .exit("b0")
            .build();
        let (g, pl) = default_esp32c3_model();
        let ilp = build_ilp(&p, None, &g, &pl, Objective::WcetCycles).unwrap();
        assert_eq!(ilp.variables.len(), 2);
        assert_eq!(ilp.objective, vec![(q(48), 0)]);
        assert_eq!(ilp.constraints[0].name, "entry");
        let aon = build_ilp(&p, None, &g, &pl, Objective::WcecAlwaysOn).unwrap();
        assert_eq!(
            aon.objective[0].0,
            crate::units::ratio(48 * 6_455_625, 1_000_000_000) / q(1_000_000)
        );
    }

    #[test]
    fn device_aware_needs_states() {
        let p = ProgramBuilder::new("x")
            .block(BasicBlock::new("b0", 1))
            .exit("b0")
            .build();
        let (g, pl) = default_esp32c3_model();
        assert!(matches!(
            build_ilp(&p, None, &g, &pl, Objective::WcecDeviceAware),
            Err(IpetError::MissingStateMap)
        ));
    }

    #[test]
    fn unbounded_loop_is_rejected() {
        let p = ProgramBuilder::new("x")
            .block(BasicBlock::new("a", 1))
            .block(BasicBlock::new("h", 1))
            .block(BasicBlock::new("z", 1))
            .edge("a", "h")
            .edge("h", "h")
            .edge("h", "z")
            .exit("z")
            .build();
        let (g, pl) = default_esp32c3_model();
        assert!(matches!(
            build_ilp(&p, None, &g, &pl, Objective::WcetCycles),
            Err(IpetError::Invalid(_))
        ));
    }

    #[test]
    fn loop_constraint_shape() {
        let p = ProgramBuilder::new("x")
            .block(BasicBlock::new("a", 1))
            .block(BasicBlock::new("h", 0))
            .block(BasicBlock::new("body", 5))
            .block(BasicBlock::new("z", 1))
            .edge("a", "h")
            .edge("h", "body")
            .edge("body", "h")
            .edge("h", "z")
            .exit("z")
            .loop_bound("h", 7, BoundOrigin::Driver)
            .build();
        let (g, pl) = default_esp32c3_model();
        let ilp = build_ilp(&p, None, &g, &pl, Objective::WcetCycles).unwrap();
        let c = ilp.constraints.iter().find(|c| c.name == "loop_h").unwrap();
        let names: Vec<_> = c
            .terms
            .iter()
            .map(|(k, v)| (k.clone(), ilp.variables[*v].name.clone()))
            .collect();
        assert_eq!(
            names,
            vec![(q(-7), "e0_a_h".to_string()), (q(1), "e2_body_h".to_string())]
        );
    }
}
