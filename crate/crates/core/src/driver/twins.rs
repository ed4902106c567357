//! WCIR twins of the driver functions, generated from the block tables.

use super::tables::{self, BlockSpec, FunctionSpec};
use crate::device::states;
use crate::peripheral::AckWaitState;
use crate::program::{serialize_wcir, BasicBlock, BlockId, EdgeKind, ProgramBuilder, WcirProgram};
use std::collections::{BTreeMap, HashMap};

fn block(spec: &BlockSpec, inlined: bool, policy: AckWaitState) -> BasicBlock {
    let cycles = if inlined { spec.inlined } else { spec.cycles };
    BasicBlock::new(spec.id, cycles).with_ops(spec.ops.resolve(policy))
}

fn add_function(mut b: ProgramBuilder, f: &FunctionSpec, inlined: bool, policy: AckWaitState) -> ProgramBuilder {
    for spec in f.blocks {
        b = b.block(block(spec, inlined, policy));
    }
    for (from, to) in f.edges {
        b = b.edge(from, to);
    }
    for (header, bound, origin) in f.loops {
        b = b.loop_bound(header, *bound, *origin);
    }
    b
}

/// Standalone twin of one driver function.
pub fn function_twin(f: &FunctionSpec, policy: AckWaitState) -> WcirProgram {
    let mut b = add_function(ProgramBuilder::new(f.name), f, false, policy).entry(f.blocks[0].id);
    for x in f.exits {
        b = b.exit(x);
    }
    for s in f.entry.resolve(policy) {
        b = b.entry_state(s);
    }
    b.build()
}

/// Twin of the TX task: transmit, actively wait, then process the
/// completion or the timeout. Callees are inlined; the inlined busy-slot
/// return jumps straight to the task exit.
pub fn tx_task_twin(policy: AckWaitState) -> WcirProgram {
    let mut b = ProgramBuilder::new(tables::TX_TASK_NAME)
        .block(block(&tables::TASK_ENTRY, false, policy))
        .entry(tables::TASK_ENTRY.id);
    for f in [
        &tables::TRANSMIT_PACKET,
        &tables::WAIT_FOR_TX,
        &tables::PROCESS_TX_DONE,
        &tables::PROCESS_TIMEOUT,
    ] {
        b = add_function(b, f, true, policy);
    }
    b = b.without_edge(tables::TP_BUSY.id, tables::TP_EXIT.id);
    b.block(block(&tables::TASK_EXIT, false, policy))
        .edge("task_entry", "tp_entry")
        .edge("tp_busy", "task_exit")
        .edge("tp_exit", "wt_entry")
        .edge("wt_exit", "pd_entry")
        .edge("wt_exit", "pt_entry")
        .edge("pd_exit", "task_exit")
        .edge("pt_exit", "task_exit")
        .exit("task_exit")
        .entry_state(states::STANDBY)
        .build()
}

/// The twelve function twins, in result-table order.
pub fn function_twins(policy: AckWaitState) -> Vec<WcirProgram> {
    tables::FUNCTIONS.iter().map(|f| function_twin(f, policy)).collect()
}

/// Twin of `function` (a driver function or the TX task).
pub fn twin_for(function: &str, policy: AckWaitState) -> Option<WcirProgram> {
    if function == tables::TX_TASK_NAME {
        return Some(tx_task_twin(policy));
    }
    tables::function(function).map(|f| function_twin(f, policy))
}

/// Policy used by the bundled fixtures.
pub const FIXTURE_POLICY: AckWaitState = AckWaitState::Sleep;

const FIXTURE_HEADER: &str = "# Generated by `wcec gen-fixtures`.\n\
# Block cycle counts are reconstructed calibration constants chosen so that\n\
# the worst-case path reproduces the published per-function totals.\n";

/// Fixture files as `(relative path, text)` pairs.
pub fn fixture_files() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = function_twins(FIXTURE_POLICY)
        .iter()
        .map(|p| {
            (
                format!("functions/{}.wcir", p.name),
                format!("{FIXTURE_HEADER}{}", serialize_wcir(p)),
            )
        })
        .collect();
    out.push((
        "tasks/tx_task.wcir".into(),
        format!("{FIXTURE_HEADER}{}", serialize_wcir(&tx_task_twin(FIXTURE_POLICY))),
    ));
    for policy in AckWaitState::ALL {
        out.push((
            format!("policies/tx_task_{}.wcir", policy.as_str()),
            format!("{FIXTURE_HEADER}{}", serialize_wcir(&tx_task_twin(policy))),
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("path is empty")]
    Empty,
    #[error("path starts at `{0}`, not at the entry")]
    WrongStart(String),
    #[error("unknown block `{0}`")]
    UnknownBlock(String),
    #[error("no edge `{0}` -> `{1}`")]
    NoEdge(String, String),
    #[error("path ends at non-exit `{0}`")]
    NotAtExit(String),
    #[error("loop `{header}` iterated {count} times, bound {bound}")]
    LoopBound { header: String, count: u64, bound: u64 },
}

/// Checks that `path` is an execution path of `program` that respects every
/// loop bound, and returns its cycle cost.
pub fn check_path(program: &WcirProgram, path: &[&str]) -> Result<u64, PathError> {
    let first = path.first().ok_or(PathError::Empty)?;
    if *first != program.entry.as_str() {
        return Err(PathError::WrongStart(first.to_string()));
    }
    let cycles: HashMap<&str, u64> = program.blocks.iter().map(|b| (b.id.as_str(), b.cycles)).collect();
    let kinds: HashMap<(&str, &str), EdgeKind> = program
        .edges
        .iter()
        .map(|e| ((e.from.as_str(), e.to.as_str()), e.kind))
        .collect();
    // back-edge traversals since the loop was last entered
    let mut trips: BTreeMap<&str, u64> = BTreeMap::new();
    let mut total = 0u64;
    for (i, id) in path.iter().enumerate() {
        total += cycles.get(id).ok_or_else(|| PathError::UnknownBlock(id.to_string()))?;
        if i == 0 {
            continue;
        }
        let prev = path[i - 1];
        let kind = kinds
            .get(&(prev, *id))
            .ok_or_else(|| PathError::NoEdge(prev.to_string(), id.to_string()))?;
        if let Some(lb) = program.loop_bound(&BlockId::from(*id)) {
            let count = trips.entry(id).or_insert(0);
            if *kind == EdgeKind::Back {
                *count += 1;
                if *count > lb.bound {
                    return Err(PathError::LoopBound {
                        header: id.to_string(),
                        count: *count,
                        bound: lb.bound,
                    });
                }
            } else {
                *count = 0;
            }
        }
    }
    let last = path.last().expect("non-empty");
    if !program.is_exit(&BlockId::from(*last)) {
        return Err(PathError::NotAtExit(last.to_string()));
    }
    Ok(total)
}
