//! Forward device-state dataflow over a WCIR program.

use crate::device::{DeviceError, DeviceGraph, DeviceOp, PlatformModel, PowerMode, StateId};
use crate::program::{BlockId, Diagnostic, WcirProgram};
use crate::units::Q;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStates {
    /// Possible states at block entry.
    pub entry: BTreeSet<StateId>,
    /// Every state the device may be in while the block runs.
    pub occupied: BTreeSet<StateId>,
    /// Possible states at block exit.
    pub exit: BTreeSet<StateId>,
    /// Highest-power member of `occupied`.
    pub cost_state: StateId,
}

/// An op that had no transition from some state it was applied in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InertUse {
    pub block: BlockId,
    pub op: DeviceOp,
    pub state: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateMap {
    pub blocks: BTreeMap<BlockId, BlockStates>,
    pub inert: BTreeSet<InertUse>,
}

impl StateMap {
    pub fn cost_state(&self, block: &BlockId) -> Option<&StateId> {
        self.blocks.get(block).map(|b| &b.cost_state)
    }
}

fn argmax_state<'a>(
    graph: &DeviceGraph,
    platform: &PlatformModel,
    states: impl IntoIterator<Item = &'a StateId>,
) -> Result<Option<StateId>, DeviceError> {
    let mut best: Option<(Q, usize, StateId)> = None;
    for s in states {
        let rate = graph.energy_rate(platform, &PowerMode::State(s.clone()))?;
        let pos = graph.state_index(s).unwrap_or(usize::MAX);
        let better = match &best {
            None => true,
            // ties go to the state declared first
            Some((r, p, _)) => rate > *r || (rate == *r && pos < *p),
        };
        if better {
            best = Some((rate, pos, s.clone()));
        }
    }
    Ok(best.map(|(_, _, s)| s))
}

/// Least fixed point of `in(b) = ∪ out(pred)`, `out(b) = ops_b(in(b))`,
/// seeded with `{initial} ∪ program.entry_states` at the entry block.
///
/// Unreachable blocks get an empty state set and are costed at the
/// graph's highest-power state.
pub fn analyze_states(
    program: &WcirProgram,
    graph: &DeviceGraph,
    platform: &PlatformModel,
    initial: &StateId,
) -> Result<StateMap, DeviceError> {
    graph.state(initial)?;
    for s in &program.entry_states {
        graph.state(s)?;
    }
    let succ = program.successors();
    let ops_of: BTreeMap<&BlockId, &[DeviceOp]> = program
        .blocks
        .iter()
        .map(|b| (&b.id, b.device_ops.as_slice()))
        .collect();

    let mut entry_sets: BTreeMap<&BlockId, BTreeSet<StateId>> =
        program.blocks.iter().map(|b| (&b.id, BTreeSet::new())).collect();
    let seed: BTreeSet<StateId> = std::iter::once(initial.clone())
        .chain(program.entry_states.iter().cloned())
        .collect();
    entry_sets.insert(&program.entry, seed);

    let mut queue: VecDeque<&BlockId> = VecDeque::from([&program.entry]);
    let mut queued: BTreeSet<&BlockId> = BTreeSet::from([&program.entry]);
    while let Some(b) = queue.pop_front() {
        queued.remove(b);
        let ops = ops_of.get(b).copied().unwrap_or(&[]);
        let mut out = BTreeSet::new();
        for s in &entry_sets[b] {
            out.insert(graph.replay(s, ops)?);
        }
        for t in succ.get(b).into_iter().flatten() {
            let Some(set) = entry_sets.get_mut(*t) else { continue };
            let before = set.len();
            set.extend(out.iter().cloned());
            if set.len() != before && queued.insert(t) {
                queue.push_back(t);
            }
        }
    }

    let fallback = argmax_state(graph, platform, graph.states.iter().map(|s| &s.id))?
        .ok_or_else(|| DeviceError::Invalid("device graph has no states".into()))?;
    let mut blocks = BTreeMap::new();
    let mut inert = BTreeSet::new();
    for b in &program.blocks {
        let entry = entry_sets.remove(&b.id).unwrap_or_default();
        let mut occupied = entry.clone();
        let mut exit = BTreeSet::new();
        for s in &entry {
            let mut cur = s.clone();
            for op in &b.device_ops {
                let step = graph.step(&cur, op)?;
                if step.inert {
                    inert.insert(InertUse {
                        block: b.id.clone(),
                        op: op.clone(),
                        state: cur.clone(),
                    });
                }
                cur = step.state;
                occupied.insert(cur.clone());
            }
            exit.insert(cur);
        }
        let cost_state = argmax_state(graph, platform, &occupied)?.unwrap_or_else(|| fallback.clone());
        blocks.insert(
            b.id.clone(),
            BlockStates {
                entry,
                occupied,
                exit,
                cost_state,
            },
        );
    }
    Ok(StateMap { blocks, inert })
}

/// Every op a program fires must be known to the graph.
pub fn check_ops(program: &WcirProgram, graph: &DeviceGraph) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for b in &program.blocks {
        for op in &b.device_ops {
            if !graph.knows_op(op) {
                out.push(Diagnostic::error(
                    b.id.to_string(),
                    format!("device op `{op}` appears in no transition and is not declared inert"),
                ));
            }
        }
    }
    for s in &program.entry_states {
        if graph.state(s).is_err() {
            out.push(Diagnostic::error(
                None,
                format!("entry state `{s}` is not a device state"),
            ));
        }
    }
    out
}
