//! WCIR: annotated control-flow graphs, the subject of every analysis.
//!
//! A [`WcirProgram`] carries per-block worst-case cycle counts, the device
//! operations a block fires, and loop bounds.
//!
//! # Loop-bound convention
//!
//! A [`LoopBound`] of `N` on header `h` limits the number of times a back
//! edge into `h` is taken **per entry into the loop**: over the whole
//! execution, `Σ f(back edges of h) ≤ N · Σ f(loop-entry edges of h)`.
//! A loop whose body is guarded by a zero-cycle header therefore executes
//! its body at most `N` times per entry, and a WCET of
//! `pre + N·body + post` falls out directly.

mod loops;
mod text;
mod validate;

pub use loops::{dominators, natural_loops, LoopError, NaturalLoop};
pub use text::{parse_wcir, serialize_wcir, ParseError};
pub use validate::{validate, Diagnostic, Severity};

use crate::device::{DeviceOp, StateId};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// Identifier of a basic block (`[A-Za-z_][A-Za-z0-9_]*`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub String);

impl BlockId {
    pub fn new(id: impl Into<String>) -> Self {
        BlockId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BlockId {
    fn from(s: &str) -> Self {
        BlockId(s.to_string())
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub id: BlockId,
    /// Worst-case processor cycles for one execution of the block.
    pub cycles: u64,
    /// Device operations fired, in order, when the block executes.
    pub device_ops: Vec<DeviceOp>,
    pub label: Option<String>,
}

impl BasicBlock {
    pub fn new(id: impl Into<String>, cycles: u64) -> Self {
        BasicBlock {
            id: BlockId::new(id),
            cycles,
            device_ops: Vec::new(),
            label: None,
        }
    }

    pub fn with_ops<I, S>(mut self, ops: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.device_ops = ops.into_iter().map(|o| DeviceOp::new(o)).collect();
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Forward,
    Back,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: BlockId,
    pub to: BlockId,
    pub kind: EdgeKind,
}

/// Where a loop bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundOrigin {
    Driver,
    Hardware,
    Protocol,
}

impl BoundOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundOrigin::Driver => "driver",
            BoundOrigin::Hardware => "hardware",
            BoundOrigin::Protocol => "protocol",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "driver" => Some(BoundOrigin::Driver),
            "hardware" => Some(BoundOrigin::Hardware),
            "protocol" => Some(BoundOrigin::Protocol),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopBound {
    pub header: BlockId,
    pub bound: u64,
    pub origin: BoundOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WcirProgram {
    pub name: String,
    pub blocks: Vec<BasicBlock>,
    pub edges: Vec<Edge>,
    pub entry: BlockId,
    pub exits: Vec<BlockId>,
    pub loop_bounds: Vec<LoopBound>,
    /// Device states the entry block may be entered in, besides the
    /// device graph's initial state.
    pub entry_states: Vec<StateId>,
}

impl WcirProgram {
    pub fn block(&self, id: &BlockId) -> Option<&BasicBlock> {
        self.blocks.iter().find(|b| &b.id == id)
    }

    pub fn block_index(&self) -> HashMap<&BlockId, usize> {
        self.blocks.iter().enumerate().map(|(i, b)| (&b.id, i)).collect()
    }

    pub fn loop_bound(&self, header: &BlockId) -> Option<&LoopBound> {
        self.loop_bounds.iter().find(|l| &l.header == header)
    }

    pub fn successors(&self) -> BTreeMap<&BlockId, Vec<&BlockId>> {
        let mut succ: BTreeMap<&BlockId, Vec<&BlockId>> = self.blocks.iter().map(|b| (&b.id, Vec::new())).collect();
        for e in &self.edges {
            succ.entry(&e.from).or_default().push(&e.to);
        }
        succ
    }

    pub fn predecessors(&self) -> BTreeMap<&BlockId, Vec<&BlockId>> {
        let mut pred: BTreeMap<&BlockId, Vec<&BlockId>> = self.blocks.iter().map(|b| (&b.id, Vec::new())).collect();
        for e in &self.edges {
            pred.entry(&e.to).or_default().push(&e.from);
        }
        pred
    }

    pub fn is_exit(&self, id: &BlockId) -> bool {
        self.exits.contains(id)
    }

    /// Recomputes every edge's [`EdgeKind`]: an edge is `Back` iff it is a
    /// retreating edge of the depth-first spanning tree rooted at `entry`
    /// (successors visited in declaration order). Edges from unreachable
    /// blocks are left `Forward`.
    pub fn classify_edges(&mut self) {
        let index = self.block_index();
        let n = self.blocks.len();
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (ei, e) in self.edges.iter().enumerate() {
            if let (Some(&f), Some(&t)) = (index.get(&e.from), index.get(&e.to)) {
                adjacency[f].push((ei, t));
            }
        }
        let mut kinds = vec![EdgeKind::Forward; self.edges.len()];
        if let Some(&root) = index.get(&self.entry) {
            #[derive(Clone, Copy, PartialEq)]
            enum Mark {
                New,
                Active,
                Done,
            }
            let mut mark = vec![Mark::New; n];
            // iterative DFS: (node, next successor position)
            let mut stack = vec![(root, 0usize)];
            mark[root] = Mark::Active;
            while let Some(top) = stack.last_mut() {
                let node = top.0;
                if top.1 < adjacency[node].len() {
                    let (ei, target) = adjacency[node][top.1];
                    top.1 += 1;
                    match mark[target] {
                        Mark::New => {
                            mark[target] = Mark::Active;
                            stack.push((target, 0));
                        }
                        Mark::Active => kinds[ei] = EdgeKind::Back,
                        Mark::Done => {}
                    }
                } else {
                    mark[node] = Mark::Done;
                    stack.pop();
                }
            }
        }
        for (e, k) in self.edges.iter_mut().zip(kinds) {
            e.kind = k;
        }
    }
}

/// Incremental construction of programs in code (fixtures, generators, tests).
#[derive(Debug, Clone, Default)]
pub struct ProgramBuilder {
    name: String,
    blocks: Vec<BasicBlock>,
    edges: Vec<(BlockId, BlockId)>,
    entry: Option<BlockId>,
    exits: Vec<BlockId>,
    loop_bounds: Vec<LoopBound>,
    entry_states: Vec<StateId>,
}

impl ProgramBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ProgramBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn block(mut self, block: BasicBlock) -> Self {
        self.blocks.push(block);
        self
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.edges.push((from.into(), to.into()));
        self
    }

    /// Drops every edge `from -> to` added so far.
    pub fn without_edge(mut self, from: &str, to: &str) -> Self {
        self.edges.retain(|(f, t)| !(f.as_str() == from && t.as_str() == to));
        self
    }

    pub fn entry(mut self, id: &str) -> Self {
        self.entry = Some(id.into());
        self
    }

    pub fn exit(mut self, id: &str) -> Self {
        self.exits.push(id.into());
        self
    }

    pub fn loop_bound(mut self, header: &str, bound: u64, origin: BoundOrigin) -> Self {
        self.loop_bounds.push(LoopBound {
            header: header.into(),
            bound,
            origin,
        });
        self
    }

    pub fn entry_state(mut self, state: &str) -> Self {
        self.entry_states.push(StateId::new(state));
        self
    }

    /// Assembles the program and classifies its edges. The entry defaults to
    /// the first block. No validation happens here; see [`validate`].
    pub fn build(self) -> WcirProgram {
        let entry = self
            .entry
            .or_else(|| self.blocks.first().map(|b| b.id.clone()))
            .unwrap_or_else(|| BlockId::new("entry"));
        let mut program = WcirProgram {
            name: self.name,
            blocks: self.blocks,
            edges: self
                .edges
                .into_iter()
                .map(|(from, to)| Edge {
                    from,
                    to,
                    kind: EdgeKind::Forward,
                })
                .collect(),
            entry,
            exits: self.exits,
            loop_bounds: self.loop_bounds,
            entry_states: self.entry_states,
        };
        program.classify_edges();
        program
    }
}
