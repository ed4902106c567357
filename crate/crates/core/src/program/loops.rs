//! Dominators and natural loops.

use super::{BlockId, EdgeKind, WcirProgram};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoopError {
    #[error("irreducible control flow: back edge {from}→{to} does not target a dominator")]
    Irreducible { from: BlockId, to: BlockId },
    #[error("entry block `{0}` is not defined")]
    MissingEntry(BlockId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaturalLoop {
    pub header: BlockId,
    /// Back edges `(source, header)` closing this loop.
    pub back_edges: Vec<BlockId>,
    pub body: BTreeSet<BlockId>,
}

/// Reverse postorder of the blocks reachable from the entry.
fn reverse_postorder(succ: &[Vec<usize>], root: usize) -> Vec<usize> {
    let mut visited = vec![false; succ.len()];
    let mut post = Vec::with_capacity(succ.len());
    let mut stack = vec![(root, 0usize)];
    visited[root] = true;
    while let Some(top) = stack.last_mut() {
        let node = top.0;
        if top.1 < succ[node].len() {
            let next = succ[node][top.1];
            top.1 += 1;
            if !visited[next] {
                visited[next] = true;
                stack.push((next, 0));
            }
        } else {
            post.push(node);
            stack.pop();
        }
    }
    post.reverse();
    post
}

/// Immediate dominators (Cooper, Harvey & Kennedy iteration). Returns a map
/// from every reachable block to its immediate dominator; the entry maps to
/// itself.
pub fn dominators(program: &WcirProgram) -> Result<BTreeMap<BlockId, BlockId>, LoopError> {
    let index = program.block_index();
    let root = *index
        .get(&program.entry)
        .ok_or_else(|| LoopError::MissingEntry(program.entry.clone()))?;
    let n = program.blocks.len();
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    for e in &program.edges {
        if let (Some(&f), Some(&t)) = (index.get(&e.from), index.get(&e.to)) {
            succ[f].push(t);
            pred[t].push(f);
        }
    }
    let rpo = reverse_postorder(&succ, root);
    let mut order = vec![usize::MAX; n];
    for (i, &b) in rpo.iter().enumerate() {
        order[b] = i;
    }
    let mut idom = vec![usize::MAX; n];
    idom[root] = root;
    let intersect = |idom: &[usize], mut a: usize, mut b: usize| {
        while a != b {
            while order[a] > order[b] {
                a = idom[a];
            }
            while order[b] > order[a] {
                b = idom[b];
            }
        }
        a
    };
    let mut changed = true;
    while changed {
        changed = false;
        for &b in rpo.iter().skip(1) {
            let mut new_idom = usize::MAX;
            for &p in &pred[b] {
                if idom[p] == usize::MAX {
                    continue;
                }
                new_idom = if new_idom == usize::MAX {
                    p
                } else {
                    intersect(&idom, p, new_idom)
                };
            }
            if new_idom != idom[b] {
                idom[b] = new_idom;
                changed = true;
            }
        }
    }
    Ok(rpo
        .iter()
        .map(|&b| (program.blocks[b].id.clone(), program.blocks[idom[b]].id.clone()))
        .collect())
}

/// True iff `a` dominates `b` under the immediate-dominator tree `idom`.
pub(crate) fn dominates(idom: &BTreeMap<BlockId, BlockId>, a: &BlockId, b: &BlockId) -> bool {
    let mut cur = b;
    loop {
        if cur == a {
            return true;
        }
        match idom.get(cur) {
            Some(parent) if parent != cur => cur = parent,
            _ => return false,
        }
    }
}

/// Natural loops, one per header (bodies of back edges sharing a header are
/// merged), ordered by header in block-declaration order.
///
/// Every back edge must target a block that dominates its source; otherwise
/// the CFG is irreducible and rejected.
pub fn natural_loops(program: &WcirProgram) -> Result<Vec<NaturalLoop>, LoopError> {
    let idom = dominators(program)?;
    let preds = program.predecessors();
    let mut by_header: BTreeMap<&BlockId, (Vec<BlockId>, BTreeSet<BlockId>)> = BTreeMap::new();
    for e in program.edges.iter().filter(|e| e.kind == EdgeKind::Back) {
        if !idom.contains_key(&e.from) {
            continue;
        }
        if !dominates(&idom, &e.to, &e.from) {
            return Err(LoopError::Irreducible {
                from: e.from.clone(),
                to: e.to.clone(),
            });
        }
        let (sources, body) = by_header.entry(&e.to).or_default();
        sources.push(e.from.clone());
        body.insert(e.to.clone());
        let mut work = vec![&e.from];
        while let Some(b) = work.pop() {
            if body.insert(b.clone()) {
                for p in preds.get(b).into_iter().flatten() {
                    if idom.contains_key(*p) {
                        work.push(p);
                    }
                }
            }
        }
    }
    let position = program.block_index();
    let mut loops: Vec<NaturalLoop> = by_header
        .into_iter()
        .map(|(header, (back_edges, body))| NaturalLoop {
            header: header.clone(),
            back_edges,
            body,
        })
        .collect();
    loops.sort_by_key(|l| position.get(&l.header).copied().unwrap_or(usize::MAX));
    Ok(loops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{BasicBlock, ProgramBuilder};

    fn blocks(names: &[&str]) -> ProgramBuilder {
        names
            .iter()
            .fold(ProgramBuilder::new("t"), |b, n| b.block(BasicBlock::new(*n, 1)))
    }

    #[test]
    fn self_loop() {
        let p = blocks(&["e", "b1", "x"])
            .edge("e", "b1")
            .edge("b1", "b1")
            .edge("b1", "x")
            .exit("x")
            .build();
        let loops = natural_loops(&p).unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].header, BlockId::from("b1"));
        assert_eq!(loops[0].body, BTreeSet::from([BlockId::from("b1")]));
    }

    #[test]
    fn acyclic_has_no_loops() {
        let p = blocks(&["a", "b", "c", "d"])
            .edge("a", "b")
            .edge("a", "c")
            .edge("b", "d")
            .edge("c", "d")
            .exit("d")
            .build();
        assert!(natural_loops(&p).unwrap().is_empty());
    }

    #[test]
    fn nested_loops_by_hand() {
        // e -> h1 -> h2 -> b -> h2 ; h2 -> l1 -> h1 ; h1 -> x
        let p = blocks(&["e", "h1", "h2", "b", "l1", "x"])
            .edge("e", "h1")
            .edge("h1", "h2")
            .edge("h2", "b")
            .edge("b", "h2")
            .edge("h2", "l1")
            .edge("l1", "h1")
            .edge("h1", "x")
            .exit("x")
            .build();
        let loops = natural_loops(&p).unwrap();
        assert_eq!(loops.len(), 2);
        let outer = &loops[0];
        let inner = &loops[1];
        assert_eq!(outer.header, BlockId::from("h1"));
        assert_eq!(inner.header, BlockId::from("h2"));
        let ids = |v: &[&str]| v.iter().map(|s| BlockId::from(*s)).collect::<BTreeSet<_>>();
        assert_eq!(outer.body, ids(&["h1", "h2", "b", "l1"]));
        assert_eq!(inner.body, ids(&["h2", "b"]));
        assert!(inner.body.is_subset(&outer.body));
    }

    #[test]
    fn irreducible_is_rejected() {
        // two entries into the cycle a <-> b
        let p = blocks(&["e", "a", "b", "x"])
            .edge("e", "a")
            .edge("e", "b")
            .edge("a", "b")
            .edge("b", "a")
            .edge("a", "x")
            .exit("x")
            .build();
        assert!(matches!(natural_loops(&p), Err(LoopError::Irreducible { .. })));
    }

    #[test]
    fn dominator_tree_of_diamond() {
        let p = blocks(&["a", "b", "c", "d"])
            .edge("a", "b")
            .edge("a", "c")
            .edge("b", "d")
            .edge("c", "d")
            .exit("d")
            .build();
        let idom = dominators(&p).unwrap();
        assert_eq!(idom[&BlockId::from("d")], BlockId::from("a"));
        assert_eq!(idom[&BlockId::from("b")], BlockId::from("a"));
        assert_eq!(idom[&BlockId::from("a")], BlockId::from("a"));
    }
}
