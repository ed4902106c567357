//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use wcec_core::device::{DeviceGraph, StateId};
use wcec_core::program::{BasicBlock, BlockId, BoundOrigin, ProgramBuilder};
use wcec_core::{WcirProgram, Q};

pub const OPS: [&str; 4] = ["wifi_power_up", "wifi_power_down", "tx_start", "tx_done"];
pub const STATES: [&str; 3] = ["Sleep", "Standby", "Transmitting"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random valid acyclic program with 1..=`max_blocks` blocks. Block `b<i>`
/// only has edges to higher-numbered blocks; every block is reachable and
/// every sink is an exit.
pub fn acyclic_program(seed: u64, max_blocks: usize) -> WcirProgram {
    let mut r = rng(seed);
    let n = r.gen_range(1..=max_blocks);
    let mut b = ProgramBuilder::new(format!("rand{seed}"));
    for i in 0..n {
        let mut block = BasicBlock::new(format!("b{i}"), r.gen_range(0..500));
        if r.gen_bool(0.35) {
            let k = r.gen_range(1..=2);
            block = block.with_ops((0..k).map(|_| OPS[r.gen_range(0..OPS.len())]));
        }
        if r.gen_bool(0.1) {
            block = block.with_label(format!("l \"{i}\" \\ x"));
        }
        b = b.block(block);
    }
    let mut edges = BTreeSet::new();
    for i in 1..n {
        edges.insert((r.gen_range(0..i), i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if r.gen_bool(0.2) {
                edges.insert((i, j));
            }
        }
    }
    for &(i, j) in &edges {
        b = b.edge(&format!("b{i}"), &format!("b{j}"));
    }
    for i in 0..n {
        if !edges.iter().any(|&(f, _)| f == i) {
            b = b.exit(&format!("b{i}"));
        }
    }
    for s in STATES {
        if r.gen_bool(0.25) {
            b = b.entry_state(s);
        }
    }
    b.entry("b0").build()
}

/// `pre -> h -> body -> h -> post`, header and latch costing nothing extra.
pub fn single_loop(pre: u64, body: u64, post: u64, bound: u64) -> WcirProgram {
    ProgramBuilder::new("single_loop")
        .block(BasicBlock::new("pre", pre))
        .block(BasicBlock::new("h", 0))
        .block(BasicBlock::new("body", body))
        .block(BasicBlock::new("post", post))
        .edge("pre", "h")
        .edge("h", "body")
        .edge("body", "h")
        .edge("h", "post")
        .entry("pre")
        .exit("post")
        .loop_bound("h", bound, BoundOrigin::Protocol)
        .build()
}

/// Every entry-to-exit path of an acyclic program.
pub fn all_paths(p: &WcirProgram) -> Vec<Vec<BlockId>> {
    let succ = p.successors();
    let mut out = Vec::new();
    let mut stack = vec![vec![p.entry.clone()]];
    while let Some(path) = stack.pop() {
        let last = path.last().unwrap();
        if p.is_exit(last) {
            out.push(path.clone());
        }
        for s in succ.get(last).into_iter().flatten() {
            let mut next = path.clone();
            next.push((*s).clone());
            stack.push(next);
        }
    }
    out
}

/// Largest path sum of `coeff` by explicit enumeration.
pub fn brute_force_max(p: &WcirProgram, coeff: impl Fn(&BlockId) -> Q) -> Q {
    all_paths(p)
        .iter()
        .map(|path| path.iter().map(&coeff).sum::<Q>())
        .max()
        .expect("valid programs have a path")
}

/// Device states seen along `path` from `start`: per block, the state at
/// entry and every state the block passes through.
pub fn replay_states(
    g: &DeviceGraph,
    p: &WcirProgram,
    start: &StateId,
    path: &[BlockId],
) -> Vec<(BlockId, StateId, Vec<StateId>)> {
    let mut cur = start.clone();
    let mut out = Vec::new();
    for id in path {
        let entry = cur.clone();
        let mut seen = vec![cur.clone()];
        for op in &p.block(id).unwrap().device_ops {
            cur = g.step(&cur, op).unwrap().state;
            seen.push(cur.clone());
        }
        out.push((id.clone(), entry, seen));
    }
    out
}
