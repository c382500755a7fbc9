//! Basic blocks and control-flow edges.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::method::Method;
use crate::opcode::Opcode;
use crate::validate::validate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Fallthrough,
    BranchTaken,
}

/// A maximal straight-line run of instructions. `start` and `end` are the
/// offsets of its first and last instruction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub id: usize,
    pub start: u32,
    pub end: u32,
    /// Instruction indices `first..=last` into `Method::code`.
    pub first: usize,
    pub last: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfg {
    pub blocks: Vec<Block>,
    pub edges: Vec<Edge>,
    pub entry: usize,
}

/// Offsets control may reach directly after executing the instruction at
/// `offset`.
pub fn successors(method: &Method, offset: u32) -> Result<BTreeSet<u32>> {
    let index = method.index_of(offset).ok_or(Error::UnknownOffset(offset))?;
    Ok(successors_at(method, index))
}

fn successors_at(method: &Method, index: usize) -> BTreeSet<u32> {
    let insn = &method.code[index];
    let mut out = BTreeSet::new();
    if insn.opcode.is_return() {
        return out;
    }
    if insn.opcode != Opcode::Goto {
        if let Some(next) = method.code.get(index + 1) {
            out.insert(next.offset);
        }
    }
    if let Some(t) = insn.branch_target() {
        out.insert(t);
    }
    out
}

pub fn build_cfg(method: &Method) -> Result<Cfg> {
    let report = validate(method);
    if !report.is_valid() {
        return Err(Error::Invalid { method: method.name.clone(), report });
    }
    Ok(partition(method))
}

/// Leader partition of an already validated method.
pub(crate) fn partition(method: &Method) -> Cfg {
    let code = &method.code;
    let mut leaders = BTreeSet::from([0usize]);
    for (index, insn) in code.iter().enumerate() {
        if let Some(t) = insn.branch_target().and_then(|t| method.index_of(t)) {
            leaders.insert(t);
        }
        if insn.opcode.is_terminator() && index + 1 < code.len() {
            leaders.insert(index + 1);
        }
    }
    let starts: Vec<usize> = leaders.into_iter().collect();
    let blocks: Vec<Block> = starts
        .iter()
        .enumerate()
        .map(|(id, &first)| {
            let last = starts.get(id + 1).map_or(code.len() - 1, |next| next - 1);
            Block { id, start: code[first].offset, end: code[last].offset, first, last }
        })
        .collect();

    let block_of_index = |index: usize| starts.partition_point(|&s| s <= index) - 1;
    let mut edges = Vec::new();
    for block in &blocks {
        let insn = &code[block.last];
        if insn.opcode.is_return() {
            continue;
        }
        if insn.opcode != Opcode::Goto && block.last + 1 < code.len() {
            edges.push(Edge {
                from: block.id,
                to: block_of_index(block.last + 1),
                kind: EdgeKind::Fallthrough,
            });
        }
        if let Some(t) = insn.branch_target().and_then(|t| method.index_of(t)) {
            edges.push(Edge { from: block.id, to: block_of_index(t), kind: EdgeKind::BranchTaken });
        }
    }
    Cfg { blocks, edges, entry: 0 }
}

impl Cfg {
    pub fn block_of(&self, offset: u32) -> Option<&Block> {
        let i = self.blocks.partition_point(|b| b.start <= offset);
        let block = self.blocks.get(i.checked_sub(1)?)?;
        (offset <= block.end).then_some(block)
    }

    pub fn successors(&self, block: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.from == block).map(|e| e.to)
    }

    pub fn predecessors(&self, block: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.to == block).map(|e| e.from)
    }

    /// Dominator sets per block (each includes the block itself).
    /// Unreachable blocks get an empty set.
    pub fn dominators(&self) -> Vec<BTreeSet<usize>> {
        let n = self.blocks.len();
        let mut reachable = vec![false; n];
        let mut stack = vec![self.entry];
        while let Some(b) = stack.pop() {
            if std::mem::replace(&mut reachable[b], true) {
                continue;
            }
            stack.extend(self.successors(b));
        }
        let all: BTreeSet<usize> = (0..n).filter(|&b| reachable[b]).collect();
        let mut dom: Vec<BTreeSet<usize>> = (0..n)
            .map(|b| {
                if b == self.entry {
                    BTreeSet::from([b])
                } else if reachable[b] {
                    all.clone()
                } else {
                    BTreeSet::new()
                }
            })
            .collect();
        let mut changed = true;
        while changed {
            changed = false;
            for b in (0..n).filter(|&b| reachable[b] && b != self.entry) {
                let mut meet: Option<BTreeSet<usize>> = None;
                for p in self.predecessors(b).filter(|&p| reachable[p]) {
                    meet = Some(match meet {
                        None => dom[p].clone(),
                        Some(m) => m.intersection(&dom[p]).copied().collect(),
                    });
                }
                let mut next = meet.unwrap_or_default();
                next.insert(b);
                if next != dom[b] {
                    dom[b] = next;
                    changed = true;
                }
            }
        }
        dom
    }
}
