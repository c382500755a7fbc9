//! Static variable-dependency extraction.
//!
//! A forward fixpoint tracks, for every operand-stack slot, the set of
//! locals whose loaded values may flow into it. Stores, comparisons and
//! value returns then emit dependency pairs. Joins are path-insensitive
//! unions, so pairs from every branch are reported regardless of which
//! branch executes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::cfg::partition;
use crate::error::{Error, Result};
use crate::method::Method;
use crate::opcode::Opcode;
use crate::validate::validate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarId {
    Local(u16),
    /// Value returned by the k-th return instruction (1-based, textual order).
    Output(u32),
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::Local(i) => write!(f, "L{i}"),
            VarId::Output(k) => write!(f, "O{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DepKind {
    /// `left` depends on `right`.
    Assign,
    /// `left` and `right` were compared; stored order-normalized.
    Compare,
}

impl DepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DepKind::Assign => "assign",
            DepKind::Compare => "compare",
        }
    }

    pub fn parse(s: &str) -> Option<DepKind> {
        match s {
            "assign" => Some(DepKind::Assign),
            "compare" => Some(DepKind::Compare),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DepPair {
    pub left: VarId,
    pub right: VarId,
    pub kind: DepKind,
}

impl DepPair {
    pub fn assign(left: VarId, right: VarId) -> Self {
        DepPair { left, right, kind: DepKind::Assign }
    }

    /// Compare pairs are unordered; operands are normalized ascending.
    pub fn compare(a: VarId, b: VarId) -> Self {
        let (left, right) = if a <= b { (a, b) } else { (b, a) };
        DepPair { left, right, kind: DepKind::Compare }
    }

    pub fn new(left: VarId, right: VarId, kind: DepKind) -> Self {
        match kind {
            DepKind::Assign => DepPair::assign(left, right),
            DepKind::Compare => DepPair::compare(left, right),
        }
    }

    pub fn mentions(&self, var: VarId) -> bool {
        self.left == var || self.right == var
    }
}

impl fmt::Display for DepPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}) {}", self.left, self.right, self.kind.as_str())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DepSet(BTreeSet<DepPair>);

impl DepSet {
    pub fn new() -> Self {
        DepSet::default()
    }

    pub fn insert(&mut self, pair: DepPair) -> bool {
        self.0.insert(pair)
    }

    pub fn contains(&self, pair: &DepPair) -> bool {
        self.0.contains(pair)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DepPair> + '_ {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &DepSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn difference(&self, other: &DepSet) -> DepSet {
        DepSet(self.0.difference(&other.0).copied().collect())
    }
}

impl FromIterator<DepPair> for DepSet {
    fn from_iter<I: IntoIterator<Item = DepPair>>(iter: I) -> Self {
        DepSet(iter.into_iter().collect())
    }
}

impl IntoIterator for DepSet {
    type Item = DepPair;
    type IntoIter = std::collections::btree_set::IntoIter<DepPair>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a DepSet {
    type Item = &'a DepPair;
    type IntoIter = std::collections::btree_set::Iter<'a, DepPair>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Abstract state before one instruction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SourceState {
    /// Bottom of stack first.
    pub stack: Vec<BTreeSet<VarId>>,
    /// Current source set of every local slot.
    pub locals: Vec<BTreeSet<VarId>>,
}

/// Per-offset abstract states; unreachable offsets are absent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StackSources {
    pub before: BTreeMap<u32, SourceState>,
    /// State after each instruction.
    pub after: BTreeMap<u32, SourceState>,
}

/// A local read by a specific load instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Origin {
    var: VarId,
    load: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct FlowState {
    stack: Vec<BTreeSet<Origin>>,
    locals: Vec<BTreeSet<VarId>>,
}

impl FlowState {
    fn join(&mut self, other: &FlowState) -> bool {
        let mut changed = false;
        for (mine, theirs) in self.stack.iter_mut().zip(&other.stack) {
            let before = mine.len();
            mine.extend(theirs.iter().copied());
            changed |= mine.len() != before;
        }
        for (mine, theirs) in self.locals.iter_mut().zip(&other.locals) {
            let before = mine.len();
            mine.extend(theirs.iter().copied());
            changed |= mine.len() != before;
        }
        changed
    }

    fn project(&self) -> SourceState {
        SourceState {
            stack: self.stack.iter().map(|s| s.iter().map(|o| o.var).collect()).collect(),
            locals: self.locals.clone(),
        }
    }
}

fn ensure_valid(method: &Method) -> Result<()> {
    let report = validate(method);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::Invalid { method: method.name.clone(), report })
    }
}

/// Applies one instruction's transfer function.
fn transfer(method: &Method, index: usize, state: &FlowState) -> FlowState {
    let insn = &method.code[index];
    let mut out = state.clone();
    let op = insn.opcode;
    let popped: Vec<BTreeSet<Origin>> = out.stack.split_off(out.stack.len() - op.pops());
    if op.is_load() {
        let var = VarId::Local(insn.local_index().unwrap_or(0));
        out.stack.push(BTreeSet::from([Origin { var, load: insn.offset }]));
    } else if op.is_store() {
        let i = usize::from(insn.local_index().unwrap_or(0));
        if let Some(slot) = out.locals.get_mut(i) {
            *slot = popped[0].iter().map(|o| o.var).collect();
        }
    } else if op.pushes() == 1 {
        // Constants push an empty set; arithmetic and compares push the union.
        out.stack.push(popped.into_iter().flatten().collect());
    }
    out
}

fn successor_indices(method: &Method, index: usize) -> Vec<usize> {
    let insn = &method.code[index];
    let mut out = Vec::with_capacity(2);
    if insn.opcode.is_return() {
        return out;
    }
    if insn.opcode != Opcode::Goto && index + 1 < method.code.len() {
        out.push(index + 1);
    }
    if let Some(t) = insn.branch_target().and_then(|t| method.index_of(t)) {
        out.push(t);
    }
    out
}

/// Forward fixpoint; `result[i]` is the state before instruction `i`.
fn flow(method: &Method) -> Vec<Option<FlowState>> {
    let n = method.code.len();
    let mut states: Vec<Option<FlowState>> = vec![None; n];
    if n == 0 {
        return states;
    }
    states[0] = Some(FlowState {
        stack: Vec::new(),
        locals: (0..method.max_locals).map(|i| BTreeSet::from([VarId::Local(i)])).collect(),
    });
    let mut worklist = VecDeque::from([0usize]);
    let mut queued = vec![false; n];
    queued[0] = true;
    while let Some(index) = worklist.pop_front() {
        queued[index] = false;
        let Some(state) = &states[index] else { continue };
        let out = transfer(method, index, state);
        for succ in successor_indices(method, index) {
            let changed = match &mut states[succ] {
                slot @ None => {
                    *slot = Some(out.clone());
                    true
                }
                Some(existing) => existing.join(&out),
            };
            if changed && !queued[succ] {
                queued[succ] = true;
                worklist.push_back(succ);
            }
        }
    }
    states
}

pub fn stack_sources(method: &Method) -> Result<StackSources> {
    ensure_valid(method)?;
    let states = flow(method);
    let mut sources = StackSources::default();
    for (index, state) in states.iter().enumerate() {
        if let Some(state) = state {
            let offset = method.code[index].offset;
            sources.before.insert(offset, state.project());
            sources.after.insert(offset, transfer(method, index, state).project());
        }
    }
    Ok(sources)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    /// Also make every output depend on the sources of the branch
    /// conditions that dominate its return.
    pub control_deps: bool,
}

/// Base pairs mapped to the offsets that generate them: the emitting
/// store, compare or return plus the loads its operands came from.
pub type DepOrigins = BTreeMap<DepPair, BTreeSet<u32>>;

pub fn extract_deps_with_origins(method: &Method, options: ExtractOptions) -> Result<DepOrigins> {
    ensure_valid(method)?;
    let states = flow(method);
    let mut origins = DepOrigins::new();
    let mut emit = |pair: DepPair, offsets: &[u32]| {
        origins.entry(pair).or_default().extend(offsets.iter().copied());
    };
    let return_sites = method.return_sites();
    let output_of = |offset: u32| -> VarId {
        let k = return_sites.iter().position(|&s| s == offset).unwrap_or(0);
        VarId::Output(k as u32 + 1)
    };

    for (index, insn) in method.code.iter().enumerate() {
        let Some(state) = &states[index] else { continue };
        let depth = state.stack.len();
        let op = insn.opcode;
        if op.is_store() {
            let target = VarId::Local(insn.local_index().unwrap_or(0));
            for o in &state.stack[depth - 1] {
                if o.var != target {
                    emit(DepPair::assign(target, o.var), &[insn.offset, o.load]);
                }
            }
        } else if op.is_compare() {
            for a in &state.stack[depth - 2] {
                for b in &state.stack[depth - 1] {
                    if a.var != b.var {
                        emit(DepPair::compare(a.var, b.var), &[insn.offset, a.load, b.load]);
                    }
                }
            }
        } else if op.is_return() && op.pops() == 1 {
            let output = output_of(insn.offset);
            for o in &state.stack[depth - 1] {
                emit(DepPair::assign(output, o.var), &[insn.offset, o.load]);
            }
        }
    }

    if options.control_deps {
        let cfg = partition(method);
        let dominators = cfg.dominators();
        for insn in method.code.iter().filter(|i| i.opcode.is_return() && i.opcode.pops() == 1) {
            let Some(block) = cfg.block_of(insn.offset) else { continue };
            let output = output_of(insn.offset);
            for &d in dominators[block.id].iter().filter(|&&d| d != block.id) {
                let branch_index = cfg.blocks[d].last;
                let branch = &method.code[branch_index];
                if !branch.opcode.is_conditional_branch() {
                    continue;
                }
                let Some(state) = &states[branch_index] else { continue };
                let depth = state.stack.len();
                for slot in &state.stack[depth - branch.opcode.pops()..] {
                    for o in slot {
                        emit(DepPair::assign(output, o.var), &[insn.offset, branch.offset, o.load]);
                    }
                }
            }
        }
    }
    Ok(origins)
}

/// Base dependency pairs of a method, before closure.
pub fn extract_deps(method: &Method) -> Result<DepSet> {
    extract_deps_opts(method, ExtractOptions::default())
}

pub fn extract_deps_opts(method: &Method, options: ExtractOptions) -> Result<DepSet> {
    Ok(extract_deps_with_origins(method, options)?.into_keys().collect())
}

/// Assign-edge adjacency.
fn assign_graph(deps: &DepSet) -> BTreeMap<VarId, BTreeSet<VarId>> {
    let mut graph: BTreeMap<VarId, BTreeSet<VarId>> = BTreeMap::new();
    for p in deps.iter().filter(|p| p.kind == DepKind::Assign) {
        graph.entry(p.left).or_default().insert(p.right);
    }
    graph
}

/// Nodes reachable from `start` by one or more assign edges.
fn reachable(graph: &BTreeMap<VarId, BTreeSet<VarId>>, start: VarId) -> BTreeSet<VarId> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<VarId> = graph.get(&start).into_iter().flatten().copied().collect();
    while let Some(v) = stack.pop() {
        if seen.insert(v) {
            stack.extend(graph.get(&v).into_iter().flatten().copied());
        }
    }
    seen
}

/// Smallest superset closed under assign chaining. Compare pairs are
/// carried unchanged; self-dependencies from cycles are not emitted.
pub fn transitive_closure(deps: &DepSet) -> DepSet {
    let graph = assign_graph(deps);
    let mut out: DepSet = deps.iter().filter(|p| p.kind == DepKind::Compare).copied().collect();
    for &from in graph.keys() {
        for to in reachable(&graph, from) {
            if to != from {
                out.insert(DepPair::assign(from, to));
            }
        }
    }
    out
}

/// Base pairs that take part in deriving `target` in the closure.
pub fn contributing_pairs<'a>(base: &'a DepSet, target: &DepPair) -> Vec<&'a DepPair> {
    if target.kind == DepKind::Compare {
        return base.iter().filter(|p| *p == target).collect();
    }
    let graph = assign_graph(base);
    let from_left = reachable(&graph, target.left);
    base.iter()
        .filter(|p| p.kind == DepKind::Assign)
        .filter(|p| p.left == target.left || from_left.contains(&p.left))
        .filter(|p| p.right == target.right || reachable(&graph, p.right).contains(&target.right))
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DepDiff {
    /// In the specification but not derivable from the code.
    pub missing: DepSet,
    /// Derivable from the code but not in the specification.
    pub extra: DepSet,
}

impl DepDiff {
    pub fn is_consistent(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }
}

/// Diffs the closure of `computed` against `spec`.
pub fn dep_diff(computed: &DepSet, spec: &DepSet) -> DepDiff {
    let closed = transitive_closure(computed);
    DepDiff { missing: spec.difference(&closed), extra: closed.difference(spec) }
}
