//! Deterministic stack-machine execution and the per-offset value table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::method::{Method, Operand};
use crate::opcode::Opcode;
use crate::value::{Kind, Value};

pub const DEFAULT_STEP_LIMIT: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub locals: Vec<Option<Value>>,
    pub stack: Vec<Value>,
    pub pc: u32,
    /// Instructions executed so far.
    pub steps: usize,
}

impl Frame {
    /// Entry frame with parameters seeded into locals `0..k`.
    pub fn new(method: &Method, inputs: &[Value]) -> Result<Frame> {
        if inputs.len() != method.params.len() {
            return Err(Error::Input(format!(
                "`{}` takes {} inputs, got {}",
                method.name,
                method.params.len(),
                inputs.len()
            )));
        }
        for (i, (value, kind)) in inputs.iter().zip(&method.params).enumerate() {
            if value.kind() != *kind {
                return Err(Error::Input(format!("input {i} should be {kind:?}, got {value}")));
            }
        }
        let mut locals = vec![None; usize::from(method.max_locals).max(inputs.len())];
        for (slot, value) in locals.iter_mut().zip(inputs) {
            *slot = Some(*value);
        }
        Ok(Frame { locals, stack: Vec::with_capacity(usize::from(method.max_stack)), pc: 0, steps: 0 })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trap {
    DivideByZero { offset: u32 },
    UnsetLocal { offset: u32, index: u16 },
    StackUnderflow { offset: u32 },
    StackOverflow { offset: u32 },
    TypeMismatch { offset: u32 },
    BadPc { pc: u32 },
}

impl Trap {
    pub fn name(&self) -> &'static str {
        match self {
            Trap::DivideByZero { .. } => "divide-by-zero-int",
            Trap::UnsetLocal { .. } => "unset-local",
            Trap::StackUnderflow { .. } => "stack-underflow",
            Trap::StackOverflow { .. } => "stack-overflow",
            Trap::TypeMismatch { .. } => "type-mismatch",
            Trap::BadPc { .. } => "bad-pc",
        }
    }
}

impl fmt::Display for Trap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trap::DivideByZero { offset } => write!(f, "{} at {offset}", self.name()),
            Trap::UnsetLocal { offset, index } => write!(f, "{} {index} at {offset}", self.name()),
            Trap::StackUnderflow { offset }
            | Trap::StackOverflow { offset }
            | Trap::TypeMismatch { offset } => write!(f, "{} at {offset}", self.name()),
            Trap::BadPc { pc } => write!(f, "{} {pc}", self.name()),
        }
    }
}

/// One row of the execution trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    /// 1-based.
    pub step: usize,
    pub offset: u32,
    pub opcode: Opcode,
    /// Consumed operands, bottom of stack first.
    pub popped: Vec<Value>,
    pub pushed: Vec<Value>,
    pub local_write: Option<(u16, Value)>,
}

impl TraceEntry {
    pub fn mnemonic(&self) -> &'static str {
        self.opcode.mnemonic()
    }

    /// Pushed values followed by the stored value, if any.
    pub fn produced(&self) -> impl Iterator<Item = Value> + '_ {
        self.pushed.iter().copied().chain(self.local_write.map(|(_, v)| v))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// `None` for `return` from a void method.
    Returned(Option<Value>),
    Trapped(Trap),
    StepLimit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecResult {
    pub outcome: Outcome,
    pub trace: Vec<TraceEntry>,
    /// Offset of the executed return instruction.
    pub return_site: Option<u32>,
}

/// Replaces the value produced by the instruction at `offset` (its push,
/// or the stored value for a store) every time it executes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Override {
    pub offset: u32,
    pub value: Value,
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub step_limit: usize,
    pub override_value: Option<Override>,
    pub record_trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { step_limit: DEFAULT_STEP_LIMIT, override_value: None, record_trace: true }
    }
}

fn pop(frame: &mut Frame, offset: u32) -> Result<Value, Trap> {
    frame.stack.pop().ok_or(Trap::StackUnderflow { offset })
}

fn pop_int(frame: &mut Frame, offset: u32) -> Result<i32, Trap> {
    pop(frame, offset)?.as_int().ok_or(Trap::TypeMismatch { offset })
}

fn pop_float(frame: &mut Frame, offset: u32) -> Result<f32, Trap> {
    pop(frame, offset)?.as_float().ok_or(Trap::TypeMismatch { offset })
}

fn fcmp(a: f32, b: f32, nan: i32) -> i32 {
    if a.is_nan() || b.is_nan() {
        nan
    } else if a < b {
        -1
    } else if a > b {
        1
    } else {
        0
    }
}

/// What one executed instruction did.
struct Effect {
    popped: Vec<Value>,
    pushed: Option<Value>,
    local_write: Option<(u16, Value)>,
    returned: Option<Option<Value>>,
}

fn execute(frame: &mut Frame, method: &Method, override_value: Option<Override>) -> Result<Effect, Trap> {
    let index = method.index_of(frame.pc).ok_or(Trap::BadPc { pc: frame.pc })?;
    let insn = method.code[index];
    let offset = insn.offset;
    let depth_before = frame.stack.len();
    if depth_before < insn.opcode.pops() {
        return Err(Trap::StackUnderflow { offset });
    }
    let popped: Vec<Value> = frame.stack[depth_before - insn.opcode.pops()..].to_vec();
    let replaced = override_value.filter(|o| o.offset == offset).map(|o| o.value);

    let mut pushed = None;
    let mut local_write = None;
    let mut returned = None;
    let mut next_pc = insn.next_offset();

    use Opcode::*;
    match insn.opcode {
        Nop => {}
        Bipush | LdcInt | LdcFloat | IconstM1 | Iconst0 | Iconst1 | Iconst2 | Iconst3 | Iconst4 | Iconst5
        | Fconst0 | Fconst1 | Fconst2 => {
            pushed = insn.constant();
        }
        Iload | Fload | Iload0 | Iload1 | Iload2 | Iload3 | Fload0 | Fload1 | Fload2 | Fload3 => {
            let i = insn.local_index().ok_or(Trap::TypeMismatch { offset })?;
            let value = frame
                .locals
                .get(usize::from(i))
                .copied()
                .flatten()
                .ok_or(Trap::UnsetLocal { offset, index: i })?;
            if Some(value.kind()) != insn.opcode.produced_kind() {
                return Err(Trap::TypeMismatch { offset });
            }
            pushed = Some(value);
        }
        Istore | Fstore | Istore0 | Istore1 | Istore2 | Istore3 | Fstore0 | Fstore1 | Fstore2 | Fstore3 => {
            let i = insn.local_index().ok_or(Trap::TypeMismatch { offset })?;
            let value = pop(frame, offset)?;
            if Some(value.kind()) != insn.opcode.produced_kind() {
                return Err(Trap::TypeMismatch { offset });
            }
            let value = replaced.unwrap_or(value);
            let slot = frame.locals.get_mut(usize::from(i)).ok_or(Trap::UnsetLocal { offset, index: i })?;
            *slot = Some(value);
            local_write = Some((i, value));
        }
        Iadd | Isub | Imul | Idiv | Irem => {
            let b = pop_int(frame, offset)?;
            let a = pop_int(frame, offset)?;
            let r = match insn.opcode {
                Iadd => a.wrapping_add(b),
                Isub => a.wrapping_sub(b),
                Imul => a.wrapping_mul(b),
                Idiv | Irem if b == 0 => return Err(Trap::DivideByZero { offset }),
                Idiv => a.wrapping_div(b),
                _ => a.wrapping_rem(b),
            };
            pushed = Some(Value::Int(r));
        }
        Fadd | Fsub | Fmul | Fdiv => {
            let b = pop_float(frame, offset)?;
            let a = pop_float(frame, offset)?;
            let r = match insn.opcode {
                Fadd => a + b,
                Fsub => a - b,
                Fmul => a * b,
                _ => a / b,
            };
            pushed = Some(Value::Float(r));
        }
        Ineg => pushed = Some(Value::Int(pop_int(frame, offset)?.wrapping_neg())),
        Fneg => pushed = Some(Value::Float(-pop_float(frame, offset)?)),
        Fcmpl | Fcmpg => {
            let b = pop_float(frame, offset)?;
            let a = pop_float(frame, offset)?;
            let nan = if insn.opcode == Fcmpl { -1 } else { 1 };
            pushed = Some(Value::Int(fcmp(a, b, nan)));
        }
        Ifeq | Ifne | Iflt | Ifge | Ifgt | Ifle | IfIcmpeq | IfIcmpne | IfIcmplt | IfIcmpge | IfIcmpgt
        | IfIcmple => {
            let taken = if let Some(cond) = insn.opcode.zero_cond() {
                cond.holds(pop_int(frame, offset)?, 0)
            } else {
                let b = pop_int(frame, offset)?;
                let a = pop_int(frame, offset)?;
                insn.opcode.icmp_cond().is_some_and(|c| c.holds(a, b))
            };
            if taken {
                next_pc = target(insn.operand, offset)?;
            }
        }
        Goto => next_pc = target(insn.operand, offset)?,
        Ireturn => returned = Some(Some(Value::Int(pop_int(frame, offset)?))),
        Freturn => returned = Some(Some(Value::Float(pop_float(frame, offset)?))),
        Return => returned = Some(None),
    }

    if let Some(value) = pushed {
        let value = replaced.unwrap_or(value);
        if frame.stack.len() >= usize::from(method.max_stack) {
            return Err(Trap::StackOverflow { offset });
        }
        frame.stack.push(value);
        pushed = Some(value);
    }
    if returned.is_none() {
        frame.pc = next_pc;
    }
    frame.steps += 1;
    Ok(Effect { popped, pushed, local_write, returned })
}

fn target(operand: Operand, offset: u32) -> Result<u32, Trap> {
    match operand {
        Operand::Target(t) => Ok(t),
        _ => Err(Trap::TypeMismatch { offset }),
    }
}

fn entry(frame_steps: usize, offset: u32, opcode: Opcode, effect: &Effect) -> TraceEntry {
    TraceEntry {
        step: frame_steps,
        offset,
        opcode,
        popped: effect.popped.clone(),
        pushed: effect.pushed.into_iter().collect(),
        local_write: effect.local_write,
    }
}

/// Executes the instruction at `frame.pc`.
pub fn step(frame: &Frame, method: &Method) -> Result<(Frame, TraceEntry), Trap> {
    let mut next = frame.clone();
    let offset = next.pc;
    let effect = execute(&mut next, method, None)?;
    let opcode = method.instruction_at(offset).map(|i| i.opcode).unwrap_or(Opcode::Nop);
    let row = entry(next.steps, offset, opcode, &effect);
    Ok((next, row))
}

pub fn run(method: &Method, inputs: &[Value], step_limit: usize) -> Result<ExecResult> {
    run_with(method, inputs, &RunOptions { step_limit, ..RunOptions::default() })
}

pub fn run_with(method: &Method, inputs: &[Value], options: &RunOptions) -> Result<ExecResult> {
    if options.step_limit == 0 {
        return Err(Error::Input("step limit must be at least 1".into()));
    }
    let mut frame = Frame::new(method, inputs)?;
    let mut trace = Vec::new();
    while frame.steps < options.step_limit {
        let offset = frame.pc;
        let opcode = method.instruction_at(offset).map(|i| i.opcode);
        match execute(&mut frame, method, options.override_value) {
            Err(trap) => return Ok(ExecResult { outcome: Outcome::Trapped(trap), trace, return_site: None }),
            Ok(effect) => {
                if options.record_trace {
                    trace.push(entry(frame.steps, offset, opcode.unwrap_or(Opcode::Nop), &effect));
                }
                if let Some(value) = effect.returned {
                    return Ok(ExecResult { outcome: Outcome::Returned(value), trace, return_site: Some(offset) });
                }
            }
        }
    }
    Ok(ExecResult { outcome: Outcome::StepLimit, trace, return_site: None })
}

/// Offsets executed by a run, without keeping its trace.
pub fn executed_offsets(method: &Method, inputs: &[Value], step_limit: usize) -> Result<BTreeSet<u32>> {
    if step_limit == 0 {
        return Err(Error::Input("step limit must be at least 1".into()));
    }
    let mut frame = Frame::new(method, inputs)?;
    let mut seen = BTreeSet::new();
    while frame.steps < step_limit {
        let offset = frame.pc;
        match execute(&mut frame, method, None) {
            Err(_) => break,
            Ok(effect) => {
                seen.insert(offset);
                if effect.returned.is_some() {
                    break;
                }
            }
        }
    }
    Ok(seen)
}

/// One execution of an offset in the value table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableCell {
    pub step: usize,
    pub values: Vec<Value>,
}

/// Values produced per executed offset, in step order.
pub type ValueTable = BTreeMap<u32, Vec<TableCell>>;

pub fn value_table(trace: &[TraceEntry]) -> ValueTable {
    let mut table = ValueTable::new();
    for e in trace {
        table
            .entry(e.offset)
            .or_default()
            .push(TableCell { step: e.step, values: e.produced().collect() });
    }
    table
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LineCheck {
    Ok,
    Mismatch { expected: Vec<Value>, got: Vec<Value> },
    NotExecuted,
}

/// Compares each expected offset against the values it produced across
/// all of its executions, concatenated in step order. Comparison is by
/// bit pattern.
pub fn check_lines(table: &ValueTable, expected: &BTreeMap<u32, Vec<Value>>) -> BTreeMap<u32, LineCheck> {
    expected
        .iter()
        .map(|(&offset, want)| {
            let check = match table.get(&offset) {
                None => LineCheck::NotExecuted,
                Some(cells) => {
                    let got: Vec<Value> = cells.iter().flat_map(|c| c.values.iter().copied()).collect();
                    if &got == want {
                        LineCheck::Ok
                    } else {
                        LineCheck::Mismatch { expected: want.clone(), got }
                    }
                }
            };
            (offset, check)
        })
        .collect()
}

/// Kinds of the values an instruction at `offset` produces, if any.
pub fn produced_kind(method: &Method, offset: u32) -> Option<Kind> {
    method.instruction_at(offset)?.opcode.produced_kind()
}
