//! Instructions, methods and programs.

use std::collections::BTreeMap;
use std::fmt;

use crate::opcode::{Opcode, OperandKind};
use crate::value::{format_f32, Kind, ReturnKind, Value};

/// An instruction operand. Float immediates compare by bit pattern.
#[derive(Clone, Copy, Debug)]
pub enum Operand {
    None,
    Local(u16),
    Int(i32),
    Float(f32),
    Target(u32),
}

impl Operand {
    pub fn kind(&self) -> OperandKind {
        match self {
            Operand::None => OperandKind::None,
            Operand::Local(_) => OperandKind::LocalIndex,
            Operand::Int(_) => OperandKind::IntImmediate,
            Operand::Float(_) => OperandKind::FloatImmediate,
            Operand::Target(_) => OperandKind::BranchTarget,
        }
    }
}

impl PartialEq for Operand {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Operand::None, Operand::None) => true,
            (Operand::Local(a), Operand::Local(b)) => a == b,
            (Operand::Int(a), Operand::Int(b)) => a == b,
            (Operand::Float(a), Operand::Float(b)) => a.to_bits() == b.to_bits(),
            (Operand::Target(a), Operand::Target(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Operand {}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::None => Ok(()),
            Operand::Local(i) => write!(f, "{i}"),
            Operand::Int(v) => write!(f, "{v}"),
            Operand::Float(v) => f.write_str(&format_f32(*v)),
            Operand::Target(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Instruction {
    pub offset: u32,
    pub opcode: Opcode,
    pub operand: Operand,
}

impl Instruction {
    pub fn new(offset: u32, opcode: Opcode, operand: Operand) -> Self {
        Instruction { offset, opcode, operand }
    }

    pub fn width(&self) -> u32 {
        self.opcode.width()
    }

    pub fn next_offset(&self) -> u32 {
        self.offset.saturating_add(self.width())
    }

    /// Local slot read or written by a load/store.
    pub fn local_index(&self) -> Option<u16> {
        if !(self.opcode.is_load() || self.opcode.is_store()) {
            return None;
        }
        match (self.opcode.implicit_local(), self.operand) {
            (Some(i), _) => Some(i),
            (None, Operand::Local(i)) => Some(i),
            _ => None,
        }
    }

    pub fn branch_target(&self) -> Option<u32> {
        match self.operand {
            Operand::Target(t) if self.opcode.is_branch() => Some(t),
            _ => None,
        }
    }

    /// The constant pushed by a constant-producing instruction.
    pub fn constant(&self) -> Option<Value> {
        if let Some(v) = self.opcode.constant_value() {
            return Some(v);
        }
        match (self.opcode, self.operand) {
            (Opcode::Bipush | Opcode::LdcInt, Operand::Int(v)) => Some(Value::Int(v)),
            (Opcode::LdcFloat, Operand::Float(v)) => Some(Value::Float(v)),
            _ => None,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.offset, self.opcode)?;
        if self.operand != Operand::None {
            write!(f, " {}", self.operand)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Method {
    pub name: String,
    pub params: Vec<Kind>,
    pub returns: ReturnKind,
    pub max_stack: u16,
    pub max_locals: u16,
    pub code: Vec<Instruction>,
    /// Optional source-level names for local slots.
    pub local_names: BTreeMap<u16, String>,
}

impl Method {
    /// JVM method descriptor, e.g. `(FF)F`.
    pub fn descriptor(&self) -> String {
        let params: String = self.params.iter().map(|k| k.descriptor()).collect();
        format!("({params}){}", self.returns.descriptor())
    }

    /// Index of the instruction starting at `offset`.
    pub fn index_of(&self, offset: u32) -> Option<usize> {
        self.code.binary_search_by_key(&offset, |i| i.offset).ok()
    }

    pub fn instruction_at(&self, offset: u32) -> Option<&Instruction> {
        self.index_of(offset).map(|i| &self.code[i])
    }

    /// Total encoded length of the code array.
    pub fn code_length(&self) -> u32 {
        self.code.last().map_or(0, Instruction::next_offset)
    }

    /// Offsets of return-family instructions in textual order; position
    /// `k - 1` is the site of output `O<k>`.
    pub fn return_sites(&self) -> Vec<u32> {
        self.code
            .iter()
            .filter(|i| i.opcode.is_return())
            .map(|i| i.offset)
            .collect()
    }

    /// Recomputes offsets from opcode widths, starting at zero.
    pub fn relayout(&mut self) {
        let mut offset = 0;
        for insn in &mut self.code {
            insn.offset = offset;
            offset += insn.width();
        }
    }
}

/// A constant-pool entry kept when a program comes from, or goes to, a
/// class file.
#[derive(Clone, Debug, PartialEq)]
pub enum PoolConstant {
    Int(i32),
    Float(f32),
    Utf8(String),
}

#[derive(Clone, Debug, Default)]
pub struct Program {
    pub name: String,
    pub methods: Vec<Method>,
    pub constant_pool: Vec<PoolConstant>,
}

impl Program {
    pub fn new(name: impl Into<String>, methods: Vec<Method>) -> Self {
        Program { name: name.into(), methods, constant_pool: Vec::new() }
    }

    pub fn method(&self, name: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.name == name)
    }

    /// Equality of name and methods, ignoring the constant pool.
    pub fn structurally_eq(&self, other: &Program) -> bool {
        self.name == other.name && self.methods == other.methods
    }
}
