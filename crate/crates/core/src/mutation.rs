//! Single-point mutation operators used to seed faults.

use crate::method::{Method, Operand};
use crate::opcode::Opcode;
use crate::value::{Kind, Value};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MutationKind {
    /// A constant push now produces a different value.
    Constant { original: Value, mutated: Value },
    /// A load or store now addresses another local slot.
    LocalIndex { original: u16, mutated: u16 },
}

#[derive(Clone, Debug)]
pub struct Mutant {
    pub offset: u32,
    pub kind: MutationKind,
    pub method: Method,
}

const INT_CONSTANTS: [Opcode; 7] = [
    Opcode::IconstM1,
    Opcode::Iconst0,
    Opcode::Iconst1,
    Opcode::Iconst2,
    Opcode::Iconst3,
    Opcode::Iconst4,
    Opcode::Iconst5,
];
const FLOAT_CONSTANTS: [Opcode; 3] = [Opcode::Fconst0, Opcode::Fconst1, Opcode::Fconst2];

fn int_neighbours(n: i32) -> Vec<i32> {
    vec![n.wrapping_sub(1), n.wrapping_add(1), n.wrapping_sub(2), n.wrapping_add(2), n.wrapping_neg(), 0, 1, -1]
}

fn float_neighbours(x: f32) -> Vec<f32> {
    vec![x - 1.0, x + 1.0, x * 2.0, x / 2.0, -x, 0.0, 1.0, -1.0]
}

/// Replacement operands that keep the encoded width.
fn replacements(opcode: Opcode, operand: Operand) -> Vec<(Opcode, Operand)> {
    let mut out: Vec<(Opcode, Operand)> = Vec::new();
    let mut push = |op: Opcode, operand: Operand| {
        if !out.contains(&(op, operand)) {
            out.push((op, operand));
        }
    };
    if INT_CONSTANTS.contains(&opcode) {
        INT_CONSTANTS.iter().filter(|&&o| o != opcode).for_each(|&o| push(o, Operand::None));
    } else if FLOAT_CONSTANTS.contains(&opcode) {
        FLOAT_CONSTANTS.iter().filter(|&&o| o != opcode).for_each(|&o| push(o, Operand::None));
    } else {
        match (opcode, operand) {
            (Opcode::Bipush, Operand::Int(n)) => int_neighbours(n)
                .into_iter()
                .filter(|&m| m != n && i8::try_from(m).is_ok())
                .for_each(|m| push(Opcode::Bipush, Operand::Int(m))),
            (Opcode::LdcInt, Operand::Int(n)) => {
                int_neighbours(n).into_iter().filter(|&m| m != n).for_each(|m| push(Opcode::LdcInt, Operand::Int(m)))
            }
            (Opcode::LdcFloat, Operand::Float(x)) => float_neighbours(x)
                .into_iter()
                .filter(|m| m.to_bits() != x.to_bits())
                .for_each(|m| push(Opcode::LdcFloat, Operand::Float(m))),
            _ => {}
        }
    }
    out
}

/// Every single change of one constant to another constant of the same
/// kind and encoded width. Offsets are unchanged.
pub fn constant_mutants(method: &Method) -> Vec<Mutant> {
    let mut mutants = Vec::new();
    for (index, insn) in method.code.iter().enumerate() {
        let Some(original) = insn.constant() else { continue };
        for (opcode, operand) in replacements(insn.opcode, insn.operand) {
            let mut m = method.clone();
            m.code[index].opcode = opcode;
            m.code[index].operand = operand;
            let mutated = m.code[index].constant().expect("replacement is a constant");
            mutants.push(Mutant { offset: insn.offset, kind: MutationKind::Constant { original, mutated }, method: m });
        }
    }
    mutants
}

/// Every single change of a load or store to another valid local slot,
/// keeping the opcode family and the encoded width.
pub fn index_mutants(method: &Method) -> Vec<Mutant> {
    let mut mutants = Vec::new();
    for (index, insn) in method.code.iter().enumerate() {
        let op = insn.opcode;
        if !(op.is_load() || op.is_store()) {
            continue;
        }
        let Some(original) = insn.local_index() else { continue };
        let kind = op.produced_kind().unwrap_or(Kind::Int);
        let short = op.implicit_local().is_some();
        for slot in (0..method.max_locals).filter(|&s| s != original) {
            let (opcode, explicit) = Opcode::local_access(kind, op.is_store(), slot);
            let new_short = explicit.is_none();
            let (opcode, operand) = match (short, new_short) {
                (true, true) => (opcode, Operand::None),
                (false, _) => (insn.opcode, Operand::Local(slot)),
                (true, false) => continue,
            };
            let mut m = method.clone();
            m.code[index].opcode = opcode;
            m.code[index].operand = operand;
            mutants.push(Mutant {
                offset: insn.offset,
                kind: MutationKind::LocalIndex { original, mutated: slot },
                method: m,
            });
        }
    }
    mutants
}
