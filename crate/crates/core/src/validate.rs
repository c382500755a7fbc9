//! Structural validation of methods.
//!
//! `validate` is total: it accepts arbitrary instruction lists and reports
//! every violation it finds as data. Stack depths are computed by a
//! worklist fixpoint that assigns one depth per instruction; join points
//! must agree.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::method::{Method, Operand};
use crate::opcode::{Opcode, OperandKind};
use crate::value::ReturnKind;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    EmptyCode,
    TooManyParams { params: usize, max_locals: u16 },
    OffsetMismatch { index: usize, expected: u32, found: u32 },
    OperandKind { offset: u32, expected: OperandKind },
    OperandRange { offset: u32 },
    BadBranchTarget { offset: u32, target: u32 },
    LocalOutOfRange { offset: u32, index: u16 },
    StackUnderflow { offset: u32 },
    StackOverflow { offset: u32, depth: usize },
    InconsistentDepth { offset: u32, expected: usize, found: usize },
    ReturnKindMismatch { offset: u32 },
    MissingReturn { offset: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyCode => write!(f, "method has no code"),
            Violation::TooManyParams { params, max_locals } => {
                write!(f, "{params} parameters exceed max_locals {max_locals}")
            }
            Violation::OffsetMismatch { index, expected, found } => write!(
                f,
                "instruction {index} is at offset {found}, expected {expected}"
            ),
            Violation::OperandKind { offset, expected } => {
                write!(f, "offset {offset}: operand does not match {expected:?}")
            }
            Violation::OperandRange { offset } => {
                write!(f, "offset {offset}: operand out of encodable range")
            }
            Violation::BadBranchTarget { offset, target } => write!(
                f,
                "offset {offset}: branch target {target} is not an instruction boundary"
            ),
            Violation::LocalOutOfRange { offset, index } => {
                write!(f, "offset {offset}: local {index} is not below max_locals")
            }
            Violation::StackUnderflow { offset } => write!(f, "offset {offset}: stack underflow"),
            Violation::StackOverflow { offset, depth } => {
                write!(f, "offset {offset}: stack depth {depth} exceeds max_stack")
            }
            Violation::InconsistentDepth { offset, expected, found } => write!(
                f,
                "offset {offset}: stack depth {found} disagrees with {expected} at join"
            ),
            Violation::ReturnKindMismatch { offset } => {
                write!(f, "offset {offset}: return does not match the method's return kind")
            }
            Violation::MissingReturn { offset } => {
                write!(f, "offset {offset}: control falls off the end of the code")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.violations.iter().any(pred)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate(method: &Method) -> ValidationReport {
    let mut violations = BTreeSet::new();
    let code = &method.code;
    if code.is_empty() {
        violations.insert(Violation::EmptyCode);
    }
    if method.params.len() > usize::from(method.max_locals) {
        violations.insert(Violation::TooManyParams {
            params: method.params.len(),
            max_locals: method.max_locals,
        });
    }

    let mut expected_offset: u32 = 0;
    let mut index_of: HashMap<u32, usize> = HashMap::new();
    for (index, insn) in code.iter().enumerate() {
        if insn.offset != expected_offset {
            violations.insert(Violation::OffsetMismatch {
                index,
                expected: expected_offset,
                found: insn.offset,
            });
        }
        expected_offset = insn.offset.saturating_add(insn.width());
        index_of.entry(insn.offset).or_insert(index);

        let kind = insn.opcode.operand_kind();
        if insn.operand.kind() != kind {
            violations.insert(Violation::OperandKind { offset: insn.offset, expected: kind });
        }
        match (insn.opcode, insn.operand) {
            (Opcode::Bipush, Operand::Int(v)) if i8::try_from(v).is_err() => {
                violations.insert(Violation::OperandRange { offset: insn.offset });
            }
            (_, Operand::Local(i)) if i > u16::from(u8::MAX) => {
                violations.insert(Violation::OperandRange { offset: insn.offset });
            }
            _ => {}
        }
        if let Some(i) = insn.local_index() {
            if i >= method.max_locals {
                violations.insert(Violation::LocalOutOfRange { offset: insn.offset, index: i });
            }
        }
        let return_ok = match insn.opcode {
            Opcode::Ireturn => method.returns == ReturnKind::Int,
            Opcode::Freturn => method.returns == ReturnKind::Float,
            Opcode::Return => method.returns == ReturnKind::Void,
            _ => true,
        };
        if !return_ok {
            violations.insert(Violation::ReturnKindMismatch { offset: insn.offset });
        }
    }

    for insn in code {
        if let Some(t) = insn.branch_target() {
            if !index_of.contains_key(&t) {
                violations.insert(Violation::BadBranchTarget { offset: insn.offset, target: t });
            }
        }
    }

    // Successor indices; unresolvable targets were reported above.
    let successors = |index: usize, violations: &mut BTreeSet<Violation>| -> Vec<usize> {
        let insn = &code[index];
        let mut out = Vec::with_capacity(2);
        if insn.opcode.is_return() {
            return out;
        }
        let falls_through = insn.opcode != Opcode::Goto;
        if falls_through {
            if index + 1 < code.len() {
                out.push(index + 1);
            } else {
                violations.insert(Violation::MissingReturn { offset: insn.offset });
            }
        }
        if let Some(&target) = insn.branch_target().and_then(|t| index_of.get(&t)) {
            out.push(target);
        }
        out
    };

    let max_stack = usize::from(method.max_stack);
    let mut depth: Vec<Option<usize>> = vec![None; code.len()];
    let mut worklist = VecDeque::new();
    if !code.is_empty() {
        depth[0] = Some(0);
        worklist.push_back(0);
    }
    while let Some(index) = worklist.pop_front() {
        let insn = &code[index];
        let before = depth[index].unwrap_or(0);
        let pops = insn.opcode.pops();
        if before < pops {
            violations.insert(Violation::StackUnderflow { offset: insn.offset });
        }
        let after = before.saturating_sub(pops) + insn.opcode.pushes();
        if after > max_stack {
            violations.insert(Violation::StackOverflow { offset: insn.offset, depth: after });
        }
        for succ in successors(index, &mut violations) {
            match depth[succ] {
                None => {
                    depth[succ] = Some(after);
                    worklist.push_back(succ);
                }
                Some(d) if d != after => {
                    violations.insert(Violation::InconsistentDepth {
                        offset: code[succ].offset,
                        expected: d,
                        found: after,
                    });
                }
                Some(_) => {}
            }
        }
    }

    ValidationReport { violations: violations.into_iter().collect() }
}

/// Stack depth before each instruction, for reachable instructions of a
/// valid method.
pub(crate) fn stack_depths(method: &Method) -> Vec<Option<usize>> {
    let code = &method.code;
    let mut depth: Vec<Option<usize>> = vec![None; code.len()];
    if code.is_empty() {
        return depth;
    }
    depth[0] = Some(0);
    let mut worklist = VecDeque::from([0usize]);
    while let Some(index) = worklist.pop_front() {
        let insn = &code[index];
        let after = depth[index].unwrap_or(0).saturating_sub(insn.opcode.pops()) + insn.opcode.pushes();
        let mut succs = Vec::with_capacity(2);
        if !insn.opcode.is_return() {
            if insn.opcode != Opcode::Goto && index + 1 < code.len() {
                succs.push(index + 1);
            }
            if let Some(t) = insn.branch_target().and_then(|t| method.index_of(t)) {
                succs.push(t);
            }
        }
        for s in succs {
            if depth[s].is_none() {
                depth[s] = Some(after);
                worklist.push_back(s);
            }
        }
    }
    depth
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::method::Instruction;
    use crate::value::Kind;
    use proptest::prelude::*;

    fn method(code: Vec<Instruction>, returns: ReturnKind) -> Method {
        Method {
            name: "m".into(),
            params: vec![],
            returns,
            max_stack: 4,
            max_locals: 2,
            code,
            local_names: Default::default(),
        }
    }

    #[test]
    fn maxf_is_valid() {
        assert_eq!(validate(&fixtures::maxf()).violations, vec![]);
    }

    #[test]
    fn lone_return_is_valid() {
        let m = method(vec![Instruction::new(0, Opcode::Return, Operand::None)], ReturnKind::Void);
        assert!(validate(&m).is_valid());
    }

    #[test]
    fn lone_iadd_underflows_and_falls_off() {
        let m = method(vec![Instruction::new(0, Opcode::Iadd, Operand::None)], ReturnKind::Int);
        let report = validate(&m);
        assert_eq!(
            report.violations,
            vec![
                Violation::StackUnderflow { offset: 0 },
                Violation::MissingReturn { offset: 0 }
            ]
        );
    }

    #[test]
    fn join_with_unequal_depths_is_rejected() {
        // 0: iload_0; 1: ifeq 7; 4: iconst_1; 5: iconst_2; 6: nop; 7: ireturn
        // The taken edge reaches 7 with depth 0, the fallthrough with 2.
        let mut m = method(
            vec![
                Instruction::new(0, Opcode::Iload0, Operand::None),
                Instruction::new(1, Opcode::Ifeq, Operand::Target(7)),
                Instruction::new(4, Opcode::Iconst1, Operand::None),
                Instruction::new(5, Opcode::Iconst2, Operand::None),
                Instruction::new(6, Opcode::Nop, Operand::None),
                Instruction::new(7, Opcode::Ireturn, Operand::None),
            ],
            ReturnKind::Int,
        );
        m.params = vec![Kind::Int];
        let report = validate(&m);
        assert!(report.has(|v| matches!(v, Violation::InconsistentDepth { offset: 7, .. })));
    }

    #[test]
    fn reports_structural_faults() {
        let m = Method {
            max_stack: 1,
            ..method(
                vec![
                    Instruction::new(0, Opcode::Iload, Operand::Local(9)),
                    Instruction::new(3, Opcode::Iconst1, Operand::None),
                    Instruction::new(4, Opcode::Goto, Operand::Target(2)),
                    Instruction::new(7, Opcode::Bipush, Operand::Int(300)),
                    Instruction::new(9, Opcode::Freturn, Operand::None),
                ],
                ReturnKind::Int,
            )
        };
        let report = validate(&m);
        assert!(report.has(|v| matches!(v, Violation::LocalOutOfRange { offset: 0, index: 9 })));
        assert!(report.has(|v| matches!(v, Violation::OffsetMismatch { index: 1, expected: 2, found: 3 })));
        assert!(report.has(|v| matches!(v, Violation::BadBranchTarget { offset: 4, target: 2 })));
        assert!(report.has(|v| matches!(v, Violation::OperandRange { offset: 7 })));
        assert!(report.has(|v| matches!(v, Violation::ReturnKindMismatch { offset: 9 })));
        assert!(report.has(|v| matches!(v, Violation::StackOverflow { offset: 3, depth: 2 })));
    }

    #[test]
    fn empty_code_is_reported() {
        let report = validate(&method(vec![], ReturnKind::Void));
        assert_eq!(report.violations, vec![Violation::EmptyCode]);
    }

    fn arb_instruction() -> impl Strategy<Value = Instruction> {
        (
            any::<u32>(),
            0..Opcode::ALL.len(),
            prop_oneof![
                Just(Operand::None),
                any::<u16>().prop_map(Operand::Local),
                any::<i32>().prop_map(Operand::Int),
                any::<u32>().prop_map(|b| Operand::Float(f32::from_bits(b))),
                (0u32..40).prop_map(Operand::Target),
                any::<u32>().prop_map(Operand::Target),
            ],
        )
            .prop_map(|(offset, op, operand)| Instruction::new(offset % 64, Opcode::ALL[op], operand))
    }

    proptest! {
        #[test]
        fn validate_is_total(code in prop::collection::vec(arb_instruction(), 0..24),
                             max_stack in any::<u16>(), max_locals in any::<u16>()) {
            let m = Method { max_stack, max_locals, ..method(code, ReturnKind::Int) };
            let _ = validate(&m);
        }

        #[test]
        fn validate_is_total_on_relaid_code(code in prop::collection::vec(arb_instruction(), 1..24)) {
            let mut m = method(code, ReturnKind::Float);
            m.relayout();
            let report = validate(&m);
            let relaid = !report.has(|v| matches!(v, Violation::OffsetMismatch { .. }));
            prop_assert!(relaid);
        }
    }
}
