//! The supported instruction subset and its encoding.

use std::fmt;
use std::str::FromStr;

use crate::value::Kind;

/// What kind of operand an opcode carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperandKind {
    None,
    LocalIndex,
    IntImmediate,
    FloatImmediate,
    BranchTarget,
}

macro_rules! opcodes {
    ($($variant:ident = $byte:literal, $mn:literal, $width:literal, $operand:ident, $pops:literal, $pushes:literal;)*) => {
        /// An opcode of the supported subset.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Opcode {
            $($variant,)*
        }

        impl Opcode {
            pub const ALL: &'static [Opcode] = &[$(Opcode::$variant,)*];

            pub fn mnemonic(self) -> &'static str {
                match self {
                    $(Opcode::$variant => $mn,)*
                }
            }

            /// The JVM opcode byte. `ldc_int` and `ldc_float` share `ldc_w`.
            pub fn byte(self) -> u8 {
                match self {
                    $(Opcode::$variant => $byte,)*
                }
            }

            /// Encoded width in bytes, opcode byte included.
            pub fn width(self) -> u32 {
                match self {
                    $(Opcode::$variant => $width,)*
                }
            }

            pub fn operand_kind(self) -> OperandKind {
                match self {
                    $(Opcode::$variant => OperandKind::$operand,)*
                }
            }

            /// Number of operand-stack slots consumed.
            pub fn pops(self) -> usize {
                match self {
                    $(Opcode::$variant => $pops,)*
                }
            }

            /// Number of operand-stack slots produced.
            pub fn pushes(self) -> usize {
                match self {
                    $(Opcode::$variant => $pushes,)*
                }
            }
        }
    };
}

opcodes! {
    Nop = 0x00, "nop", 1, None, 0, 0;
    IconstM1 = 0x02, "iconst_m1", 1, None, 0, 1;
    Iconst0 = 0x03, "iconst_0", 1, None, 0, 1;
    Iconst1 = 0x04, "iconst_1", 1, None, 0, 1;
    Iconst2 = 0x05, "iconst_2", 1, None, 0, 1;
    Iconst3 = 0x06, "iconst_3", 1, None, 0, 1;
    Iconst4 = 0x07, "iconst_4", 1, None, 0, 1;
    Iconst5 = 0x08, "iconst_5", 1, None, 0, 1;
    Fconst0 = 0x0b, "fconst_0", 1, None, 0, 1;
    Fconst1 = 0x0c, "fconst_1", 1, None, 0, 1;
    Fconst2 = 0x0d, "fconst_2", 1, None, 0, 1;
    Bipush = 0x10, "bipush", 2, IntImmediate, 0, 1;
    LdcInt = 0x13, "ldc_int", 3, IntImmediate, 0, 1;
    LdcFloat = 0x13, "ldc_float", 3, FloatImmediate, 0, 1;
    Iload = 0x15, "iload", 2, LocalIndex, 0, 1;
    Fload = 0x17, "fload", 2, LocalIndex, 0, 1;
    Iload0 = 0x1a, "iload_0", 1, None, 0, 1;
    Iload1 = 0x1b, "iload_1", 1, None, 0, 1;
    Iload2 = 0x1c, "iload_2", 1, None, 0, 1;
    Iload3 = 0x1d, "iload_3", 1, None, 0, 1;
    Fload0 = 0x22, "fload_0", 1, None, 0, 1;
    Fload1 = 0x23, "fload_1", 1, None, 0, 1;
    Fload2 = 0x24, "fload_2", 1, None, 0, 1;
    Fload3 = 0x25, "fload_3", 1, None, 0, 1;
    Istore = 0x36, "istore", 2, LocalIndex, 1, 0;
    Fstore = 0x38, "fstore", 2, LocalIndex, 1, 0;
    Istore0 = 0x3b, "istore_0", 1, None, 1, 0;
    Istore1 = 0x3c, "istore_1", 1, None, 1, 0;
    Istore2 = 0x3d, "istore_2", 1, None, 1, 0;
    Istore3 = 0x3e, "istore_3", 1, None, 1, 0;
    Fstore0 = 0x43, "fstore_0", 1, None, 1, 0;
    Fstore1 = 0x44, "fstore_1", 1, None, 1, 0;
    Fstore2 = 0x45, "fstore_2", 1, None, 1, 0;
    Fstore3 = 0x46, "fstore_3", 1, None, 1, 0;
    Iadd = 0x60, "iadd", 1, None, 2, 1;
    Fadd = 0x62, "fadd", 1, None, 2, 1;
    Isub = 0x64, "isub", 1, None, 2, 1;
    Fsub = 0x66, "fsub", 1, None, 2, 1;
    Imul = 0x68, "imul", 1, None, 2, 1;
    Fmul = 0x6a, "fmul", 1, None, 2, 1;
    Idiv = 0x6c, "idiv", 1, None, 2, 1;
    Fdiv = 0x6e, "fdiv", 1, None, 2, 1;
    Irem = 0x70, "irem", 1, None, 2, 1;
    Ineg = 0x74, "ineg", 1, None, 1, 1;
    Fneg = 0x76, "fneg", 1, None, 1, 1;
    Fcmpl = 0x95, "fcmpl", 1, None, 2, 1;
    Fcmpg = 0x96, "fcmpg", 1, None, 2, 1;
    Ifeq = 0x99, "ifeq", 3, BranchTarget, 1, 0;
    Ifne = 0x9a, "ifne", 3, BranchTarget, 1, 0;
    Iflt = 0x9b, "iflt", 3, BranchTarget, 1, 0;
    Ifge = 0x9c, "ifge", 3, BranchTarget, 1, 0;
    Ifgt = 0x9d, "ifgt", 3, BranchTarget, 1, 0;
    Ifle = 0x9e, "ifle", 3, BranchTarget, 1, 0;
    IfIcmpeq = 0x9f, "if_icmpeq", 3, BranchTarget, 2, 0;
    IfIcmpne = 0xa0, "if_icmpne", 3, BranchTarget, 2, 0;
    IfIcmplt = 0xa1, "if_icmplt", 3, BranchTarget, 2, 0;
    IfIcmpge = 0xa2, "if_icmpge", 3, BranchTarget, 2, 0;
    IfIcmpgt = 0xa3, "if_icmpgt", 3, BranchTarget, 2, 0;
    IfIcmple = 0xa4, "if_icmple", 3, BranchTarget, 2, 0;
    Goto = 0xa7, "goto", 3, BranchTarget, 0, 0;
    Ireturn = 0xac, "ireturn", 1, None, 1, 0;
    Freturn = 0xae, "freturn", 1, None, 1, 0;
    Return = 0xb1, "return", 1, None, 0, 0;
}

/// Integer comparison used by the `if*` family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cond {
    Eq,
    Ne,
    Lt,
    Ge,
    Gt,
    Le,
}

impl Cond {
    pub fn holds(self, lhs: i32, rhs: i32) -> bool {
        match self {
            Cond::Eq => lhs == rhs,
            Cond::Ne => lhs != rhs,
            Cond::Lt => lhs < rhs,
            Cond::Ge => lhs >= rhs,
            Cond::Gt => lhs > rhs,
            Cond::Le => lhs <= rhs,
        }
    }
}

impl Opcode {
    /// Decodes an opcode byte. `ldc`/`ldc_w` are not decoded here since
    /// their kind depends on the constant-pool entry.
    pub fn from_byte(byte: u8) -> Option<Opcode> {
        Opcode::ALL
            .iter()
            .copied()
            .find(|op| op.byte() == byte && !op.is_ldc())
    }

    pub fn is_ldc(self) -> bool {
        matches!(self, Opcode::LdcInt | Opcode::LdcFloat)
    }

    /// `if<cond>` with a single int operand compared against zero.
    pub fn zero_cond(self) -> Option<Cond> {
        Some(match self {
            Opcode::Ifeq => Cond::Eq,
            Opcode::Ifne => Cond::Ne,
            Opcode::Iflt => Cond::Lt,
            Opcode::Ifge => Cond::Ge,
            Opcode::Ifgt => Cond::Gt,
            Opcode::Ifle => Cond::Le,
            _ => return None,
        })
    }

    /// `if_icmp<cond>` comparing two ints.
    pub fn icmp_cond(self) -> Option<Cond> {
        Some(match self {
            Opcode::IfIcmpeq => Cond::Eq,
            Opcode::IfIcmpne => Cond::Ne,
            Opcode::IfIcmplt => Cond::Lt,
            Opcode::IfIcmpge => Cond::Ge,
            Opcode::IfIcmpgt => Cond::Gt,
            Opcode::IfIcmple => Cond::Le,
            _ => return None,
        })
    }

    pub fn is_conditional_branch(self) -> bool {
        self.zero_cond().is_some() || self.icmp_cond().is_some()
    }

    /// Conditional branches and `goto`.
    pub fn is_branch(self) -> bool {
        self.operand_kind() == OperandKind::BranchTarget
    }

    pub fn is_return(self) -> bool {
        matches!(self, Opcode::Ireturn | Opcode::Freturn | Opcode::Return)
    }

    /// Ends a basic block.
    pub fn is_terminator(self) -> bool {
        self.is_branch() || self.is_return()
    }

    pub fn is_load(self) -> bool {
        matches!(
            self,
            Opcode::Iload
                | Opcode::Fload
                | Opcode::Iload0
                | Opcode::Iload1
                | Opcode::Iload2
                | Opcode::Iload3
                | Opcode::Fload0
                | Opcode::Fload1
                | Opcode::Fload2
                | Opcode::Fload3
        )
    }

    pub fn is_store(self) -> bool {
        matches!(
            self,
            Opcode::Istore
                | Opcode::Fstore
                | Opcode::Istore0
                | Opcode::Istore1
                | Opcode::Istore2
                | Opcode::Istore3
                | Opcode::Fstore0
                | Opcode::Fstore1
                | Opcode::Fstore2
                | Opcode::Fstore3
        )
    }

    pub fn is_constant(self) -> bool {
        self.constant_value().is_some() || matches!(self, Opcode::Bipush | Opcode::LdcInt | Opcode::LdcFloat)
    }

    pub fn is_compare(self) -> bool {
        matches!(self, Opcode::Fcmpl | Opcode::Fcmpg) || self.icmp_cond().is_some()
    }

    /// The value pushed by operand-less constant opcodes.
    pub fn constant_value(self) -> Option<crate::Value> {
        use crate::Value::{Float, Int};
        Some(match self {
            Opcode::IconstM1 => Int(-1),
            Opcode::Iconst0 => Int(0),
            Opcode::Iconst1 => Int(1),
            Opcode::Iconst2 => Int(2),
            Opcode::Iconst3 => Int(3),
            Opcode::Iconst4 => Int(4),
            Opcode::Iconst5 => Int(5),
            Opcode::Fconst0 => Float(0.0),
            Opcode::Fconst1 => Float(1.0),
            Opcode::Fconst2 => Float(2.0),
            _ => return None,
        })
    }

    /// Local slot addressed by the `_<n>` load/store shorthands.
    pub fn implicit_local(self) -> Option<u16> {
        Some(match self {
            Opcode::Iload0 | Opcode::Fload0 | Opcode::Istore0 | Opcode::Fstore0 => 0,
            Opcode::Iload1 | Opcode::Fload1 | Opcode::Istore1 | Opcode::Fstore1 => 1,
            Opcode::Iload2 | Opcode::Fload2 | Opcode::Istore2 | Opcode::Fstore2 => 2,
            Opcode::Iload3 | Opcode::Fload3 | Opcode::Istore3 | Opcode::Fstore3 => 3,
            _ => return None,
        })
    }

    /// Kind of the value this opcode produces: the pushed value, or the
    /// stored value for stores. `None` for opcodes that produce nothing.
    pub fn produced_kind(self) -> Option<Kind> {
        use Opcode::*;
        match self {
            IconstM1 | Iconst0 | Iconst1 | Iconst2 | Iconst3 | Iconst4 | Iconst5 | Bipush
            | LdcInt | Iload | Iload0 | Iload1 | Iload2 | Iload3 | Istore | Istore0 | Istore1
            | Istore2 | Istore3 | Iadd | Isub | Imul | Idiv | Irem | Ineg | Fcmpl | Fcmpg => {
                Some(Kind::Int)
            }
            Fconst0 | Fconst1 | Fconst2 | LdcFloat | Fload | Fload0 | Fload1 | Fload2 | Fload3
            | Fstore | Fstore0 | Fstore1 | Fstore2 | Fstore3 | Fadd | Fsub | Fmul | Fdiv
            | Fneg => Some(Kind::Float),
            _ => None,
        }
    }

    /// The load or store opcode of `kind` addressing `index`, using the
    /// one-byte shorthand when available.
    pub fn local_access(kind: Kind, store: bool, index: u16) -> (Opcode, Option<u16>) {
        use Opcode::*;
        let short = match (kind, store) {
            (Kind::Int, false) => [Iload0, Iload1, Iload2, Iload3],
            (Kind::Float, false) => [Fload0, Fload1, Fload2, Fload3],
            (Kind::Int, true) => [Istore0, Istore1, Istore2, Istore3],
            (Kind::Float, true) => [Fstore0, Fstore1, Fstore2, Fstore3],
        };
        if let Some(op) = short.get(usize::from(index)) {
            return (*op, None);
        }
        let long = match (kind, store) {
            (Kind::Int, false) => Iload,
            (Kind::Float, false) => Fload,
            (Kind::Int, true) => Istore,
            (Kind::Float, true) => Fstore,
        };
        (long, Some(index))
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownMnemonic(pub String);

impl FromStr for Opcode {
    type Err = UnknownMnemonic;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Opcode::ALL
            .iter()
            .copied()
            .find(|op| op.mnemonic() == s)
            .ok_or_else(|| UnknownMnemonic(s.to_owned()))
    }
}
