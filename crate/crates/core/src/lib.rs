//! Execution, dependency extraction and specification-based fault
//! localization for a small JVM bytecode subset.

pub mod asm;
pub mod cfg;
pub mod classfile;
pub mod corpus;
pub mod depflow;
pub mod error;
#[doc(hidden)]
pub mod fixtures;
pub mod interp;
pub mod localize;
pub mod method;
pub mod mutation;
pub mod opcode;
pub mod report;
pub mod spec;
pub mod validate;
pub mod value;

pub use asm::{assemble, disassemble};
pub use cfg::{build_cfg, successors, Block, Cfg, Edge, EdgeKind};
pub use classfile::{parse_class, write_class};
pub use corpus::{corpus_run, load_program, CorpusSummary};
pub use depflow::{
    dep_diff, extract_deps, extract_deps_opts, extract_deps_with_origins, stack_sources, transitive_closure, DepDiff,
    DepKind, DepPair, DepSet, ExtractOptions, StackSources, VarId,
};
pub use error::{ClassError, Error, Result};
pub use interp::{
    check_lines, run, run_with, step, value_table, ExecResult, Frame, LineCheck, Outcome, Override, RunOptions,
    TraceEntry, Trap, ValueTable, DEFAULT_STEP_LIMIT,
};
pub use localize::{
    check, check_deps, check_values, diagnose, localize_deps, localize_value, merge_diagnoses, Candidate,
    CheckOptions, DepVerdict, Diagnosis, LocalizeOptions, Mode, ProbeSet, SpecOutcome, Verdict,
};
pub use method::{Instruction, Method, Operand, PoolConstant, Program};
pub use opcode::{Opcode, OperandKind};
pub use report::{emit_report, Report};
pub use spec::{bind_names, parse_spec, Binding, BoundSpec, Specification};
pub use validate::{validate, ValidationReport, Violation};
pub use value::{Kind, ReturnKind, Value};
