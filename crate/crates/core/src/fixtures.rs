//! Programs shipped in `corpus/`, compiled in for tests and benches.

use crate::asm::assemble;
use crate::method::Method;

macro_rules! corpus {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../corpus/", $name, ".bcasm")))),*]
    };
}

macro_rules! specs {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../corpus/", $name, ".spec.json")))),*]
    };
}

/// Correct programs as `(stem, assembly)`.
pub const CORPUS: &[(&str, &str)] =
    corpus!["absdiff", "countdown", "favg", "gcd", "maxf", "maxf_init", "poly", "scale", "sign"];

/// Specifications of the correct programs, by the same stems.
pub const CORPUS_SPECS: &[(&str, &str)] =
    specs!["absdiff", "countdown", "favg", "gcd", "maxf", "maxf_init", "poly", "scale", "sign"];

pub const MAXF_ASM: &str = include_str!("../../../corpus/maxf.bcasm");
pub const MAXF_SPEC: &str = include_str!("../../../corpus/maxf.spec.json");
pub const MAXF_INIT_SPEC: &str = include_str!("../../../corpus/maxf_init.spec.json");
pub const MAXF_INIT_BUGGY_ASM: &str = include_str!("../../../corpus/faulty/maxf_init_buggy.bcasm");
pub const MAXF_MUTANT_ASM: &str = include_str!("../../../corpus/faulty/maxf_mutant.bcasm");

/// Assembles text holding a single method.
pub fn assemble_one(text: &str) -> Method {
    let mut program = assemble(text).unwrap_or_else(|e| panic!("fixture does not assemble: {e}"));
    assert_eq!(program.methods.len(), 1, "fixture must hold one method");
    program.methods.remove(0)
}

pub fn maxf() -> Method {
    assemble_one(MAXF_ASM)
}

/// `maxf` with the load at offset 6 reading local 1.
pub fn maxf_mutant() -> Method {
    assemble_one(MAXF_MUTANT_ASM)
}

/// The initialising variant with its first constant replaced by 2.0.
pub fn maxf_init_buggy() -> Method {
    assemble_one(MAXF_INIT_BUGGY_ASM)
}

pub fn corpus_methods() -> Vec<(&'static str, Method)> {
    CORPUS.iter().map(|(name, text)| (*name, assemble_one(text))).collect()
}

pub fn corpus_method(name: &str) -> Method {
    let (_, text) = CORPUS.iter().find(|(n, _)| *n == name).unwrap_or_else(|| panic!("no corpus program {name}"));
    assemble_one(text)
}

pub fn corpus_spec(name: &str) -> &'static str {
    CORPUS_SPECS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s).unwrap_or_else(|| panic!("no spec for {name}"))
}
