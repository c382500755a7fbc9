//! Line-oriented textual assembly.
//!
//! ```text
//! .class Example
//! .method maxf (FF) F
//! .maxstack 2
//! .maxlocals 2
//! .names 0=n1 1=n2
//! 0: fload_0
//!    fload_1
//!    fcmpl
//!    iflt ELSE        ; labels resolve to byte offsets
//!    fload_0
//!    freturn
//! ELSE:
//!    fload_1
//!    freturn
//! ```
//!
//! An optional numeric `<offset>:` prefix is checked against the offset
//! implied by the opcode widths. `disassemble` emits the canonical form:
//! every instruction prefixed by its offset, numeric branch targets.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::method::{Instruction, Method, Operand, Program};
use crate::opcode::{Opcode, OperandKind};
use crate::validate::validate;
use crate::value::{parse_f32, Kind, ReturnKind};

const DEFAULT_PROGRAM_NAME: &str = "Main";

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = line.split(';').next().unwrap_or("");
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in code.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                tokens.push(Token { text: &code[s..i], column: s + 1 });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token { text: &code[s..], column: s + 1 });
    }
    tokens
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

enum PendingOperand {
    Resolved(Operand),
    Label { name: String, line: usize },
}

struct PendingMethod {
    name: String,
    params: Vec<Kind>,
    returns: ReturnKind,
    max_stack: Option<u16>,
    max_locals: Option<u16>,
    local_names: BTreeMap<u16, String>,
    code: Vec<(u32, Opcode, PendingOperand)>,
    labels: HashMap<String, u32>,
    next_offset: u32,
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

fn parse_signature(line: usize, tokens: &[Token<'_>]) -> Result<(Vec<Kind>, ReturnKind)> {
    let column = tokens.first().map_or(1, |t| t.column);
    let joined: String = tokens.iter().map(|t| t.text).collect();
    let bad = || parse_error(line, column, format!("bad signature `{joined}`"));
    let rest = joined.strip_prefix('(').ok_or_else(bad)?;
    let (params, ret) = rest.split_once(')').ok_or_else(bad)?;
    let params = params
        .chars()
        .map(Kind::from_descriptor)
        .collect::<Option<Vec<_>>>()
        .ok_or_else(bad)?;
    let mut ret_chars = ret.chars();
    let returns = match (ret_chars.next(), ret_chars.next()) {
        (Some(c), None) => ReturnKind::from_descriptor(c).ok_or_else(bad)?,
        _ => return Err(bad()),
    };
    Ok((params, returns))
}

fn parse_u16(line: usize, token: &Token<'_>) -> Result<u16> {
    token
        .text
        .parse()
        .map_err(|_| parse_error(line, token.column, format!("expected a count, found `{}`", token.text)))
}

pub fn assemble(text: &str) -> Result<Program> {
    let mut program_name: Option<String> = None;
    let mut methods: Vec<PendingMethod> = Vec::new();

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let tokens = tokenize(raw);
        let Some(first) = tokens.first() else { continue };

        if let Some(directive) = first.text.strip_prefix('.') {
            match directive {
                "class" => {
                    let [_, name] = tokens.as_slice() else {
                        return Err(parse_error(line, first.column, "expected `.class <name>`"));
                    };
                    if !methods.is_empty() || program_name.is_some() {
                        return Err(parse_error(line, first.column, "`.class` must come first"));
                    }
                    program_name = Some(name.text.to_owned());
                }
                "method" => {
                    let Some(name) = tokens.get(1) else {
                        return Err(parse_error(line, first.column, "expected a method name"));
                    };
                    if !is_identifier(name.text) && !name.text.starts_with('<') {
                        return Err(parse_error(line, name.column, "bad method name"));
                    }
                    if methods.iter().any(|m| m.name == name.text) {
                        return Err(parse_error(
                            line,
                            name.column,
                            format!("duplicate method `{}`", name.text),
                        ));
                    }
                    let (params, returns) = parse_signature(line, &tokens[2..])?;
                    methods.push(PendingMethod {
                        name: name.text.to_owned(),
                        params,
                        returns,
                        max_stack: None,
                        max_locals: None,
                        local_names: BTreeMap::new(),
                        code: Vec::new(),
                        labels: HashMap::new(),
                        next_offset: 0,
                    });
                }
                "maxstack" | "maxlocals" | "names" => {
                    let Some(method) = methods.last_mut() else {
                        return Err(parse_error(line, first.column, "directive outside a method"));
                    };
                    match directive {
                        "names" => {
                            for token in &tokens[1..] {
                                let parsed = token.text.split_once('=').and_then(|(idx, name)| {
                                    Some((idx.parse::<u16>().ok()?, name)).filter(|_| is_identifier(name))
                                });
                                let Some((idx, name)) = parsed else {
                                    return Err(parse_error(line, token.column, "expected `<index>=<identifier>`"));
                                };
                                method.local_names.insert(idx, name.to_owned());
                            }
                        }
                        _ => {
                            let [_, value] = tokens.as_slice() else {
                                return Err(parse_error(line, first.column, "expected one count"));
                            };
                            let value = parse_u16(line, value)?;
                            if directive == "maxstack" {
                                method.max_stack = Some(value);
                            } else {
                                method.max_locals = Some(value);
                            }
                        }
                    }
                }
                other => {
                    return Err(parse_error(line, first.column, format!("unknown directive `.{other}`")));
                }
            }
            continue;
        }

        let Some(method) = methods.last_mut() else {
            return Err(parse_error(line, first.column, "instruction outside a method"));
        };
        let mut rest = tokens.as_slice();
        while let Some(head) = rest.first() {
            let Some(prefix) = head.text.strip_suffix(':') else { break };
            if let Ok(offset) = prefix.parse::<u32>() {
                if offset != method.next_offset {
                    return Err(parse_error(
                        line,
                        head.column,
                        format!("offset {offset} does not match computed offset {}", method.next_offset),
                    ));
                }
            } else if is_identifier(prefix) {
                if method.labels.insert(prefix.to_owned(), method.next_offset).is_some() {
                    return Err(parse_error(line, head.column, format!("duplicate label `{prefix}`")));
                }
            } else {
                return Err(parse_error(line, head.column, format!("bad label `{prefix}`")));
            }
            rest = &rest[1..];
        }
        let Some(mnemonic) = rest.first() else { continue };
        let opcode: Opcode = mnemonic
            .text
            .parse()
            .map_err(|_| parse_error(line, mnemonic.column, format!("unknown mnemonic `{}`", mnemonic.text)))?;
        let operand_token = rest.get(1);
        if let Some(extra) = rest.get(2) {
            return Err(parse_error(line, extra.column, "unexpected token"));
        }
        let operand = match (opcode.operand_kind(), operand_token) {
            (OperandKind::None, None) => PendingOperand::Resolved(Operand::None),
            (OperandKind::None, Some(t)) => {
                return Err(parse_error(line, t.column, format!("`{opcode}` takes no operand")));
            }
            (_, None) => {
                return Err(parse_error(line, mnemonic.column, format!("`{opcode}` needs an operand")));
            }
            (OperandKind::LocalIndex, Some(t)) => {
                PendingOperand::Resolved(Operand::Local(t.text.parse().map_err(|_| {
                    parse_error(line, t.column, format!("bad local index `{}`", t.text))
                })?))
            }
            (OperandKind::IntImmediate, Some(t)) => {
                PendingOperand::Resolved(Operand::Int(t.text.parse().map_err(|_| {
                    parse_error(line, t.column, format!("bad integer `{}`", t.text))
                })?))
            }
            (OperandKind::FloatImmediate, Some(t)) => PendingOperand::Resolved(Operand::Float(
                parse_f32(t.text)
                    .ok_or_else(|| parse_error(line, t.column, format!("bad float `{}`", t.text)))?,
            )),
            (OperandKind::BranchTarget, Some(t)) => match t.text.parse::<u32>() {
                Ok(target) => PendingOperand::Resolved(Operand::Target(target)),
                Err(_) if is_identifier(t.text) => PendingOperand::Label { name: t.text.to_owned(), line },
                Err(_) => return Err(parse_error(line, t.column, format!("bad branch target `{}`", t.text))),
            },
        };
        method.code.push((method.next_offset, opcode, operand));
        method.next_offset = method.next_offset.saturating_add(opcode.width());
    }

    if methods.is_empty() {
        return Err(parse_error(1, 1, "no method"));
    }

    let methods = methods.into_iter().map(finish_method).collect::<Result<Vec<_>>>()?;
    Ok(Program::new(program_name.unwrap_or_else(|| DEFAULT_PROGRAM_NAME.to_owned()), methods))
}

fn finish_method(pending: PendingMethod) -> Result<Method> {
    let code = pending
        .code
        .into_iter()
        .map(|(offset, opcode, operand)| {
            let operand = match operand {
                PendingOperand::Resolved(op) => op,
                PendingOperand::Label { name, line } => match pending.labels.get(&name) {
                    Some(&target) => Operand::Target(target),
                    None => return Err(Error::UndefinedLabel { line, label: name }),
                },
            };
            Ok(Instruction::new(offset, opcode, operand))
        })
        .collect::<Result<Vec<_>>>()?;

    let max_locals = pending.max_locals.unwrap_or_else(|| {
        let used = code.iter().filter_map(|i| i.local_index()).map(|i| i + 1).max().unwrap_or(0);
        used.max(pending.params.len() as u16)
    });
    let mut method = Method {
        name: pending.name,
        params: pending.params,
        returns: pending.returns,
        max_stack: pending.max_stack.unwrap_or(u16::MAX),
        max_locals,
        code,
        local_names: pending.local_names,
    };
    if pending.max_stack.is_none() {
        let depth = crate::validate::stack_depths(&method)
            .iter()
            .zip(&method.code)
            .filter_map(|(d, insn)| d.map(|d| d - insn.opcode.pops().min(d) + insn.opcode.pushes()))
            .max()
            .unwrap_or(0);
        method.max_stack = depth as u16;
    }
    let report = validate(&method);
    if !report.is_valid() {
        return Err(Error::Invalid { method: method.name, report });
    }
    Ok(method)
}

/// Canonical text: one instruction per line with its offset, lower-case
/// mnemonics, numeric branch targets, shortest round-trip floats.
pub fn disassemble(program: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, ".class {}", program.name);
    for method in &program.methods {
        out.push('\n');
        let params: String = method.params.iter().map(|k| k.descriptor()).collect();
        let _ = writeln!(out, ".method {} ({params}) {}", method.name, method.returns.descriptor());
        let _ = writeln!(out, ".maxstack {}", method.max_stack);
        let _ = writeln!(out, ".maxlocals {}", method.max_locals);
        if !method.local_names.is_empty() {
            out.push_str(".names");
            for (idx, name) in &method.local_names {
                let _ = write!(out, " {idx}={name}");
            }
            out.push('\n');
        }
        for insn in &method.code {
            let _ = writeln!(out, "{insn}");
        }
    }
    out
}
