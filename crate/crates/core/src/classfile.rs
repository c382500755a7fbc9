//! A minimal `.class` reader and writer for the supported subset.
//!
//! The reader accepts the constant-pool tags `Utf8`, `Integer`, `Float`,
//! `Class`, `NameAndType` and `Methodref`, skips attributes it does not use
//! (`LineNumberTable`, `StackMapTable`, `SourceFile`, ...), and reads local
//! names from `LocalVariableTable` when present. `ldc` with a one-byte
//! index is decoded as `ldc_int`/`ldc_float`, which always encode as
//! `ldc_w`; offsets are re-laid out accordingly.

use std::collections::{BTreeMap, HashMap};

use crate::error::{ClassError, Error, Result};
use crate::method::{Instruction, Method, Operand, PoolConstant, Program};
use crate::opcode::{Opcode, OperandKind};
use crate::validate::validate;
use crate::value::{Kind, ReturnKind};

const MAGIC: u32 = 0xCAFE_BABE;
const MAJOR_VERSION: u16 = 52;
const CLASS_ACCESS: u16 = 0x0021; // public super
const METHOD_ACCESS: u16 = 0x0009; // public static

const TAG_UTF8: u8 = 1;
const TAG_INTEGER: u8 = 3;
const TAG_FLOAT: u8 = 4;
const TAG_CLASS: u8 = 7;
const TAG_METHODREF: u8 = 10;
const TAG_NAME_AND_TYPE: u8 = 12;

const OP_LDC: u8 = 0x12;
const OP_LDC_W: u8 = 0x13;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Entry {
    Utf8(String),
    Integer(i32),
    Float(u32),
    Class(u16),
    NameAndType(u16, u16),
    Methodref(u16, u16),
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    /// Position of `bytes[0]` in the whole file, for error reporting.
    base: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], base: usize) -> Self {
        Reader { bytes, pos: 0, base }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ClassError> {
        let end = self.pos.checked_add(n).filter(|&end| end <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(ClassError::Truncated { at: self.base + self.bytes.len() }),
        }
    }

    fn u1(&mut self) -> Result<u8, ClassError> {
        Ok(self.take(1)?[0])
    }

    fn u2(&mut self) -> Result<u16, ClassError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u4(&mut self) -> Result<u32, ClassError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn absolute(&self) -> usize {
        self.base + self.pos
    }
}

struct Pool {
    entries: Vec<Option<Entry>>,
}

impl Pool {
    fn get(&self, index: u16) -> Result<&Entry, ClassError> {
        self.entries
            .get(usize::from(index))
            .and_then(Option::as_ref)
            .ok_or(ClassError::BadConstantRef { index })
    }

    fn utf8(&self, index: u16) -> Result<&str, ClassError> {
        match self.get(index)? {
            Entry::Utf8(s) => Ok(s),
            _ => Err(ClassError::BadConstantRef { index }),
        }
    }

    fn class_name(&self, index: u16) -> Result<&str, ClassError> {
        match self.get(index)? {
            Entry::Class(name) => self.utf8(*name),
            _ => Err(ClassError::BadConstantRef { index }),
        }
    }
}

fn read_pool(r: &mut Reader<'_>) -> Result<Pool, ClassError> {
    let count = r.u2()?;
    let mut entries = vec![None];
    for index in 1..count {
        let tag = r.u1()?;
        let entry = match tag {
            TAG_UTF8 => {
                let len = r.u2()?;
                let bytes = r.take(usize::from(len))?;
                let s = std::str::from_utf8(bytes)
                    .map_err(|_| ClassError::Malformed(format!("entry {index} is not valid UTF-8")))?;
                Entry::Utf8(s.to_owned())
            }
            TAG_INTEGER => Entry::Integer(r.u4()? as i32),
            TAG_FLOAT => Entry::Float(r.u4()?),
            TAG_CLASS => Entry::Class(r.u2()?),
            TAG_NAME_AND_TYPE => Entry::NameAndType(r.u2()?, r.u2()?),
            TAG_METHODREF => Entry::Methodref(r.u2()?, r.u2()?),
            _ => return Err(ClassError::UnsupportedConstantTag { tag, index }),
        };
        entries.push(Some(entry));
    }
    Ok(Pool { entries })
}

fn parse_descriptor(desc: &str) -> Result<(Vec<Kind>, ReturnKind), ClassError> {
    let bad = || ClassError::BadDescriptor(desc.to_owned());
    let rest = desc.strip_prefix('(').ok_or_else(bad)?;
    let (params, ret) = rest.split_once(')').ok_or_else(bad)?;
    let params = params.chars().map(Kind::from_descriptor).collect::<Option<Vec<_>>>().ok_or_else(bad)?;
    let mut chars = ret.chars();
    match (chars.next().and_then(ReturnKind::from_descriptor), chars.next()) {
        (Some(r), None) => Ok((params, r)),
        _ => Err(bad()),
    }
}

struct CodeAttribute {
    max_stack: u16,
    max_locals: u16,
    code: Vec<Instruction>,
    local_names: BTreeMap<u16, String>,
}

fn read_code(r: &mut Reader<'_>, pool: &Pool) -> Result<CodeAttribute, ClassError> {
    let max_stack = r.u2()?;
    let max_locals = r.u2()?;
    let code_length = r.u4()? as usize;
    let code_base = r.absolute();
    let bytes = r.take(code_length)?;
    let exception_count = r.u2()?;
    if exception_count != 0 {
        return Err(ClassError::Malformed("exception handlers are not supported".into()));
    }
    let mut local_names = BTreeMap::new();
    let attribute_count = r.u2()?;
    for _ in 0..attribute_count {
        let name = r.u2()?;
        let len = r.u4()? as usize;
        let base = r.absolute();
        let body = r.take(len)?;
        if pool.utf8(name)? == "LocalVariableTable" {
            let mut lvt = Reader::new(body, base);
            let n = lvt.u2()?;
            for _ in 0..n {
                let _start = lvt.u2()?;
                let _length = lvt.u2()?;
                let name = pool.utf8(lvt.u2()?)?.to_owned();
                let _descriptor = lvt.u2()?;
                let index = lvt.u2()?;
                local_names.entry(index).or_insert(name);
            }
        }
    }
    let code = decode_code(bytes, code_base, pool)?;
    Ok(CodeAttribute { max_stack, max_locals, code, local_names })
}

fn decode_code(bytes: &[u8], base: usize, pool: &Pool) -> Result<Vec<Instruction>, ClassError> {
    let mut r = Reader::new(bytes, base);
    // (original offset, opcode, operand with original branch targets)
    let mut raw = Vec::new();
    let mut relocated = false;
    while r.pos < bytes.len() {
        let offset = r.pos as u32;
        let byte = r.u1()?;
        let (opcode, operand) = match byte {
            OP_LDC | OP_LDC_W => {
                let index = if byte == OP_LDC {
                    relocated = true;
                    u16::from(r.u1()?)
                } else {
                    r.u2()?
                };
                match pool.get(index)? {
                    Entry::Integer(v) => (Opcode::LdcInt, Operand::Int(*v)),
                    Entry::Float(bits) => (Opcode::LdcFloat, Operand::Float(f32::from_bits(*bits))),
                    _ => return Err(ClassError::BadConstantRef { index }),
                }
            }
            _ => {
                let opcode = Opcode::from_byte(byte).ok_or(ClassError::UnsupportedOpcode { byte, offset })?;
                let operand = match opcode.operand_kind() {
                    OperandKind::None => Operand::None,
                    OperandKind::LocalIndex => Operand::Local(u16::from(r.u1()?)),
                    OperandKind::IntImmediate => Operand::Int(i32::from(r.u1()? as i8)),
                    OperandKind::BranchTarget => {
                        let rel = i64::from(r.u2()? as i16);
                        let target = i64::from(offset) + rel;
                        let target = u32::try_from(target).map_err(|_| {
                            ClassError::Malformed(format!("branch at {offset} targets {target}"))
                        })?;
                        Operand::Target(target)
                    }
                    OperandKind::FloatImmediate => unreachable!("only ldc carries a float immediate"),
                };
                (opcode, operand)
            }
        };
        raw.push((offset, opcode, operand));
    }

    let mut code: Vec<Instruction> =
        raw.iter().map(|&(offset, opcode, operand)| Instruction::new(offset, opcode, operand)).collect();
    if relocated {
        let mut next = 0;
        let mut moved = HashMap::new();
        for insn in &mut code {
            moved.insert(insn.offset, next);
            insn.offset = next;
            next += insn.width();
        }
        for insn in &mut code {
            if let Operand::Target(t) = insn.operand {
                let new = moved
                    .get(&t)
                    .ok_or_else(|| ClassError::Malformed(format!("branch target {t} is not an instruction")))?;
                insn.operand = Operand::Target(*new);
            }
        }
    }
    Ok(code)
}

fn skip_attributes(r: &mut Reader<'_>) -> Result<(), ClassError> {
    let count = r.u2()?;
    for _ in 0..count {
        let _name = r.u2()?;
        let len = r.u4()? as usize;
        r.take(len)?;
    }
    Ok(())
}

pub fn parse_class(bytes: &[u8]) -> Result<Program> {
    let mut r = Reader::new(bytes, 0);
    let magic = r.u4()?;
    if magic != MAGIC {
        return Err(ClassError::BadMagic(magic).into());
    }
    let _minor = r.u2()?;
    let _major = r.u2()?;
    let pool = read_pool(&mut r)?;
    let _access = r.u2()?;
    let this_class = r.u2()?;
    let _super_class = r.u2()?;
    let interfaces = r.u2()?;
    r.take(usize::from(interfaces) * 2)?;
    let fields = r.u2()?;
    for _ in 0..fields {
        r.take(6)?;
        skip_attributes(&mut r)?;
    }
    let method_count = r.u2()?;
    let mut methods = Vec::with_capacity(usize::from(method_count));
    for _ in 0..method_count {
        let _access = r.u2()?;
        let name = r.u2()?;
        let descriptor = r.u2()?;
        let attribute_count = r.u2()?;
        let mut code = None;
        for _ in 0..attribute_count {
            let attr_name = r.u2()?;
            let len = r.u4()? as usize;
            let base = r.absolute();
            let body = r.take(len)?;
            if pool.utf8(attr_name)? == "Code" {
                code = Some(read_code(&mut Reader::new(body, base), &pool)?);
            }
        }
        let name = pool.utf8(name)?.to_owned();
        let (params, returns) = parse_descriptor(pool.utf8(descriptor)?)?;
        let code = code.ok_or_else(|| ClassError::Malformed(format!("method `{name}` has no Code attribute")))?;
        methods.push(Method {
            name,
            params,
            returns,
            max_stack: code.max_stack,
            max_locals: code.max_locals,
            code: code.code,
            local_names: code.local_names,
        });
    }
    skip_attributes(&mut r)?;

    let name = pool.class_name(this_class)?.to_owned();
    let constant_pool = pool
        .entries
        .iter()
        .flatten()
        .filter_map(|e| match e {
            Entry::Utf8(s) => Some(PoolConstant::Utf8(s.clone())),
            Entry::Integer(v) => Some(PoolConstant::Int(*v)),
            Entry::Float(bits) => Some(PoolConstant::Float(f32::from_bits(*bits))),
            _ => None,
        })
        .collect();
    for method in &methods {
        let report = validate(method);
        if !report.is_valid() {
            return Err(Error::Invalid { method: method.name.clone(), report });
        }
    }
    Ok(Program { name, methods, constant_pool })
}

#[derive(Default)]
struct PoolBuilder {
    entries: Vec<Entry>,
    index: HashMap<Entry, u16>,
}

impl PoolBuilder {
    fn add(&mut self, entry: Entry) -> Result<u16, ClassError> {
        if let Some(&i) = self.index.get(&entry) {
            return Ok(i);
        }
        let i = u16::try_from(self.entries.len() + 1)
            .ok()
            .filter(|&i| i < u16::MAX)
            .ok_or_else(|| ClassError::Unsupported("constant pool overflow".into()))?;
        self.entries.push(entry.clone());
        self.index.insert(entry, i);
        Ok(i)
    }

    fn utf8(&mut self, s: &str) -> Result<u16, ClassError> {
        if s.len() > usize::from(u16::MAX) {
            return Err(ClassError::Unsupported("string constant too long".into()));
        }
        self.add(Entry::Utf8(s.to_owned()))
    }

    fn class(&mut self, name: &str) -> Result<u16, ClassError> {
        let name = self.utf8(name)?;
        self.add(Entry::Class(name))
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&((self.entries.len() + 1) as u16).to_be_bytes());
        for entry in &self.entries {
            match entry {
                Entry::Utf8(s) => {
                    out.push(TAG_UTF8);
                    out.extend_from_slice(&(s.len() as u16).to_be_bytes());
                    out.extend_from_slice(s.as_bytes());
                }
                Entry::Integer(v) => {
                    out.push(TAG_INTEGER);
                    out.extend_from_slice(&v.to_be_bytes());
                }
                Entry::Float(bits) => {
                    out.push(TAG_FLOAT);
                    out.extend_from_slice(&bits.to_be_bytes());
                }
                Entry::Class(i) => {
                    out.push(TAG_CLASS);
                    out.extend_from_slice(&i.to_be_bytes());
                }
                Entry::NameAndType(a, b) | Entry::Methodref(a, b) => {
                    out.push(if matches!(entry, Entry::NameAndType(..)) { TAG_NAME_AND_TYPE } else { TAG_METHODREF });
                    out.extend_from_slice(&a.to_be_bytes());
                    out.extend_from_slice(&b.to_be_bytes());
                }
            }
        }
    }
}

/// Kind used for a local in `LocalVariableTable`: parameter kind, else
/// the kind of its first load or store, else int.
fn local_kind(method: &Method, index: u16) -> Kind {
    if let Some(k) = method.params.get(usize::from(index)) {
        return *k;
    }
    method
        .code
        .iter()
        .find(|i| i.local_index() == Some(index))
        .and_then(|i| i.opcode.produced_kind())
        .unwrap_or(Kind::Int)
}

fn encode_code(method: &Method, pool: &mut PoolBuilder) -> Result<Vec<u8>, ClassError> {
    let unsupported = |offset: u32, what: &str| ClassError::Unsupported(format!("`{}` offset {offset}: {what}", method.name));
    let mut code = Vec::with_capacity(method.code_length() as usize);
    for insn in &method.code {
        if code.len() != insn.offset as usize {
            return Err(unsupported(insn.offset, "offsets are not contiguous"));
        }
        code.push(insn.opcode.byte());
        match (insn.opcode.operand_kind(), insn.operand) {
            (OperandKind::None, Operand::None) => {}
            (OperandKind::LocalIndex, Operand::Local(i)) => {
                code.push(u8::try_from(i).map_err(|_| unsupported(insn.offset, "wide local index"))?);
            }
            (OperandKind::IntImmediate, Operand::Int(v)) if insn.opcode == Opcode::Bipush => {
                code.push(i8::try_from(v).map_err(|_| unsupported(insn.offset, "bipush out of range"))? as u8);
            }
            (OperandKind::IntImmediate, Operand::Int(v)) => {
                code.extend_from_slice(&pool.add(Entry::Integer(v))?.to_be_bytes());
            }
            (OperandKind::FloatImmediate, Operand::Float(v)) => {
                code.extend_from_slice(&pool.add(Entry::Float(v.to_bits()))?.to_be_bytes());
            }
            (OperandKind::BranchTarget, Operand::Target(t)) => {
                let rel = i16::try_from(i64::from(t) - i64::from(insn.offset))
                    .map_err(|_| unsupported(insn.offset, "branch out of range"))?;
                code.extend_from_slice(&rel.to_be_bytes());
            }
            _ => return Err(unsupported(insn.offset, "operand does not match opcode")),
        }
    }
    Ok(code)
}

pub fn write_class(program: &Program) -> Result<Vec<u8>> {
    let mut pool = PoolBuilder::default();
    let this_class = pool.class(&program.name)?;
    let super_class = pool.class("java/lang/Object")?;
    let code_name = pool.utf8("Code")?;

    let mut methods = Vec::new();
    for method in &program.methods {
        let name = pool.utf8(&method.name)?;
        let descriptor = pool.utf8(&method.descriptor())?;
        let code = encode_code(method, &mut pool)?;
        let code_len = u16::try_from(code.len())
            .map_err(|_| ClassError::Unsupported(format!("`{}` code is too long", method.name)))?;

        let mut attrs = Vec::new();
        let mut attr_count: u16 = 0;
        if !method.local_names.is_empty() {
            attr_count = 1;
            let lvt_name = pool.utf8("LocalVariableTable")?;
            let mut table = Vec::new();
            table.extend_from_slice(&(method.local_names.len() as u16).to_be_bytes());
            for (&index, local) in &method.local_names {
                let local_name = pool.utf8(local)?;
                let desc = pool.utf8(&local_kind(method, index).descriptor().to_string())?;
                for v in [0, code_len, local_name, desc, index] {
                    table.extend_from_slice(&v.to_be_bytes());
                }
            }
            attrs.extend_from_slice(&lvt_name.to_be_bytes());
            attrs.extend_from_slice(&(table.len() as u32).to_be_bytes());
            attrs.extend_from_slice(&table);
        }

        let mut body = Vec::new();
        body.extend_from_slice(&method.max_stack.to_be_bytes());
        body.extend_from_slice(&method.max_locals.to_be_bytes());
        body.extend_from_slice(&(code.len() as u32).to_be_bytes());
        body.extend_from_slice(&code);
        body.extend_from_slice(&0u16.to_be_bytes());
        body.extend_from_slice(&attr_count.to_be_bytes());
        body.extend_from_slice(&attrs);

        let mut out = Vec::new();
        out.extend_from_slice(&METHOD_ACCESS.to_be_bytes());
        out.extend_from_slice(&name.to_be_bytes());
        out.extend_from_slice(&descriptor.to_be_bytes());
        out.extend_from_slice(&1u16.to_be_bytes());
        out.extend_from_slice(&code_name.to_be_bytes());
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend_from_slice(&body);
        methods.push(out);
    }

    let mut bytes = Vec::new();
    bytes.extend_from_slice(&MAGIC.to_be_bytes());
    bytes.extend_from_slice(&0u16.to_be_bytes());
    bytes.extend_from_slice(&MAJOR_VERSION.to_be_bytes());
    pool.write(&mut bytes);
    bytes.extend_from_slice(&CLASS_ACCESS.to_be_bytes());
    bytes.extend_from_slice(&this_class.to_be_bytes());
    bytes.extend_from_slice(&super_class.to_be_bytes());
    bytes.extend_from_slice(&0u16.to_be_bytes()); // interfaces
    bytes.extend_from_slice(&0u16.to_be_bytes()); // fields
    bytes.extend_from_slice(&(methods.len() as u16).to_be_bytes());
    for m in methods {
        bytes.extend_from_slice(&m);
    }
    bytes.extend_from_slice(&0u16.to_be_bytes()); // class attributes
    Ok(bytes)
}
