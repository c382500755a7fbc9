//! Random program generators and independent reference oracles.

#![allow(dead_code)]

use std::fmt::Write as _;

use bytedbg_core::value::format_f32;
use bytedbg_core::{DepPair, DepSet, Kind, Value, VarId};
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------------------
// Dependency graphs

/// A random pair set over `n` locals: assign edges without self loops,
/// plus a few compare pairs.
pub fn random_dep_graph(rng: &mut impl Rng, n: u16) -> DepSet {
    let mut set = DepSet::new();
    let density = rng.gen_range(0.05..0.5);
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.gen_bool(density) {
                set.insert(DepPair::assign(VarId::Local(a), VarId::Local(b)));
            }
        }
    }
    for _ in 0..rng.gen_range(0..3) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            set.insert(DepPair::compare(VarId::Local(a), VarId::Local(b)));
        }
    }
    set
}

/// Closure by Warshall's algorithm over an adjacency matrix. Diagonal
/// entries are dropped; compare pairs pass through.
pub fn warshall_closure(deps: &DepSet, n: u16) -> DepSet {
    let n = n as usize;
    let mut reach = vec![vec![false; n]; n];
    let mut out = DepSet::new();
    for p in deps.iter() {
        match (p.kind, p.left, p.right) {
            (bytedbg_core::DepKind::Assign, VarId::Local(a), VarId::Local(b)) => reach[a as usize][b as usize] = true,
            _ => {
                out.insert(*p);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    for (i, row) in reach.iter().enumerate() {
        for (j, &r) in row.iter().enumerate() {
            if r && i != j {
                out.insert(DepPair::assign(VarId::Local(i as u16), VarId::Local(j as u16)));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Straight-line expressions

#[derive(Clone, Copy, Debug)]
pub enum IntOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

#[derive(Clone, Copy, Debug)]
pub enum FloatOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Debug)]
pub enum IntExpr {
    Param(u16),
    Const(i32),
    Bin(IntOp, Box<IntExpr>, Box<IntExpr>),
    Neg(Box<IntExpr>),
    /// `fcmpg` when the flag is set, `fcmpl` otherwise.
    Cmp(bool, Box<FloatExpr>, Box<FloatExpr>),
}

#[derive(Clone, Debug)]
pub enum FloatExpr {
    Param(u16),
    Const(f32),
    Bin(FloatOp, Box<FloatExpr>, Box<FloatExpr>),
    Neg(Box<FloatExpr>),
}

#[derive(Clone, Debug)]
pub enum Expr {
    Int(IntExpr),
    Float(FloatExpr),
}

#[derive(Debug, PartialEq)]
pub enum Eval {
    Value(Value),
    DivideByZero,
}

const INT_SPECIALS: [i32; 7] = [i32::MIN, i32::MAX, 0, 1, -1, 2, i32::MIN + 1];
const FLOAT_SPECIALS: [f32; 10] =
    [f32::NAN, f32::INFINITY, f32::NEG_INFINITY, -0.0, 0.0, f32::MAX, f32::MIN_POSITIVE, 1e-45, 1.0, 2.0];

pub fn random_int(rng: &mut impl Rng) -> i32 {
    match rng.gen_range(0..4) {
        0 => *INT_SPECIALS.choose(rng).unwrap(),
        1 => rng.gen(),
        2 => rng.gen_range(-200..200),
        _ => rng.gen_range(-5..6),
    }
}

pub fn random_float(rng: &mut impl Rng) -> f32 {
    match rng.gen_range(0..4) {
        0 => *FLOAT_SPECIALS.choose(rng).unwrap(),
        1 => f32::from_bits(rng.gen()),
        2 => rng.gen_range(-100.0..100.0),
        _ => rng.gen_range(-4..5) as f32 * 0.5,
    }
}

/// A straight-line method computing one expression over its parameters.
#[derive(Clone, Debug)]
pub struct StraightLine {
    pub params: Vec<Kind>,
    pub expr: Expr,
    /// Round-trip the result through a spare local before returning.
    pub via_local: bool,
}

impl StraightLine {
    pub fn returns(&self) -> Kind {
        match self.expr {
            Expr::Int(_) => Kind::Int,
            Expr::Float(_) => Kind::Float,
        }
    }
}

struct ExprGen<'a, R> {
    rng: &'a mut R,
    params: &'a [Kind],
    budget: usize,
}

impl<R: Rng> ExprGen<'_, R> {
    fn param_of(&mut self, kind: Kind) -> Option<u16> {
        let slots: Vec<u16> = (0..self.params.len() as u16).filter(|&i| self.params[i as usize] == kind).collect();
        slots.choose(self.rng).copied()
    }

    fn int(&mut self) -> IntExpr {
        self.budget = self.budget.saturating_sub(1);
        if self.budget < 2 || self.rng.gen_bool(0.25) {
            if self.rng.gen_bool(0.6) {
                if let Some(p) = self.param_of(Kind::Int) {
                    return IntExpr::Param(p);
                }
            }
            return IntExpr::Const(random_int(self.rng));
        }
        match self.rng.gen_range(0..10) {
            0 => IntExpr::Neg(Box::new(self.int())),
            1 if self.budget >= 3 => {
                let (l, r) = (self.float(), self.float());
                IntExpr::Cmp(self.rng.gen(), Box::new(l), Box::new(r))
            }
            _ => {
                let op = *[IntOp::Add, IntOp::Sub, IntOp::Mul, IntOp::Div, IntOp::Rem].choose(self.rng).unwrap();
                let (l, r) = (self.int(), self.int());
                IntExpr::Bin(op, Box::new(l), Box::new(r))
            }
        }
    }

    fn float(&mut self) -> FloatExpr {
        self.budget = self.budget.saturating_sub(1);
        if self.budget < 2 || self.rng.gen_bool(0.25) {
            if self.rng.gen_bool(0.6) {
                if let Some(p) = self.param_of(Kind::Float) {
                    return FloatExpr::Param(p);
                }
            }
            return FloatExpr::Const(random_float(self.rng));
        }
        if self.rng.gen_range(0..8) == 0 {
            return FloatExpr::Neg(Box::new(self.float()));
        }
        let op = *[FloatOp::Add, FloatOp::Sub, FloatOp::Mul, FloatOp::Div].choose(self.rng).unwrap();
        let (l, r) = (self.float(), self.float());
        FloatExpr::Bin(op, Box::new(l), Box::new(r))
    }
}

pub fn random_straight_line(rng: &mut impl Rng, max_instructions: usize) -> StraightLine {
    loop {
        let params: Vec<Kind> =
            (0..rng.gen_range(0..=3)).map(|_| if rng.gen() { Kind::Int } else { Kind::Float }).collect();
        let budget = rng.gen_range(1..max_instructions);
        let via_local = rng.gen_bool(0.3);
        let expr = {
            let mut g = ExprGen { rng: &mut *rng, params: &params, budget };
            if g.rng.gen() {
                Expr::Int(g.int())
            } else {
                Expr::Float(g.float())
            }
        };
        let program = StraightLine { params, expr, via_local };
        if straight_line_asm(&program).1 <= max_instructions {
            return program;
        }
    }
}

fn local_op(prefix: char, op: &str, slot: u16) -> String {
    if slot < 4 {
        format!("{prefix}{op}_{slot}")
    } else {
        format!("{prefix}{op} {slot}")
    }
}

fn emit_int(e: &IntExpr, out: &mut Vec<String>) {
    match e {
        IntExpr::Param(p) => out.push(local_op('i', "load", *p)),
        IntExpr::Const(c) => out.push(match *c {
            -1 => "iconst_m1".to_owned(),
            0..=5 => format!("iconst_{c}"),
            -128..=127 => format!("bipush {c}"),
            _ => format!("ldc_int {c}"),
        }),
        IntExpr::Bin(op, l, r) => {
            emit_int(l, out);
            emit_int(r, out);
            out.push(
                match op {
                    IntOp::Add => "iadd",
                    IntOp::Sub => "isub",
                    IntOp::Mul => "imul",
                    IntOp::Div => "idiv",
                    IntOp::Rem => "irem",
                }
                .to_owned(),
            );
        }
        IntExpr::Neg(e) => {
            emit_int(e, out);
            out.push("ineg".to_owned());
        }
        IntExpr::Cmp(g, l, r) => {
            emit_float(l, out);
            emit_float(r, out);
            out.push(if *g { "fcmpg" } else { "fcmpl" }.to_owned());
        }
    }
}

fn emit_float(e: &FloatExpr, out: &mut Vec<String>) {
    match e {
        FloatExpr::Param(p) => out.push(local_op('f', "load", *p)),
        FloatExpr::Const(c) => out.push(match c.to_bits() {
            0 => "fconst_0".to_owned(),
            b if b == 1f32.to_bits() => "fconst_1".to_owned(),
            b if b == 2f32.to_bits() => "fconst_2".to_owned(),
            _ => format!("ldc_float {}", format_f32(*c)),
        }),
        FloatExpr::Bin(op, l, r) => {
            emit_float(l, out);
            emit_float(r, out);
            out.push(
                match op {
                    FloatOp::Add => "fadd",
                    FloatOp::Sub => "fsub",
                    FloatOp::Mul => "fmul",
                    FloatOp::Div => "fdiv",
                }
                .to_owned(),
            );
        }
        FloatExpr::Neg(e) => {
            emit_float(e, out);
            out.push("fneg".to_owned());
        }
    }
}

/// Assembly text and its instruction count.
pub fn straight_line_asm(p: &StraightLine) -> (String, usize) {
    let mut body = Vec::new();
    let prefix = match &p.expr {
        Expr::Int(e) => {
            emit_int(e, &mut body);
            'i'
        }
        Expr::Float(e) => {
            emit_float(e, &mut body);
            'f'
        }
    };
    let spare = p.params.len() as u16;
    if p.via_local {
        body.push(local_op(prefix, "store", spare));
        body.push(local_op(prefix, "load", spare));
    }
    body.push(format!("{prefix}return"));
    let descriptor: String = p.params.iter().map(|k| k.descriptor()).collect();
    let mut text = format!(".method gen ({descriptor}) {}\n.maxlocals {}\n", p.returns().descriptor(), spare + 1);
    for line in &body {
        writeln!(text, "    {line}").unwrap();
    }
    (text, body.len())
}

fn eval_int(e: &IntExpr, inputs: &[Value]) -> Result<i32, ()> {
    Ok(match e {
        IntExpr::Param(p) => inputs[*p as usize].as_int().unwrap(),
        IntExpr::Const(c) => *c,
        IntExpr::Neg(e) => eval_int(e, inputs)?.wrapping_neg(),
        IntExpr::Bin(op, l, r) => {
            let (a, b) = (eval_int(l, inputs)?, eval_int(r, inputs)?);
            match op {
                IntOp::Add => a.wrapping_add(b),
                IntOp::Sub => a.wrapping_sub(b),
                IntOp::Mul => a.wrapping_mul(b),
                IntOp::Div if b == 0 => return Err(()),
                IntOp::Rem if b == 0 => return Err(()),
                IntOp::Div => a.wrapping_div(b),
                IntOp::Rem => a.wrapping_rem(b),
            }
        }
        IntExpr::Cmp(g, l, r) => {
            let (a, b) = (eval_float(l, inputs)?, eval_float(r, inputs)?);
            if a.is_nan() || b.is_nan() {
                if *g {
                    1
                } else {
                    -1
                }
            } else if a > b {
                1
            } else if a < b {
                -1
            } else {
                0
            }
        }
    })
}

fn eval_float(e: &FloatExpr, inputs: &[Value]) -> Result<f32, ()> {
    Ok(match e {
        FloatExpr::Param(p) => inputs[*p as usize].as_float().unwrap(),
        FloatExpr::Const(c) => *c,
        FloatExpr::Neg(e) => -eval_float(e, inputs)?,
        FloatExpr::Bin(op, l, r) => {
            let (a, b) = (eval_float(l, inputs)?, eval_float(r, inputs)?);
            match op {
                FloatOp::Add => a + b,
                FloatOp::Sub => a - b,
                FloatOp::Mul => a * b,
                FloatOp::Div => a / b,
            }
        }
    })
}

/// Tree-walking reference semantics.
pub fn evaluate(p: &StraightLine, inputs: &[Value]) -> Eval {
    let result = match &p.expr {
        Expr::Int(e) => eval_int(e, inputs).map(Value::Int),
        Expr::Float(e) => eval_float(e, inputs).map(Value::Float),
    };
    result.map_or(Eval::DivideByZero, Eval::Value)
}

pub fn random_inputs(rng: &mut impl Rng, params: &[Kind]) -> Vec<Value> {
    params
        .iter()
        .map(|k| match k {
            Kind::Int => Value::Int(random_int(rng)),
            Kind::Float => Value::Float(random_float(rng)),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Branching int methods

#[derive(Clone, Debug)]
enum Operand {
    Local(u16),
    Const(i32),
}

#[derive(Clone, Debug)]
enum Term {
    Leaf(Operand),
    Bin(&'static str, Operand, Operand),
    Neg(Operand),
}

#[derive(Clone, Debug)]
enum Stmt {
    Assign(u16, Term),
    If { cond: &'static str, a: Operand, b: Option<Operand>, then: Vec<Stmt>, otherwise: Vec<Stmt> },
    Return(Term),
}

/// A random int method with at most `max_ifs` conditionals over at most
/// `max_locals` locals. Every non-parameter local is written before use.
pub struct Branching {
    pub params: usize,
    pub locals: u16,
    pub text: String,
}

struct BranchGen<'a, R> {
    rng: &'a mut R,
    locals: u16,
    ifs_left: usize,
}

impl<R: Rng> BranchGen<'_, R> {
    fn operand(&mut self) -> Operand {
        if self.rng.gen_bool(0.8) {
            Operand::Local(self.rng.gen_range(0..self.locals))
        } else {
            Operand::Const(self.rng.gen_range(-3..10))
        }
    }

    fn term(&mut self) -> Term {
        match self.rng.gen_range(0..6) {
            0 => Term::Leaf(self.operand()),
            1 => Term::Neg(self.operand()),
            _ => Term::Bin(*["iadd", "isub", "imul"].choose(self.rng).unwrap(), self.operand(), self.operand()),
        }
    }

    fn block(&mut self, len: usize, may_return: bool) -> Vec<Stmt> {
        let mut out = Vec::new();
        for _ in 0..len {
            if self.ifs_left > 0 && self.rng.gen_bool(0.4) {
                self.ifs_left -= 1;
                let two = self.rng.gen();
                let cond = if two {
                    *["if_icmpeq", "if_icmpne", "if_icmplt", "if_icmpge", "if_icmpgt", "if_icmple"].choose(self.rng).unwrap()
                } else {
                    *["ifeq", "ifne", "iflt", "ifge", "ifgt", "ifle"].choose(self.rng).unwrap()
                };
                let a = Operand::Local(self.rng.gen_range(0..self.locals));
                let b = two.then(|| self.operand());
                let then_len = self.rng.gen_range(0..3);
                let then = self.block(then_len, true);
                let else_len = self.rng.gen_range(0..3);
                let otherwise = self.block(else_len, false);
                out.push(Stmt::If { cond, a, b, then, otherwise });
            } else {
                let dst = self.rng.gen_range(0..self.locals);
                let term = self.term();
                out.push(Stmt::Assign(dst, term));
            }
        }
        if may_return && self.rng.gen_bool(0.5) {
            let term = self.term();
            out.push(Stmt::Return(term));
        }
        out
    }
}

fn slot_op(op: &str, slot: u16) -> String {
    local_op('i', op, slot)
}

fn push_operand(o: &Operand, out: &mut Vec<String>) {
    match o {
        Operand::Local(i) => out.push(slot_op("load", *i)),
        Operand::Const(-1) => out.push("iconst_m1".into()),
        Operand::Const(c @ 0..=5) => out.push(format!("iconst_{c}")),
        Operand::Const(c) => out.push(format!("bipush {c}")),
    }
}

fn push_term(t: &Term, out: &mut Vec<String>) {
    match t {
        Term::Leaf(o) => push_operand(o, out),
        Term::Neg(o) => {
            push_operand(o, out);
            out.push("ineg".into());
        }
        Term::Bin(op, a, b) => {
            push_operand(a, out);
            push_operand(b, out);
            out.push((*op).into());
        }
    }
}

fn negate(cond: &str) -> String {
    let (stem, rel) = cond.split_at(cond.len() - 2);
    let flipped = match rel {
        "eq" => "ne",
        "ne" => "eq",
        "lt" => "ge",
        "ge" => "lt",
        "gt" => "le",
        "le" => "gt",
        _ => unreachable!(),
    };
    format!("{stem}{flipped}")
}

fn emit_block(stmts: &[Stmt], labels: &mut usize, out: &mut Vec<String>) {
    for s in stmts {
        match s {
            Stmt::Assign(dst, t) => {
                push_term(t, out);
                out.push(slot_op("store", *dst));
            }
            Stmt::Return(t) => {
                push_term(t, out);
                out.push("ireturn".into());
            }
            Stmt::If { cond, a, b, then, otherwise } => {
                *labels += 1;
                let n = *labels;
                push_operand(a, out);
                if let Some(b) = b {
                    push_operand(b, out);
                }
                out.push(format!("{} ELSE{n}", negate(cond)));
                emit_block(then, labels, out);
                if !matches!(then.last(), Some(Stmt::Return(_))) {
                    out.push(format!("goto END{n}"));
                }
                out.push(format!("ELSE{n}:"));
                emit_block(otherwise, labels, out);
                out.push(format!("END{n}:"));
            }
        }
    }
}

pub fn random_branching(rng: &mut impl Rng, max_ifs: usize, max_locals: u16) -> Branching {
    let params = rng.gen_range(1..=max_locals.min(3)) as usize;
    let locals = rng.gen_range(params as u16..=max_locals);
    let (stmts, tail) = {
        let mut g = BranchGen { rng: &mut *rng, locals, ifs_left: max_ifs };
        let len = g.rng.gen_range(2..6);
        let stmts = g.block(len, false);
        (stmts, g.term())
    };
    let mut body = Vec::new();
    for slot in params as u16..locals {
        body.push(format!("bipush {}", slot as i32 * 3 - 2));
        body.push(slot_op("store", slot));
    }
    emit_block(&stmts, &mut 0, &mut body);
    push_term(&tail, &mut body);
    body.push("ireturn".into());
    let mut text = format!(".method branchy ({}) I\n.maxlocals {locals}\n", "I".repeat(params));
    for line in body {
        if line.ends_with(':') {
            writeln!(text, "{line}").unwrap();
        } else {
            writeln!(text, "    {line}").unwrap();
        }
    }
    Branching { params, locals, text }
}
