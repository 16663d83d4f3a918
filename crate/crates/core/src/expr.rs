//! Expression language for coefficients, right-hand sides, and region predicates.
//!
//! Grammar (loosest to tightest): `||`, `&&`, comparisons, `+ -`, `* /`,
//! unary `- !`, `^` with an integer exponent.  Variables are `t` and `x`;
//! functions are `sin cos exp log atan sqrt abs sgn` (`log` is natural).
//! Evaluation follows IEEE semantics: division by zero and `log` of a
//! non-positive number yield non-finite values instead of an error, so a
//! caller checks `is_finite` where it matters.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Atan,
    Sqrt,
    Abs,
    Sgn,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Atan => "atan",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sgn => "sgn",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Atan => v.atan(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            // signum(0.0) is 1.0 in IEEE terms; the mathematical sign is wanted here.
            Func::Sgn => {
                if v == 0.0 {
                    0.0
                } else {
                    v.signum()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

/// Parsed expression tree.  `Pow` keeps its exponent as an integer so that
/// printing and evaluation (`powi`) are exact.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    T,
    X,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Fun(Func, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

// Builder helpers; generators assemble coefficient trees with these.
impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }
    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }
    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }
    pub fn pow(a: Expr, k: i32) -> Expr {
        Expr::Pow(Box::new(a), k)
    }
    pub fn fun(f: Func, a: Expr) -> Expr {
        Expr::Fun(f, Box::new(a))
    }

    /// Sum of `terms`, or `0` when empty.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut it = terms.into_iter();
        match it.next() {
            None => Expr::Num(0.0),
            Some(first) => it.fold(first, Expr::add),
        }
    }

    /// IEEE evaluation at `(t, x)`.  Boolean subtrees yield `1.0`/`0.0`.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::T => t,
            Expr::X => x,
            Expr::Add(a, b) => a.eval(t, x) + b.eval(t, x),
            Expr::Sub(a, b) => a.eval(t, x) - b.eval(t, x),
            Expr::Mul(a, b) => a.eval(t, x) * b.eval(t, x),
            Expr::Div(a, b) => a.eval(t, x) / b.eval(t, x),
            Expr::Neg(a) => -a.eval(t, x),
            Expr::Pow(a, k) => a.eval(t, x).powi(*k),
            Expr::Fun(f, a) => f.apply(a.eval(t, x)),
            Expr::Cmp(op, a, b) => bool_to_f64(op.apply(a.eval(t, x), b.eval(t, x))),
            Expr::And(a, b) => bool_to_f64(a.eval_bool(t, x) && b.eval_bool(t, x)),
            Expr::Or(a, b) => bool_to_f64(a.eval_bool(t, x) || b.eval_bool(t, x)),
            Expr::Not(a) => bool_to_f64(!a.eval_bool(t, x)),
        }
    }

    /// Predicate evaluation: nonzero is true, NaN is false.
    pub fn eval_bool(&self, t: f64, x: f64) -> bool {
        let v = self.eval(t, x);
        v != 0.0 && !v.is_nan()
    }

    /// Flatten into a stack program for tight evaluation loops.
    pub fn compile(&self) -> CompiledExpr {
        let mut prog = Vec::new();
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        flatten(self, &mut prog, &mut depth, &mut max_depth);
        CompiledExpr { prog, max_depth }
    }
}

fn bool_to_f64(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
enum Instr {
    Num(f64),
    T,
    X,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow(i32),
    Fun(Func),
    Cmp(CmpOp),
    And,
    Or,
    Not,
}

/// Postfix program equivalent to an [`Expr`]; roughly 5x faster to evaluate
/// than walking the boxed tree, which matters inside RK stage loops.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    prog: Vec<Instr>,
    max_depth: usize,
}

fn flatten(e: &Expr, prog: &mut Vec<Instr>, depth: &mut usize, max_depth: &mut usize) {
    let push = |prog: &mut Vec<Instr>, depth: &mut usize, max_depth: &mut usize, i: Instr| {
        match i {
            Instr::Num(_) | Instr::T | Instr::X => *depth += 1,
            Instr::Add
            | Instr::Sub
            | Instr::Mul
            | Instr::Div
            | Instr::Cmp(_)
            | Instr::And
            | Instr::Or => *depth -= 1,
            _ => {}
        }
        *max_depth = (*max_depth).max(*depth);
        prog.push(i);
    };
    match e {
        Expr::Num(v) => push(prog, depth, max_depth, Instr::Num(*v)),
        Expr::T => push(prog, depth, max_depth, Instr::T),
        Expr::X => push(prog, depth, max_depth, Instr::X),
        Expr::Add(a, b) => {
            flatten(a, prog, depth, max_depth);
            flatten(b, prog, depth, max_depth);
            push(prog, depth, max_depth, Instr::Add);
        }
        Expr::Sub(a, b) => {
            flatten(a, prog, depth, max_depth);
            flatten(b, prog, depth, max_depth);
            push(prog, depth, max_depth, Instr::Sub);
        }
        Expr::Mul(a, b) => {
            flatten(a, prog, depth, max_depth);
            flatten(b, prog, depth, max_depth);
            push(prog, depth, max_depth, Instr::Mul);
        }
        Expr::Div(a, b) => {
            flatten(a, prog, depth, max_depth);
            flatten(b, prog, depth, max_depth);
            push(prog, depth, max_depth, Instr::Div);
        }
        Expr::Neg(a) => {
            flatten(a, prog, depth, max_depth);
            push(prog, depth, max_depth, Instr::Neg);
        }
        Expr::Pow(a, k) => {
            flatten(a, prog, depth, max_depth);
            push(prog, depth, max_depth, Instr::Pow(*k));
        }
        Expr::Fun(f, a) => {
            flatten(a, prog, depth, max_depth);
            push(prog, depth, max_depth, Instr::Fun(*f));
        }
        Expr::Cmp(op, a, b) => {
            flatten(a, prog, depth, max_depth);
            flatten(b, prog, depth, max_depth);
            push(prog, depth, max_depth, Instr::Cmp(*op));
        }
        Expr::And(a, b) => {
            flatten(a, prog, depth, max_depth);
            flatten(b, prog, depth, max_depth);
            push(prog, depth, max_depth, Instr::And);
        }
        Expr::Or(a, b) => {
            flatten(a, prog, depth, max_depth);
            flatten(b, prog, depth, max_depth);
            push(prog, depth, max_depth, Instr::Or);
        }
        Expr::Not(a) => {
            flatten(a, prog, depth, max_depth);
            push(prog, depth, max_depth, Instr::Not);
        }
    }
}

impl CompiledExpr {
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let mut stack = [0.0f64; 32];
        if self.max_depth <= 32 {
            self.eval_on(&mut stack, t, x)
        } else {
            let mut stack = vec![0.0; self.max_depth];
            self.eval_on(&mut stack, t, x)
        }
    }

    fn eval_on(&self, stack: &mut [f64], t: f64, x: f64) -> f64 {
        let mut sp = 0usize;
        for instr in &self.prog {
            match instr {
                Instr::Num(v) => {
                    stack[sp] = *v;
                    sp += 1;
                }
                Instr::T => {
                    stack[sp] = t;
                    sp += 1;
                }
                Instr::X => {
                    stack[sp] = x;
                    sp += 1;
                }
                Instr::Add => {
                    sp -= 1;
                    stack[sp - 1] += stack[sp];
                }
                Instr::Sub => {
                    sp -= 1;
                    stack[sp - 1] -= stack[sp];
                }
                Instr::Mul => {
                    sp -= 1;
                    stack[sp - 1] *= stack[sp];
                }
                Instr::Div => {
                    sp -= 1;
                    stack[sp - 1] /= stack[sp];
                }
                Instr::Neg => stack[sp - 1] = -stack[sp - 1],
                Instr::Pow(k) => stack[sp - 1] = stack[sp - 1].powi(*k),
                Instr::Fun(f) => stack[sp - 1] = f.apply(stack[sp - 1]),
                Instr::Cmp(op) => {
                    sp -= 1;
                    stack[sp - 1] = bool_to_f64(op.apply(stack[sp - 1], stack[sp]));
                }
                Instr::And => {
                    sp -= 1;
                    stack[sp - 1] = bool_to_f64(truthy(stack[sp - 1]) && truthy(stack[sp]));
                }
                Instr::Or => {
                    sp -= 1;
                    stack[sp - 1] = bool_to_f64(truthy(stack[sp - 1]) || truthy(stack[sp]));
                }
                Instr::Not => stack[sp - 1] = bool_to_f64(!truthy(stack[sp - 1])),
            }
        }
        stack[sp - 1]
    }
}

fn truthy(v: f64) -> bool {
    v != 0.0 && !v.is_nan()
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

// Precedence levels for parenthesis-minimal printing.
const P_OR: u8 = 1;
const P_AND: u8 = 2;
const P_CMP: u8 = 3;
const P_SUM: u8 = 4;
const P_TERM: u8 = 5;
const P_UNARY: u8 = 6;
const P_POW: u8 = 7;
const P_ATOM: u8 = 8;

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Or(..) => P_OR,
            Expr::And(..) => P_AND,
            Expr::Cmp(..) => P_CMP,
            Expr::Add(..) | Expr::Sub(..) => P_SUM,
            Expr::Mul(..) | Expr::Div(..) => P_TERM,
            Expr::Neg(..) | Expr::Not(..) => P_UNARY,
            Expr::Pow(..) => P_POW,
            Expr::Num(v) if *v < 0.0 => P_UNARY,
            _ => P_ATOM,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.prec();
        if prec < min_prec {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(v) => write!(f, "{}", v)?,
            Expr::T => write!(f, "t")?,
            Expr::X => write!(f, "x")?,
            Expr::Add(a, b) => {
                a.write(f, P_SUM)?;
                write!(f, " + ")?;
                b.write(f, P_SUM + 1)?;
            }
            Expr::Sub(a, b) => {
                a.write(f, P_SUM)?;
                write!(f, " - ")?;
                b.write(f, P_SUM + 1)?;
            }
            Expr::Mul(a, b) => {
                a.write(f, P_TERM)?;
                write!(f, "*")?;
                b.write(f, P_TERM + 1)?;
            }
            Expr::Div(a, b) => {
                a.write(f, P_TERM)?;
                write!(f, "/")?;
                b.write(f, P_TERM + 1)?;
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write(f, P_UNARY)?;
            }
            Expr::Not(a) => {
                write!(f, "!")?;
                a.write(f, P_UNARY)?;
            }
            Expr::Pow(a, k) => {
                a.write(f, P_ATOM)?;
                write!(f, "^{}", k)?;
            }
            Expr::Fun(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(f, 0)?;
                write!(f, ")")?;
            }
            Expr::Cmp(op, a, b) => {
                a.write(f, P_SUM)?;
                write!(f, " {} ", op.symbol())?;
                b.write(f, P_SUM)?;
            }
            Expr::And(a, b) => {
                a.write(f, P_AND)?;
                write!(f, " && ")?;
                b.write(f, P_AND + 1)?;
            }
            Expr::Or(a, b) => {
                a.write(f, P_OR)?;
                write!(f, " || ")?;
                b.write(f, P_OR + 1)?;
            }
        }
        if prec < min_prec {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

// Expressions serialize as their canonical source string, which keeps the
// JSON file formats human-editable and round-trip exact.
impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error, PartialEq)]
#[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    /// 0-based byte offset into the source string.
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Sym(&'a str),
    End,
}

impl fmt::Display for Tok<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number `{}`", v),
            Tok::Ident(s) => write!(f, "`{}`", s),
            Tok::Sym(s) => write!(f, "`{}`", s),
            Tok::End => write!(f, "end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0 }
    }

    fn skip_ws(&mut self) {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token plus its starting byte offset; does not advance on error.
    fn next(&mut self) -> Result<(Tok<'a>, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        if start >= bytes.len() {
            return Ok((Tok::End, start));
        }
        let c = bytes[start];
        if c.is_ascii_digit() || (c == b'.' && bytes.get(start + 1).is_some_and(u8::is_ascii_digit))
        {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut e = end + 1;
                if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                    e += 1;
                }
                if e < bytes.len() && bytes[e].is_ascii_digit() {
                    end = e;
                    while end < bytes.len() && bytes[end].is_ascii_digit() {
                        end += 1;
                    }
                }
            }
            let text = &self.src[start..end];
            let value: f64 = text.parse().map_err(|_| ParseError {
                offset: start,
                expected: vec!["number".into()],
                found: format!("`{}`", text),
            })?;
            self.pos = end;
            return Ok((Tok::Num(value), start));
        }
        if c.is_ascii_alphabetic() {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(&self.src[start..end]), start));
        }
        for sym in ["<=", ">=", "==", "!=", "&&", "||"] {
            if self.src[start..].starts_with(sym) {
                self.pos = start + 2;
                return Ok((Tok::Sym(sym), start));
            }
        }
        if b"+-*/^()<>!".contains(&c) {
            self.pos = start + 1;
            return Ok((Tok::Sym(&self.src[start..start + 1]), start));
        }
        Err(ParseError {
            offset: start,
            expected: vec!["expression".into()],
            found: format!("`{}`", &self.src[start..start + 1]),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok<'a>,
    offset: usize,
}

/// Parse a source string into an [`Expr`].
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut lexer = Lexer::new(src);
    let (tok, offset) = lexer.next()?;
    let mut p = Parser { lexer, tok, offset };
    let e = p.or_expr()?;
    if p.tok != Tok::End {
        return Err(p.error(&["end of input", "operator"]));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, offset) = self.lexer.next()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            offset: self.offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.tok.to_string(),
        }
    }

    fn eat_sym(&mut self, sym: &str) -> Result<bool, ParseError> {
        if self.tok == Tok::Sym(sym) {
            self.advance()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.and_expr()?;
        while self.eat_sym("||")? {
            e = Expr::Or(Box::new(e), Box::new(self.and_expr()?));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.cmp_expr()?;
        while self.eat_sym("&&")? {
            e = Expr::And(Box::new(e), Box::new(self.cmp_expr()?));
        }
        Ok(e)
    }

    // A single, non-chaining comparison: `a < b < c` is a syntax error.
    fn cmp_expr(&mut self) -> Result<Expr, ParseError> {
        let e = self.sum()?;
        let op = match self.tok {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            _ => return Ok(e),
        };
        self.advance()?;
        let rhs = self.sum()?;
        Ok(Expr::Cmp(op, Box::new(e), Box::new(rhs)))
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.term()?;
        loop {
            if self.eat_sym("+")? {
                e = Expr::Add(Box::new(e), Box::new(self.term()?));
            } else if self.eat_sym("-")? {
                e = Expr::Sub(Box::new(e), Box::new(self.term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.unary()?;
        loop {
            if self.eat_sym("*")? {
                e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
            } else if self.eat_sym("/")? {
                e = Expr::Div(Box::new(e), Box::new(self.unary()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym("-")? {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else if self.eat_sym("!")? {
            Ok(Expr::Not(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        while self.eat_sym("^")? {
            let negative = self.eat_sym("-")?;
            let k = match self.tok {
                Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => v as i32,
                _ => return Err(self.error(&["integer exponent"])),
            };
            self.advance()?;
            e = Expr::Pow(Box::new(e), if negative { -k } else { k });
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.tok {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Num(v))
            }
            Tok::Ident("t") => {
                self.advance()?;
                Ok(Expr::T)
            }
            Tok::Ident("x") => {
                self.advance()?;
                Ok(Expr::X)
            }
            Tok::Ident(name) => {
                let func = match name {
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "log" => Func::Log,
                    "atan" => Func::Atan,
                    "sqrt" => Func::Sqrt,
                    "abs" => Func::Abs,
                    "sgn" => Func::Sgn,
                    _ => return Err(self.error(&["variable `t` or `x`", "function name"])),
                };
                self.advance()?;
                if !self.eat_sym("(")? {
                    return Err(self.error(&["`(`"]));
                }
                let arg = self.or_expr()?;
                if !self.eat_sym(")")? {
                    return Err(self.error(&["`)`"]));
                }
                Ok(Expr::Fun(func, Box::new(arg)))
            }
            Tok::Sym("(") => {
                self.advance()?;
                let e = self.or_expr()?;
                if !self.eat_sym(")")? {
                    return Err(self.error(&["`)`"]));
                }
                Ok(e)
            }
            _ => Err(self.error(&["number", "variable", "function", "`(`"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ev(src: &str, t: f64, x: f64) -> f64 {
        parse(src).unwrap().eval(t, x)
    }

    #[test]
    fn closed_form_values() {
        assert!((ev("atan(x/t)/t", 1.0, 1.0) - PI / 4.0).abs() < 1e-15);
        assert!((ev("exp(atan(x/t)/t)", 1.0, 1.0) - (PI / 4.0).exp()).abs() < 1e-12);
        assert_eq!(ev("x^2 + t^2", 3.0, 4.0), 25.0);
        assert_eq!(ev("sgn(x)", 0.0, -2.5), -1.0);
        assert_eq!(ev("sgn(x)", 0.0, 0.0), 0.0);
    }

    #[test]
    fn division_by_zero_is_flagged_not_fatal() {
        let v = ev("1/(x^2+t^2)", 0.0, 0.0);
        assert!(!v.is_finite());
    }

    #[test]
    fn log_of_nonpositive_is_flagged() {
        assert!(ev("log(x)", 0.0, 0.0).is_infinite());
        assert!(ev("log(x)", 0.0, -1.0).is_nan());
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("-x^2").unwrap(), Expr::neg(Expr::pow(Expr::X, 2)));
        assert_eq!(
            parse("1 + 2*x").unwrap(),
            Expr::add(Expr::num(1.0), Expr::mul(Expr::num(2.0), Expr::X))
        );
        // `^` binds tighter than unary minus, which binds tighter than `*`.
        assert_eq!(ev("-2^2", 0.0, 0.0), -4.0);
        assert_eq!(ev("2*x^2", 0.0, 3.0), 18.0);
        assert_eq!(ev("x^-2", 0.0, 2.0), 0.25);
    }

    #[test]
    fn predicates() {
        let p = parse("x^2 + t^2 < 1 && x > 0").unwrap();
        assert!(p.eval_bool(0.1, 0.5));
        assert!(!p.eval_bool(0.1, -0.5));
        assert!(!p.eval_bool(2.0, 0.5));
        assert!(parse("!(x < 0) || t == 1").unwrap().eval_bool(0.0, 3.0));
    }

    #[test]
    fn unknown_identifier_is_rejected_at_its_offset() {
        let err = parse("u/(x^2+t^2").unwrap_err();
        assert_eq!(err.offset, 0);
    }

    #[test]
    fn unbalanced_paren_reports_end_of_input() {
        let err = parse("1/(x^2+t^2").unwrap_err();
        assert_eq!(err.offset, 10, "error should sit at end of input");
        assert!(err.expected.iter().any(|e| e.contains(')')));
    }

    #[test]
    fn chained_comparison_is_rejected() {
        assert!(parse("1 < x < 2").is_err());
    }

    #[test]
    fn fractional_exponent_is_rejected() {
        assert!(parse("x^2.5").is_err());
        assert!(parse("x^t").is_err());
    }

    #[test]
    fn printer_canonicalizes_negative_literals() {
        let e = Expr::mul(Expr::num(-0.25), Expr::X);
        let printed = e.to_string();
        let reparsed = parse(&printed).unwrap();
        assert_eq!(reparsed.eval(0.0, 2.0), -0.5);
    }

    #[test]
    fn compiled_matches_tree_walk() {
        let srcs = [
            "exp(atan(x/t)/t)",
            "t + sin(x)",
            "1/(x^2 + t^2)",
            "-(x - 1)^3/(2*t) + sqrt(abs(x))",
            "(x > 0 && t < 1) || x == 2",
        ];
        for src in srcs {
            let e = parse(src).unwrap();
            let c = e.compile();
            for &(t, x) in &[(0.3, 0.7), (1.0, -1.0), (-0.5, 2.0), (2.0, 0.0)] {
                let a = e.eval(t, x);
                let b = c.eval(t, x);
                assert!(
                    (a == b) || (a.is_nan() && b.is_nan()),
                    "{src} at ({t},{x}): {a} vs {b}"
                );
            }
        }
    }

    // Strategy for arbitrary numeric expression trees (no comparisons; those
    // are covered separately since they only appear in predicates).
    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0..100.0f64).prop_map(Expr::Num),
            Just(Expr::T),
            Just(Expr::X),
        ];
        leaf.prop_recursive(4, 64, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
                inner.clone().prop_map(Expr::neg),
                (inner.clone(), -3..4i32).prop_map(|(a, k)| Expr::pow(a, k)),
                (
                    prop_oneof![
                        Just(Func::Sin),
                        Just(Func::Cos),
                        Just(Func::Exp),
                        Just(Func::Log),
                        Just(Func::Atan),
                        Just(Func::Sqrt),
                        Just(Func::Abs),
                        Just(Func::Sgn)
                    ],
                    inner
                )
                    .prop_map(|(f, a)| Expr::fun(f, a)),
            ]
        })
    }

    proptest! {
        // Printing then reparsing is the identity on ASTs (all generated
        // literals are non-negative, so the printed form is canonical).
        #[test]
        fn print_parse_roundtrip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse(&printed).unwrap();
            prop_assert_eq!(reparsed, e);
        }

        // Evaluation never panics and always yields an f64; non-finite
        // results are allowed and detectable.
        #[test]
        fn eval_total(e in arb_expr(), t in -10.0..10.0f64, x in -10.0..10.0f64) {
            let v = e.eval(t, x);
            prop_assert!(v.is_finite() || v.is_nan() || v.is_infinite());
        }
    }
}
