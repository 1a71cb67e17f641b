//! Arithmetic expressions used in structural assignments.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! cmp   := xor (( ">=" | ">" | "=" | "==" | "<=" | "<" ) xor)*
//! xor   := sum (( "xor" | "⊕" ) sum)*
//! sum   := prod (( "+" | "-" ) prod)*
//! prod  := unary ("*" unary)*
//! unary := "-" unary | atom
//! atom  := number | name | "(" cmp ")" | ("ind" | "indicator") "(" cmp ")"
//! ```
//!
//! Comparisons and indicators evaluate to 0 or 1. `xor` acts bitwise on
//! integer operands.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Xor,
    Ge,
    Gt,
    Eq,
    Le,
    Lt,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Ge | BinOp::Gt | BinOp::Eq | BinOp::Le | BinOp::Lt => 1,
            BinOp::Xor => 2,
            BinOp::Add | BinOp::Sub => 3,
            BinOp::Mul => 4,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Xor => "xor",
            BinOp::Ge => ">=",
            BinOp::Gt => ">",
            BinOp::Eq => "==",
            BinOp::Le => "<=",
            BinOp::Lt => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Indicator(Box<Expr>),
}

const UNARY: u8 = 5;
const ATOM: u8 = 6;
const EQ_SLACK: f64 = 1e-9;

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// Parse a single expression; errors carry line 1 and the column.
    pub fn parse(text: &str) -> Result<Expr> {
        parse_at(text, 1, 1)
    }

    /// Names referenced anywhere in the expression.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v);
            }
            Expr::Neg(e) | Expr::Indicator(e) => e.collect(out),
            Expr::Bin(_, a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    /// Replace every reference to `from` by a reference to `to`.
    pub fn rename(&self, from: &str, to: &str) -> Expr {
        match self {
            Expr::Var(v) if v == from => Expr::var(to),
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.rename(from, to))),
            Expr::Indicator(e) => Expr::Indicator(Box::new(e.rename(from, to))),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.rename(from, to), b.rename(from, to)),
        }
    }

    /// Evaluate with a name lookup. Intended for one-off use; enumeration
    /// compiles expressions to slot indices instead.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> std::result::Result<f64, String> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(v) => lookup(v).ok_or_else(|| format!("unbound variable `{v}`")),
            Expr::Neg(e) => Ok(-e.eval(lookup)?),
            Expr::Indicator(e) => Ok(truth(e.eval(lookup)? != 0.0)),
            Expr::Bin(op, a, b) => apply(*op, a.eval(lookup)?, b.eval(lookup)?),
        }
    }

    pub(crate) fn compile(&self, slot: &dyn Fn(&str) -> Option<usize>) -> std::result::Result<Code, String> {
        Ok(match self {
            Expr::Const(c) => Code::Const(*c),
            Expr::Var(v) => Code::Slot(slot(v).ok_or_else(|| format!("unbound variable `{v}`"))?),
            Expr::Neg(e) => Code::Neg(Box::new(e.compile(slot)?)),
            Expr::Indicator(e) => Code::Indicator(Box::new(e.compile(slot)?)),
            Expr::Bin(op, a, b) => Code::Bin(*op, Box::new(a.compile(slot)?), Box::new(b.compile(slot)?)),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, _, _) => op.precedence(),
            Expr::Neg(_) => UNARY,
            Expr::Const(c) if *c < 0.0 => UNARY,
            _ => ATOM,
        }
    }
}

fn truth(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn integer(x: f64) -> std::result::Result<i64, String> {
    let r = x.round();
    if (x - r).abs() > EQ_SLACK || !r.is_finite() {
        return Err(format!("xor needs integer operands, got {x}"));
    }
    Ok(r as i64)
}

fn apply(op: BinOp, a: f64, b: f64) -> std::result::Result<f64, String> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Xor => (integer(a)? ^ integer(b)?) as f64,
        BinOp::Ge => truth(a >= b - EQ_SLACK),
        BinOp::Gt => truth(a > b + EQ_SLACK),
        BinOp::Eq => truth((a - b).abs() <= EQ_SLACK),
        BinOp::Le => truth(a <= b + EQ_SLACK),
        BinOp::Lt => truth(a < b - EQ_SLACK),
    })
}

/// An expression with variables resolved to slots of a value buffer.
#[derive(Debug, Clone)]
pub(crate) enum Code {
    Const(f64),
    Slot(usize),
    Neg(Box<Code>),
    Bin(BinOp, Box<Code>, Box<Code>),
    Indicator(Box<Code>),
}

impl Code {
    pub(crate) fn eval(&self, slots: &[f64]) -> std::result::Result<f64, String> {
        match self {
            Code::Const(c) => Ok(*c),
            Code::Slot(i) => Ok(slots[*i]),
            Code::Neg(e) => Ok(-e.eval(slots)?),
            Code::Indicator(e) => Ok(truth(e.eval(slots)? != 0.0)),
            Code::Bin(op, a, b) => apply(*op, a.eval(slots)?, b.eval(slots)?),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "-{}", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Indicator(e) => write!(f, "ind({e})"),
            Expr::Neg(e) => {
                if e.precedence() < ATOM {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                if a.precedence() < p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if b.precedence() <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(BinOp),
    Minus,
    Plus,
    LParen,
    RParen,
    End,
}

struct Lexer {
    chars: Vec<(usize, char)>,
    pos: usize,
}

/// Parse `text` as an expression whose first character sits at `column` of
/// `line` in some enclosing file.
pub(crate) fn parse_at(text: &str, line: usize, column: usize) -> Result<Expr> {
    let mut p = Parser::new(text, line, column)?;
    let e = p.cmp()?;
    if p.peek() != &Tok::End {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

impl Lexer {
    fn tokens(src: &str) -> std::result::Result<Vec<(usize, Tok)>, (usize, String)> {
        let mut lx = Lexer {
            chars: src.chars().enumerate().collect(),
            pos: 0,
        };
        let mut out = Vec::new();
        loop {
            while lx.pos < lx.chars.len() && lx.chars[lx.pos].1.is_whitespace() {
                lx.pos += 1;
            }
            let start = lx.pos;
            let Some(&(_, c)) = lx.chars.get(lx.pos) else {
                out.push((start, Tok::End));
                return Ok(out);
            };
            let next = lx.chars.get(lx.pos + 1).map(|x| x.1);
            let tok = match c {
                '0'..='9' | '.' => {
                    while lx.pos < lx.chars.len() && (lx.chars[lx.pos].1.is_ascii_digit() || lx.chars[lx.pos].1 == '.') {
                        lx.pos += 1;
                    }
                    let s: String = lx.chars[start..lx.pos].iter().map(|x| x.1).collect();
                    Tok::Num(s.parse().map_err(|_| (start, format!("bad number `{s}`")))?)
                }
                c if c.is_alphabetic() || c == '_' => {
                    while lx.pos < lx.chars.len() && {
                        let c = lx.chars[lx.pos].1;
                        c.is_alphanumeric() || c == '_' || c == '\''
                    } {
                        lx.pos += 1;
                    }
                    let s: String = lx.chars[start..lx.pos].iter().map(|x| x.1).collect();
                    if s == "xor" {
                        Tok::Op(BinOp::Xor)
                    } else {
                        Tok::Ident(s)
                    }
                }
                _ => {
                    lx.pos += 1;
                    match (c, next) {
                        ('>', Some('=')) | ('<', Some('=')) | ('=', Some('=')) => {
                            lx.pos += 1;
                            Tok::Op(match c {
                                '>' => BinOp::Ge,
                                '<' => BinOp::Le,
                                _ => BinOp::Eq,
                            })
                        }
                        ('≥', _) => Tok::Op(BinOp::Ge),
                        ('≤', _) => Tok::Op(BinOp::Le),
                        ('>', _) => Tok::Op(BinOp::Gt),
                        ('<', _) => Tok::Op(BinOp::Lt),
                        ('=', _) => Tok::Op(BinOp::Eq),
                        ('⊕', _) => Tok::Op(BinOp::Xor),
                        ('*' | '×', _) => Tok::Op(BinOp::Mul),
                        ('+', _) => Tok::Plus,
                        ('-' | '−', _) => Tok::Minus,
                        ('(', _) => Tok::LParen,
                        (')', _) => Tok::RParen,
                        _ => return Err((start, format!("unexpected character `{c}`"))),
                    }
                }
            };
            out.push((start, tok));
        }
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    line: usize,
    column: usize,
}

impl Parser {
    fn new(text: &str, line: usize, column: usize) -> Result<Parser> {
        let toks = Lexer::tokens(text).map_err(|(c, message)| Error::Parse {
            line,
            column: column + c,
            message,
        })?;
        Ok(Parser {
            toks,
            at: 0,
            line,
            column,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, message: &str) -> Error {
        let what = match self.peek() {
            Tok::End => "end of expression".to_string(),
            t => format!("{t:?}"),
        };
        Error::Parse {
            line: self.line,
            column: self.column + self.toks[self.at].0,
            message: format!("{message} (found {what})"),
        }
    }

    fn cmp(&mut self) -> Result<Expr> {
        let mut lhs = self.xor()?;
        while let Tok::Op(op @ (BinOp::Ge | BinOp::Gt | BinOp::Eq | BinOp::Le | BinOp::Lt)) = *self.peek() {
            self.bump();
            lhs = Expr::bin(op, lhs, self.xor()?);
        }
        Ok(lhs)
    }

    fn xor(&mut self) -> Result<Expr> {
        let mut lhs = self.sum()?;
        while *self.peek() == Tok::Op(BinOp::Xor) {
            self.bump();
            lhs = Expr::bin(BinOp::Xor, lhs, self.sum()?);
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.prod()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::bin(op, lhs, self.prod()?);
        }
    }

    fn prod(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Op(BinOp::Mul) {
            self.bump();
            lhs = Expr::bin(BinOp::Mul, lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Const(n))
            }
            Tok::Ident(name) => {
                self.bump();
                if (name == "ind" || name == "indicator") && *self.peek() == Tok::LParen {
                    self.bump();
                    let inner = self.cmp()?;
                    self.expect_close()?;
                    return Ok(Expr::Indicator(Box::new(inner)));
                }
                Ok(Expr::Var(name))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.cmp()?;
                self.expect_close()?;
                Ok(inner)
            }
            _ => Err(self.error("expected a number, name or `(`")),
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        if *self.peek() != Tok::RParen {
            return Err(self.error("expected `)`"));
        }
        self.bump();
        Ok(())
    }
}
