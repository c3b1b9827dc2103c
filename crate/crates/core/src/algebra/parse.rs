//! Reads the text produced by `print_plan`. Whitespace and line breaks are
//! insignificant apart from error positions, so hand-written listings with
//! irregular spacing parse too.

use std::sync::Arc;

use super::{LExpr, LogicalPlan, Op, TwoStep, Var};
use crate::error::{Error, Result};
use crate::xdm::{AtomicValue, Decimal, SeqType};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(u32),
    Str(String),
    Num(String),
    Punct(char),
    Eof,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
}

fn ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, b'-' | b'_' | b'.')
}

impl<'a> Lexer<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::PlanSyntax {
            line: self.line,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<(Tok, usize)> {
        while let Some(&c) = self.src.get(self.pos) {
            if c == b'\n' {
                self.line += 1;
            } else if !c.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        let line = self.line;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::Eof, line));
        };
        let start = self.pos;
        let tok = match c {
            b'(' | b')' | b'{' | b'}' | b',' | b':' => {
                self.pos += 1;
                Tok::Punct(c as char)
            }
            b'$' => {
                if self.src.get(self.pos + 1) != Some(&b'$') {
                    return Err(self.err("expected $$ before a variable number"));
                }
                self.pos += 2;
                let digits = self.pos;
                while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[digits..self.pos]).unwrap();
                Tok::Var(text.parse().map_err(|_| self.err("bad variable number"))?)
            }
            b'"' => {
                self.pos += 1;
                let mut s = Vec::new();
                loop {
                    match self.src.get(self.pos) {
                        None => return Err(self.err("unterminated string")),
                        Some(b'"') if self.src.get(self.pos + 1) == Some(&b'"') => {
                            s.push(b'"');
                            self.pos += 2;
                        }
                        Some(b'"') => {
                            self.pos += 1;
                            break;
                        }
                        Some(&b) => {
                            if b == b'\n' {
                                self.line += 1;
                            }
                            s.push(b);
                            self.pos += 1;
                        }
                    }
                }
                Tok::Str(String::from_utf8(s).map_err(|_| self.err("string is not UTF-8"))?)
            }
            b'0'..=b'9' | b'-' if c != b'-' || self.src.get(self.pos + 1).is_some_and(u8::is_ascii_digit) => {
                self.pos += 1;
                while let Some(&d) = self.src.get(self.pos) {
                    let exp_sign = matches!(d, b'-' | b'+') && matches!(self.src[self.pos - 1], b'e' | b'E');
                    if d.is_ascii_digit() || matches!(d, b'.' | b'e' | b'E') || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                Tok::Num(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            c if ident_char(c) => {
                while self.src.get(self.pos).is_some_and(|&b| ident_char(b)) {
                    self.pos += 1;
                }
                Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            other => return Err(self.err(format!("unexpected character {:?}", other as char))),
        };
        Ok((tok, line))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    line: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self> {
        let mut lex = Lexer {
            src: text.as_bytes(),
            pos: 0,
            line: 1,
        };
        let (tok, line) = lex.next()?;
        Ok(Parser { lex, tok, line })
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::PlanSyntax {
            line: self.line,
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Result<Tok> {
        let (next, line) = self.lex.next()?;
        self.line = line;
        Ok(std::mem::replace(&mut self.tok, next))
    }

    fn punct(&mut self, c: char) -> Result<()> {
        if self.tok == Tok::Punct(c) {
            self.bump()?;
            Ok(())
        } else {
            Err(self.err(format!("expected '{}', found {:?}", c, self.tok)))
        }
    }

    fn eat(&mut self, c: char) -> Result<bool> {
        if self.tok == Tok::Punct(c) {
            self.bump()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn var(&mut self) -> Result<Var> {
        match self.tok {
            Tok::Var(n) => {
                self.bump()?;
                Ok(Var(n))
            }
            _ => Err(self.err(format!("expected a variable, found {:?}", self.tok))),
        }
    }

    fn string(&mut self) -> Result<String> {
        match self.bump()? {
            Tok::Str(s) => Ok(s),
            other => Err(self.err(format!("expected a string, found {:?}", other))),
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.bump()? {
            Tok::Ident(s) => Ok(s),
            other => Err(self.err(format!("expected a name, found {:?}", other))),
        }
    }

    fn number(&self, text: &str) -> Result<AtomicValue> {
        let bad = || self.err(format!("bad number {}", text));
        if text.contains(['e', 'E']) {
            text.parse::<f64>().map(AtomicValue::Double).map_err(|_| bad())
        } else if text.contains('.') {
            Decimal::parse(text).map(AtomicValue::Decimal).ok_or_else(bad)
        } else {
            text.parse::<i64>().map(AtomicValue::Integer).map_err(|_| bad())
        }
    }

    fn expr(&mut self) -> Result<LExpr> {
        match self.bump()? {
            Tok::Var(n) => Ok(LExpr::Var(Var(n))),
            Tok::Str(s) => Ok(LExpr::Const(AtomicValue::string(&s))),
            Tok::Num(n) => Ok(LExpr::Const(self.number(&n)?)),
            Tok::Ident(name) => {
                if self.eat('(')? {
                    let mut args = Vec::new();
                    if !self.eat(')')? {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(')')? {
                                break;
                            }
                            self.punct(',')?;
                        }
                    }
                    return Ok(LExpr::Call(Arc::from(name.as_str()), args));
                }
                match name.as_str() {
                    "true" => Ok(LExpr::Const(AtomicValue::Boolean(true))),
                    "false" => Ok(LExpr::Const(AtomicValue::Boolean(false))),
                    _ => SeqType::from_name(&name)
                        .map(LExpr::Type)
                        .ok_or_else(|| self.err(format!("unknown type name {}", name))),
                }
            }
            other => Err(self.err(format!("expected an expression, found {:?}", other))),
        }
    }

    fn binding(&mut self) -> Result<(Var, LExpr)> {
        self.punct('(')?;
        let v = self.var()?;
        self.punct(':')?;
        let e = self.expr()?;
        self.punct(')')?;
        Ok((v, e))
    }

    /// Reads operators top to bottom until a source or join closes the
    /// chain, then links them.
    fn chain(&mut self) -> Result<Op> {
        let mut pending: Vec<Op> = Vec::new();
        let leaf = loop {
            let word = match &self.tok {
                Tok::Ident(w) => w.clone(),
                other => return Err(self.err(format!("expected an operator, found {:?}", other))),
            };
            self.bump()?;
            let placeholder = || Box::new(Op::EmptyTupleSource);
            let op = match word.as_str() {
                "EMPTY-TUPLE-SOURCE" => break Op::EmptyTupleSource,
                "NESTED-TUPLE-SOURCE" => break Op::NestedTupleSource,
                "DISTRIBUTE-RESULT" => {
                    self.punct('(')?;
                    let var = self.var()?;
                    self.punct(')')?;
                    Op::DistributeResult {
                        var,
                        input: placeholder(),
                    }
                }
                "ASSIGN" => {
                    let (var, expr) = self.binding()?;
                    Op::Assign {
                        var,
                        expr,
                        input: placeholder(),
                    }
                }
                "UNNEST" => {
                    let (var, expr) = self.binding()?;
                    Op::Unnest {
                        var,
                        expr,
                        input: placeholder(),
                    }
                }
                "AGGREGATE" => {
                    let (var, expr) = self.binding()?;
                    let two_step = if self.tok == Tok::Ident("TWO-STEP".into()) {
                        self.bump()?;
                        self.punct('(')?;
                        let local = self.ident()?;
                        self.punct(',')?;
                        let global = self.ident()?;
                        self.punct(')')?;
                        Some(
                            TwoStep::from_names(&local, &global)
                                .ok_or_else(|| self.err(format!("unknown two-step pair {}, {}", local, global)))?,
                        )
                    } else {
                        None
                    };
                    Op::Aggregate {
                        var,
                        expr,
                        two_step,
                        input: placeholder(),
                    }
                }
                "SELECT" => {
                    self.punct('(')?;
                    let cond = self.expr()?;
                    self.punct(')')?;
                    Op::Select {
                        cond,
                        input: placeholder(),
                    }
                }
                "DATASCAN" => {
                    self.punct('(')?;
                    if self.ident()? != "collection" {
                        return Err(self.err("DATASCAN source must be collection(\"...\")"));
                    }
                    self.punct('(')?;
                    let collection = self.string()?;
                    self.punct(')')?;
                    self.punct(',')?;
                    let var = self.var()?;
                    let mut path = Vec::new();
                    if self.eat(',')? {
                        let p = self.string()?;
                        if !p.starts_with('/') {
                            return Err(self.err("DATASCAN path must start with '/'"));
                        }
                        path = p[1..].split('/').map(Arc::from).collect();
                    }
                    self.punct(')')?;
                    Op::DataScan {
                        var,
                        collection: Arc::from(collection.as_str()),
                        path,
                        input: placeholder(),
                    }
                }
                "SUBPLAN" => {
                    self.punct('{')?;
                    let nested = self.chain()?;
                    self.punct('}')?;
                    Op::Subplan {
                        nested: Box::new(nested),
                        input: placeholder(),
                    }
                }
                "JOIN" => {
                    self.punct('(')?;
                    let cond = self.expr()?;
                    self.punct(')')?;
                    self.punct('{')?;
                    let a = self.chain()?;
                    self.punct('}')?;
                    self.punct('{')?;
                    let b = self.chain()?;
                    self.punct('}')?;
                    break Op::Join {
                        cond,
                        branches: Box::new([a, b]),
                    };
                }
                other => return Err(self.err(format!("unknown operator {}", other))),
            };
            pending.push(op);
        };
        let mut cur = leaf;
        while let Some(mut op) = pending.pop() {
            *op.input_mut().expect("unary operator") = cur;
            cur = op;
        }
        Ok(cur)
    }
}

/// Parses a plan or plan fragment. Fails with the line of the first
/// offending token.
pub fn parse_op(text: &str) -> Result<Op> {
    let mut p = Parser::new(text)?;
    let op = p.chain()?;
    if p.tok != Tok::Eof {
        return Err(p.err(format!("trailing input {:?}", p.tok)));
    }
    Ok(op)
}

pub fn parse_plan(text: &str) -> Result<LogicalPlan> {
    let root = parse_op(text)?;
    if !matches!(root, Op::DistributeResult { .. }) {
        return Err(Error::PlanSyntax {
            line: 1,
            message: "a plan starts with DISTRIBUTE-RESULT".into(),
        });
    }
    Ok(LogicalPlan { root })
}
