use std::sync::Arc;

use super::ast::{Axis, Clause, Expr, Literal};
use super::lexer::{tokenize, Token, TokenKind};
use crate::error::{Error, Result};
use crate::xdm::{ArithOp, CompOp, Decimal, SeqType};

/// Parses a query into its surface syntax tree.
pub fn parse_query(text: &str) -> Result<Expr> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    p.expect(TokenKind::Eof)?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn value_op(name: &str) -> Option<CompOp> {
    CompOp::ALL.iter().copied().find(|op| op.keyword() == name)
}

fn general_op(kind: &TokenKind) -> Option<CompOp> {
    Some(match kind {
        TokenKind::Eq => CompOp::Eq,
        TokenKind::Ne => CompOp::Ne,
        TokenKind::Lt => CompOp::Lt,
        TokenKind::Le => CompOp::Le,
        TokenKind::Gt => CompOp::Gt,
        TokenKind::Ge => CompOp::Ge,
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_at(&self, k: usize) -> &TokenKind {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn advance(&mut self) -> TokenKind {
        let t = self.tokens[self.pos].kind.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        let t = &self.tokens[self.pos];
        Err(Error::Syntax {
            offset: t.offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.kind.describe(),
        })
    }

    fn expect(&mut self, kind: TokenKind) -> Result<()> {
        if *self.peek() == kind {
            self.advance();
            Ok(())
        } else {
            self.fail(&[&kind.describe()])
        }
    }

    fn is_name(&self, word: &str) -> bool {
        matches!(self.peek(), TokenKind::Name(n) if n == word)
    }

    fn var(&mut self) -> Result<String> {
        match self.peek().clone() {
            TokenKind::Var(v) => {
                self.advance();
                Ok(v)
            }
            _ => self.fail(&["variable"]),
        }
    }

    /// Expr ::= ExprSingle ("," ExprSingle)*
    fn expr(&mut self) -> Result<Expr> {
        let first = self.expr_single()?;
        if *self.peek() != TokenKind::Comma {
            return Ok(first);
        }
        let mut items = vec![first];
        while *self.peek() == TokenKind::Comma {
            self.advance();
            items.push(self.expr_single()?);
        }
        Ok(Expr::Sequence(items))
    }

    fn expr_single(&mut self) -> Result<Expr> {
        match self.peek() {
            TokenKind::For | TokenKind::Let if matches!(self.peek_at(1), TokenKind::Var(_)) => self.flwor(),
            TokenKind::Some if matches!(self.peek_at(1), TokenKind::Var(_)) => self.quantified(),
            _ => self.or_expr(),
        }
    }

    fn flwor(&mut self) -> Result<Expr> {
        let mut clauses = Vec::new();
        loop {
            match self.peek() {
                TokenKind::For => {
                    self.advance();
                    loop {
                        let var = self.var()?;
                        self.expect(TokenKind::In)?;
                        let input = self.expr_single()?;
                        clauses.push(Clause::For { var, input });
                        if *self.peek() != TokenKind::Comma {
                            break;
                        }
                        self.advance();
                    }
                }
                TokenKind::Let => {
                    self.advance();
                    loop {
                        let var = self.var()?;
                        self.expect(TokenKind::Assign)?;
                        let value = self.expr_single()?;
                        clauses.push(Clause::Let { var, value });
                        if *self.peek() != TokenKind::Comma {
                            break;
                        }
                        self.advance();
                    }
                }
                _ => break,
            }
        }
        let where_clause = if *self.peek() == TokenKind::Where {
            self.advance();
            Some(Box::new(self.expr_single()?))
        } else {
            None
        };
        if *self.peek() != TokenKind::Return {
            return if where_clause.is_some() {
                self.fail(&["return"])
            } else {
                self.fail(&["for", "let", "where", "return"])
            };
        }
        self.advance();
        let ret = Box::new(self.expr_single()?);
        Ok(Expr::Flwor {
            clauses,
            where_clause,
            ret,
        })
    }

    fn quantified(&mut self) -> Result<Expr> {
        self.expect(TokenKind::Some)?;
        let var = self.var()?;
        self.expect(TokenKind::In)?;
        let input = Box::new(self.expr_single()?);
        self.expect(TokenKind::Satisfies)?;
        let satisfies = Box::new(self.expr_single()?);
        Ok(Expr::Some {
            var,
            input,
            satisfies,
        })
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut e = self.and_expr()?;
        while self.is_name("or") {
            self.advance();
            let r = self.and_expr()?;
            e = Expr::Or(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut e = self.comparison()?;
        while self.is_name("and") {
            self.advance();
            let r = self.comparison()?;
            e = Expr::And(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn comparison(&mut self) -> Result<Expr> {
        let left = self.additive()?;
        let (op, general) = match self.peek() {
            TokenKind::Name(n) => match value_op(n) {
                Some(op) => (op, false),
                None => return Ok(left),
            },
            k => match general_op(k) {
                Some(op) => (op, true),
                None => return Ok(left),
            },
        };
        self.advance();
        let right = self.additive()?;
        Ok(Expr::Compare {
            op,
            general,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    fn additive(&mut self) -> Result<Expr> {
        let mut e = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                TokenKind::Plus => ArithOp::Add,
                TokenKind::Minus => ArithOp::Sub,
                _ => return Ok(e),
            };
            self.advance();
            let r = self.multiplicative()?;
            e = Expr::Arith {
                op,
                left: Box::new(e),
                right: Box::new(r),
            };
        }
    }

    fn multiplicative(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        loop {
            let op = match self.peek() {
                TokenKind::Star => ArithOp::Mul,
                TokenKind::Name(n) if n == "div" => ArithOp::Div,
                _ => return Ok(e),
            };
            self.advance();
            let r = self.unary()?;
            e = Expr::Arith {
                op,
                left: Box::new(e),
                right: Box::new(r),
            };
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == TokenKind::Minus {
            self.advance();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if *self.peek() == TokenKind::Plus {
            self.advance();
            return self.unary();
        }
        self.path()
    }

    fn step_name(&mut self) -> Result<String> {
        let name = match self.peek() {
            TokenKind::Name(n) => n.clone(),
            TokenKind::For => "for".into(),
            TokenKind::Let => "let".into(),
            TokenKind::In => "in".into(),
            TokenKind::Where => "where".into(),
            TokenKind::Return => "return".into(),
            TokenKind::Some => "some".into(),
            TokenKind::Satisfies => "satisfies".into(),
            _ => return self.fail(&["name test"]),
        };
        self.advance();
        Ok(name)
    }

    fn path(&mut self) -> Result<Expr> {
        let mut e = self.primary()?;
        while *self.peek() == TokenKind::Slash {
            self.advance();
            let axis = if *self.peek() == TokenKind::At {
                self.advance();
                Axis::Attribute
            } else {
                Axis::Child
            };
            let name = self.step_name()?;
            e = Expr::Step {
                input: Box::new(e),
                axis,
                name,
            };
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr> {
        let offset = self.tokens[self.pos].offset;
        let bad_number = |t: &str| Error::Lex {
            offset,
            message: format!("numeric literal {} out of range", t),
        };
        match self.peek().clone() {
            TokenKind::Integer(t) => {
                self.advance();
                Ok(Expr::Literal(Literal::Integer(t.parse().map_err(|_| bad_number(&t))?)))
            }
            TokenKind::Decimal(t) => {
                self.advance();
                Ok(Expr::Literal(Literal::Decimal(Decimal::parse(&t).ok_or_else(|| bad_number(&t))?)))
            }
            TokenKind::Double(t) => {
                self.advance();
                Ok(Expr::Literal(Literal::Double(t.parse().map_err(|_| bad_number(&t))?)))
            }
            TokenKind::Str(s) => {
                self.advance();
                Ok(Expr::Literal(Literal::String(Arc::from(s.as_str()))))
            }
            TokenKind::Var(v) => {
                self.advance();
                Ok(Expr::Var(v))
            }
            TokenKind::LParen => {
                self.advance();
                if *self.peek() == TokenKind::RParen {
                    self.advance();
                    return Ok(Expr::Sequence(Vec::new()));
                }
                let e = self.expr()?;
                if *self.peek() != TokenKind::RParen {
                    return self.fail(&[",", ")"]);
                }
                self.advance();
                Ok(e)
            }
            TokenKind::Name(n) => {
                if *self.peek_at(1) == TokenKind::LParen {
                    self.advance();
                    self.advance();
                    let mut args = Vec::new();
                    if *self.peek() != TokenKind::RParen {
                        loop {
                            args.push(self.expr_single()?);
                            if *self.peek() != TokenKind::Comma {
                                break;
                            }
                            self.advance();
                        }
                    }
                    if *self.peek() != TokenKind::RParen {
                        return self.fail(&[",", ")"]);
                    }
                    self.advance();
                    return Ok(Expr::Call { name: n, args });
                }
                match SeqType::from_name(&n) {
                    Some(t) => {
                        self.advance();
                        Ok(Expr::Type(t))
                    }
                    None => self.fail(&["function call", "literal", "variable", "("]),
                }
            }
            _ => self.fail(&["expression"]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bookstore_path() {
        let e = parse_query("doc(\"book.xml\")/bookstore/book").unwrap();
        let Expr::Step { input, name, axis } = e else { panic!() };
        assert_eq!(name, "book");
        assert_eq!(axis, Axis::Child);
        let Expr::Step { input, name, .. } = *input else { panic!() };
        assert_eq!(name, "bookstore");
        assert!(input.is_call("doc"));
    }

    #[test]
    fn unbalanced_paren_reports_offset() {
        match parse_query("(") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 1),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn station_date_query_structure() {
        let q = r#"for $r in collection("/sensors")/dataCollection/data
let $datetime := dateTime(data($r/date))
where $r/station eq "GHCND:USW00012836"
  and year-from-dateTime($datetime) ge 2003
  and month-from-dateTime($datetime) eq 12
  and day-from-dateTime($datetime) eq 25
return $r"#;
        let Expr::Flwor { clauses, where_clause, ret } = parse_query(q).unwrap() else { panic!() };
        assert!(matches!(clauses[0], Clause::For { .. }));
        assert!(matches!(clauses[1], Clause::Let { .. }));
        assert!(matches!(where_clause.as_deref(), Some(Expr::And(..))));
        assert_eq!(*ret, Expr::Var("r".into()));
    }

    #[test]
    fn precedence() {
        let e = parse_query("1 + 2 * 3 eq 7 and -$a lt 2").unwrap();
        let Expr::And(l, r) = e else { panic!() };
        assert!(matches!(*l, Expr::Compare { op: CompOp::Eq, general: false, .. }));
        assert!(matches!(*r, Expr::Compare { op: CompOp::Lt, .. }));
        assert!(parse_query("1 eq 2 eq 3").is_err());
        assert!(parse_query("for $x in (1, 2) where").is_err());
    }
}
