use std::fmt;
use std::sync::Arc;

use crate::xdm::{ArithOp, AtomicValue, CompOp, Decimal, SeqType};

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Integer(i64),
    Decimal(Decimal),
    Double(f64),
    String(Arc<str>),
}

impl Literal {
    pub fn to_atomic(&self) -> AtomicValue {
        match self {
            Literal::Integer(i) => AtomicValue::Integer(*i),
            Literal::Decimal(d) => AtomicValue::Decimal(*d),
            Literal::Double(d) => AtomicValue::Double(*d),
            Literal::String(s) => AtomicValue::String(s.clone()),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Integer(i) => write!(f, "{}", i),
            Literal::Decimal(d) => {
                let s = d.to_string();
                if s.contains('.') {
                    f.write_str(&s)
                } else {
                    write!(f, "{}.0", s)
                }
            }
            Literal::Double(d) => write!(f, "{:e}", d),
            Literal::String(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Child,
    Attribute,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Clause {
    For { var: String, input: Expr },
    Let { var: String, value: Expr },
}

/// Query syntax tree. The surface parser produces every variant except
/// `Map`; normalization replaces `Step` by `Map` compositions and inserts
/// explicit coercion calls, yielding the core form.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Literal(Literal),
    Var(String),
    /// A sequence type written as an argument of `treat` or `promote`.
    Type(SeqType),
    Sequence(Vec<Expr>),
    Flwor {
        clauses: Vec<Clause>,
        where_clause: Option<Box<Expr>>,
        ret: Box<Expr>,
    },
    Some {
        var: String,
        input: Box<Expr>,
        satisfies: Box<Expr>,
    },
    Step {
        input: Box<Expr>,
        axis: Axis,
        name: String,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Compare {
        op: CompOp,
        general: bool,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Arith {
        op: ArithOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Neg(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    /// Core only: evaluates `body` once per item of `input` with `var`
    /// bound to the item and concatenates the results.
    Map {
        input: Box<Expr>,
        var: String,
        body: Box<Expr>,
    },
}

impl Expr {
    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call {
            name: name.to_string(),
            args,
        }
    }

    pub fn string(s: &str) -> Expr {
        Expr::Literal(Literal::String(Arc::from(s)))
    }

    pub fn is_call(&self, name: &str) -> bool {
        matches!(self, Expr::Call { name: n, .. } if n == name)
    }

    /// Expressions that print without surrounding parentheses.
    fn is_primary(&self) -> bool {
        match self {
            Expr::Literal(Literal::Integer(i)) => *i >= 0,
            Expr::Literal(Literal::Decimal(d)) => !d.to_string().starts_with('-'),
            Expr::Literal(Literal::Double(d)) => d.is_sign_positive() && d.is_finite(),
            Expr::Literal(Literal::String(_)) | Expr::Var(_) | Expr::Type(_) => true,
            Expr::Call { .. } | Expr::Sequence(_) => true,
            Expr::Step { .. } => true,
            _ => false,
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    if e.is_primary() {
        write!(f, "{}", e)
    } else {
        write!(f, "({})", e)
    }
}

/// Prints surface syntax that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Literal(l) => write!(f, "{}", l),
            Expr::Var(v) => write!(f, "${}", v),
            Expr::Type(t) => f.write_str(t.name()),
            Expr::Sequence(items) => {
                f.write_str("(")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", e)?;
                }
                f.write_str(")")
            }
            Expr::Flwor {
                clauses,
                where_clause,
                ret,
            } => {
                for c in clauses {
                    let bound = match c {
                        Clause::For { var, input } => {
                            write!(f, "for ${} in ", var)?;
                            input
                        }
                        Clause::Let { var, value } => {
                            write!(f, "let ${} := ", var)?;
                            value
                        }
                    };
                    write_operand(f, bound)?;
                    f.write_str(" ")?;
                }
                if let Some(w) = where_clause {
                    f.write_str("where ")?;
                    write_operand(f, w)?;
                    f.write_str(" ")?;
                }
                f.write_str("return ")?;
                write_operand(f, ret)
            }
            Expr::Some {
                var,
                input,
                satisfies,
            } => {
                write!(f, "some ${} in ", var)?;
                write_operand(f, input)?;
                f.write_str(" satisfies ")?;
                write_operand(f, satisfies)
            }
            Expr::Step { input, axis, name } => {
                write_operand(f, input)?;
                match axis {
                    Axis::Child => write!(f, "/{}", name),
                    Axis::Attribute => write!(f, "/@{}", name),
                }
            }
            Expr::Call { name, args } => {
                write!(f, "{}(", name)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", a)?;
                }
                f.write_str(")")
            }
            Expr::Compare {
                op,
                general,
                left,
                right,
            } => {
                write_operand(f, left)?;
                if *general {
                    write!(f, " {} ", op.symbol())?;
                } else {
                    write!(f, " {} ", op.keyword())?;
                }
                write_operand(f, right)
            }
            Expr::Arith { op, left, right } => {
                write_operand(f, left)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, right)
            }
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_operand(f, e)
            }
            Expr::And(l, r) => {
                write_operand(f, l)?;
                f.write_str(" and ")?;
                write_operand(f, r)
            }
            Expr::Or(l, r) => {
                write_operand(f, l)?;
                f.write_str(" or ")?;
                write_operand(f, r)
            }
            Expr::Map { input, var, body } => {
                f.write_str("map(")?;
                write_operand(f, input)?;
                write!(f, ", ${}, ", var)?;
                write_operand(f, body)?;
                f.write_str(")")
            }
        }
    }
}
