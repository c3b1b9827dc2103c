use super::atomic::{AtomicKind, AtomicValue};
use super::decimal::Decimal;
use super::sequence::{zero_or_one_atomic, Item, Sequence};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn function_name(self) -> &'static str {
        match self {
            ArithOp::Add => "numeric-add",
            ArithOp::Sub => "numeric-subtract",
            ArithOp::Mul => "numeric-multiply",
            ArithOp::Div => "numeric-divide",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "div",
        }
    }
}

fn overflow() -> Error {
    Error::dynamic("numeric overflow")
}

fn untyped_to_double(v: AtomicValue) -> Result<AtomicValue> {
    match v {
        AtomicValue::UntypedAtomic(_) => v.cast(AtomicKind::Double),
        other => Ok(other),
    }
}

/// Arithmetic on two atomic values. untypedAtomic operands become doubles;
/// otherwise the operands are promoted to their common numeric type, except
/// that dividing two integers yields a decimal.
pub fn arith_atomic(op: ArithOp, a: AtomicValue, b: AtomicValue) -> Result<AtomicValue> {
    let a = untyped_to_double(a)?;
    let b = untyped_to_double(b)?;
    if !a.is_numeric() || !b.is_numeric() {
        return Err(Error::type_err(format!(
            "operator {} is not defined for {} and {}",
            op.symbol(),
            a.kind().name(),
            b.kind().name()
        )));
    }
    let mut common = AtomicValue::common_numeric_kind(a.kind(), b.kind());
    if common == AtomicKind::Integer && op == ArithOp::Div {
        common = AtomicKind::Decimal;
    }
    match common {
        AtomicKind::Integer => {
            let (x, y) = (a.as_i64().unwrap(), b.as_i64().unwrap());
            let r = match op {
                ArithOp::Add => x.checked_add(y),
                ArithOp::Sub => x.checked_sub(y),
                ArithOp::Mul => x.checked_mul(y),
                ArithOp::Div => unreachable!(),
            };
            r.map(AtomicValue::Integer).ok_or_else(overflow)
        }
        AtomicKind::Decimal => {
            let (x, y) = (a.as_decimal().unwrap(), b.as_decimal().unwrap());
            let r = match op {
                ArithOp::Add => x.checked_add(y),
                ArithOp::Sub => x.checked_sub(y),
                ArithOp::Mul => x.checked_mul(y),
                ArithOp::Div => {
                    if y.is_zero() {
                        return Err(Error::dynamic("division by zero"));
                    }
                    x.checked_div(y)
                }
            };
            r.map(AtomicValue::Decimal).ok_or_else(overflow)
        }
        AtomicKind::Float => {
            let (x, y) = (a.as_f64().unwrap() as f32, b.as_f64().unwrap() as f32);
            Ok(AtomicValue::Float(match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => x / y,
            }))
        }
        _ => {
            let (x, y) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            Ok(AtomicValue::Double(match op {
                ArithOp::Add => x + y,
                ArithOp::Sub => x - y,
                ArithOp::Mul => x * y,
                ArithOp::Div => x / y,
            }))
        }
    }
}

/// Sequence-level arithmetic: each operand atomizes to at most one value and
/// an empty operand gives an empty result.
pub fn arith(op: ArithOp, left: &[Item], right: &[Item]) -> Result<Sequence> {
    let a = zero_or_one_atomic(left, op.symbol())?;
    let b = zero_or_one_atomic(right, op.symbol())?;
    match (a, b) {
        (Some(a), Some(b)) => Ok(super::sequence::singleton(arith_atomic(op, a, b)?)),
        _ => Ok(Sequence::new()),
    }
}

pub fn negate_atomic(v: AtomicValue) -> Result<AtomicValue> {
    match untyped_to_double(v)? {
        AtomicValue::Double(d) => Ok(AtomicValue::Double(-d)),
        AtomicValue::Float(f) => Ok(AtomicValue::Float(-f)),
        AtomicValue::Decimal(d) => d.checked_neg().map(AtomicValue::Decimal).ok_or_else(overflow),
        other if other.kind().is_integer() => other
            .as_i64()
            .unwrap()
            .checked_neg()
            .map(AtomicValue::Integer)
            .ok_or_else(overflow),
        other => Err(Error::type_err(format!(
            "unary minus is not defined for {}",
            other.kind().name()
        ))),
    }
}

/// Shorthand used by tests and aggregate code.
pub fn decimal(s: &str) -> AtomicValue {
    AtomicValue::Decimal(Decimal::parse(s).expect("decimal literal"))
}
