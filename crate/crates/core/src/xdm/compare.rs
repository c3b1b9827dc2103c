use std::cmp::Ordering;
use std::sync::Arc;

use super::atomic::{AtomicKind, AtomicValue};
use super::sequence::{atomize_item, zero_or_one_atomic, Item};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CompOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompOp {
    pub fn value_name(self) -> &'static str {
        match self {
            CompOp::Eq => "value-eq",
            CompOp::Ne => "value-ne",
            CompOp::Lt => "value-lt",
            CompOp::Le => "value-le",
            CompOp::Gt => "value-gt",
            CompOp::Ge => "value-ge",
        }
    }

    pub fn general_name(self) -> &'static str {
        match self {
            CompOp::Eq => "general-eq",
            CompOp::Ne => "general-ne",
            CompOp::Lt => "general-lt",
            CompOp::Le => "general-le",
            CompOp::Gt => "general-gt",
            CompOp::Ge => "general-ge",
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            CompOp::Eq => "eq",
            CompOp::Ne => "ne",
            CompOp::Lt => "lt",
            CompOp::Le => "le",
            CompOp::Gt => "gt",
            CompOp::Ge => "ge",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CompOp::Eq => "=",
            CompOp::Ne => "!=",
            CompOp::Lt => "<",
            CompOp::Le => "<=",
            CompOp::Gt => ">",
            CompOp::Ge => ">=",
        }
    }

    pub const ALL: [CompOp; 6] = [
        CompOp::Eq,
        CompOp::Ne,
        CompOp::Lt,
        CompOp::Le,
        CompOp::Gt,
        CompOp::Ge,
    ];

    fn holds(self, ord: Option<Ordering>) -> bool {
        match ord {
            // Unordered (NaN) only satisfies ne.
            None => self == CompOp::Ne,
            Some(o) => match self {
                CompOp::Eq => o == Ordering::Equal,
                CompOp::Ne => o != Ordering::Equal,
                CompOp::Lt => o == Ordering::Less,
                CompOp::Le => o != Ordering::Greater,
                CompOp::Gt => o == Ordering::Greater,
                CompOp::Ge => o != Ordering::Less,
            },
        }
    }
}

fn incomparable(a: &AtomicValue, b: &AtomicValue) -> Error {
    Error::type_err(format!(
        "cannot compare {} with {}",
        a.kind().name(),
        b.kind().name()
    ))
}

/// Orders two numerics after promotion to their common type.
fn numeric_order(a: &AtomicValue, b: &AtomicValue) -> Option<Ordering> {
    match AtomicValue::common_numeric_kind(a.kind(), b.kind()) {
        AtomicKind::Integer => Some(a.as_i64().unwrap().cmp(&b.as_i64().unwrap())),
        AtomicKind::Decimal => Some(a.as_decimal().unwrap().cmp(&b.as_decimal().unwrap())),
        AtomicKind::Float => {
            let x = a.as_f64().unwrap() as f32;
            let y = b.as_f64().unwrap() as f32;
            x.partial_cmp(&y)
        }
        _ => a.as_f64().unwrap().partial_cmp(&b.as_f64().unwrap()),
    }
}

/// Compares two atomic values that are already of comparable kinds.
/// `ordering_needed` is false for eq/ne, which are defined on more kinds.
fn atomic_order(
    a: &AtomicValue,
    b: &AtomicValue,
    ordering_needed: bool,
) -> Result<Option<Ordering>> {
    use AtomicValue as V;
    if a.is_numeric() && b.is_numeric() {
        return Ok(numeric_order(a, b));
    }
    Ok(match (a, b) {
        (V::String(x), V::String(y)) => Some(x.as_ref().cmp(y.as_ref())),
        (V::Boolean(x), V::Boolean(y)) => Some(x.cmp(y)),
        (V::DateTime(x), V::DateTime(y)) => Some(x.millis.cmp(&y.millis)),
        (V::Date(x), V::Date(y)) => Some(x.days.cmp(&y.days)),
        (V::Time(x), V::Time(y)) => Some(x.millis_of_day.cmp(&y.millis_of_day)),
        (V::Duration(x), V::Duration(y)) if !ordering_needed => {
            Some(if x == y { Ordering::Equal } else { Ordering::Less })
        }
        (V::Binary(x), V::Binary(y)) if !ordering_needed => {
            Some(if x == y { Ordering::Equal } else { Ordering::Less })
        }
        (V::QName(x), V::QName(y)) if !ordering_needed => {
            Some(if x == y { Ordering::Equal } else { Ordering::Less })
        }
        _ => return Err(incomparable(a, b)),
    })
}

fn untyped_as_string(v: &AtomicValue) -> AtomicValue {
    match v {
        AtomicValue::UntypedAtomic(s) => AtomicValue::String(s.clone()),
        other => other.clone(),
    }
}

/// Value comparison of two atomic values; untypedAtomic compares as string.
pub fn compare_atomic(op: CompOp, a: &AtomicValue, b: &AtomicValue) -> Result<bool> {
    let a = untyped_as_string(a);
    let b = untyped_as_string(b);
    let needs_order = !matches!(op, CompOp::Eq | CompOp::Ne);
    Ok(op.holds(atomic_order(&a, &b, needs_order)?))
}

/// Value comparison (`eq`, `lt`, ...) over sequences: each side atomizes to
/// at most one value, and an empty side yields the empty sequence.
pub fn value_compare(op: CompOp, left: &[Item], right: &[Item]) -> Result<Option<bool>> {
    let a = zero_or_one_atomic(left, op.keyword())?;
    let b = zero_or_one_atomic(right, op.keyword())?;
    match (a, b) {
        (Some(a), Some(b)) => compare_atomic(op, &a, &b).map(Some),
        _ => Ok(None),
    }
}

/// Casts an untypedAtomic operand of a general comparison against the other
/// operand's kind: double against numerics, string against strings and
/// untyped, the other kind otherwise.
fn general_operand(v: &AtomicValue, other: &AtomicValue) -> Result<AtomicValue> {
    if v.kind() != AtomicKind::UntypedAtomic {
        return Ok(v.clone());
    }
    let target = match other.kind() {
        k if k.is_numeric() => AtomicKind::Double,
        AtomicKind::UntypedAtomic | AtomicKind::String => AtomicKind::String,
        k => k,
    };
    v.cast(target)
}

/// General comparison (`=`, `<`, ...): true if some pair of atomized items
/// satisfies the value comparison.
pub fn general_compare(op: CompOp, left: &[Item], right: &[Item]) -> Result<bool> {
    let lhs: Vec<AtomicValue> = left.iter().map(atomize_item).collect();
    let rhs: Vec<AtomicValue> = right.iter().map(atomize_item).collect();
    for a in &lhs {
        for b in &rhs {
            let x = general_operand(a, b)?;
            let y = general_operand(b, a)?;
            if compare_atomic(op, &x, &y)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Hash key consistent with `eq` value comparison: any two atomic values
/// that compare equal produce the same key. Unequal values may collide, so
/// joins re-check matches with the full comparison.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EqKey {
    Str(Arc<str>),
    Num(u64),
    Bool(bool),
    Instant(i64),
    Day(i32),
    TimeOfDay(u32),
    Other(String),
}

pub fn eq_key(v: &AtomicValue) -> EqKey {
    match v {
        AtomicValue::String(s) | AtomicValue::UntypedAtomic(s) => EqKey::Str(s.clone()),
        AtomicValue::Boolean(b) => EqKey::Bool(*b),
        AtomicValue::DateTime(d) => EqKey::Instant(d.millis),
        AtomicValue::Date(d) => EqKey::Day(d.days),
        AtomicValue::Time(t) => EqKey::TimeOfDay(t.millis_of_day),
        n if n.is_numeric() => {
            // All numerics that compare equal agree as doubles; -0 folds to 0.
            let f = n.as_f64().unwrap();
            let f = if f == 0.0 { 0.0 } else { f };
            EqKey::Num(f.to_bits())
        }
        other => EqKey::Other(format!("{}:{}", other.kind().name(), other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xdm::decimal::Decimal;
    use crate::xdm::sequence::singleton;

    #[test]
    fn untyped_compares_as_string_in_value_comparison() {
        let a = singleton(AtomicValue::untyped("GHCND:USW00012836"));
        let b = singleton(AtomicValue::string("GHCND:USW00012836"));
        assert_eq!(value_compare(CompOp::Eq, &a, &b).unwrap(), Some(true));
        let n = singleton(AtomicValue::Integer(5));
        assert!(value_compare(CompOp::Eq, &singleton(AtomicValue::untyped("5")), &n).is_err());
    }

    #[test]
    fn empty_operand_yields_empty() {
        let b = singleton(AtomicValue::Integer(1));
        assert_eq!(value_compare(CompOp::Eq, &[], &b).unwrap(), None);
    }

    #[test]
    fn numeric_promotion_in_comparison() {
        let d = AtomicValue::Decimal(Decimal::parse("491.744").unwrap());
        assert!(compare_atomic(CompOp::Gt, &AtomicValue::Decimal(Decimal::parse("500").unwrap()), &d).unwrap());
        assert!(compare_atomic(CompOp::Eq, &AtomicValue::Integer(1), &AtomicValue::Double(1.0)).unwrap());
        assert!(compare_atomic(CompOp::Ne, &AtomicValue::Double(f64::NAN), &AtomicValue::Double(f64::NAN)).unwrap());
        assert!(!compare_atomic(CompOp::Eq, &AtomicValue::Double(f64::NAN), &AtomicValue::Double(f64::NAN)).unwrap());
    }

    #[test]
    fn general_comparison_is_existential_and_casts_untyped() {
        let left: Vec<Item> = vec![
            AtomicValue::untyped("10").into(),
            AtomicValue::untyped("200").into(),
        ];
        let right = singleton(AtomicValue::Integer(100));
        assert!(general_compare(CompOp::Gt, &left, &right).unwrap());
        assert!(!general_compare(CompOp::Gt, &left[..1], &right).unwrap());
        assert!(!general_compare(CompOp::Eq, &[], &right).unwrap());
    }

    #[test]
    fn eq_keys_agree_with_equality() {
        let vals = vec![
            AtomicValue::Integer(1),
            AtomicValue::Double(1.0),
            AtomicValue::Decimal(Decimal::from_i64(1)),
            AtomicValue::Float(1.0),
            AtomicValue::Double(-0.0),
            AtomicValue::Integer(0),
            AtomicValue::untyped("a"),
            AtomicValue::string("a"),
            AtomicValue::Decimal(Decimal::parse("0.1").unwrap()),
            AtomicValue::Double(0.1),
        ];
        for a in &vals {
            for b in &vals {
                if let Ok(true) = compare_atomic(CompOp::Eq, a, b) {
                    assert_eq!(eq_key(a), eq_key(b), "{:?} {:?}", a, b);
                }
            }
        }
    }
}
