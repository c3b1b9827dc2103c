//! Streaming accumulators for the aggregate functions, including the local
//! and global halves of two-step aggregation.

use crate::error::{Error, Result};
use crate::xdm::arith::arith_atomic;
use crate::xdm::compare::compare_atomic;
use crate::xdm::sequence::{atomize_item, singleton};
use crate::xdm::{effective_boolean_value, ArithOp, AtomicKind, AtomicValue, CompOp, Item, Sequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggFn {
    CreateSequence,
    Count,
    Sum,
    Avg,
    Min,
    Max,
    Some,
    /// Local half of avg: a `(sum, count)` pair, or () for no input.
    AvgPartial,
    /// Global half of avg over `(sum, count)` pairs.
    AvgCombine,
}

impl AggFn {
    pub fn from_name(name: &str) -> Option<AggFn> {
        Some(match name {
            "create_sequence" => AggFn::CreateSequence,
            "count" => AggFn::Count,
            "sum" => AggFn::Sum,
            "avg" => AggFn::Avg,
            "min" => AggFn::Min,
            "max" => AggFn::Max,
            "some" => AggFn::Some,
            "avg-partial" => AggFn::AvgPartial,
            "avg-combine" => AggFn::AvgCombine,
            _ => return None,
        })
    }
}

/// Atomized operand with untyped data read as a double.
fn operand(item: &Item) -> Result<AtomicValue> {
    let v = atomize_item(item);
    if v.kind() == AtomicKind::UntypedAtomic {
        return v.cast(AtomicKind::Double);
    }
    Ok(v)
}

fn numeric_value(item: &Item) -> Result<AtomicValue> {
    let v = operand(item)?;
    if !v.is_numeric() {
        return Err(Error::type_err(format!("arithmetic aggregate over {}", v.kind().name())));
    }
    Ok(v)
}

fn add(total: Option<AtomicValue>, v: AtomicValue) -> Result<AtomicValue> {
    match total {
        None => Ok(v),
        Some(t) => arith_atomic(ArithOp::Add, t, v),
    }
}

#[derive(Clone, Debug)]
pub struct Accumulator {
    f: AggFn,
    items: Sequence,
    count: i64,
    total: Option<AtomicValue>,
    best: Option<AtomicValue>,
    nan: bool,
    any: bool,
}

impl Accumulator {
    pub fn new(f: AggFn) -> Self {
        Accumulator {
            f,
            items: Sequence::new(),
            count: 0,
            total: None,
            best: None,
            nan: false,
            any: false,
        }
    }

    pub fn reset(&mut self) {
        *self = Accumulator::new(self.f);
    }

    /// True once further input cannot change the result.
    pub fn saturated(&self) -> bool {
        match self.f {
            AggFn::Some => self.any,
            AggFn::Min | AggFn::Max => self.nan,
            _ => false,
        }
    }

    /// Folds in the value that one input tuple contributes.
    pub fn add_items(&mut self, items: &[Item]) -> Result<()> {
        match self.f {
            AggFn::CreateSequence => self.items.extend(items.iter().cloned()),
            AggFn::Count => self.count += items.len() as i64,
            AggFn::Sum | AggFn::Avg | AggFn::AvgPartial => {
                for i in items {
                    self.total = Some(add(self.total.take(), numeric_value(i)?)?);
                    self.count += 1;
                }
            }
            AggFn::Min | AggFn::Max => {
                let better = if self.f == AggFn::Min { CompOp::Lt } else { CompOp::Gt };
                for i in items {
                    if self.nan {
                        break;
                    }
                    let v = operand(i)?;
                    if matches!(v, AtomicValue::Double(d) if d.is_nan()) {
                        self.nan = true;
                        self.best = Some(AtomicValue::Double(f64::NAN));
                        break;
                    }
                    self.best = Some(match self.best.take() {
                        None => v,
                        Some(b) => {
                            if compare_atomic(better, &v, &b)? {
                                v
                            } else {
                                b
                            }
                        }
                    });
                }
            }
            AggFn::Some => {
                if !self.any && effective_boolean_value(items)? {
                    self.any = true;
                }
            }
            AggFn::AvgCombine => match items {
                [] => {}
                [s, Item::Atomic(AtomicValue::Integer(n))] => {
                    self.total = Some(add(self.total.take(), numeric_value(s)?)?);
                    self.count += n;
                }
                _ => return Err(Error::type_err("malformed avg partial")),
            },
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<Sequence> {
        let n = || AtomicValue::Integer(self.count);
        Ok(match self.f {
            AggFn::CreateSequence => self.items.clone(),
            AggFn::Count => singleton(n()),
            AggFn::Sum => singleton(self.total.clone().unwrap_or(AtomicValue::Integer(0))),
            AggFn::Avg | AggFn::AvgCombine => match &self.total {
                Some(t) if self.count > 0 => singleton(arith_atomic(ArithOp::Div, t.clone(), n())?),
                _ => Sequence::new(),
            },
            AggFn::AvgPartial => match &self.total {
                Some(t) => [Item::Atomic(t.clone()), Item::Atomic(n())].into_iter().collect(),
                None => Sequence::new(),
            },
            AggFn::Min | AggFn::Max => self.best.clone().map(singleton).unwrap_or_default(),
            AggFn::Some => singleton(AtomicValue::Boolean(self.any)),
        })
    }
}
