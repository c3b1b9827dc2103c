//! Plan text: one operator per line in reverse dataflow order, nested plans
//! and join branches inside braces.

use std::fmt::{self, Write};

use super::{LExpr, LogicalPlan, Op};
use crate::xdm::atomic::format_double;
use crate::xdm::AtomicValue;

impl fmt::Display for LExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LExpr::Var(v) => write!(f, "{}", v),
            LExpr::Type(t) => f.write_str(t.name()),
            LExpr::Const(c) => write_const(f, c),
            LExpr::Call(name, args) => {
                write!(f, "{}(", name)?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", a)?;
                }
                f.write_str(")")
            }
        }
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: &AtomicValue) -> fmt::Result {
    match c {
        AtomicValue::Boolean(b) => write!(f, "{}", b),
        AtomicValue::Integer(i) => write!(f, "{}", i),
        AtomicValue::Decimal(d) => {
            let s = d.to_string();
            if s.contains('.') {
                f.write_str(&s)
            } else {
                write!(f, "{}.0", s)
            }
        }
        AtomicValue::Double(d) => {
            if d.is_finite() {
                write!(f, "{:e}", d)
            } else {
                // Not expressible as a literal; printed like the xdm lexical
                // form for diagnostics only.
                f.write_str(&format_double(*d))
            }
        }
        other => {
            f.write_char('"')?;
            f.write_str(&other.lexical().replace('"', "\"\""))?;
            f.write_char('"')
        }
    }
}

fn line(out: &mut String, depth: usize, text: &str) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(text);
    out.push('\n');
}

fn write_op(out: &mut String, depth: usize, op: &Op) {
    let mut next: Option<&Op> = Some(op);
    while let Some(op) = next {
        next = op.input();
        match op {
            Op::DistributeResult { var, .. } => line(out, depth, &format!("DISTRIBUTE-RESULT( {} )", var)),
            Op::EmptyTupleSource | Op::NestedTupleSource => line(out, depth, op.name()),
            Op::Assign { var, expr, .. } => line(out, depth, &format!("ASSIGN( {}:{} )", var, expr)),
            Op::Unnest { var, expr, .. } => line(out, depth, &format!("UNNEST( {}:{} )", var, expr)),
            Op::Select { cond, .. } => line(out, depth, &format!("SELECT( {} )", cond)),
            Op::Aggregate {
                var, expr, two_step, ..
            } => {
                let mut s = format!("AGGREGATE( {}:{} )", var, expr);
                if let Some(t) = two_step {
                    let _ = write!(s, " TWO-STEP( {}, {} )", t.local, t.global);
                }
                line(out, depth, &s)
            }
            Op::DataScan {
                var,
                collection,
                path,
                ..
            } => {
                let coll = LExpr::call("collection", vec![LExpr::string(collection)]);
                let s = if path.is_empty() {
                    format!("DATASCAN( {}, {} )", coll, var)
                } else {
                    let p: String = path.iter().map(|s| format!("/{}", s)).collect();
                    format!("DATASCAN( {}, {}, {} )", coll, var, LExpr::string(&p))
                };
                line(out, depth, &s)
            }
            Op::Subplan { nested, .. } => {
                line(out, depth, "SUBPLAN {");
                write_op(out, depth + 1, nested);
                line(out, depth, "}");
            }
            Op::Join { cond, branches } => {
                line(out, depth, &format!("JOIN( {} )", cond));
                line(out, depth, "{");
                write_op(out, depth + 1, &branches[0]);
                line(out, depth, "} {");
                write_op(out, depth + 1, &branches[1]);
                line(out, depth, "}");
            }
        }
    }
}

/// Renders a plan or any operator subtree.
pub fn print_op(op: &Op) -> String {
    let mut out = String::new();
    write_op(&mut out, 0, op);
    out
}

pub fn print_plan(plan: &LogicalPlan) -> String {
    print_op(&plan.root)
}
