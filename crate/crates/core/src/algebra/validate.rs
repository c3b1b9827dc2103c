//! Structural checks run after translation and after every rewrite.

use std::collections::BTreeSet;

use super::functions::{check, FnKind};
use super::{LExpr, LogicalPlan, Op, Var};
use crate::error::{Error, Result};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidPlan(msg.into())
}

fn check_expr(e: &LExpr, kind: FnKind, live: &BTreeSet<Var>) -> Result<()> {
    match e {
        LExpr::Var(v) => {
            if live.contains(v) {
                Ok(())
            } else {
                Err(invalid(format!("{} is read but not live", v)))
            }
        }
        LExpr::Const(_) => Ok(()),
        LExpr::Type(t) => Err(invalid(format!("type name {} outside treat/promote", t.name()))),
        LExpr::Call(name, args) => {
            check(name, kind, args.len()).map_err(invalid)?;
            for (i, a) in args.iter().enumerate() {
                if i == 1 && matches!(&**name, "treat" | "promote") {
                    if !matches!(a, LExpr::Type(_)) {
                        return Err(invalid(format!("second argument of {} must be a type", name)));
                    }
                    continue;
                }
                check_expr(a, FnKind::Scalar, live)?;
            }
            Ok(())
        }
    }
}

fn check_rooted(e: &LExpr, kind: FnKind, live: &BTreeSet<Var>, op: &str) -> Result<()> {
    if !matches!(e, LExpr::Call(..)) {
        return Err(invalid(format!("{} needs a function call, found {}", op, e)));
    }
    check_expr(e, kind, live)
}

struct Ctx {
    nested: bool,
    outer: BTreeSet<Var>,
}

fn chain(op: &Op, ctx: &Ctx, root: bool) -> Result<BTreeSet<Var>> {
    if matches!(op, Op::DistributeResult { .. }) != root {
        return Err(invalid(if root {
            "plan must start with DISTRIBUTE-RESULT"
        } else {
            "DISTRIBUTE-RESULT below the plan root"
        }));
    }
    if let Op::Aggregate { .. } = op {
        return Err(invalid("AGGREGATE outside the root of a nested plan"));
    }
    op_schema(op, ctx)
}

fn op_schema(op: &Op, ctx: &Ctx) -> Result<BTreeSet<Var>> {
    let below = |i: &Op| chain(i, ctx, false);
    Ok(match op {
        Op::EmptyTupleSource => BTreeSet::new(),
        Op::NestedTupleSource => {
            if !ctx.nested {
                return Err(invalid("NESTED-TUPLE-SOURCE outside a nested plan"));
            }
            ctx.outer.clone()
        }
        Op::DistributeResult { var, input } => {
            let live = below(input)?;
            if !live.contains(var) {
                return Err(invalid(format!("result variable {} is not live", var)));
            }
            live
        }
        Op::Assign { var, expr, input } => {
            let mut live = below(input)?;
            check_expr(expr, FnKind::Scalar, &live)?;
            live.insert(*var);
            live
        }
        Op::Unnest { var, expr, input } => {
            let mut live = below(input)?;
            check_rooted(expr, FnKind::Unnesting, &live, "UNNEST")?;
            live.insert(*var);
            live
        }
        Op::Select { cond, input } => {
            let live = below(input)?;
            check_expr(cond, FnKind::Scalar, &live)?;
            live
        }
        Op::DataScan { var, path, input, .. } => {
            if path.iter().any(|s| s.is_empty()) {
                return Err(invalid("empty DATASCAN path step"));
            }
            let mut live = below(input)?;
            live.insert(*var);
            live
        }
        Op::Aggregate { .. } => return Err(invalid("AGGREGATE outside the root of a nested plan")),
        Op::Subplan { nested, input } => {
            let mut live = below(input)?;
            let Op::Aggregate {
                var,
                expr,
                input: agg_in,
                ..
            } = &**nested
            else {
                return Err(invalid("nested plan must end in AGGREGATE"));
            };
            let inner = Ctx {
                nested: true,
                outer: live.clone(),
            };
            let inner_live = chain(agg_in, &inner, false)?;
            check_rooted(expr, FnKind::Aggregate, &inner_live, "AGGREGATE")?;
            live.insert(*var);
            live
        }
        Op::Join { cond, branches } => {
            let a = below(&branches[0])?;
            let b = below(&branches[1])?;
            if let Some(v) = a.intersection(&b).find(|v| !ctx.outer.contains(v)) {
                return Err(invalid(format!("{} produced by both join branches", v)));
            }
            let live: BTreeSet<Var> = a.union(&b).copied().collect();
            check_expr(cond, FnKind::Scalar, &live)?;
            live
        }
    })
}

/// Checks operator placement, variable liveness and uniqueness, and
/// function arities.
pub fn validate(plan: &LogicalPlan) -> Result<()> {
    let mut seen = BTreeSet::new();
    let mut dup = None;
    plan.root.walk(&mut |op| {
        for v in match op {
            Op::Subplan { .. } => vec![],
            other => other.produced(),
        } {
            if !seen.insert(v) {
                dup.get_or_insert(v);
            }
        }
    });
    if let Some(v) = dup {
        return Err(invalid(format!("{} is produced twice", v)));
    }
    chain(
        &plan.root,
        &Ctx {
            nested: false,
            outer: BTreeSet::new(),
        },
        true,
    )?;
    Ok(())
}
