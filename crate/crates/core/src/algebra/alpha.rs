//! Plan equality up to a consistent one-to-one renaming of variables.

use std::collections::HashMap;

use super::{LExpr, LogicalPlan, Op, Var};

#[derive(Default)]
struct Renaming {
    forward: HashMap<Var, Var>,
    backward: HashMap<Var, Var>,
}

impl Renaming {
    fn var(&mut self, a: Var, b: Var) -> bool {
        match (self.forward.get(&a), self.backward.get(&b)) {
            (None, None) => {
                self.forward.insert(a, b);
                self.backward.insert(b, a);
                true
            }
            (Some(x), Some(y)) => *x == b && *y == a,
            _ => false,
        }
    }

    fn expr(&mut self, a: &LExpr, b: &LExpr) -> bool {
        match (a, b) {
            (LExpr::Var(x), LExpr::Var(y)) => self.var(*x, *y),
            (LExpr::Const(x), LExpr::Const(y)) => x == y,
            (LExpr::Type(x), LExpr::Type(y)) => x == y,
            (LExpr::Call(f, xs), LExpr::Call(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.expr(x, y))
            }
            _ => false,
        }
    }

    fn op(&mut self, a: &Op, b: &Op) -> bool {
        let head = match (a, b) {
            (Op::DistributeResult { var: x, .. }, Op::DistributeResult { var: y, .. }) => self.var(*x, *y),
            (Op::EmptyTupleSource, Op::EmptyTupleSource) | (Op::NestedTupleSource, Op::NestedTupleSource) => true,
            (Op::Assign { var: v, expr: e, .. }, Op::Assign { var: w, expr: f, .. })
            | (Op::Unnest { var: v, expr: e, .. }, Op::Unnest { var: w, expr: f, .. }) => {
                self.var(*v, *w) && self.expr(e, f)
            }
            (
                Op::Aggregate {
                    var: v,
                    expr: e,
                    two_step: s,
                    ..
                },
                Op::Aggregate {
                    var: w,
                    expr: f,
                    two_step: t,
                    ..
                },
            ) => s == t && self.var(*v, *w) && self.expr(e, f),
            (Op::Select { cond: c, .. }, Op::Select { cond: d, .. }) | (Op::Join { cond: c, .. }, Op::Join { cond: d, .. }) => {
                self.expr(c, d)
            }
            (
                Op::DataScan {
                    var: v,
                    collection: c,
                    path: p,
                    ..
                },
                Op::DataScan {
                    var: w,
                    collection: d,
                    path: q,
                    ..
                },
            ) => c == d && p == q && self.var(*v, *w),
            (Op::Subplan { nested: m, .. }, Op::Subplan { nested: n, .. }) => self.op(m, n),
            _ => false,
        };
        if !head {
            return false;
        }
        let (xs, ys) = (a.inputs(), b.inputs());
        xs.len() == ys.len() && xs.into_iter().zip(ys).all(|(x, y)| self.op(x, y))
    }
}

/// True iff the operator trees are isomorphic under a bijective renaming of
/// variables.
pub fn op_alpha_equal(a: &Op, b: &Op) -> bool {
    Renaming::default().op(a, b)
}

pub fn plan_alpha_equal(a: &LogicalPlan, b: &LogicalPlan) -> bool {
    op_alpha_equal(&a.root, &b.root)
}
