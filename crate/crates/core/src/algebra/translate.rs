//! Core syntax tree to the initial logical plan.
//!
//! Path steps become a SUBPLAN that iterates the input sequence and
//! collects the step results, followed by an ASSIGN of the sort function
//! the normalizer put there. `for` clauses become UNNEST iterate, `let`
//! becomes ASSIGN, `where` becomes SELECT, and the query result is unnested
//! into DISTRIBUTE-RESULT.

use super::functions::XQUERY_AGGREGATES;
use super::{LExpr, LogicalPlan, Op, Var};
use crate::error::{Error, Result};
use crate::frontend::ast::{Clause, Expr, Literal};
use crate::frontend::normalize::{DISTINCT_ONLY, SORT_DISTINCT, SORT_ONLY};

struct Translator {
    next: u32,
    scope: Vec<(String, Var)>,
}

fn boxed(op: Op) -> Box<Op> {
    Box::new(op)
}

impl Translator {
    fn fresh(&mut self) -> Var {
        self.next += 1;
        Var(self.next)
    }

    fn lookup(&self, name: &str) -> Result<Var> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Bind(name.to_string()))
    }

    fn assign(&mut self, e: LExpr, cur: Op) -> (Op, Var) {
        let var = self.fresh();
        (
            Op::Assign {
                var,
                expr: e,
                input: boxed(cur),
            },
            var,
        )
    }

    /// Binds `e` to a variable, reusing it when it already is one.
    fn as_var(&mut self, e: LExpr, cur: Op) -> (Op, Var) {
        match e {
            LExpr::Var(v) => (cur, v),
            other => self.assign(other, cur),
        }
    }

    fn literal(l: &Literal) -> LExpr {
        LExpr::Const(l.to_atomic())
    }

    /// Adds the operators of a FLWOR's clauses on top of `cur`, leaving the
    /// clause variables in scope for the caller to pop.
    fn clauses(&mut self, clauses: &[Clause], where_clause: Option<&Expr>, mut cur: Op) -> Result<Op> {
        for c in clauses {
            match c {
                Clause::For { var, input } => {
                    let (op, e) = self.expr(input, cur)?;
                    let (op, seq) = self.as_var(e, op);
                    let v = self.fresh();
                    cur = Op::Unnest {
                        var: v,
                        expr: LExpr::call("iterate", vec![LExpr::Var(seq)]),
                        input: boxed(op),
                    };
                    self.scope.push((var.clone(), v));
                }
                Clause::Let { var, value } => {
                    let (op, e) = self.expr(value, cur)?;
                    let (op, v) = self.as_var(e, op);
                    cur = op;
                    self.scope.push((var.clone(), v));
                }
            }
        }
        if let Some(w) = where_clause {
            let (op, cond) = self.expr(w, cur)?;
            cur = Op::Select {
                cond,
                input: boxed(op),
            };
        }
        Ok(cur)
    }

    /// Translates `e` as a tuple stream: FLWOR clauses become operators on
    /// `cur` and the returned expression is evaluated once per tuple.
    fn stream(&mut self, e: &Expr, cur: Op) -> Result<(Op, LExpr)> {
        match e {
            Expr::Flwor {
                clauses,
                where_clause,
                ret,
            } => {
                let depth = self.scope.len();
                let op = self.clauses(clauses, where_clause.as_deref(), cur)?;
                let out = self.stream(ret, op);
                self.scope.truncate(depth);
                out
            }
            other => self.expr(other, cur),
        }
    }

    /// SUBPLAN collecting the stream of `e` into one sequence.
    fn collect(&mut self, e: &Expr, cur: Op) -> Result<(Op, Var)> {
        let (inner, item) = self.stream(e, Op::NestedTupleSource)?;
        let var = self.fresh();
        Ok((
            Op::Subplan {
                nested: boxed(Op::Aggregate {
                    var,
                    expr: LExpr::call("create_sequence", vec![item]),
                    two_step: None,
                    input: boxed(inner),
                }),
                input: boxed(cur),
            },
            var,
        ))
    }

    fn args(&mut self, args: &[Expr], mut cur: Op) -> Result<(Op, Vec<LExpr>)> {
        let mut out = Vec::with_capacity(args.len());
        for a in args {
            let (op, e) = self.expr(a, cur)?;
            cur = op;
            out.push(e);
        }
        Ok((cur, out))
    }

    /// Comparison operands get their own ASSIGN unless they are constants
    /// or variables already.
    fn operand(&mut self, e: &Expr, cur: Op) -> Result<(Op, LExpr)> {
        let (op, x) = self.expr(e, cur)?;
        Ok(match x {
            LExpr::Var(_) | LExpr::Const(_) => (op, x),
            other => {
                let (op, v) = self.assign(other, op);
                (op, LExpr::Var(v))
            }
        })
    }

    fn expr(&mut self, e: &Expr, cur: Op) -> Result<(Op, LExpr)> {
        Ok(match e {
            Expr::Literal(l) => (cur, Self::literal(l)),
            Expr::Var(name) => (cur, LExpr::Var(self.lookup(name)?)),
            Expr::Type(t) => (cur, LExpr::Type(*t)),
            Expr::Sequence(items) => {
                let (op, args) = self.args(items, cur)?;
                (op, LExpr::call("concatenate", args))
            }
            Expr::Flwor { .. } => {
                let (op, v) = self.collect(e, cur)?;
                (op, LExpr::Var(v))
            }
            Expr::Some {
                var,
                input,
                satisfies,
            } => {
                let (inner, seq) = self.expr(input, Op::NestedTupleSource)?;
                let (inner, seq) = self.as_var(seq, inner);
                let x = self.fresh();
                let inner = Op::Unnest {
                    var: x,
                    expr: LExpr::call("iterate", vec![LExpr::Var(seq)]),
                    input: boxed(inner),
                };
                self.scope.push((var.clone(), x));
                let res = self.expr(satisfies, inner);
                self.scope.pop();
                let (inner, cond) = res?;
                let q = self.fresh();
                (
                    Op::Subplan {
                        nested: boxed(Op::Aggregate {
                            var: q,
                            expr: LExpr::call("some", vec![cond]),
                            two_step: None,
                            input: boxed(inner),
                        }),
                        input: boxed(cur),
                    },
                    LExpr::Var(q),
                )
            }
            Expr::Map { input, var, body } => {
                let (op, seq) = self.expr(input, cur)?;
                let (op, seq) = self.as_var(seq, op);
                let it = self.fresh();
                let inner = Op::Unnest {
                    var: it,
                    expr: LExpr::call("iterate", vec![LExpr::Var(seq)]),
                    input: boxed(Op::NestedTupleSource),
                };
                self.scope.push((var.clone(), it));
                let res = self.expr(body, inner);
                self.scope.pop();
                let (inner, item) = res?;
                let v = self.fresh();
                (
                    Op::Subplan {
                        nested: boxed(Op::Aggregate {
                            var: v,
                            expr: LExpr::call("create_sequence", vec![item]),
                            two_step: None,
                            input: boxed(inner),
                        }),
                        input: boxed(op),
                    },
                    LExpr::Var(v),
                )
            }
            Expr::Call { name, args } if matches!(name.as_str(), SORT_DISTINCT | SORT_ONLY | DISTINCT_ONLY) => {
                let (op, args) = self.args(args, cur)?;
                let (op, v) = self.assign(LExpr::call(name, args), op);
                (op, LExpr::Var(v))
            }
            Expr::Call { name, args } if XQUERY_AGGREGATES.contains(&name.as_str()) => {
                let (op, args) = self.args(args, cur)?;
                let (op, v) = self.assign(LExpr::call(name, args), op);
                (op, LExpr::Var(v))
            }
            Expr::Call { name, args } => {
                let (op, args) = self.args(args, cur)?;
                (op, LExpr::call(name, args))
            }
            Expr::Compare {
                op,
                general,
                left,
                right,
            } => {
                let (cur, l) = self.operand(left, cur)?;
                let (cur, r) = self.operand(right, cur)?;
                let name = if *general { op.general_name() } else { op.value_name() };
                (cur, LExpr::call(name, vec![l, r]))
            }
            Expr::Arith { op, left, right } => {
                let (cur, l) = self.expr(left, cur)?;
                let (cur, r) = self.expr(right, cur)?;
                (cur, LExpr::call(op.function_name(), vec![l, r]))
            }
            Expr::Neg(inner) => {
                let (cur, x) = self.expr(inner, cur)?;
                (cur, LExpr::call("numeric-unary-minus", vec![x]))
            }
            Expr::And(l, r) | Expr::Or(l, r) => {
                let (cur, a) = self.expr(l, cur)?;
                let (cur, b) = self.expr(r, cur)?;
                let name = if matches!(e, Expr::And(..)) { "and" } else { "or" };
                (cur, LExpr::call(name, vec![a, b]))
            }
            Expr::Step { .. } => {
                return Err(Error::Translation(
                    "path step in a core tree; normalize the query first".into(),
                ))
            }
        })
    }
}

/// Builds the initial plan for a normalized query.
pub fn translate(core: &Expr) -> Result<LogicalPlan> {
    let mut t = Translator {
        next: 0,
        scope: Vec::new(),
    };
    let (op, e) = t.stream(core, Op::EmptyTupleSource)?;
    let (op, seq) = t.as_var(e, op);
    let out = t.fresh();
    let root = Op::DistributeResult {
        var: out,
        input: boxed(Op::Unnest {
            var: out,
            expr: LExpr::call("iterate", vec![LExpr::Var(seq)]),
            input: boxed(op),
        }),
    };
    let plan = LogicalPlan { root };
    super::validate(&plan).map_err(|e| Error::Translation(format!("translation produced an invalid plan: {}", e)))?;
    Ok(plan)
}

