//! Logical tuple algebra. A plan is a tree of operators whose tuples carry
//! fields named `$$N`; expressions inside operators are function calls over
//! those fields, constants and type names.

pub mod alpha;
pub mod fixtures;
pub mod functions;
pub mod parse;
pub mod print;
pub mod translate;
pub mod validate;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::xdm::{AtomicValue, SeqType};

pub use alpha::plan_alpha_equal;
pub use parse::parse_plan;
pub use print::print_plan;
pub use translate::translate;
pub use validate::validate;

/// A tuple field, printed `$$N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "$${}", self.0)
    }
}

/// An expression inside an operator. Whether a call is scalar, aggregate or
/// unnesting follows from the operator that holds it.
#[derive(Clone, Debug, PartialEq)]
pub enum LExpr {
    Var(Var),
    Const(AtomicValue),
    Type(SeqType),
    Call(Arc<str>, Vec<LExpr>),
}

impl LExpr {
    pub fn call(name: &str, args: Vec<LExpr>) -> LExpr {
        LExpr::Call(Arc::from(name), args)
    }

    pub fn string(s: &str) -> LExpr {
        LExpr::Const(AtomicValue::string(s))
    }

    pub fn is_call(&self, name: &str) -> bool {
        matches!(self, LExpr::Call(n, _) if &**n == name)
    }

    pub fn as_call(&self) -> Option<(&str, &[LExpr])> {
        match self {
            LExpr::Call(n, a) => Some((n, a)),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<Var> {
        match self {
            LExpr::Var(v) => Some(*v),
            _ => None,
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            LExpr::Var(v) => {
                out.insert(*v);
            }
            LExpr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            LExpr::Const(_) | LExpr::Type(_) => {}
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut s = BTreeSet::new();
        self.collect_vars(&mut s);
        s
    }

    pub fn uses(&self, v: Var) -> usize {
        match self {
            LExpr::Var(w) => usize::from(*w == v),
            LExpr::Call(_, args) => args.iter().map(|a| a.uses(v)).sum(),
            _ => 0,
        }
    }

    /// Replaces every occurrence of `v` by `with`.
    pub fn substitute(&mut self, v: Var, with: &LExpr) {
        match self {
            LExpr::Var(w) if *w == v => *self = with.clone(),
            LExpr::Call(_, args) => args.iter_mut().for_each(|a| a.substitute(v, with)),
            _ => {}
        }
    }
}

/// Local and global halves of a two-step aggregate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TwoStep {
    pub local: &'static str,
    pub global: &'static str,
}

impl TwoStep {
    pub fn for_aggregate(name: &str) -> Option<TwoStep> {
        let (local, global) = match name {
            "count" => ("count", "sum"),
            "sum" => ("sum", "sum"),
            "min" => ("min", "min"),
            "max" => ("max", "max"),
            "avg" => ("avg-partial", "avg-combine"),
            _ => return None,
        };
        Some(TwoStep { local, global })
    }

    pub fn from_names(local: &str, global: &str) -> Option<TwoStep> {
        ["count", "sum", "min", "max", "avg"]
            .iter()
            .filter_map(|n| TwoStep::for_aggregate(n))
            .find(|t| t.local == local && t.global == global)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    DistributeResult {
        var: Var,
        input: Box<Op>,
    },
    EmptyTupleSource,
    NestedTupleSource,
    Assign {
        var: Var,
        expr: LExpr,
        input: Box<Op>,
    },
    Unnest {
        var: Var,
        expr: LExpr,
        input: Box<Op>,
    },
    Select {
        cond: LExpr,
        input: Box<Op>,
    },
    /// Runs `nested` once per input tuple; the nested plan's root is an
    /// AGGREGATE whose variable is appended to the tuple.
    Subplan {
        nested: Box<Op>,
        input: Box<Op>,
    },
    Aggregate {
        var: Var,
        expr: LExpr,
        two_step: Option<TwoStep>,
        input: Box<Op>,
    },
    /// One tuple per item of a collection, or per match of `path` inside its
    /// documents when the path is non-empty.
    DataScan {
        var: Var,
        collection: Arc<str>,
        path: Vec<Arc<str>>,
        input: Box<Op>,
    },
    /// `branches[0]` is printed first.
    Join {
        cond: LExpr,
        branches: Box<[Op; 2]>,
    },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::DistributeResult { .. } => "DISTRIBUTE-RESULT",
            Op::EmptyTupleSource => "EMPTY-TUPLE-SOURCE",
            Op::NestedTupleSource => "NESTED-TUPLE-SOURCE",
            Op::Assign { .. } => "ASSIGN",
            Op::Unnest { .. } => "UNNEST",
            Op::Select { .. } => "SELECT",
            Op::Subplan { .. } => "SUBPLAN",
            Op::Aggregate { .. } => "AGGREGATE",
            Op::DataScan { .. } => "DATASCAN",
            Op::Join { .. } => "JOIN",
        }
    }

    pub fn inputs(&self) -> Vec<&Op> {
        match self {
            Op::EmptyTupleSource | Op::NestedTupleSource => vec![],
            Op::Join { branches, .. } => vec![&branches[0], &branches[1]],
            Op::DistributeResult { input, .. }
            | Op::Assign { input, .. }
            | Op::Unnest { input, .. }
            | Op::Select { input, .. }
            | Op::Subplan { input, .. }
            | Op::Aggregate { input, .. }
            | Op::DataScan { input, .. } => vec![input],
        }
    }

    pub fn inputs_mut(&mut self) -> Vec<&mut Op> {
        match self {
            Op::EmptyTupleSource | Op::NestedTupleSource => vec![],
            Op::Join { branches, .. } => {
                let [a, b] = &mut **branches;
                vec![a, b]
            }
            Op::DistributeResult { input, .. }
            | Op::Assign { input, .. }
            | Op::Unnest { input, .. }
            | Op::Select { input, .. }
            | Op::Subplan { input, .. }
            | Op::Aggregate { input, .. }
            | Op::DataScan { input, .. } => vec![input],
        }
    }

    /// The single input of a unary operator.
    pub fn input(&self) -> Option<&Op> {
        match self.inputs().as_slice() {
            [one] => Some(one),
            _ => None,
        }
    }

    pub fn input_mut(&mut self) -> Option<&mut Op> {
        let mut v = self.inputs_mut();
        if v.len() == 1 {
            v.pop()
        } else {
            None
        }
    }

    /// Takes the single input out, leaving a placeholder.
    pub fn take_input(&mut self) -> Option<Op> {
        self.input_mut().map(|i| std::mem::replace(i, Op::EmptyTupleSource))
    }

    pub fn nested(&self) -> Option<&Op> {
        match self {
            Op::Subplan { nested, .. } => Some(nested),
            _ => None,
        }
    }

    pub fn expressions(&self) -> Vec<&LExpr> {
        match self {
            Op::Assign { expr, .. } | Op::Unnest { expr, .. } | Op::Aggregate { expr, .. } => vec![expr],
            Op::Select { cond, .. } | Op::Join { cond, .. } => vec![cond],
            _ => vec![],
        }
    }

    pub fn expressions_mut(&mut self) -> Vec<&mut LExpr> {
        match self {
            Op::Assign { expr, .. } | Op::Unnest { expr, .. } | Op::Aggregate { expr, .. } => vec![expr],
            Op::Select { cond, .. } | Op::Join { cond, .. } => vec![cond],
            _ => vec![],
        }
    }

    /// Variables this operator adds to the tuples flowing through it.
    pub fn produced(&self) -> Vec<Var> {
        match self {
            Op::Assign { var, .. } | Op::Unnest { var, .. } | Op::Aggregate { var, .. } | Op::DataScan { var, .. } => {
                vec![*var]
            }
            Op::Subplan { nested, .. } => nested.produced(),
            _ => vec![],
        }
    }

    /// Variables read by this operator, counting reads made inside a nested
    /// plan that are not satisfied within it.
    pub fn used(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for e in self.expressions() {
            e.collect_vars(&mut out);
        }
        if let Op::DistributeResult { var, .. } = self {
            out.insert(*var);
        }
        if let Some(n) = self.nested() {
            out.extend(plan_free_variables(n));
        }
        out
    }

    /// Variables read by the operator minus those it produces.
    pub fn free_variables(&self) -> BTreeSet<Var> {
        let mut used = self.used();
        for p in self.produced() {
            used.remove(&p);
        }
        used
    }

    /// Every variable produced anywhere in this subtree, nested plans
    /// included.
    pub fn all_produced(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.walk(&mut |op| {
            match op {
                Op::Assign { var, .. } | Op::Unnest { var, .. } | Op::Aggregate { var, .. } | Op::DataScan { var, .. } => {
                    out.insert(*var);
                }
                _ => {}
            }
        });
        out
    }

    /// Variables visible in the output tuples of this operator, not counting
    /// those that come in through a nested-tuple-source.
    pub fn schema(&self) -> BTreeSet<Var> {
        let mut out: BTreeSet<Var> = self.inputs().into_iter().flat_map(|i| i.schema()).collect();
        out.extend(self.produced());
        out
    }

    /// Pre-order visit of this operator, its inputs and nested plans.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Op)) {
        f(self);
        if let Some(n) = self.nested() {
            n.walk(f);
        }
        for i in self.inputs() {
            i.walk(f);
        }
    }

    /// Counts reads of `v` anywhere in this subtree.
    pub fn uses_of(&self, v: Var) -> usize {
        let mut n = 0;
        self.walk(&mut |op| {
            n += op.expressions().iter().map(|e| e.uses(v)).sum::<usize>();
            if let Op::DistributeResult { var, .. } = op {
                n += usize::from(*var == v);
            }
        });
        n
    }

    /// Replaces reads of `v` by `with` throughout this subtree.
    pub fn substitute(&mut self, v: Var, with: &LExpr) {
        for e in self.expressions_mut() {
            e.substitute(v, with);
        }
        if let Op::DistributeResult { var, .. } = self {
            if *var == v {
                if let LExpr::Var(w) = with {
                    *var = *w;
                }
            }
        }
        if let Op::Subplan { nested, .. } = self {
            nested.substitute(v, with);
        }
        for i in self.inputs_mut() {
            i.substitute(v, with);
        }
    }

    /// The source at the bottom of a unary chain, following the first
    /// branch of joins.
    pub fn leaf(&self) -> &Op {
        match self.inputs().first() {
            Some(i) => i.leaf(),
            None => self,
        }
    }

    pub fn count_ops(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

/// Variables a (nested) plan reads that it does not itself produce.
pub fn plan_free_variables(op: &Op) -> BTreeSet<Var> {
    let produced = op.all_produced();
    let mut used = BTreeSet::new();
    op.walk(&mut |o| {
        for e in o.expressions() {
            e.collect_vars(&mut used);
        }
        if let Op::DistributeResult { var, .. } = o {
            used.insert(*var);
        }
    });
    used.retain(|v| !produced.contains(v));
    used
}

/// A complete query plan rooted at DISTRIBUTE-RESULT.
#[derive(Clone, Debug, PartialEq)]
pub struct LogicalPlan {
    pub root: Op,
}

impl LogicalPlan {
    pub fn result_var(&self) -> Option<Var> {
        match self.root {
            Op::DistributeResult { var, .. } => Some(var),
            _ => None,
        }
    }

    /// One past the largest variable number in use.
    pub fn next_var(&self) -> u32 {
        let mut max = 0;
        self.root.walk(&mut |op| {
            for v in op.produced() {
                max = max.max(v.0 + 1);
            }
        });
        max
    }
}

impl fmt::Display for LogicalPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_plan(self))
    }
}
