//! Rewrite rules. Each rule inspects a single operator (and whatever lies
//! below it) and either rewrites it in place or declines.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::analysis::Analysis;
use crate::algebra::{LExpr, Op, TwoStep, Var};
use crate::frontend::normalize::{DISTINCT_ONLY, SORT_DISTINCT, SORT_ONLY};
use crate::xdm::{AtomicValue, SeqType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Logical,
    LogicalToPhysical,
    Physical,
}

/// Where in the plan the operator under inspection sits.
#[derive(Clone, Copy, Debug)]
pub struct Locus {
    /// Inside a nested plan.
    pub nested: bool,
    /// The tuple entering this chain is the empty tuple: either the chain
    /// ends in EMPTY-TUPLE-SOURCE, or it is a nested plan whose SUBPLAN reads
    /// straight from EMPTY-TUPLE-SOURCE.
    pub empty_outer: bool,
}

/// What the driver must do after a rule rewrote an operator in place.
pub enum Edit {
    Local,
    /// Replace every read of the variable in the whole plan.
    Substitute(Var, LExpr),
}

pub type Apply = fn(&mut Op, Locus, &Analysis) -> Option<Edit>;

#[derive(Clone, Copy)]
pub struct RewriteRule {
    pub name: &'static str,
    pub stage: Stage,
    pub apply: Apply,
}

impl std::fmt::Debug for RewriteRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Rules in priority order.
pub fn standard_rules() -> Vec<RewriteRule> {
    use Stage::*;
    let r = |name, stage, apply| RewriteRule { name, stage, apply };
    vec![
        r("remove_sort", Logical, remove_sort as Apply),
        r("remove_subplan", Logical, remove_subplan),
        r("scalar_to_unnest", Logical, scalar_to_unnest),
        r("combine_unnest", Logical, combine_unnest),
        r("introduce_datascan", Logical, introduce_datascan),
        r("push_child_into_datascan", Logical, push_child_into_datascan),
        r("scalar_to_aggregate", Logical, scalar_to_aggregate),
        r("inline_single_item_subplan", Logical, inline_single_item_subplan),
        r("remove_redundant_treat", Logical, remove_redundant_treat),
        r("inline_assign", Logical, inline_assign),
        r("introduce_cross_product", Logical, introduce_cross_product),
        r("split_conjunctive_select", Logical, split_conjunctive_select),
        r("push_into_join_branch", Logical, push_into_join_branch),
        r("merge_select_into_join", Logical, merge_select_into_join),
        r("annotate_two_step", Logical, annotate_two_step),
        r("bridge_join_equality", LogicalToPhysical, bridge_join_equality),
    ]
}

fn take(b: &mut Box<Op>) -> Op {
    std::mem::replace(&mut **b, Op::EmptyTupleSource)
}

fn var_arg(e: &LExpr, f: &str) -> Option<Var> {
    match e.as_call()? {
        (n, [LExpr::Var(v)]) if n == f => Some(*v),
        _ => None,
    }
}

/// Drops or weakens a sort whose input already has the properties it
/// establishes.
fn remove_sort(op: &mut Op, _: Locus, a: &Analysis) -> Option<Edit> {
    let Op::Assign { var, expr, input } = op else { return None };
    let (name, x) = match expr.as_call()? {
        (n, [LExpr::Var(x)]) if n == SORT_DISTINCT || n == SORT_ONLY || n == DISTINCT_ONLY => (n, *x),
        _ => return None,
    };
    let p = a.property(x);
    let sort = (name == SORT_DISTINCT || name == SORT_ONLY) && !p.document_ordered;
    let dedup = (name == SORT_DISTINCT || name == DISTINCT_ONLY) && !p.duplicate_free;
    let keep = match (sort, dedup) {
        (true, true) => SORT_DISTINCT,
        (true, false) => SORT_ONLY,
        (false, true) => DISTINCT_ONLY,
        (false, false) => {
            let v = *var;
            *op = take(input);
            return Some(Edit::Substitute(v, LExpr::Var(x)));
        }
    };
    if keep == name {
        return None;
    }
    *expr = LExpr::call(keep, vec![LExpr::Var(x)]);
    Some(Edit::Local)
}

/// A unary chain down to NESTED-TUPLE-SOURCE with no joins.
fn unary_to_nts(op: &Op) -> bool {
    match op {
        Op::NestedTupleSource => true,
        Op::Join { .. } | Op::EmptyTupleSource => false,
        other => other.input().is_some_and(unary_to_nts),
    }
}

fn replace_nts(op: &mut Op, with: Op) {
    match op {
        Op::NestedTupleSource => *op = with,
        other => replace_nts(other.input_mut().expect("unary chain"), with),
    }
}

/// UNNEST iterate over a SUBPLAN that only collects a sequence: run the
/// nested operators in the outer pipeline instead.
fn remove_subplan(op: &mut Op, _: Locus, a: &Analysis) -> Option<Edit> {
    let Op::Unnest { expr, input, .. } = op else { return None };
    let s = var_arg(expr, "iterate")?;
    let Op::Subplan { nested, .. } = &**input else { return None };
    let Op::Aggregate { var, expr: agg, input: inner, .. } = &**nested else { return None };
    if *var != s || a.uses(s) != 1 || !agg.is_call("create_sequence") || !unary_to_nts(inner) {
        return None;
    }
    let Op::Subplan { nested, input: outer } = take(input) else { unreachable!() };
    let Op::Aggregate { var, expr: agg, input: mut inner, .. } = *nested else { unreachable!() };
    let LExpr::Call(_, mut args) = agg else { unreachable!() };
    replace_nts(&mut inner, *outer);
    **input = Op::Assign {
        var,
        expr: args.pop().expect("create_sequence has one argument"),
        input: inner,
    };
    Some(Edit::Local)
}

/// Scalar functions with an unnesting counterpart of the same name.
fn has_unnesting_form(name: &str) -> bool {
    matches!(name, "child" | "attribute")
}

/// UNNEST iterate over an ASSIGN of a step becomes an unnesting step.
fn scalar_to_unnest(op: &mut Op, _: Locus, a: &Analysis) -> Option<Edit> {
    let Op::Unnest { expr, input, .. } = op else { return None };
    let x = var_arg(expr, "iterate")?;
    let Op::Assign { var, expr: step, .. } = &**input else { return None };
    if *var != x || a.uses(x) != 1 || !has_unnesting_form(step.as_call()?.0) {
        return None;
    }
    let Op::Assign { expr: step, input: below, .. } = take(input) else { unreachable!() };
    *expr = step;
    *input = below;
    Some(Edit::Local)
}

/// Two stacked unnesting child steps become one step over a scalar path.
fn combine_unnest(op: &mut Op, _: Locus, a: &Analysis) -> Option<Edit> {
    let Op::Unnest { expr, input, .. } = op else { return None };
    let (outer, [base, _]) = expr.as_call()? else { return None };
    let Op::Unnest { var: v, expr: inner, .. } = &**input else { return None };
    let v = *v;
    if !has_unnesting_form(outer) || !inner.is_call("child") || base.uses(v) != 1 || a.uses(v) != 1 {
        return None;
    }
    let Op::Unnest { expr: inner, input: below, .. } = take(input) else { unreachable!() };
    expr.substitute(v, &inner);
    *input = below;
    Some(Edit::Local)
}

/// The string constant inside `promote(data("..."), string)` and similar
/// wrappers.
fn constant_string(e: &LExpr) -> Option<&str> {
    match e {
        LExpr::Const(AtomicValue::String(s)) => Some(s),
        LExpr::Call(n, args) if matches!(&**n, "data" | "promote" | "treat") => constant_string(&args[0]),
        _ => None,
    }
}

/// UNNEST iterate over ASSIGN collection(...) becomes a DATASCAN.
fn introduce_datascan(op: &mut Op, _: Locus, a: &Analysis) -> Option<Edit> {
    let Op::Unnest { var, expr, input } = op else { return None };
    let c = var_arg(expr, "iterate")?;
    let Op::Assign { var: cv, expr: coll, .. } = &**input else { return None };
    if *cv != c || a.uses(c) != 1 {
        return None;
    }
    let ("collection", [arg]) = coll.as_call()? else { return None };
    let name: Arc<str> = Arc::from(constant_string(arg)?);
    let Op::Assign { input: below, .. } = take(input) else { unreachable!() };
    *op = Op::DataScan {
        var: *var,
        collection: name,
        path: Vec::new(),
        input: below,
    };
    Some(Edit::Local)
}

/// Element names of a pure child path over `v`, outermost step last.
fn child_path(e: &LExpr, v: Var) -> Option<Vec<Arc<str>>> {
    match e {
        LExpr::Var(w) if *w == v => Some(Vec::new()),
        LExpr::Call(n, args) => match (&**n, args.as_slice()) {
            ("treat", [x, LExpr::Type(t)]) if *t != SeqType::AnyType && !matches!(t, SeqType::Atomic(_)) => {
                child_path(x, v)
            }
            ("child", [x, LExpr::Const(AtomicValue::String(name))]) => {
                let mut p = child_path(x, v)?;
                p.push(Arc::from(&**name));
                Some(p)
            }
            _ => None,
        },
        _ => None,
    }
}

/// UNNEST of a child path over a DATASCAN moves the path into the scan.
fn push_child_into_datascan(op: &mut Op, _: Locus, a: &Analysis) -> Option<Edit> {
    let Op::Unnest { var, expr, input } = op else { return None };
    let Op::DataScan { var: d, .. } = &**input else { return None };
    let d = *d;
    let steps = child_path(expr, d)?;
    if steps.is_empty() || a.uses(d) != 1 {
        return None;
    }
    let r = *var;
    let Op::DataScan { var, collection, mut path, input: below } = take(input) else { unreachable!() };
    path.extend(steps);
    *op = Op::DataScan {
        var,
        collection,
        path,
        input: below,
    };
    Some(Edit::Substitute(r, LExpr::Var(d)))
}

const TWO_STEP_AGGREGATES: [&str; 5] = ["count", "sum", "avg", "min", "max"];

/// Rebuilds `e` with the innermost argument of a chain of one-argument
/// wrappers (treat, data) replaced, if the chain bottoms out at `v`.
fn rewrap(e: &LExpr, v: Var, with: &LExpr) -> Option<LExpr> {
    match e {
        LExpr::Var(w) if *w == v => Some(with.clone()),
        LExpr::Call(n, args) => match (&**n, args.as_slice()) {
            ("treat", [x, t @ LExpr::Type(_)]) => Some(LExpr::call("treat", vec![rewrap(x, v, with)?, t.clone()])),
            ("data", [x]) => Some(LExpr::call("data", vec![rewrap(x, v, with)?])),
            _ => None,
        },
        _ => None,
    }
}

/// An aggregate function applied to a collected sequence becomes the
/// SUBPLAN's aggregate.
fn scalar_to_aggregate(op: &mut Op, _: Locus, a: &Analysis) -> Option<Edit> {
    let Op::Assign { var: x, expr, input } = op else { return None };
    let (f, [arg]) = expr.as_call()? else { return None };
    if !TWO_STEP_AGGREGATES.contains(&f) {
        return None;
    }
    let Op::Subplan { nested, .. } = &**input else { return None };
    let Op::Aggregate { var: s, expr: agg, .. } = &**nested else { return None };
    let ("create_sequence", [item]) = agg.as_call()? else { return None };
    if a.uses(*s) != 1 {
        return None;
    }
    let new_expr = LExpr::call(f, vec![rewrap(arg, *s, item)?]);
    let x = *x;
    let Op::Subplan { nested, input: outer } = take(input) else { unreachable!() };
    let Op::Aggregate { input: inner, .. } = *nested else { unreachable!() };
    *op = Op::Subplan {
        nested: Box::new(Op::Aggregate {
            var: x,
            expr: new_expr,
            two_step: None,
            input: inner,
        }),
        input: outer,
    };
    Some(Edit::Local)
}

/// A SUBPLAN that iterates a variable holding one item and collects an
/// expression of it is just that expression.
fn inline_single_item_subplan(op: &mut Op, _: Locus, a: &Analysis) -> Option<Edit> {
    let Op::Subplan { nested, input } = op else { return None };
    let Op::Aggregate { var, expr: agg, input: inner, .. } = &**nested else { return None };
    let ("create_sequence", [item]) = agg.as_call()? else { return None };
    let Op::Unnest { var: it, expr: gen, input: src } = &**inner else { return None };
    let r = var_arg(gen, "iterate")?;
    if !matches!(**src, Op::NestedTupleSource) || !a.single_item.contains(&r) {
        return None;
    }
    let mut item = item.clone();
    item.substitute(*it, &LExpr::Var(r));
    let var = *var;
    *op = Op::Assign {
        var,
        expr: item,
        input: Box::new(take(input)),
    };
    Some(Edit::Local)
}

fn strip_treats(e: &mut LExpr, elements: &std::collections::HashSet<Var>) -> bool {
    if let LExpr::Call(n, args) = e {
        if &**n == "treat" {
            if let [LExpr::Var(v), LExpr::Type(t)] = args.as_slice() {
                if elements.contains(v) && matches!(t, SeqType::ElementNode | SeqType::AnyNode | SeqType::AnyType) {
                    *e = LExpr::Var(*v);
                    return true;
                }
            }
        }
        let mut changed = false;
        for a in args {
            changed |= strip_treats(a, elements);
        }
        return changed;
    }
    false
}

/// Items of a DATASCAN with a path are elements, so treating them as
/// elements cannot fail.
fn remove_redundant_treat(op: &mut Op, _: Locus, a: &Analysis) -> Option<Edit> {
    if a.scanned_elements.is_empty() {
        return None;
    }
    let mut changed = false;
    for e in op.expressions_mut() {
        changed |= strip_treats(e, &a.scanned_elements);
    }
    changed.then_some(Edit::Local)
}

/// Folds an ASSIGN into the ASSIGN directly above it when that is its only
/// reader.
fn inline_assign(op: &mut Op, _: Locus, a: &Analysis) -> Option<Edit> {
    let Op::Assign { expr, input, .. } = op else { return None };
    let Op::Assign { var: x, .. } = &**input else { return None };
    let x = *x;
    if expr.uses(x) != 1 || a.uses(x) != 1 {
        return None;
    }
    let Op::Assign { expr: g, input: below, .. } = take(input) else { unreachable!() };
    expr.substitute(x, &g);
    *input = below;
    Some(Edit::Local)
}

fn contains_scan(op: &Op) -> bool {
    match op {
        Op::DataScan { .. } | Op::Join { .. } => true,
        other => other.input().is_some_and(contains_scan),
    }
}

/// A DATASCAN whose input already scans another collection does not depend
/// on it: make the pair an explicit cross product.
fn introduce_cross_product(op: &mut Op, locus: Locus, _: &Analysis) -> Option<Edit> {
    if !locus.empty_outer {
        return None;
    }
    let Op::DataScan { input, .. } = op else { return None };
    if !contains_scan(input) {
        return None;
    }
    let leaf = match input.leaf() {
        Op::NestedTupleSource => Op::NestedTupleSource,
        _ => Op::EmptyTupleSource,
    };
    let other = take(input);
    **input = leaf;
    let scan = std::mem::replace(op, Op::EmptyTupleSource);
    *op = Op::Join {
        cond: LExpr::Const(AtomicValue::Boolean(true)),
        branches: Box::new([scan, other]),
    };
    Some(Edit::Local)
}

/// Conjuncts of a condition, looking through `boolean` wrappers of `and`.
pub fn conjuncts(e: &LExpr) -> Vec<LExpr> {
    match e.as_call() {
        Some(("and", [l, r])) => {
            let mut out = conjuncts(l);
            out.extend(conjuncts(r));
            out
        }
        Some(("boolean", [inner])) if inner.is_call("and") => conjuncts(inner),
        _ => vec![e.clone()],
    }
}

fn conjoin(mut parts: Vec<LExpr>) -> LExpr {
    let last = parts.pop().unwrap_or(LExpr::Const(AtomicValue::Boolean(true)));
    parts.into_iter().rev().fold(last, |acc, p| LExpr::call("and", vec![p, acc]))
}

fn split_conjunctive_select(op: &mut Op, _: Locus, _: &Analysis) -> Option<Edit> {
    let Op::Select { cond, input } = op else { return None };
    let mut parts = conjuncts(cond);
    if parts.len() < 2 {
        return None;
    }
    let first = parts.remove(0);
    *op = Op::Select {
        cond: first,
        input: Box::new(Op::Select {
            cond: conjoin(parts),
            input: Box::new(take(input)),
        }),
    };
    Some(Edit::Local)
}

/// Follows ASSIGN, SELECT and SUBPLAN operators down to a JOIN, collecting
/// what they produce on the way.
fn join_below<'a>(op: &'a Op, produced: &mut BTreeSet<Var>) -> Option<&'a Op> {
    match op {
        Op::Join { .. } => Some(op),
        Op::Assign { .. } | Op::Select { .. } | Op::Subplan { .. } => {
            produced.extend(op.produced());
            join_below(op.input()?, produced)
        }
        _ => None,
    }
}

/// An ASSIGN, SELECT or SUBPLAN above a JOIN that reads only one branch's
/// variables moves to the top of that branch.
fn push_into_join_branch(op: &mut Op, _: Locus, _: &Analysis) -> Option<Edit> {
    if !matches!(op, Op::Assign { .. } | Op::Select { .. } | Op::Subplan { .. }) {
        return None;
    }
    let free = op.free_variables();
    let mut between = BTreeSet::new();
    let Op::Join { branches, .. } = join_below(op.input()?, &mut between)? else { return None };
    if free.iter().any(|v| between.contains(v)) {
        return None;
    }
    let target = (0..2).find(|&i| free.is_subset(&branches[i].schema()))?;
    let input = op.take_input().expect("unary operator");
    let mut moved = std::mem::replace(op, input);
    let Some(Op::Join { branches, .. }) = find_join(op) else { unreachable!() };
    let branch = std::mem::replace(&mut branches[target], Op::EmptyTupleSource);
    *moved.input_mut().expect("unary operator") = branch;
    branches[target] = moved;
    Some(Edit::Local)
}

fn find_join(op: &mut Op) -> Option<&mut Op> {
    match op {
        Op::Join { .. } => Some(op),
        other => find_join(other.input_mut()?),
    }
}

fn merge_select_into_join(op: &mut Op, _: Locus, _: &Analysis) -> Option<Edit> {
    let Op::Select { cond, input } = op else { return None };
    if !matches!(**input, Op::Join { .. }) {
        return None;
    }
    let extra = cond.clone();
    let Op::Join { cond: jc, branches } = take(input) else { unreachable!() };
    let cond = if matches!(jc, LExpr::Const(AtomicValue::Boolean(true))) {
        extra
    } else {
        let mut parts = conjuncts(&jc);
        parts.push(extra);
        conjoin(parts)
    };
    *op = Op::Join { cond, branches };
    Some(Edit::Local)
}

fn scans_partitions(op: &Op) -> bool {
    let mut found = false;
    op.walk(&mut |o| found |= matches!(o, Op::DataScan { .. }));
    found
}

/// Marks aggregates over partitioned data for local/global evaluation.
fn annotate_two_step(op: &mut Op, _: Locus, _: &Analysis) -> Option<Edit> {
    let Op::Subplan { nested, input } = op else { return None };
    if !matches!(**input, Op::EmptyTupleSource) {
        return None;
    }
    let Op::Aggregate { expr, two_step, input: inner, .. } = &mut **nested else { return None };
    if two_step.is_some() || !scans_partitions(inner) {
        return None;
    }
    let (f, _) = expr.as_call()?;
    *two_step = Some(TwoStep::for_aggregate(f)?);
    Some(Edit::Local)
}

/// Rewrites cross-branch `boolean(value-eq($a, $b))` join conjuncts to the
/// language-neutral `equal($a, $b)` so that hash joins can be recognized.
fn bridge_join_equality(op: &mut Op, _: Locus, _: &Analysis) -> Option<Edit> {
    let Op::Join { cond, branches } = op else { return None };
    let left = branches[0].schema();
    let right = branches[1].schema();
    let mut changed = false;
    let parts: Vec<LExpr> = conjuncts(cond)
        .into_iter()
        .map(|c| match equality_operands(&c) {
            Some((x, y))
                if (left.contains(&x) && right.contains(&y)) || (left.contains(&y) && right.contains(&x)) =>
            {
                changed = true;
                LExpr::call("equal", vec![LExpr::Var(x), LExpr::Var(y)])
            }
            _ => c,
        })
        .collect();
    if !changed {
        return None;
    }
    *cond = conjoin(parts);
    Some(Edit::Local)
}

/// The variables of `boolean(value-eq($a, $b))` or `value-eq($a, $b)`.
pub fn equality_operands(e: &LExpr) -> Option<(Var, Var)> {
    let e = match e.as_call() {
        Some(("boolean", [inner])) => inner,
        _ => e,
    };
    match e.as_call()? {
        ("value-eq", [LExpr::Var(a), LExpr::Var(b)]) => Some((*a, *b)),
        _ => None,
    }
}
