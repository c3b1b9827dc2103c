//! Mapping of an optimized logical plan onto physical operators.

use std::fmt;
use std::sync::Arc;

use super::rules::{conjuncts, standard_rules, Stage};
use super::run_optimizer;
use crate::algebra::{LExpr, LogicalPlan, Op, TwoStep, Var};
use crate::error::{Error, Result};
use crate::xml_ingest::PartitionSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanScope {
    /// Partition `i` of the output reads the files of partition `i`.
    Partitioned,
    /// Each input tuple sees every partition, read in partition order.
    AllPartitions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggMode {
    Single,
    Local(TwoStep),
    Global(TwoStep),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExchangeKind {
    OneToOne,
    /// Routes each tuple by a hash of the key variables.
    HashPartition(Vec<Var>),
    /// Concatenates all partitions, in partition order, into one.
    MergeToOne,
    /// Every output partition receives all input tuples.
    Broadcast,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhysicalOp {
    EmptySource,
    NestedSource,
    PartitionedScan {
        var: Var,
        collection: Arc<str>,
        path: Arc<[Arc<str>]>,
        scope: ScanScope,
        input: Box<PhysicalOp>,
    },
    ScalarAssign {
        var: Var,
        expr: LExpr,
        input: Box<PhysicalOp>,
    },
    Select {
        cond: LExpr,
        input: Box<PhysicalOp>,
    },
    Unnest {
        var: Var,
        expr: LExpr,
        input: Box<PhysicalOp>,
    },
    /// Runs `nested` once per input tuple.
    Subplan {
        nested: Box<PhysicalOp>,
        input: Box<PhysicalOp>,
    },
    StreamingAggregate {
        var: Var,
        expr: LExpr,
        mode: AggMode,
        input: Box<PhysicalOp>,
    },
    /// Equality on `build_keys[i] = probe_keys[i]` selects candidates; `cond`
    /// is the full join condition and is checked on each candidate pair.
    HybridHashJoin {
        build_keys: Vec<Var>,
        probe_keys: Vec<Var>,
        cond: LExpr,
        build: Box<PhysicalOp>,
        probe: Box<PhysicalOp>,
    },
    /// `inner` is broadcast to every partition of `outer`.
    NestedLoopJoin {
        cond: LExpr,
        outer: Box<PhysicalOp>,
        inner: Box<PhysicalOp>,
    },
    Exchange {
        kind: ExchangeKind,
        input: Box<PhysicalOp>,
    },
    ResultSink {
        var: Var,
        input: Box<PhysicalOp>,
    },
}

impl PhysicalOp {
    pub fn name(&self) -> &'static str {
        match self {
            PhysicalOp::EmptySource => "EMPTY-SOURCE",
            PhysicalOp::NestedSource => "NESTED-SOURCE",
            PhysicalOp::PartitionedScan { .. } => "PARTITIONED-SCAN",
            PhysicalOp::ScalarAssign { .. } => "ASSIGN",
            PhysicalOp::Select { .. } => "SELECT",
            PhysicalOp::Unnest { .. } => "UNNEST",
            PhysicalOp::Subplan { .. } => "SUBPLAN",
            PhysicalOp::StreamingAggregate { .. } => "STREAMING-AGGREGATE",
            PhysicalOp::HybridHashJoin { .. } => "HYBRID-HASH-JOIN",
            PhysicalOp::NestedLoopJoin { .. } => "NESTED-LOOP-JOIN",
            PhysicalOp::Exchange { .. } => "EXCHANGE",
            PhysicalOp::ResultSink { .. } => "RESULT-SINK",
        }
    }

    pub fn inputs(&self) -> Vec<&PhysicalOp> {
        match self {
            PhysicalOp::EmptySource | PhysicalOp::NestedSource => vec![],
            PhysicalOp::HybridHashJoin { build, probe, .. } => vec![build, probe],
            PhysicalOp::NestedLoopJoin { outer, inner, .. } => vec![outer, inner],
            PhysicalOp::PartitionedScan { input, .. }
            | PhysicalOp::ScalarAssign { input, .. }
            | PhysicalOp::Select { input, .. }
            | PhysicalOp::Unnest { input, .. }
            | PhysicalOp::Subplan { input, .. }
            | PhysicalOp::StreamingAggregate { input, .. }
            | PhysicalOp::Exchange { input, .. }
            | PhysicalOp::ResultSink { input, .. } => vec![input],
        }
    }

    /// Pre-order visit including nested plans.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a PhysicalOp)) {
        f(self);
        if let PhysicalOp::Subplan { nested, .. } = self {
            nested.walk(f);
        }
        for i in self.inputs() {
            i.walk(f);
        }
    }

    fn fmt_indented(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth);
        let head = match self {
            PhysicalOp::PartitionedScan {
                var,
                collection,
                path,
                scope,
                ..
            } => {
                let p: Vec<&str> = path.iter().map(|s| &**s).collect();
                format!(
                    "PARTITIONED-SCAN( {}, \"{}\", \"/{}\", {:?} )",
                    var,
                    collection,
                    p.join("/"),
                    scope
                )
            }
            PhysicalOp::ScalarAssign { var, expr, .. } => format!("ASSIGN( {}:{} )", var, expr),
            PhysicalOp::Select { cond, .. } => format!("SELECT( {} )", cond),
            PhysicalOp::Unnest { var, expr, .. } => format!("UNNEST( {}:{} )", var, expr),
            PhysicalOp::StreamingAggregate { var, expr, mode, .. } => {
                format!("STREAMING-AGGREGATE( {}:{} ) {:?}", var, expr, mode)
            }
            PhysicalOp::HybridHashJoin {
                build_keys,
                probe_keys,
                cond,
                ..
            } => format!("HYBRID-HASH-JOIN( {:?} = {:?}, {} )", build_keys, probe_keys, cond),
            PhysicalOp::NestedLoopJoin { cond, .. } => format!("NESTED-LOOP-JOIN( {} )", cond),
            PhysicalOp::Exchange { kind, .. } => format!("EXCHANGE( {:?} )", kind),
            PhysicalOp::ResultSink { var, .. } => format!("RESULT-SINK( {} )", var),
            other => other.name().to_string(),
        };
        writeln!(f, "{}{}", pad, head)?;
        if let PhysicalOp::Subplan { nested, .. } = self {
            writeln!(f, "{}{{", pad)?;
            nested.fmt_indented(f, depth + 1)?;
            writeln!(f, "{}}}", pad)?;
        }
        let inputs = self.inputs();
        if inputs.len() == 2 {
            for i in inputs {
                writeln!(f, "{}{{", pad)?;
                i.fmt_indented(f, depth + 1)?;
                writeln!(f, "{}}}", pad)?;
            }
            Ok(())
        } else {
            inputs.into_iter().try_for_each(|i| i.fmt_indented(f, depth))
        }
    }
}

impl fmt::Display for PhysicalOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_indented(f, 0)
    }
}

#[derive(Clone, Debug)]
pub struct PhysicalPlan {
    pub root: PhysicalOp,
    pub partitions: usize,
}

impl PhysicalPlan {
    pub fn count(&self, pred: impl Fn(&PhysicalOp) -> bool) -> usize {
        let mut n = 0;
        self.root.walk(&mut |o| n += usize::from(pred(o)));
        n
    }
}

impl fmt::Display for PhysicalPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PhysicalConfig {
    /// Evaluate annotated aggregates as local plus global steps.
    pub two_step: bool,
    /// Use hash joins where a cross-branch equality allows it.
    pub hash_join: bool,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        PhysicalConfig {
            two_step: true,
            hash_join: true,
        }
    }
}

struct Mapper<'a> {
    spec: &'a PartitionSpec,
    config: PhysicalConfig,
}

fn boxed(op: PhysicalOp) -> Box<PhysicalOp> {
    Box::new(op)
}

/// Does the operator produce more than one partition?
fn partitioned(op: &PhysicalOp) -> bool {
    match op {
        PhysicalOp::EmptySource | PhysicalOp::NestedSource => false,
        PhysicalOp::PartitionedScan { scope, input, .. } => *scope == ScanScope::Partitioned || partitioned(input),
        PhysicalOp::HybridHashJoin { probe, .. } => partitioned(probe),
        PhysicalOp::NestedLoopJoin { outer, .. } => partitioned(outer),
        PhysicalOp::Exchange { kind, input } => match kind {
            ExchangeKind::MergeToOne => false,
            ExchangeKind::HashPartition(_) => true,
            _ => partitioned(input),
        },
        PhysicalOp::StreamingAggregate { mode, input, .. } => match mode {
            AggMode::Local(_) => partitioned(input),
            _ => false,
        },
        PhysicalOp::ResultSink { .. } => false,
        other => other.inputs().first().is_some_and(|i| partitioned(i)),
    }
}

fn merged(op: PhysicalOp) -> PhysicalOp {
    if partitioned(&op) {
        PhysicalOp::Exchange {
            kind: ExchangeKind::MergeToOne,
            input: boxed(op),
        }
    } else {
        op
    }
}

/// Replaces the NESTED-TUPLE-SOURCE at the bottom of a nested chain by an
/// empty source, for nested plans whose outer tuple is always empty.
fn detach(op: &Op) -> Op {
    let mut op = op.clone();
    fn go(op: &mut Op) {
        if let Op::NestedTupleSource = op {
            *op = Op::EmptyTupleSource;
            return;
        }
        for i in op.inputs_mut() {
            go(i);
        }
    }
    go(&mut op);
    op
}

fn contains_scan(op: &Op) -> bool {
    let mut found = false;
    op.walk(&mut |o| found |= matches!(o, Op::DataScan { .. }));
    found
}

/// Restores `equal($a, $b)` to the comparison it was bridged from.
fn restore(e: &LExpr) -> LExpr {
    match e.as_call() {
        Some(("equal", [a, b])) => LExpr::call("boolean", vec![LExpr::call("value-eq", vec![a.clone(), b.clone()])]),
        _ => match e {
            LExpr::Call(n, args) => LExpr::Call(n.clone(), args.iter().map(restore).collect()),
            other => other.clone(),
        },
    }
}

impl Mapper<'_> {
    fn estimated_bytes(&self, op: &Op) -> u64 {
        let mut n = 0;
        op.walk(&mut |o| {
            if let Op::DataScan { collection, .. } = o {
                n += self.spec.collection_bytes(collection);
            }
        });
        n
    }

    fn map(&self, op: &Op, nested: bool) -> Result<PhysicalOp> {
        let sub = |i: &Op| self.map(i, nested).map(boxed);
        Ok(match op {
            Op::DistributeResult { .. } => {
                return Err(Error::PhysicalPlan("DISTRIBUTE-RESULT below the plan root".into()))
            }
            Op::Aggregate { .. } => return Err(Error::PhysicalPlan("AGGREGATE outside a nested plan".into())),
            Op::EmptyTupleSource => PhysicalOp::EmptySource,
            Op::NestedTupleSource => PhysicalOp::NestedSource,
            Op::Assign { var, expr, input } => PhysicalOp::ScalarAssign {
                var: *var,
                expr: expr.clone(),
                input: sub(input)?,
            },
            Op::Unnest { var, expr, input } => PhysicalOp::Unnest {
                var: *var,
                expr: expr.clone(),
                input: sub(input)?,
            },
            Op::Select { cond, input } => PhysicalOp::Select {
                cond: cond.clone(),
                input: sub(input)?,
            },
            Op::DataScan {
                var,
                collection,
                path,
                input,
            } => {
                let scope = if !nested && matches!(**input, Op::EmptyTupleSource) {
                    ScanScope::Partitioned
                } else {
                    ScanScope::AllPartitions
                };
                let input = self.map(input, nested)?;
                PhysicalOp::PartitionedScan {
                    var: *var,
                    collection: collection.clone(),
                    path: path.clone().into(),
                    scope,
                    input: boxed(merged(input)),
                }
            }
            Op::Subplan { nested: n, input } => {
                let Op::Aggregate {
                    var,
                    expr,
                    two_step,
                    input: agg_in,
                } = &**n
                else {
                    return Err(Error::PhysicalPlan("nested plan without AGGREGATE root".into()));
                };
                if !nested && matches!(**input, Op::EmptyTupleSource) && contains_scan(agg_in) {
                    // The outer tuple is the empty tuple: run the nested plan
                    // as a partitioned pipeline of its own.
                    let body = self.map(&detach(agg_in), false)?;
                    match two_step.filter(|_| self.config.two_step && partitioned(&body)) {
                        Some(ts) => PhysicalOp::StreamingAggregate {
                            var: *var,
                            expr: expr.clone(),
                            mode: AggMode::Global(ts),
                            input: boxed(PhysicalOp::Exchange {
                                kind: ExchangeKind::MergeToOne,
                                input: boxed(PhysicalOp::StreamingAggregate {
                                    var: *var,
                                    expr: expr.clone(),
                                    mode: AggMode::Local(ts),
                                    input: boxed(body),
                                }),
                            }),
                        },
                        None => PhysicalOp::StreamingAggregate {
                            var: *var,
                            expr: expr.clone(),
                            mode: AggMode::Single,
                            input: boxed(merged(body)),
                        },
                    }
                } else {
                    PhysicalOp::Subplan {
                        nested: boxed(PhysicalOp::StreamingAggregate {
                            var: *var,
                            expr: expr.clone(),
                            mode: AggMode::Single,
                            input: boxed(self.map(agg_in, true)?),
                        }),
                        input: sub(input)?,
                    }
                }
            }
            Op::Join { cond, branches } => self.join(cond, branches, nested)?,
        })
    }

    fn join(&self, cond: &LExpr, branches: &[Op; 2], nested: bool) -> Result<PhysicalOp> {
        let schemas = [branches[0].schema(), branches[1].schema()];
        let mut keys: [Vec<Var>; 2] = [Vec::new(), Vec::new()];
        for c in conjuncts(cond) {
            if let Some(("equal", [LExpr::Var(a), LExpr::Var(b)])) = c.as_call() {
                if schemas[0].contains(a) && schemas[1].contains(b) {
                    keys[0].push(*a);
                    keys[1].push(*b);
                } else if schemas[0].contains(b) && schemas[1].contains(a) {
                    keys[0].push(*b);
                    keys[1].push(*a);
                }
            }
        }
        let cond = restore(cond);
        let sides = [self.map(&branches[0], nested)?, self.map(&branches[1], nested)?];
        let bytes = [self.estimated_bytes(&branches[0]), self.estimated_bytes(&branches[1])];
        // The smaller side is built into the hash table, or broadcast.
        let small = usize::from(bytes[1] < bytes[0]);
        let [a, b] = sides;
        let (small_op, large_op) = if small == 0 { (a, b) } else { (b, a) };
        if self.config.hash_join && !keys[0].is_empty() {
            let [k0, k1] = keys;
            let (build_keys, probe_keys) = if small == 0 { (k0, k1) } else { (k1, k0) };
            let exchange = |op, keys: &Vec<Var>| {
                if nested {
                    op
                } else {
                    PhysicalOp::Exchange {
                        kind: ExchangeKind::HashPartition(keys.clone()),
                        input: boxed(op),
                    }
                }
            };
            Ok(PhysicalOp::HybridHashJoin {
                build: boxed(exchange(small_op, &build_keys)),
                probe: boxed(exchange(large_op, &probe_keys)),
                build_keys,
                probe_keys,
                cond,
            })
        } else {
            Ok(PhysicalOp::NestedLoopJoin {
                cond,
                outer: boxed(large_op),
                inner: boxed(PhysicalOp::Exchange {
                    kind: ExchangeKind::Broadcast,
                    input: boxed(small_op),
                }),
            })
        }
    }
}

/// Chooses physical operators for a logically optimized plan.
pub fn select_physical(plan: &LogicalPlan, spec: &PartitionSpec, config: PhysicalConfig) -> Result<PhysicalPlan> {
    let bridged = run_optimizer(plan.clone(), &standard_rules(), &[Stage::LogicalToPhysical, Stage::Physical])?;
    let Op::DistributeResult { var, input } = &bridged.root else {
        return Err(Error::PhysicalPlan("plan root is not DISTRIBUTE-RESULT".into()));
    };
    let m = Mapper { spec, config };
    let body = m.map(input, false)?;
    Ok(PhysicalPlan {
        root: PhysicalOp::ResultSink {
            var: *var,
            input: boxed(merged(body)),
        },
        partitions: spec.partition_count(),
    })
}
