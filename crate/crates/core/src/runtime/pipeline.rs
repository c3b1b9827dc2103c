//! Push-based operators and the executor that wires them into per-partition
//! pipelines between pipeline breakers (exchanges, aggregates, joins).

use std::cell::RefCell;
use std::path::PathBuf;
use std::rc::Rc;
use std::sync::Arc;

use rustc_hash::FxHasher;
use std::hash::{Hash, Hasher};

use super::aggregate::{Accumulator, AggFn};
use super::expr::{compile, for_each_step, slot_of, step_name, CExpr, Env};
use super::frame::{pack, Consumer, Frame, Tuple, Writer};
use super::join::{hybrid_hash_join, nested_loop_join, JoinResources, JoinSpec};
use super::{ExecConfig, Stats};
use crate::algebra::{LExpr, Var};
use crate::error::{Error, Result};
use crate::optimizer::physical::{AggMode, ExchangeKind, ScanScope};
use crate::optimizer::PhysicalOp;
use crate::xdm::compare::eq_key;
use crate::xdm::{atomize, Item, Sequence};
use crate::xml_ingest::{scan_collection, scan_collection_with_path};

/// Frames of each partition of an operator's output.
pub type Parts = Vec<Vec<Frame>>;

type Cell<T> = Rc<RefCell<T>>;

/// Variables of the tuples an operator produces, in field order. `outer` is
/// the layout of the tuple feeding a nested plan.
pub fn layout(op: &PhysicalOp, outer: &[Var]) -> Vec<Var> {
    let with = |input: &PhysicalOp, v: Var| {
        let mut l = layout(input, outer);
        l.push(v);
        l
    };
    match op {
        PhysicalOp::EmptySource => Vec::new(),
        PhysicalOp::NestedSource => outer.to_vec(),
        PhysicalOp::PartitionedScan { var, input, .. }
        | PhysicalOp::ScalarAssign { var, input, .. }
        | PhysicalOp::Unnest { var, input, .. } => with(input, *var),
        PhysicalOp::Select { input, .. } | PhysicalOp::Exchange { input, .. } => layout(input, outer),
        PhysicalOp::Subplan { nested, input } => match &**nested {
            PhysicalOp::StreamingAggregate { var, .. } => with(input, *var),
            _ => layout(input, outer),
        },
        PhysicalOp::StreamingAggregate { var, .. } | PhysicalOp::ResultSink { var, .. } => vec![*var],
        PhysicalOp::HybridHashJoin { build, probe, .. } => {
            let mut l = layout(build, outer);
            l.extend(layout(probe, outer));
            l
        }
        PhysicalOp::NestedLoopJoin { outer: o, inner, .. } => {
            let mut l = layout(o, outer);
            l.extend(layout(inner, outer));
            l
        }
    }
}

fn streaming(op: &PhysicalOp) -> bool {
    matches!(
        op,
        PhysicalOp::PartitionedScan { .. }
            | PhysicalOp::ScalarAssign { .. }
            | PhysicalOp::Select { .. }
            | PhysicalOp::Unnest { .. }
            | PhysicalOp::Subplan { .. }
    )
}

fn single_input(op: &PhysicalOp) -> &PhysicalOp {
    op.inputs()[0]
}

/// How the lowest operator of a chain is fed.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Feed {
    /// One empty tuple.
    Empty,
    /// The tuple the enclosing nested plan runs for.
    Outer,
    /// The frames of a pipeline breaker.
    Breaker,
}

// ---------------------------------------------------------------------------
// Streaming operators

struct AssignOp {
    expr: CExpr,
    env: Arc<Env>,
    out: Writer,
}

impl Consumer for AssignOp {
    fn consume(&mut self, frame: Frame) -> Result<()> {
        for mut t in frame.tuples {
            let v = self.expr.eval(&t, &self.env)?;
            t.push(v);
            self.out.push(t)?;
        }
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        self.out.close()
    }
}

struct SelectOp {
    cond: CExpr,
    env: Arc<Env>,
    out: Writer,
}

impl Consumer for SelectOp {
    fn consume(&mut self, frame: Frame) -> Result<()> {
        for t in frame.tuples {
            if self.cond.ebv(&t, &self.env)? {
                self.out.push(t)?;
            }
        }
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        self.out.close()
    }
}

enum Unnesting {
    Iterate(CExpr),
    Step { input: CExpr, name: CExpr, attribute: bool },
}

struct UnnestOp {
    how: Unnesting,
    env: Arc<Env>,
    out: Writer,
}

impl Consumer for UnnestOp {
    fn consume(&mut self, frame: Frame) -> Result<()> {
        for t in frame.tuples {
            let out = &mut self.out;
            let mut emit = |item: Item| {
                let mut o = t.clone();
                o.push(Sequence::from_elem(item, 1));
                out.push(o)
            };
            match &self.how {
                Unnesting::Iterate(e) => {
                    for item in e.eval(&t, &self.env)? {
                        emit(item)?;
                    }
                }
                Unnesting::Step { input, name, attribute } => {
                    let name = step_name(&name.eval(&t, &self.env)?)?;
                    for_each_step(&input.eval(&t, &self.env)?, &name, *attribute, emit)?;
                }
            }
        }
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        self.out.close()
    }
}

struct ScanOp {
    collection: Arc<str>,
    path: Arc<[Arc<str>]>,
    partitions: std::ops::Range<usize>,
    env: Arc<Env>,
    out: Writer,
}

impl Consumer for ScanOp {
    fn consume(&mut self, frame: Frame) -> Result<()> {
        for t in frame.tuples {
            for p in self.partitions.clone() {
                let mut emit = |n: Result<crate::xdm::Node>| {
                    let mut o = t.clone();
                    o.push(Sequence::from_elem(Item::Node(n?), 1));
                    self.out.push(o)
                };
                if self.path.is_empty() {
                    scan_collection(&self.env.spec, p, &self.collection)?.try_for_each(&mut emit)?;
                } else {
                    scan_collection_with_path(&self.env.spec, p, &self.collection, &self.path)?.try_for_each(&mut emit)?;
                }
            }
        }
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        self.out.close()
    }
}

/// Runs a nested chain once per tuple and appends its aggregate.
struct SubplanOp {
    head: Box<dyn Consumer>,
    feed: Feed,
    result: Cell<Option<Sequence>>,
    out: Writer,
}

impl Consumer for SubplanOp {
    fn consume(&mut self, frame: Frame) -> Result<()> {
        for mut t in frame.tuples {
            let seed = if self.feed == Feed::Empty { Vec::new() } else { t.clone() };
            self.head.consume(Frame::single(seed))?;
            self.head.close()?;
            let r = self.result.borrow_mut().take().unwrap_or_default();
            t.push(r);
            self.out.push(t)?;
        }
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        self.out.close()
    }
}

enum JoinMethod {
    Hash(JoinSpec),
    Loop(CExpr),
}

/// A join inside a nested plan: both branches run for each outer tuple and
/// their results are joined in memory.
struct NestedJoinOp {
    branches: [(Box<dyn Consumer>, Feed, Cell<Vec<Frame>>); 2],
    method: JoinMethod,
    env: Arc<Env>,
    stats: Arc<Stats>,
    memory: usize,
    scratch: PathBuf,
    out: Writer,
}

impl Consumer for NestedJoinOp {
    fn consume(&mut self, frame: Frame) -> Result<()> {
        for t in frame.tuples {
            let mut sides: Vec<Vec<Tuple>> = Vec::with_capacity(2);
            for (head, feed, cell) in &mut self.branches {
                let seed = if *feed == Feed::Empty { Vec::new() } else { t.clone() };
                head.consume(Frame::single(seed))?;
                head.close()?;
                sides.push(cell.borrow_mut().drain(..).flat_map(|f| f.tuples).collect());
            }
            let second = sides.pop().unwrap();
            let first = sides.pop().unwrap();
            let out = &mut self.out;
            let mut emit = |t: Tuple| out.push(t);
            match &self.method {
                JoinMethod::Hash(spec) => {
                    let res = JoinResources {
                        env: &self.env,
                        stats: &self.stats,
                        memory: self.memory,
                        scratch: &self.scratch,
                    };
                    hybrid_hash_join(first, second, spec, &res, &mut emit)?;
                }
                JoinMethod::Loop(cond) => nested_loop_join(&first, &second, cond, &self.env, &mut emit)?,
            }
        }
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        self.out.close()
    }
}

// ---------------------------------------------------------------------------
// Terminals

struct Collect {
    frames: Cell<Vec<Frame>>,
}

impl Consumer for Collect {
    fn consume(&mut self, frame: Frame) -> Result<()> {
        self.frames.borrow_mut().push(frame);
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        Ok(())
    }
}

enum AggOutput {
    /// The value for the enclosing SUBPLAN.
    Value(Cell<Option<Sequence>>),
    /// A one-tuple frame per stream.
    Frames(Cell<Vec<Frame>>),
}

struct AggSink {
    arg: CExpr,
    acc: Accumulator,
    env: Arc<Env>,
    output: AggOutput,
}

impl Consumer for AggSink {
    fn consume(&mut self, frame: Frame) -> Result<()> {
        for t in frame.tuples {
            if self.acc.saturated() {
                break;
            }
            self.acc.add_items(&self.arg.eval(&t, &self.env)?)?;
        }
        Ok(())
    }

    fn close(&mut self) -> Result<()> {
        let r = self.acc.finish()?;
        self.acc.reset();
        match &self.output {
            AggOutput::Value(c) => *c.borrow_mut() = Some(r),
            AggOutput::Frames(c) => c.borrow_mut().push(Frame::single(vec![r])),
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Executor

fn agg_parts(expr: &LExpr, mode: AggMode) -> Result<(AggFn, Option<&LExpr>)> {
    let Some((name, [arg])) = expr.as_call() else {
        return Err(Error::PhysicalPlan(format!("{} is not an aggregate call", expr)));
    };
    let (name, arg) = match mode {
        AggMode::Single => (name, Some(arg)),
        AggMode::Local(ts) => (ts.local, Some(arg)),
        // The global step folds the partials found in the aggregate's own field.
        AggMode::Global(ts) => (ts.global, None),
    };
    let f = AggFn::from_name(name).ok_or_else(|| Error::PhysicalPlan(format!("unknown aggregate {}", name)))?;
    Ok((f, arg))
}

pub struct Executor {
    pub env: Arc<Env>,
    pub stats: Arc<Stats>,
    frame_size: usize,
    memory: usize,
    scratch: PathBuf,
    parallel: bool,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    pub fn new(env: Arc<Env>, config: &ExecConfig) -> Result<Executor> {
        #[cfg(feature = "parallel")]
        let partitions = env.spec.partition_count().max(1);
        #[cfg(feature = "parallel")]
        let pool = if config.parallel && partitions > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(partitions)
                    .build()
                    .map_err(|e| Error::PhysicalPlan(format!("worker pool: {}", e)))?,
            )
        } else {
            None
        };
        Ok(Executor {
            env,
            stats: Arc::new(Stats::default()),
            frame_size: config.frame_size,
            memory: config.join_memory,
            scratch: config.scratch.clone().unwrap_or_else(std::env::temp_dir),
            parallel: config.parallel,
            #[cfg(feature = "parallel")]
            pool,
        })
    }

    fn partitions(&self) -> usize {
        self.env.spec.partition_count().max(1)
    }

    fn writer(&self, next: Box<dyn Consumer>) -> Writer {
        Writer::new(self.frame_size, self.stats.clone(), next)
    }

    /// Runs `f` once per input, on one worker per partition when parallel.
    fn per_partition<T, R>(&self, inputs: Vec<T>, wrap: bool, f: impl Fn(usize, T) -> Result<R> + Sync + Send) -> Result<Vec<R>>
    where
        T: Send,
        R: Send,
    {
        let run = |(p, x): (usize, T)| {
            f(p, x).map_err(|e| {
                if wrap && !matches!(e, Error::InPartition { .. }) {
                    Error::InPartition {
                        partition: p,
                        source: Box::new(e),
                    }
                } else {
                    e
                }
            })
        };
        #[cfg(feature = "parallel")]
        if let Some(pool) = self.pool.as_ref().filter(|_| self.parallel && inputs.len() > 1) {
            use rayon::prelude::*;
            return pool.install(|| inputs.into_par_iter().enumerate().map(run).collect());
        }
        let _ = self.parallel;
        inputs.into_iter().enumerate().map(run).collect()
    }

    /// Builds the operators from `top` down to the first operator that is
    /// not part of a streaming chain. Returns the chain's entry point.
    fn build_chain(
        &self,
        top: &PhysicalOp,
        outer: &[Var],
        nested: bool,
        partition: usize,
        terminal: Box<dyn Consumer>,
    ) -> Result<(Box<dyn Consumer>, Feed)> {
        let env = self.env.clone();
        let schema = |op: &PhysicalOp| layout(op, outer);
        let op: Box<dyn Consumer> = match top {
            PhysicalOp::EmptySource => return Ok((terminal, Feed::Empty)),
            PhysicalOp::NestedSource if nested => return Ok((terminal, Feed::Outer)),
            PhysicalOp::Exchange { input, .. } if nested => {
                return self.build_chain(input, outer, nested, partition, terminal)
            }
            PhysicalOp::HybridHashJoin { .. } | PhysicalOp::NestedLoopJoin { .. } if nested => {
                let (branches, method) = match top {
                    PhysicalOp::HybridHashJoin {
                        build_keys,
                        probe_keys,
                        cond,
                        build,
                        probe,
                    } => ([&**build, &**probe], self.hash_spec(top, build_keys, probe_keys, cond, outer)?),
                    PhysicalOp::NestedLoopJoin { cond, outer: o, inner } => {
                        let l = layout(top, outer);
                        ([&**o, &**inner], JoinMethod::Loop(compile(cond, &l)?))
                    }
                    _ => unreachable!(),
                };
                let mut built = Vec::with_capacity(2);
                for b in branches {
                    let cell: Cell<Vec<Frame>> = Rc::default();
                    let (head, feed) =
                        self.build_chain(b, outer, true, partition, Box::new(Collect { frames: cell.clone() }))?;
                    built.push((head, feed, cell));
                }
                let second = built.pop().unwrap();
                let first = built.pop().unwrap();
                let op = NestedJoinOp {
                    branches: [first, second],
                    method,
                    env,
                    stats: self.stats.clone(),
                    memory: self.memory,
                    scratch: self.scratch.clone(),
                    out: self.writer(terminal),
                };
                return Ok((Box::new(op), Feed::Outer));
            }
            PhysicalOp::NestedSource => {
                return Err(Error::PhysicalPlan("NESTED-SOURCE outside a nested plan".into()))
            }
            op if !streaming(op) => return Ok((terminal, Feed::Breaker)),
            PhysicalOp::ScalarAssign { expr, input, .. } => Box::new(AssignOp {
                expr: compile(expr, &schema(input))?,
                env,
                out: self.writer(terminal),
            }),
            PhysicalOp::Select { cond, input } => Box::new(SelectOp {
                cond: compile(cond, &schema(input))?,
                env,
                out: self.writer(terminal),
            }),
            PhysicalOp::Unnest { expr, input, .. } => {
                let l = schema(input);
                let how = match expr.as_call() {
                    Some(("iterate", [e])) => Unnesting::Iterate(compile(e, &l)?),
                    Some((step @ ("child" | "attribute"), [e, name])) => Unnesting::Step {
                        input: compile(e, &l)?,
                        name: compile(name, &l)?,
                        attribute: step == "attribute",
                    },
                    _ => return Err(Error::PhysicalPlan(format!("{} is not an unnesting expression", expr))),
                };
                Box::new(UnnestOp {
                    how,
                    env,
                    out: self.writer(terminal),
                })
            }
            PhysicalOp::PartitionedScan {
                collection,
                path,
                scope,
                ..
            } => {
                let partitions = match scope {
                    ScanScope::Partitioned => partition..partition + 1,
                    ScanScope::AllPartitions => 0..self.env.spec.partition_count(),
                };
                Box::new(ScanOp {
                    collection: collection.clone(),
                    path: path.clone(),
                    partitions,
                    env,
                    out: self.writer(terminal),
                })
            }
            PhysicalOp::Subplan { nested: n, input } => {
                let PhysicalOp::StreamingAggregate {
                    expr,
                    mode,
                    input: body,
                    ..
                } = &**n
                else {
                    return Err(Error::PhysicalPlan("nested plan without an aggregate root".into()));
                };
                let inner_outer = schema(input);
                let (f, arg) = agg_parts(expr, *mode)?;
                let arg = arg.ok_or_else(|| Error::PhysicalPlan("global aggregate in a nested plan".into()))?;
                let result: Cell<Option<Sequence>> = Rc::default();
                let sink = AggSink {
                    arg: compile(arg, &layout(body, &inner_outer))?,
                    acc: Accumulator::new(f),
                    env: env.clone(),
                    output: AggOutput::Value(result.clone()),
                };
                let (head, feed) = self.build_chain(body, &inner_outer, true, partition, Box::new(sink))?;
                Box::new(SubplanOp {
                    head,
                    feed,
                    result,
                    out: self.writer(terminal),
                })
            }
            _ => unreachable!("streaming operators are covered above"),
        };
        self.build_chain(single_input(top), outer, nested, partition, op)
    }

    fn hash_spec(&self, join: &PhysicalOp, build_keys: &[Var], probe_keys: &[Var], cond: &LExpr, outer: &[Var]) -> Result<JoinMethod> {
        let PhysicalOp::HybridHashJoin { build, probe, .. } = join else {
            unreachable!()
        };
        let bl = layout(build, outer);
        let pl = layout(probe, outer);
        Ok(JoinMethod::Hash(JoinSpec {
            build_keys: build_keys.iter().map(|v| slot_of(&bl, *v)).collect::<Result<_>>()?,
            probe_keys: probe_keys.iter().map(|v| slot_of(&pl, *v)).collect::<Result<_>>()?,
            cond: compile(cond, &layout(join, outer))?,
        }))
    }

    fn has_partitioned_scan(op: &PhysicalOp) -> bool {
        let mut cur = op;
        while streaming(cur) {
            if let PhysicalOp::PartitionedScan {
                scope: ScanScope::Partitioned,
                ..
            } = cur
            {
                return true;
            }
            cur = single_input(cur);
        }
        false
    }

    /// Runs the streaming chain topped by `top` into a fresh terminal per
    /// partition.
    fn stream(&self, top: &PhysicalOp, terminal: &(dyn Fn(Cell<Vec<Frame>>) -> Box<dyn Consumer> + Sync)) -> Result<Parts> {
        let mut bottom = top;
        while streaming(bottom) {
            bottom = single_input(bottom);
        }
        let scans = Self::has_partitioned_scan(top);
        let sources: Parts = match bottom {
            PhysicalOp::EmptySource => {
                let width = if scans { self.partitions() } else { 1 };
                (0..width).map(|_| vec![Frame::single(Vec::new())]).collect()
            }
            b => self.run(b)?,
        };
        let wrap = scans || sources.len() > 1;
        self.per_partition(sources, wrap, |p, frames| {
            let cell: Cell<Vec<Frame>> = Rc::default();
            let (mut head, _) = self.build_chain(top, &[], false, p, terminal(cell.clone()))?;
            for f in frames {
                head.consume(f)?;
            }
            head.close()?;
            let out = cell.take();
            Ok(out)
        })
    }

    fn collect(&self, op: &PhysicalOp) -> Result<Parts> {
        if streaming(op) || matches!(op, PhysicalOp::EmptySource) {
            self.stream(op, &|cell| Box::new(Collect { frames: cell }))
        } else {
            self.run(op)
        }
    }

    /// Output of a pipeline breaker.
    fn run(&self, op: &PhysicalOp) -> Result<Parts> {
        match op {
            PhysicalOp::Exchange { kind, input } => self.exchange(kind, input),
            PhysicalOp::StreamingAggregate { expr, mode, input, .. } => {
                let (f, arg) = agg_parts(expr, *mode)?;
                let arg = match arg {
                    Some(a) => compile(a, &layout(input, &[]))?,
                    None => CExpr::Slot(0),
                };
                if matches!(mode, AggMode::Local(_)) {
                    self.stats.add_local_aggregates();
                }
                let env = self.env.clone();
                self.stream(input, &|cell| {
                    Box::new(AggSink {
                        arg: arg.clone(),
                        acc: Accumulator::new(f),
                        env: env.clone(),
                        output: AggOutput::Frames(cell),
                    })
                })
            }
            PhysicalOp::HybridHashJoin {
                build_keys,
                probe_keys,
                cond,
                build,
                probe,
            } => {
                let JoinMethod::Hash(spec) = self.hash_spec(op, build_keys, probe_keys, cond, &[])? else {
                    unreachable!()
                };
                let builds = self.collect(build)?;
                let probes = self.collect(probe)?;
                let builds = align(builds, probes.len());
                let inputs: Vec<_> = builds.into_iter().zip(probes).collect();
                self.per_partition(inputs, true, |_, (b, p)| {
                    let res = JoinResources {
                        env: &self.env,
                        stats: &self.stats,
                        memory: self.memory,
                        scratch: &self.scratch,
                    };
                    let mut out = Vec::new();
                    hybrid_hash_join(tuples(b), tuples(p), &spec, &res, &mut |t| {
                        out.push(t);
                        Ok(())
                    })?;
                    pack(out, self.frame_size, &self.stats)
                })
            }
            PhysicalOp::NestedLoopJoin { cond, outer, inner } => {
                let cond = compile(cond, &layout(op, &[]))?;
                let outers = self.collect(outer)?;
                let inner: Vec<Tuple> = self.collect(inner)?.into_iter().flat_map(tuples).collect();
                self.per_partition(outers, true, |_, o| {
                    let mut out = Vec::new();
                    nested_loop_join(&tuples(o), &inner, &cond, &self.env, &mut |t| {
                        out.push(t);
                        Ok(())
                    })?;
                    pack(out, self.frame_size, &self.stats)
                })
            }
            other => Err(Error::PhysicalPlan(format!("{} cannot start a pipeline", other.name()))),
        }
    }

    fn exchange(&self, kind: &ExchangeKind, input: &PhysicalOp) -> Result<Parts> {
        let parts = self.collect(input)?;
        Ok(match kind {
            ExchangeKind::OneToOne => parts,
            ExchangeKind::MergeToOne => {
                let frames: Vec<Frame> = parts.into_iter().flatten().collect();
                let bytes: usize = frames.iter().map(|f| f.bytes).sum();
                let count: usize = frames.iter().map(|f| f.tuples.len()).sum();
                self.stats.add_merge(bytes, count);
                vec![frames]
            }
            ExchangeKind::Broadcast => vec![parts.into_iter().flatten().collect()],
            ExchangeKind::HashPartition(keys) => {
                let l = layout(input, &[]);
                let slots = keys.iter().map(|v| slot_of(&l, *v)).collect::<Result<Vec<_>>>()?;
                let n = self.partitions();
                let mut routed: Vec<Vec<Tuple>> = vec![Vec::new(); n];
                for t in parts.into_iter().flat_map(tuples) {
                    routed[route(&t, &slots, n)].push(t);
                }
                routed
                    .into_iter()
                    .map(|ts| pack(ts, self.frame_size, &self.stats))
                    .collect::<Result<_>>()?
            }
        })
    }

    /// Evaluates a whole plan and returns the result sequence.
    pub fn execute(&self, root: &PhysicalOp) -> Result<Sequence> {
        let PhysicalOp::ResultSink { var, input } = root else {
            return Err(Error::PhysicalPlan("plan root is not a result sink".into()));
        };
        let slot = slot_of(&layout(input, &[]), *var)?;
        let mut out = Sequence::new();
        for frame in self.collect(input)?.into_iter().flatten() {
            for mut t in frame.tuples {
                out.extend(std::mem::take(&mut t[slot]));
            }
        }
        Ok(out)
    }
}

fn tuples(frames: Vec<Frame>) -> Vec<Tuple> {
    frames.into_iter().flat_map(|f| f.tuples).collect()
}

/// Pairs build partitions with probe partitions. A single build partition
/// is shared by every probe partition.
fn align(builds: Parts, n: usize) -> Parts {
    if builds.len() == n {
        builds
    } else {
        let all: Vec<Frame> = builds.into_iter().flatten().collect();
        vec![all; n]
    }
}

/// Target partition of a tuple under hash partitioning on `slots`.
fn route(t: &Tuple, slots: &[usize], n: usize) -> usize {
    let mut h = FxHasher::default();
    for s in slots {
        for item in atomize(&t[*s]) {
            if let Item::Atomic(a) = item {
                eq_key(&a).hash(&mut h);
            }
        }
    }
    let v = h.finish();
    ((v ^ (v >> 32)) % n as u64) as usize
}
