//! Facts about a plan that the rewrite rules consult: how often each
//! variable is read, which variables hold exactly one item, and the
//! document-order properties of every variable's sequence.

use std::collections::{HashMap, HashSet};

use crate::algebra::{LExpr, Op, Var};
use crate::frontend::normalize::{DISTINCT_ONLY, SORT_DISTINCT, SORT_ONLY};

/// Order properties of a node sequence. `nesting_free` means no node in the
/// sequence is an ancestor of another; child steps keep document order only
/// over such sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderingProperty {
    pub document_ordered: bool,
    pub duplicate_free: bool,
    pub nesting_free: bool,
}

impl OrderingProperty {
    pub const INTACT: OrderingProperty = OrderingProperty {
        document_ordered: true,
        duplicate_free: true,
        nesting_free: true,
    };
    pub const UNKNOWN: OrderingProperty = OrderingProperty {
        document_ordered: false,
        duplicate_free: false,
        nesting_free: false,
    };
}

/// Functions whose result never contains nodes; sorting such a result is a
/// no-op so every property holds.
fn returns_atomics(name: &str) -> bool {
    matches!(
        name,
        "data"
            | "boolean"
            | "not"
            | "string"
            | "count"
            | "sum"
            | "avg"
            | "min"
            | "max"
            | "dateTime"
            | "decimal"
            | "year-from-dateTime"
            | "month-from-dateTime"
            | "day-from-dateTime"
            | "upper-case"
            | "and"
            | "or"
            | "numeric-add"
            | "numeric-subtract"
            | "numeric-multiply"
            | "numeric-divide"
            | "numeric-unary-minus"
    ) || name.starts_with("value-")
        || name.starts_with("general-")
}

enum Def<'a> {
    /// Bound by UNNEST or DATASCAN: one item per tuple.
    Item,
    Assign(&'a LExpr),
    Aggregate(&'a LExpr, &'a Op),
}

struct Builder<'a> {
    defs: HashMap<Var, Def<'a>>,
    props: HashMap<Var, OrderingProperty>,
}

impl<'a> Builder<'a> {
    fn var(&mut self, v: Var) -> OrderingProperty {
        if let Some(p) = self.props.get(&v) {
            return *p;
        }
        // Guard against malformed cyclic input.
        self.props.insert(v, OrderingProperty::UNKNOWN);
        let p = match self.defs.get(&v) {
            None => OrderingProperty::UNKNOWN,
            Some(Def::Item) => OrderingProperty::INTACT,
            Some(Def::Assign(e)) => {
                let e = *e;
                self.expr(e)
            }
            Some(Def::Aggregate(e, input)) => {
                let (e, input) = (*e, *input);
                match e.as_call() {
                    Some(("create_sequence", [item])) => self.stream(item, input),
                    _ => OrderingProperty::INTACT,
                }
            }
        };
        self.props.insert(v, p);
        p
    }

    fn expr(&mut self, e: &LExpr) -> OrderingProperty {
        match e {
            LExpr::Var(v) => self.var(*v),
            LExpr::Const(_) | LExpr::Type(_) => OrderingProperty::INTACT,
            LExpr::Call(name, args) => match (&**name, args.as_slice()) {
                ("doc" | "collection", _) => OrderingProperty::INTACT,
                ("child" | "attribute", [x, _]) => {
                    let p = self.expr(x);
                    OrderingProperty {
                        document_ordered: p.document_ordered && p.nesting_free,
                        duplicate_free: p.duplicate_free,
                        nesting_free: p.nesting_free,
                    }
                }
                ("treat", [x, _]) => self.expr(x),
                (n, [x]) if n == SORT_DISTINCT => OrderingProperty {
                    nesting_free: self.expr(x).nesting_free,
                    ..OrderingProperty::INTACT
                },
                (n, [x]) if n == SORT_ONLY => OrderingProperty {
                    document_ordered: true,
                    ..self.expr(x)
                },
                (n, [x]) if n == DISTINCT_ONLY => OrderingProperty {
                    duplicate_free: true,
                    ..self.expr(x)
                },
                (n, _) if returns_atomics(n) => OrderingProperty::INTACT,
                _ => OrderingProperty::UNKNOWN,
            },
        }
    }

    /// Properties of the concatenation of `item` over the tuples `input`
    /// produces for one outer tuple.
    fn stream(&mut self, item: &LExpr, input: &Op) -> OrderingProperty {
        let mut assigns: Vec<(Var, &LExpr)> = Vec::new();
        let mut generator: Option<&Op> = None;
        let mut cur = input;
        loop {
            match cur {
                Op::NestedTupleSource | Op::EmptyTupleSource => break,
                Op::Assign { var, expr, input } => {
                    if generator.is_none() {
                        assigns.push((*var, expr));
                    }
                    cur = input;
                }
                Op::Select { input, .. } | Op::Subplan { input, .. } => cur = input,
                Op::Unnest { input, .. } | Op::DataScan { input, .. } => {
                    if generator.is_some() {
                        return OrderingProperty::UNKNOWN;
                    }
                    generator = Some(cur);
                    cur = input;
                }
                _ => return OrderingProperty::UNKNOWN,
            }
        }
        // Resolve the item through the ASSIGNs above the generator.
        let mut item = item.clone();
        for (v, e) in &assigns {
            item.substitute(*v, e);
        }
        match generator {
            None => self.expr(&item),
            Some(Op::DataScan { var, .. }) => {
                if stepwise_in(&item, *var) {
                    self.expr(&item.clone_with(*var, &LExpr::call("collection", vec![])))
                } else {
                    OrderingProperty::UNKNOWN
                }
            }
            Some(Op::Unnest { var, expr, .. }) => {
                if !stepwise_in(&item, *var) {
                    return OrderingProperty::UNKNOWN;
                }
                let whole = match expr.as_call() {
                    Some(("iterate", [x])) => x.clone(),
                    Some(("child" | "attribute", _)) => expr.clone(),
                    _ => return OrderingProperty::UNKNOWN,
                };
                self.expr(&item.clone_with(*var, &whole))
            }
            Some(_) => OrderingProperty::UNKNOWN,
        }
    }
}

/// True when `e` reads only `v`, through child, attribute and treat calls,
/// so applying it item by item equals applying it to the whole sequence.
fn stepwise_in(e: &LExpr, v: Var) -> bool {
    match e {
        LExpr::Var(w) => *w == v,
        LExpr::Call(name, args) => match (&**name, args.as_slice()) {
            ("child" | "attribute", [x, LExpr::Const(_)]) | ("treat", [x, LExpr::Type(_)]) => stepwise_in(x, v),
            _ => false,
        },
        _ => false,
    }
}

trait CloneWith {
    fn clone_with(&self, v: Var, with: &LExpr) -> LExpr;
}

impl CloneWith for LExpr {
    fn clone_with(&self, v: Var, with: &LExpr) -> LExpr {
        let mut e = self.clone();
        e.substitute(v, with);
        e
    }
}

/// Snapshot of plan facts, recomputed before every rule application.
pub struct Analysis {
    pub uses: HashMap<Var, usize>,
    pub single_item: HashSet<Var>,
    /// Variables bound by a DATASCAN with a pushed-down path; their items are
    /// always elements.
    pub scanned_elements: HashSet<Var>,
    pub props: HashMap<Var, OrderingProperty>,
}

impl Analysis {
    pub fn new(root: &Op) -> Analysis {
        let mut defs = HashMap::new();
        let mut uses: HashMap<Var, usize> = HashMap::new();
        let mut single_item = HashSet::new();
        let mut scanned_elements = HashSet::new();
        root.walk(&mut |op| {
            for e in op.expressions() {
                for v in e.vars() {
                    *uses.entry(v).or_default() += e.uses(v);
                }
            }
            match op {
                Op::DistributeResult { var, .. } => *uses.entry(*var).or_default() += 1,
                Op::Assign { var, expr, .. } => {
                    defs.insert(*var, Def::Assign(expr));
                }
                Op::Unnest { var, .. } => {
                    defs.insert(*var, Def::Item);
                    single_item.insert(*var);
                }
                Op::DataScan { var, path, .. } => {
                    defs.insert(*var, Def::Item);
                    single_item.insert(*var);
                    if !path.is_empty() {
                        scanned_elements.insert(*var);
                    }
                }
                Op::Aggregate { var, expr, input, .. } => {
                    defs.insert(*var, Def::Aggregate(expr, input));
                }
                _ => {}
            }
        });
        let vars: Vec<Var> = defs.keys().copied().collect();
        let mut b = Builder {
            defs,
            props: HashMap::new(),
        };
        for v in vars {
            b.var(v);
        }
        Analysis {
            uses,
            single_item,
            scanned_elements,
            props: b.props,
        }
    }

    pub fn uses(&self, v: Var) -> usize {
        self.uses.get(&v).copied().unwrap_or(0)
    }

    pub fn property(&self, v: Var) -> OrderingProperty {
        self.props.get(&v).copied().unwrap_or(OrderingProperty::UNKNOWN)
    }
}

/// Order properties of the sequence bound to `var` anywhere in the plan.
pub fn analyze_ordering(root: &Op, var: Var) -> OrderingProperty {
    Analysis::new(root).property(var)
}
