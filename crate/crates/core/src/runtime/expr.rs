//! Plan expressions compiled against a tuple layout, and the engine's
//! function library.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::aggregate::{Accumulator, AggFn};
use crate::algebra::functions::comparison;
use crate::algebra::{LExpr, Var};
use crate::error::{Error, Result};
use crate::frontend::normalize::{DISTINCT_ONLY, SORT_DISTINCT, SORT_ONLY};
use crate::xdm::arith::{arith, negate_atomic};
use crate::xdm::compare::{general_compare, value_compare};
use crate::xdm::sequence::{promote_seq, singleton, sort_distinct_nodes, treat, zero_or_one_atomic};
use crate::xdm::{
    atomize, effective_boolean_value, ArithOp, AtomicKind, AtomicValue, CompOp, Item, NodeKind, SeqType, Sequence,
};
use crate::xml_ingest::{load_document, scan_collection, PartitionSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Doc,
    Collection,
    Child,
    Attribute,
    Treat,
    Promote,
    Data,
    Boolean,
    Not,
    String,
    Aggregate(AggFn),
    DateTime,
    Decimal,
    YearFromDateTime,
    MonthFromDateTime,
    DayFromDateTime,
    UpperCase,
    And,
    Or,
    ValueCompare(CompOp),
    GeneralCompare(CompOp),
    Arith(ArithOp),
    Negate,
    Concatenate,
    SortNodes { sort: bool, distinct: bool },
}

impl Func {
    fn resolve(name: &str) -> Option<Func> {
        Some(match name {
            "doc" => Func::Doc,
            "collection" => Func::Collection,
            "child" => Func::Child,
            "attribute" => Func::Attribute,
            "treat" => Func::Treat,
            "promote" => Func::Promote,
            "data" => Func::Data,
            "boolean" => Func::Boolean,
            "not" => Func::Not,
            "string" => Func::String,
            "dateTime" => Func::DateTime,
            "decimal" => Func::Decimal,
            "year-from-dateTime" => Func::YearFromDateTime,
            "month-from-dateTime" => Func::MonthFromDateTime,
            "day-from-dateTime" => Func::DayFromDateTime,
            "upper-case" => Func::UpperCase,
            "and" => Func::And,
            "or" => Func::Or,
            "equal" => Func::ValueCompare(CompOp::Eq),
            "numeric-add" => Func::Arith(ArithOp::Add),
            "numeric-subtract" => Func::Arith(ArithOp::Sub),
            "numeric-multiply" => Func::Arith(ArithOp::Mul),
            "numeric-divide" => Func::Arith(ArithOp::Div),
            "numeric-unary-minus" => Func::Negate,
            "concatenate" => Func::Concatenate,
            n if n == SORT_DISTINCT => Func::SortNodes {
                sort: true,
                distinct: true,
            },
            n if n == SORT_ONLY => Func::SortNodes {
                sort: true,
                distinct: false,
            },
            n if n == DISTINCT_ONLY => Func::SortNodes {
                sort: false,
                distinct: true,
            },
            n => {
                if let Some(f) = AggFn::from_name(n) {
                    return Some(Func::Aggregate(f));
                }
                let (op, general) = comparison(n)?;
                if general {
                    Func::GeneralCompare(op)
                } else {
                    Func::ValueCompare(op)
                }
            }
        })
    }
}

#[derive(Clone, Debug)]
pub enum CExpr {
    Slot(usize),
    Const(Sequence),
    Type(SeqType),
    Call(Func, Vec<CExpr>),
}

/// Position of each variable in a tuple.
pub fn slot_of(schema: &[Var], v: Var) -> Result<usize> {
    schema
        .iter()
        .position(|x| *x == v)
        .ok_or_else(|| Error::PhysicalPlan(format!("{} is not in the tuple layout", v)))
}

pub fn compile(e: &LExpr, schema: &[Var]) -> Result<CExpr> {
    Ok(match e {
        LExpr::Var(v) => CExpr::Slot(slot_of(schema, *v)?),
        LExpr::Const(a) => CExpr::Const(singleton(a.clone())),
        LExpr::Type(t) => CExpr::Type(*t),
        LExpr::Call(name, args) => {
            let f = Func::resolve(name).ok_or_else(|| Error::PhysicalPlan(format!("no implementation of {}", name)))?;
            let args = args.iter().map(|a| compile(a, schema)).collect::<Result<Vec<_>>>()?;
            CExpr::Call(f, args)
        }
    })
}

/// Shared, read-mostly state for one query execution.
pub struct Env {
    pub spec: PartitionSpec,
    docs: Mutex<HashMap<String, Sequence>>,
    collections: Mutex<HashMap<String, Sequence>>,
}

impl Env {
    pub fn new(spec: PartitionSpec) -> Arc<Env> {
        Arc::new(Env {
            spec,
            docs: Mutex::new(HashMap::new()),
            collections: Mutex::new(HashMap::new()),
        })
    }

    fn doc(&self, uri: &str) -> Result<Sequence> {
        if let Some(d) = self.docs.lock().unwrap().get(uri) {
            return Ok(d.clone());
        }
        let d = singleton(load_document(&self.spec.resolve_doc(uri))?);
        self.docs.lock().unwrap().insert(uri.to_string(), d.clone());
        Ok(d)
    }

    /// Every document of a collection, partitions in ordinal order.
    fn collection(&self, uri: &str) -> Result<Sequence> {
        if let Some(c) = self.collections.lock().unwrap().get(uri) {
            return Ok(c.clone());
        }
        let mut out = Sequence::new();
        for p in 0..self.spec.partition_count() {
            for d in scan_collection(&self.spec, p, uri)? {
                out.push(Item::Node(d?));
            }
        }
        self.collections.lock().unwrap().insert(uri.to_string(), out.clone());
        Ok(out)
    }
}

fn bool_seq(b: bool) -> Sequence {
    singleton(AtomicValue::Boolean(b))
}

fn opt_seq(v: Option<AtomicValue>) -> Sequence {
    v.map(singleton).unwrap_or_default()
}

fn type_arg(e: &CExpr) -> Result<SeqType> {
    match e {
        CExpr::Type(t) => Ok(*t),
        _ => Err(Error::type_err("expected a type argument")),
    }
}

/// The name argument of a child or attribute step.
pub fn step_name(seq: &[Item]) -> Result<String> {
    match zero_or_one_atomic(seq, "step")? {
        Some(a) => Ok(a.lexical()),
        None => Err(Error::type_err("step name missing")),
    }
}

/// Calls `f` for each element child (or attribute) named `name` of every
/// node in `input`, in order.
pub fn for_each_step(input: &[Item], name: &str, attribute: bool, mut f: impl FnMut(Item) -> Result<()>) -> Result<()> {
    for item in input {
        let Item::Node(n) = item else {
            return Err(Error::type_err("path step applied to an atomic value"));
        };
        if attribute {
            if let Some(a) = n.attribute(name) {
                f(Item::Node(a))?;
            }
        } else {
            for c in n.children() {
                if c.kind() == NodeKind::Element && c.name() == Some(name) {
                    f(Item::Node(c))?;
                }
            }
        }
    }
    Ok(())
}

impl CExpr {
    pub fn eval(&self, tuple: &[Sequence], env: &Env) -> Result<Sequence> {
        match self {
            CExpr::Slot(i) => Ok(tuple[*i].clone()),
            CExpr::Const(s) => Ok(s.clone()),
            CExpr::Type(t) => Err(Error::type_err(format!("type {} used as a value", t.name()))),
            CExpr::Call(f, args) => call(*f, args, tuple, env),
        }
    }

    pub fn ebv(&self, tuple: &[Sequence], env: &Env) -> Result<bool> {
        effective_boolean_value(&self.eval(tuple, env)?)
    }
}

fn call(f: Func, args: &[CExpr], tuple: &[Sequence], env: &Env) -> Result<Sequence> {
    let arg = |i: usize| args[i].eval(tuple, env);
    let one = |i: usize, what: &str| -> Result<Option<AtomicValue>> { zero_or_one_atomic(&arg(i)?, what) };
    Ok(match f {
        Func::Doc => {
            let uri = one(0, "doc")?.ok_or_else(|| Error::type_err("doc() of ()"))?;
            env.doc(&uri.lexical())?
        }
        Func::Collection => {
            let uri = one(0, "collection")?.ok_or_else(|| Error::type_err("collection() of ()"))?;
            env.collection(&uri.lexical())?
        }
        Func::Child | Func::Attribute => {
            let input = arg(0)?;
            let name = step_name(&arg(1)?)?;
            let mut out = Sequence::new();
            for_each_step(&input, &name, f == Func::Attribute, |i| {
                out.push(i);
                Ok(())
            })?;
            out
        }
        Func::Treat => treat(arg(0)?, type_arg(&args[1])?)?,
        Func::Promote => promote_seq(&arg(0)?, type_arg(&args[1])?)?,
        Func::Data => atomize(&arg(0)?),
        Func::Boolean => bool_seq(args[0].ebv(tuple, env)?),
        Func::Not => bool_seq(!args[0].ebv(tuple, env)?),
        Func::String => {
            let v = arg(0)?;
            if v.len() > 1 {
                return Err(Error::type_err("string() of several items"));
            }
            let s = match v.first() {
                None => String::new(),
                Some(Item::Node(n)) => n.string_value().into_owned(),
                Some(Item::Atomic(a)) => a.lexical(),
            };
            singleton(AtomicValue::string(&s))
        }
        Func::Aggregate(a) => {
            let mut acc = Accumulator::new(a);
            acc.add_items(&arg(0)?)?;
            acc.finish()?
        }
        Func::DateTime => opt_seq(one(0, "dateTime")?.map(|a| a.cast(AtomicKind::DateTime)).transpose()?),
        Func::Decimal => opt_seq(one(0, "decimal")?.map(|a| a.cast(AtomicKind::Decimal)).transpose()?),
        Func::YearFromDateTime | Func::MonthFromDateTime | Func::DayFromDateTime => match one(0, "dateTime part")? {
            None => Sequence::new(),
            Some(AtomicValue::DateTime(d)) => singleton(AtomicValue::Integer(match f {
                Func::YearFromDateTime => d.year(),
                Func::MonthFromDateTime => d.month(),
                _ => d.day(),
            })),
            Some(other) => return Err(Error::type_err(format!("dateTime part of {}", other.kind().name()))),
        },
        Func::UpperCase => {
            let s = one(0, "upper-case")?.map(|a| a.lexical()).unwrap_or_default();
            singleton(AtomicValue::string(&s.to_uppercase()))
        }
        Func::And => bool_seq(args[0].ebv(tuple, env)? && args[1].ebv(tuple, env)?),
        Func::Or => bool_seq(args[0].ebv(tuple, env)? || args[1].ebv(tuple, env)?),
        Func::ValueCompare(op) => match value_compare(op, &arg(0)?, &arg(1)?)? {
            Some(b) => bool_seq(b),
            None => Sequence::new(),
        },
        Func::GeneralCompare(op) => bool_seq(general_compare(op, &arg(0)?, &arg(1)?)?),
        Func::Arith(op) => arith(op, &arg(0)?, &arg(1)?)?,
        Func::Negate => opt_seq(one(0, "unary minus")?.map(negate_atomic).transpose()?),
        Func::Concatenate => {
            let mut out = Sequence::new();
            for i in 0..args.len() {
                out.extend(arg(i)?);
            }
            out
        }
        Func::SortNodes { sort, distinct } => sort_distinct_nodes(&arg(0)?, sort, distinct)?,
    })
}
