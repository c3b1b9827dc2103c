//! Reference semantics: a direct recursive interpreter of the core syntax
//! tree over fully parsed documents. It shares no evaluation code with the
//! plan runtime, so agreement between the two is evidence rather than
//! tautology.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::frontend::ast::{Clause, Expr};
use crate::frontend::normalize::{DISTINCT_ONLY, SORT_DISTINCT, SORT_ONLY};
use crate::xdm::arith::{arith, arith_atomic, negate_atomic};
use crate::xdm::compare::{compare_atomic, general_compare, value_compare};
use crate::xdm::sequence::{promote_seq, sort_distinct_nodes, treat, zero_or_one_atomic};
use crate::xdm::{
    atomize, effective_boolean_value, ArithOp, AtomicKind, AtomicValue, CompOp, Item, Node, NodeKind, SeqType,
    Sequence,
};
use crate::xml_ingest::{load_document, scan_collection, PartitionSpec};

/// Variable bindings, innermost last.
#[derive(Default, Clone)]
pub struct Environment {
    vars: Vec<(String, Sequence)>,
}

impl Environment {
    pub fn bind(&mut self, name: &str, value: Sequence) {
        self.vars.push((name.to_string(), value));
    }

    fn lookup(&self, name: &str) -> Option<&Sequence> {
        self.vars.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

/// Interpreter state: the data layout plus parsed documents, kept for the
/// lifetime of the oracle so repeated queries do not reparse.
pub struct Oracle {
    spec: PartitionSpec,
    docs: HashMap<String, Node>,
    collections: HashMap<String, Vec<Node>>,
}

impl Oracle {
    pub fn new(spec: PartitionSpec) -> Self {
        Oracle {
            spec,
            docs: HashMap::new(),
            collections: HashMap::new(),
        }
    }

    pub fn eval(&mut self, core: &Expr) -> Result<Sequence> {
        let mut env = Environment::default();
        self.eval_in(core, &mut env)
    }

    pub fn eval_in(&mut self, e: &Expr, env: &mut Environment) -> Result<Sequence> {
        match e {
            Expr::Literal(l) => Ok(crate::xdm::sequence::singleton(l.to_atomic())),
            Expr::Var(v) => env.lookup(v).cloned().ok_or_else(|| Error::Bind(v.clone())),
            Expr::Type(t) => Err(Error::type_err(format!("type name {} used as a value", t.name()))),
            Expr::Sequence(items) => {
                let mut out = Sequence::new();
                for i in items {
                    out.extend(self.eval_in(i, env)?);
                }
                Ok(out)
            }
            Expr::Flwor {
                clauses,
                where_clause,
                ret,
            } => {
                let mut out = Sequence::new();
                self.flwor(clauses, where_clause.as_deref(), ret, env, &mut out)?;
                Ok(out)
            }
            Expr::Some {
                var,
                input,
                satisfies,
            } => {
                let items = self.eval_in(input, env)?;
                for item in items {
                    env.bind(var, crate::xdm::sequence::singleton(item));
                    let r = self.eval_in(satisfies, env).and_then(|s| effective_boolean_value(&s));
                    env.vars.pop();
                    if r? {
                        return Ok(crate::xdm::sequence::singleton(AtomicValue::Boolean(true)));
                    }
                }
                Ok(crate::xdm::sequence::singleton(AtomicValue::Boolean(false)))
            }
            Expr::Step { .. } => Err(Error::Translation("path step in a core expression".into())),
            Expr::Map { input, var, body } => {
                let items = self.eval_in(input, env)?;
                let mut out = Sequence::new();
                for item in items {
                    env.bind(var, crate::xdm::sequence::singleton(item));
                    let r = self.eval_in(body, env);
                    env.vars.pop();
                    out.extend(r?);
                }
                Ok(out)
            }
            Expr::Compare {
                op,
                general,
                left,
                right,
            } => {
                let l = self.eval_in(left, env)?;
                let r = self.eval_in(right, env)?;
                if *general {
                    Ok(boolean_seq(general_compare(*op, &l, &r)?))
                } else {
                    Ok(match value_compare(*op, &l, &r)? {
                        Some(b) => boolean_seq(b),
                        None => Sequence::new(),
                    })
                }
            }
            Expr::Arith { op, left, right } => {
                let l = self.eval_in(left, env)?;
                let r = self.eval_in(right, env)?;
                arith(*op, &l, &r)
            }
            Expr::Neg(inner) => {
                let v = self.eval_in(inner, env)?;
                match zero_or_one_atomic(&v, "unary minus")? {
                    Some(a) => Ok(crate::xdm::sequence::singleton(negate_atomic(a)?)),
                    None => Ok(Sequence::new()),
                }
            }
            Expr::And(l, r) => {
                if !effective_boolean_value(&self.eval_in(l, env)?)? {
                    return Ok(boolean_seq(false));
                }
                Ok(boolean_seq(effective_boolean_value(&self.eval_in(r, env)?)?))
            }
            Expr::Or(l, r) => {
                if effective_boolean_value(&self.eval_in(l, env)?)? {
                    return Ok(boolean_seq(true));
                }
                Ok(boolean_seq(effective_boolean_value(&self.eval_in(r, env)?)?))
            }
            Expr::Call { name, args } => self.call(name, args, env),
        }
    }

    fn flwor(
        &mut self,
        clauses: &[Clause],
        where_clause: Option<&Expr>,
        ret: &Expr,
        env: &mut Environment,
        out: &mut Sequence,
    ) -> Result<()> {
        let Some((first, rest)) = clauses.split_first() else {
            if let Some(w) = where_clause {
                if !effective_boolean_value(&self.eval_in(w, env)?)? {
                    return Ok(());
                }
            }
            out.extend(self.eval_in(ret, env)?);
            return Ok(());
        };
        match first {
            Clause::For { var, input } => {
                let items = self.eval_in(input, env)?;
                for item in items {
                    env.bind(var, crate::xdm::sequence::singleton(item));
                    let r = self.flwor(rest, where_clause, ret, env, out);
                    env.vars.pop();
                    r?;
                }
                Ok(())
            }
            Clause::Let { var, value } => {
                let v = self.eval_in(value, env)?;
                env.bind(var, v);
                let r = self.flwor(rest, where_clause, ret, env, out);
                env.vars.pop();
                r
            }
        }
    }

    fn type_arg(e: &Expr) -> Result<SeqType> {
        match e {
            Expr::Type(t) => Ok(*t),
            other => Err(Error::type_err(format!("expected a type name, found {}", other))),
        }
    }

    fn call(&mut self, name: &str, args: &[Expr], env: &mut Environment) -> Result<Sequence> {
        match name {
            "treat" => {
                let v = self.eval_in(&args[0], env)?;
                treat(v, Self::type_arg(&args[1])?)
            }
            "promote" => {
                let v = self.eval_in(&args[0], env)?;
                promote_seq(&v, Self::type_arg(&args[1])?)
            }
            "child" | "attribute" => {
                let input = self.eval_in(&args[0], env)?;
                let wanted = self.eval_in(&args[1], env)?;
                let wanted = match zero_or_one_atomic(&wanted, name)? {
                    Some(a) => a.lexical(),
                    None => return Err(Error::type_err("step name missing")),
                };
                let mut out = Sequence::new();
                for item in &input {
                    let Item::Node(n) = item else {
                        return Err(Error::type_err("path step applied to an atomic value"));
                    };
                    if name == "child" {
                        for c in n.children() {
                            if c.kind() == NodeKind::Element && c.name() == Some(wanted.as_str()) {
                                out.push(Item::Node(c));
                            }
                        }
                    } else if let Some(a) = n.attribute(&wanted) {
                        out.push(Item::Node(a));
                    }
                }
                Ok(out)
            }
            SORT_DISTINCT | SORT_ONLY | DISTINCT_ONLY => {
                let v = self.eval_in(&args[0], env)?;
                sort_distinct_nodes(&v, name != DISTINCT_ONLY, name != SORT_ONLY)
            }
            _ => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval_in(a, env)?);
                }
                self.builtin(name, vals)
            }
        }
    }

    fn builtin(&mut self, name: &str, mut vals: Vec<Sequence>) -> Result<Sequence> {
        let arg = vals.pop().unwrap_or_default();
        let one = |v: Option<AtomicValue>| -> Sequence {
            v.map(crate::xdm::sequence::singleton).unwrap_or_default()
        };
        match name {
            "data" => Ok(atomize(&arg)),
            "boolean" => Ok(boolean_seq(effective_boolean_value(&arg)?)),
            "not" => Ok(boolean_seq(!effective_boolean_value(&arg)?)),
            "string" => {
                let s = match arg.first() {
                    None => String::new(),
                    Some(Item::Node(n)) => n.string_value().into_owned(),
                    Some(Item::Atomic(a)) => a.lexical(),
                };
                if arg.len() > 1 {
                    return Err(Error::type_err("string() of several items"));
                }
                Ok(crate::xdm::sequence::singleton(AtomicValue::string(&s)))
            }
            "doc" => {
                let uri = zero_or_one_atomic(&arg, "doc")?.ok_or_else(|| Error::type_err("doc() of ()"))?;
                let uri = uri.lexical();
                if let Some(d) = self.docs.get(&uri) {
                    return Ok(crate::xdm::sequence::singleton(d.clone()));
                }
                let d = load_document(&self.spec.resolve_doc(&uri))?;
                self.docs.insert(uri, d.clone());
                Ok(crate::xdm::sequence::singleton(d))
            }
            "collection" => {
                let uri = zero_or_one_atomic(&arg, "collection")?
                    .ok_or_else(|| Error::type_err("collection() of ()"))?
                    .lexical();
                if !self.collections.contains_key(&uri) {
                    let mut docs = Vec::new();
                    for p in 0..self.spec.partition_count() {
                        for d in scan_collection(&self.spec, p, &uri)? {
                            docs.push(d?);
                        }
                    }
                    self.collections.insert(uri.clone(), docs);
                }
                Ok(self.collections[&uri].iter().cloned().map(Item::Node).collect())
            }
            "count" => Ok(crate::xdm::sequence::singleton(AtomicValue::Integer(arg.len() as i64))),
            "sum" => Ok(crate::xdm::sequence::singleton(
                sum(&arg)?.unwrap_or(AtomicValue::Integer(0)),
            )),
            "avg" => match sum(&arg)? {
                None => Ok(Sequence::new()),
                Some(total) => Ok(crate::xdm::sequence::singleton(arith_atomic(
                    ArithOp::Div,
                    total,
                    AtomicValue::Integer(arg.len() as i64),
                )?)),
            },
            "min" => extremum(&arg, CompOp::Lt).map(one),
            "max" => extremum(&arg, CompOp::Gt).map(one),
            "dateTime" => Ok(one(match zero_or_one_atomic(&arg, name)? {
                Some(a) => Some(a.cast(AtomicKind::DateTime)?),
                None => None,
            })),
            "decimal" => Ok(one(match zero_or_one_atomic(&arg, name)? {
                Some(a) => Some(a.cast(AtomicKind::Decimal)?),
                None => None,
            })),
            "year-from-dateTime" | "month-from-dateTime" | "day-from-dateTime" => {
                Ok(one(match zero_or_one_atomic(&arg, name)? {
                    Some(AtomicValue::DateTime(d)) => Some(AtomicValue::Integer(match name {
                        "year-from-dateTime" => d.year(),
                        "month-from-dateTime" => d.month(),
                        _ => d.day(),
                    })),
                    Some(other) => {
                        return Err(Error::type_err(format!("{} of {}", name, other.kind().name())))
                    }
                    None => None,
                }))
            }
            "upper-case" => {
                let s = zero_or_one_atomic(&arg, name)?.map(|a| a.lexical()).unwrap_or_default();
                Ok(crate::xdm::sequence::singleton(AtomicValue::string(&s.to_uppercase())))
            }
            other => Err(Error::Translation(format!("unknown function {}", other))),
        }
    }
}

fn boolean_seq(b: bool) -> Sequence {
    crate::xdm::sequence::singleton(AtomicValue::Boolean(b))
}

fn numeric_operand(item: &Item) -> Result<AtomicValue> {
    let v = crate::xdm::sequence::atomize_item(item);
    if v.kind() == AtomicKind::UntypedAtomic {
        return v.cast(AtomicKind::Double);
    }
    Ok(v)
}

fn sum(items: &[Item]) -> Result<Option<AtomicValue>> {
    let mut acc: Option<AtomicValue> = None;
    for item in items {
        let v = numeric_operand(item)?;
        acc = Some(match acc {
            None => {
                if !v.is_numeric() {
                    return Err(Error::type_err(format!("sum over {}", v.kind().name())));
                }
                v
            }
            Some(a) => arith_atomic(ArithOp::Add, a, v)?,
        });
    }
    Ok(acc)
}

fn extremum(items: &[Item], better: CompOp) -> Result<Option<AtomicValue>> {
    let mut best: Option<AtomicValue> = None;
    for item in items {
        let v = numeric_operand(item)?;
        if matches!(v, AtomicValue::Double(d) if d.is_nan()) {
            return Ok(Some(AtomicValue::Double(f64::NAN)));
        }
        best = Some(match best {
            None => v,
            Some(b) => {
                if compare_atomic(better, &v, &b)? {
                    v
                } else {
                    b
                }
            }
        });
    }
    // Mixed numeric kinds report in the widest kind seen.
    Ok(best)
}

/// One-shot evaluation of a query text.
pub fn eval_naive(text: &str, spec: &PartitionSpec) -> Result<Sequence> {
    let core = crate::frontend::compile_core(text)?;
    Oracle::new(spec.clone()).eval(&core)
}

#[cfg(test)]
mod tests;
