//! Rewrites the surface tree into the core form: path steps become
//! iterate/step/sort-distinct compositions and every implicit coercion site
//! gets an explicit `data`, `boolean`, `treat` or `promote` call. Applying
//! it to its own output changes nothing.

use super::ast::{Axis, Clause, Expr};
use crate::error::{Error, Result};
use crate::xdm::{AtomicKind, SeqType};

pub const SORT_DISTINCT: &str = "sort-distinct-nodes-asc-or-atomics";
pub const SORT_ONLY: &str = "sort-nodes-asc-or-atomics";
pub const DISTINCT_ONLY: &str = "distinct-nodes-or-atomics";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coercion {
    None,
    /// `data(x)`
    Atomize,
    /// `promote(data(x), kind)`
    Promote(AtomicKind),
    /// `treat(x, any_type)`
    TreatAny,
}

/// Arity and per-argument coercion of every function a query may call.
pub fn signature(name: &str) -> Option<&'static [Coercion]> {
    use Coercion::*;
    Some(match name {
        "doc" | "collection" | "upper-case" => &[Promote(AtomicKind::String)],
        "year-from-dateTime" | "month-from-dateTime" | "day-from-dateTime" => &[Promote(AtomicKind::DateTime)],
        "count" => &[TreatAny],
        "sum" | "avg" | "min" | "max" | "dateTime" | "decimal" => &[Atomize],
        "data" | "boolean" | "not" | "string" => &[None],
        "treat" | "promote" => &[None, None],
        "child" | "attribute" => &[None, None],
        SORT_DISTINCT | SORT_ONLY | DISTINCT_ONLY => &[None],
        _ => return Option::None,
    })
}

/// Calls whose result is always a sequence of atomic values, so comparison
/// and arithmetic operands built from them need no atomization.
fn yields_atomic(e: &Expr) -> bool {
    match e {
        Expr::Literal(_) | Expr::Arith { .. } | Expr::Neg(_) | Expr::Compare { .. } | Expr::And(..) | Expr::Or(..) => true,
        Expr::Call { name, .. } => matches!(
            name.as_str(),
            "data"
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
                | "string"
                | "boolean"
                | "not"
                | "promote"
        ),
        _ => false,
    }
}

fn data(e: Expr) -> Expr {
    if e.is_call("data") {
        e
    } else {
        Expr::call("data", vec![e])
    }
}

fn operand(e: Expr) -> Expr {
    if yields_atomic(&e) {
        e
    } else {
        data(e)
    }
}

fn boolean(e: Expr) -> Expr {
    if e.is_call("boolean") {
        e
    } else {
        Expr::call("boolean", vec![e])
    }
}

fn condition(e: Expr) -> Expr {
    match e {
        Expr::And(..) | Expr::Or(..) => e,
        other => boolean(other),
    }
}

fn coerce(c: Coercion, e: Expr) -> Expr {
    match c {
        Coercion::None => e,
        Coercion::Atomize => data(e),
        Coercion::TreatAny => match &e {
            Expr::Call { name, args } if name == "treat" && args.get(1) == Some(&Expr::Type(SeqType::AnyType)) => e,
            _ => Expr::call("treat", vec![e, Expr::Type(SeqType::AnyType)]),
        },
        Coercion::Promote(k) => match &e {
            Expr::Call { name, args } if name == "promote" && args.get(1) == Some(&Expr::Type(SeqType::Atomic(k))) => e,
            _ => Expr::call("promote", vec![data(e), Expr::Type(SeqType::Atomic(k))]),
        },
    }
}

struct Normalizer {
    scope: Vec<String>,
    next_it: usize,
}

impl Normalizer {
    fn bound(&self, v: &str) -> bool {
        self.scope.iter().any(|s| s == v)
    }

    fn fresh(&mut self) -> String {
        loop {
            self.next_it += 1;
            let v = format!("#it{}", self.next_it);
            if !self.bound(&v) {
                return v;
            }
        }
    }

    fn norm(&mut self, e: Expr) -> Result<Expr> {
        Ok(match e {
            Expr::Literal(_) | Expr::Type(_) => e,
            Expr::Var(v) => {
                if !self.bound(&v) {
                    return Err(Error::Bind(v));
                }
                Expr::Var(v)
            }
            Expr::Sequence(items) => Expr::Sequence(items.into_iter().map(|i| self.norm(i)).collect::<Result<_>>()?),
            Expr::Flwor {
                clauses,
                where_clause,
                ret,
            } => {
                let depth = self.scope.len();
                let mut out = Vec::with_capacity(clauses.len());
                for c in clauses {
                    out.push(match c {
                        Clause::For { var, input } => {
                            let input = self.norm(input)?;
                            self.scope.push(var.clone());
                            Clause::For { var, input }
                        }
                        Clause::Let { var, value } => {
                            let value = self.norm(value)?;
                            self.scope.push(var.clone());
                            Clause::Let { var, value }
                        }
                    });
                }
                let where_clause = match where_clause {
                    Some(w) => Some(Box::new(boolean(self.norm(*w)?))),
                    None => None,
                };
                let ret = Box::new(self.norm(*ret)?);
                self.scope.truncate(depth);
                Expr::Flwor {
                    clauses: out,
                    where_clause,
                    ret,
                }
            }
            Expr::Some {
                var,
                input,
                satisfies,
            } => {
                let input = Box::new(self.norm(*input)?);
                self.scope.push(var.clone());
                let satisfies = Box::new(boolean(self.norm(*satisfies)?));
                self.scope.pop();
                Expr::Some {
                    var,
                    input,
                    satisfies,
                }
            }
            Expr::Step { input, axis, name } => {
                let input = self.norm(*input)?;
                let it = self.fresh();
                let step_fn = match axis {
                    Axis::Child => "child",
                    Axis::Attribute => "attribute",
                };
                let body = Expr::call(
                    step_fn,
                    vec![
                        Expr::call("treat", vec![Expr::Var(it.clone()), Expr::Type(SeqType::ElementNode)]),
                        Expr::string(&name),
                    ],
                );
                Expr::call(
                    SORT_DISTINCT,
                    vec![Expr::Map {
                        input: Box::new(input),
                        var: it,
                        body: Box::new(body),
                    }],
                )
            }
            Expr::Call { name, args } => {
                let sig = signature(&name).ok_or_else(|| {
                    Error::Translation(format!("unknown function {}#{}", name, args.len()))
                })?;
                if sig.len() != args.len() {
                    return Err(Error::Translation(format!(
                        "{} expects {} argument(s), got {}",
                        name,
                        sig.len(),
                        args.len()
                    )));
                }
                if matches!(name.as_str(), "treat" | "promote") && !matches!(args[1], Expr::Type(_)) {
                    return Err(Error::Translation(format!("second argument of {} must be a type name", name)));
                }
                let mut out = Vec::with_capacity(args.len());
                for (a, c) in args.into_iter().zip(sig) {
                    out.push(coerce(*c, self.norm(a)?));
                }
                Expr::Call { name, args: out }
            }
            Expr::Compare {
                op,
                general,
                left,
                right,
            } => Expr::Compare {
                op,
                general,
                left: Box::new(operand(self.norm(*left)?)),
                right: Box::new(operand(self.norm(*right)?)),
            },
            Expr::Arith { op, left, right } => Expr::Arith {
                op,
                left: Box::new(operand(self.norm(*left)?)),
                right: Box::new(operand(self.norm(*right)?)),
            },
            Expr::Neg(e) => Expr::Neg(Box::new(operand(self.norm(*e)?))),
            Expr::And(l, r) => Expr::And(
                Box::new(condition(self.norm(*l)?)),
                Box::new(condition(self.norm(*r)?)),
            ),
            Expr::Or(l, r) => Expr::Or(
                Box::new(condition(self.norm(*l)?)),
                Box::new(condition(self.norm(*r)?)),
            ),
            Expr::Map { input, var, body } => {
                let input = Box::new(self.norm(*input)?);
                if let Some(n) = var.strip_prefix("#it").and_then(|n| n.parse::<usize>().ok()) {
                    self.next_it = self.next_it.max(n);
                }
                self.scope.push(var.clone());
                let body = Box::new(self.norm(*body)?);
                self.scope.pop();
                Expr::Map { input, var, body }
            }
        })
    }
}

/// Produces the core form of a query. Fails with a bind error on the first
/// variable that no enclosing clause binds.
pub fn normalize(e: Expr) -> Result<Expr> {
    Normalizer {
        scope: Vec::new(),
        next_it: 0,
    }
    .norm(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse_query;

    #[test]
    fn path_step_expands() {
        let core = normalize(parse_query("doc(\"book.xml\")/bookstore").unwrap()).unwrap();
        assert_eq!(
            core.to_string(),
            "sort-distinct-nodes-asc-or-atomics(map(doc(promote(data(\"book.xml\"), string)), $#it1, \
             child(treat($#it1, element_node), \"bookstore\")))"
        );
    }

    #[test]
    fn unbound_variable_is_named() {
        match normalize(parse_query("$nope/a").unwrap()) {
            Err(Error::Bind(v)) => assert_eq!(v, "nope"),
            other => panic!("{:?}", other),
        }
        assert!(normalize(parse_query("for $x in (1, 2) return $x").unwrap()).is_ok());
        assert!(normalize(parse_query("(for $x in (1, 2) return $x, $x)").unwrap()).is_err());
    }

    #[test]
    fn where_and_comparisons_get_coercions() {
        let core = normalize(
            parse_query("for $r in collection(\"/c\")/a where $r/b eq \"x\" and $r/c gt 1 return $r").unwrap(),
        )
        .unwrap();
        let Expr::Flwor { where_clause, .. } = &core else { panic!() };
        let w = where_clause.as_ref().unwrap().to_string();
        assert!(w.starts_with("boolean(boolean(data(sort-distinct"), "{}", w);
        assert!(w.contains("eq \"x\""));
    }

    #[test]
    fn count_gets_treat_and_unknown_function_fails() {
        let core = normalize(parse_query("count((1, 2))").unwrap()).unwrap();
        assert_eq!(core.to_string(), "count(treat((1, 2), any_type))");
        assert!(matches!(
            normalize(parse_query("frobnicate(1)").unwrap()),
            Err(Error::Translation(_))
        ));
    }

    #[test]
    fn idempotent_on_the_corpus() {
        for q in crate::frontend::corpus::ALL {
            let once = normalize(parse_query(q.text).unwrap()).unwrap();
            let twice = normalize(once.clone()).unwrap();
            assert_eq!(once, twice, "{}", q.name);
        }
    }
}
