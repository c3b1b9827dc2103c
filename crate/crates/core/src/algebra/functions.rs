//! Names and arities of the functions that may appear in plans.

use crate::frontend::normalize::{DISTINCT_ONLY, SORT_DISTINCT, SORT_ONLY};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FnKind {
    Scalar,
    Aggregate,
    Unnesting,
}

/// `None` arity means variadic.
fn arity(name: &str, kind: FnKind) -> Option<Option<usize>> {
    use FnKind::*;
    let a = match (kind, name) {
        (Unnesting, "iterate") => Some(1),
        (Unnesting, "child" | "attribute") => Some(2),
        (Unnesting, _) => return None,
        (Aggregate, "create_sequence" | "count" | "sum" | "avg" | "min" | "max" | "some") => Some(1),
        (Aggregate, _) => return None,
        (Scalar, "concatenate") => None,
        (Scalar, "child" | "attribute" | "treat" | "promote") => Some(2),
        (Scalar, "and" | "or") => Some(2),
        // Language-neutral equality used while choosing join algorithms.
        (Scalar, "equal") => Some(2),
        (
            Scalar,
            "doc" | "collection" | "data" | "boolean" | "not" | "string" | "count" | "sum" | "avg" | "min" | "max"
            | "dateTime" | "decimal" | "year-from-dateTime" | "month-from-dateTime" | "day-from-dateTime"
            | "upper-case" | "numeric-unary-minus",
        ) => Some(1),
        (Scalar, n) if n == SORT_DISTINCT || n == SORT_ONLY || n == DISTINCT_ONLY => Some(1),
        (Scalar, n) if n.starts_with("value-") || n.starts_with("general-") => {
            comparison(n)?;
            Some(2)
        }
        (Scalar, "numeric-add" | "numeric-subtract" | "numeric-multiply" | "numeric-divide") => Some(2),
        (Scalar, _) => return None,
    };
    Some(a)
}

/// Checks that `name` is known in the given position with `args` arguments.
pub fn check(name: &str, kind: FnKind, args: usize) -> Result<(), String> {
    match arity(name, kind) {
        None => Err(format!("{} is not a{} function", name, match kind {
            FnKind::Scalar => " scalar",
            FnKind::Aggregate => "n aggregate",
            FnKind::Unnesting => "n unnesting",
        })),
        Some(Some(n)) if n != args => Err(format!("{} takes {} argument(s), got {}", name, n, args)),
        Some(_) => Ok(()),
    }
}

/// Decodes `value-eq`, `general-lt` and friends into (operator, general).
pub fn comparison(name: &str) -> Option<(crate::xdm::CompOp, bool)> {
    crate::xdm::CompOp::ALL.iter().find_map(|op| {
        if op.value_name() == name {
            Some((*op, false))
        } else if op.general_name() == name {
            Some((*op, true))
        } else {
            None
        }
    })
}

pub fn arithmetic(name: &str) -> Option<crate::xdm::ArithOp> {
    use crate::xdm::ArithOp::*;
    [Add, Sub, Mul, Div].into_iter().find(|op| op.function_name() == name)
}

/// Aggregates that also exist as scalar functions over a whole sequence.
pub const XQUERY_AGGREGATES: [&str; 5] = ["count", "sum", "avg", "min", "max"];
