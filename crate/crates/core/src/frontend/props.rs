use std::sync::Arc;

use proptest::prelude::*;

use super::ast::{Axis, Clause, Expr, Literal};
use super::normalize::normalize;
use super::parser::parse_query;
use crate::xdm::{ArithOp, AtomicKind, CompOp, Decimal, SeqType};

fn name() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "title", "div", "for", "data-set"]).prop_map(String::from)
}

fn var() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["x", "y", "r_min", "s"]).prop_map(String::from)
}

fn literal() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0i64..100_000).prop_map(|i| Expr::Literal(Literal::Integer(i))),
        (0i64..1_000_000).prop_map(|i| Expr::Literal(Literal::Decimal(
            Decimal::from_scaled(i as i128 * 1_000_000_000_000_000 / 1000)
        ))),
        (1u32..10_000).prop_map(|i| Expr::Literal(Literal::Double(i as f64 / 8.0))),
        "[a-z\"' ]{0,6}".prop_map(|s| Expr::Literal(Literal::String(Arc::from(s.as_str())))),
    ]
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        literal(),
        var().prop_map(Expr::Var),
        prop::sample::select(vec![
            SeqType::ElementNode,
            SeqType::AnyType,
            SeqType::Atomic(AtomicKind::String),
            SeqType::Atomic(AtomicKind::DateTime),
        ])
        .prop_map(Expr::Type),
    ]
}

fn ast() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 40, 4, |inner| {
        let b = |s: BoxedStrategy<Expr>| s.prop_map(Box::new);
        let inner = inner.boxed();
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4)
                .prop_filter("one-item sequences print as plain parentheses", |v| v.len() != 1)
                .prop_map(Expr::Sequence),
            (
                prop::collection::vec(
                    (any::<bool>(), var(), inner.clone()).prop_map(|(f, var, e)| if f {
                        Clause::For { var, input: e }
                    } else {
                        Clause::Let { var, value: e }
                    }),
                    1..3
                ),
                prop::option::of(b(inner.clone())),
                b(inner.clone())
            )
                .prop_map(|(clauses, where_clause, ret)| Expr::Flwor {
                    clauses,
                    where_clause,
                    ret
                }),
            (var(), b(inner.clone()), b(inner.clone())).prop_map(|(var, input, satisfies)| Expr::Some {
                var,
                input,
                satisfies
            }),
            (b(inner.clone()), any::<bool>(), name()).prop_map(|(input, attr, name)| Expr::Step {
                input,
                axis: if attr { Axis::Attribute } else { Axis::Child },
                name
            }),
            (
                prop::sample::select(vec!["count", "data", "f", "year-from-dateTime"]),
                prop::collection::vec(inner.clone(), 0..3)
            )
                .prop_map(|(n, args)| Expr::call(n, args)),
            (prop::sample::select(CompOp::ALL.to_vec()), any::<bool>(), b(inner.clone()), b(inner.clone()))
                .prop_map(|(op, general, left, right)| Expr::Compare {
                    op,
                    general,
                    left,
                    right
                }),
            (
                prop::sample::select(vec![ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div]),
                b(inner.clone()),
                b(inner.clone())
            )
                .prop_map(|(op, left, right)| Expr::Arith { op, left, right }),
            b(inner.clone()).prop_map(Expr::Neg),
            (b(inner.clone()), b(inner.clone())).prop_map(|(l, r)| Expr::And(l, r)),
            (b(inner.clone()), b(inner)).prop_map(|(l, r)| Expr::Or(l, r)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_round_trips(e in ast()) {
        let text = e.to_string();
        let back = parse_query(&text);
        prop_assert!(back.is_ok(), "{} -> {:?}", text, back);
        prop_assert_eq!(back.unwrap(), e, "{}", text);
    }

    #[test]
    fn normalize_is_idempotent(e in ast()) {
        // Only trees that normalize at all; most random ones fail binding.
        if let Ok(once) = normalize(e) {
            let twice = normalize(once.clone()).unwrap();
            prop_assert_eq!(twice, once);
        }
    }
}
