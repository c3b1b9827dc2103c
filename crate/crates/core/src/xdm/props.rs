//! Property checks for the data-model invariants.

use std::cmp::Ordering;

use proptest::prelude::*;

use super::*;

fn node_id() -> impl Strategy<Value = NodeId> {
    (0u32..4, 0u32..4, 0u32..8).prop_map(|(p, d, o)| NodeId::new(p, d, o))
}

fn atomic() -> impl Strategy<Value = AtomicValue> {
    prop_oneof![
        any::<bool>().prop_map(AtomicValue::Boolean),
        any::<i8>().prop_map(AtomicValue::Byte),
        any::<i16>().prop_map(AtomicValue::Short),
        any::<i64>().prop_map(AtomicValue::Integer),
        any::<i64>().prop_map(AtomicValue::Long),
        any::<f64>().prop_map(AtomicValue::Double),
        any::<f32>().prop_map(AtomicValue::Float),
        "[a-z]{0,6}".prop_map(|s| AtomicValue::string(&s)),
        "[a-z0-9.]{0,6}".prop_map(|s| AtomicValue::untyped(&s)),
        (-1_000_000i64..1_000_000, 0u32..1000).prop_map(|(i, f)| AtomicValue::Decimal(
            Decimal::parse(&format!("{}.{:03}", i, f)).unwrap()
        )),
        (0i64..2_000_000_000_000).prop_map(|ms| AtomicValue::DateTime(DateTime {
            millis: ms,
            has_tz: false
        })),
    ]
}

proptest! {
    #[test]
    fn document_order_is_a_strict_total_order(a in node_id(), b in node_id(), c in node_id()) {
        let ab = compare_document_order(a, b);
        prop_assert_eq!(ab, compare_document_order(b, a).reverse());
        prop_assert_eq!(ab == Ordering::Equal, a == b);
        if ab == Ordering::Less && compare_document_order(b, c) == Ordering::Less {
            prop_assert_eq!(compare_document_order(a, c), Ordering::Less);
        }
    }

    #[test]
    fn atomize_is_idempotent_on_atomics(vals in proptest::collection::vec(atomic(), 0..6)) {
        let seq: Vec<Item> = vals.into_iter().map(Item::Atomic).collect();
        let once = atomize(&seq);
        prop_assert_eq!(once.len(), seq.len());
        prop_assert_eq!(&once[..], &seq[..]);
        prop_assert_eq!(atomize(&once), once.clone());
    }

    #[test]
    fn promote_to_own_kind_is_identity(v in atomic()) {
        prop_assert_eq!(v.promote(v.kind()).unwrap(), v);
    }

    #[test]
    fn lexical_form_casts_back(v in atomic()) {
        let text = v.lexical();
        let back = AtomicValue::untyped(&text).cast(v.kind()).unwrap();
        prop_assert_eq!(back.lexical(), text);
    }
}
