use std::fs;
use std::path::Path;

use super::*;
use crate::xdm::serialize::serialize_sequence;
use crate::xml_ingest::tests::BOOKSTORE;

fn write(dir: &Path, rel: &str, text: &str) {
    let p = dir.join(rel);
    fs::create_dir_all(p.parent().unwrap()).unwrap();
    fs::write(p, text).unwrap();
}

fn run(spec: &PartitionSpec, q: &str) -> Sequence {
    eval_naive(q, spec).unwrap_or_else(|e| panic!("{}: {}", q, e))
}

fn store(titles: &[&str]) -> String {
    let mut s = String::from("<bookstore>");
    for t in titles {
        s.push_str(&format!("<book><title>{}</title></book>", t));
    }
    s.push_str("</bookstore>");
    s
}

#[test]
fn document_paths() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "book.xml", BOOKSTORE);
    let spec = PartitionSpec::from_data_root(dir.path(), 1).unwrap();
    let out = run(&spec, r#"doc("book.xml")/bookstore/book/title"#);
    assert_eq!(
        serialize_sequence(&out),
        "<title lang=\"en\">Everyday Italian</title>\n<title lang=\"en\">Harry Potter</title>"
    );
    let ids = run(&spec, r#"for $b in doc("book.xml")/bookstore/book return data($b/@id)"#);
    assert_eq!(serialize_sequence(&ids), "1\n2");
    let total = run(&spec, r#"sum(doc("book.xml")/bookstore/book/price)"#);
    assert_eq!(total.as_slice(), &[Item::Atomic(AtomicValue::Double(30.0 + 29.99))]);
}

#[test]
fn collections_counts_and_joins() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "part-0/ann-books/a.xml", &store(&["X", "Y"]));
    write(dir.path(), "part-1/ann-books/b.xml", &store(&["Z"]));
    write(dir.path(), "part-0/joe-books/a.xml", &store(&["Y", "Z", "Q"]));
    fs::create_dir_all(dir.path().join("part-0/books")).unwrap();
    fs::create_dir_all(dir.path().join("part-1/books")).unwrap();
    fs::create_dir_all(dir.path().join("part-1/joe-books")).unwrap();
    let spec = PartitionSpec::from_data_root(dir.path(), 2).unwrap();

    let empty = run(&spec, crate::frontend::corpus::BOOKS_COUNT);
    assert_eq!(empty.as_slice(), &[Item::Atomic(AtomicValue::Integer(0))]);

    let joined = run(&spec, crate::frontend::corpus::BOOKS_JOIN);
    let titles: Vec<String> = joined
        .iter()
        .map(|i| i.as_node().unwrap().string_value().into_owned())
        .collect();
    assert_eq!(titles, ["Y", "Z"]);
}

#[test]
fn aggregates_over_empty_and_mixed_input() {
    let spec = PartitionSpec::new("/nonexistent", vec![vec![]]);
    let one = |q: &str| run(&spec, q);
    assert_eq!(one("sum(())").as_slice(), &[Item::Atomic(AtomicValue::Integer(0))]);
    assert!(one("avg(())").is_empty());
    assert!(one("max(())").is_empty());
    assert_eq!(
        one("avg((1, 2))").as_slice(),
        &[Item::Atomic(AtomicValue::Decimal(crate::xdm::Decimal::parse("1.5").unwrap()))]
    );
    assert_eq!(one("max((1, 2.5, 2))").as_slice(), &[Item::Atomic(AtomicValue::Decimal(
        crate::xdm::Decimal::parse("2.5").unwrap()
    ))]);
    assert_eq!(one("min((3, 1, 2))").as_slice(), &[Item::Atomic(AtomicValue::Integer(1))]);
    assert!(eval_naive("max((1, \"a\"))", &spec).is_err());
}

#[test]
fn quantifier_and_datetime_functions() {
    let spec = PartitionSpec::new("/nonexistent", vec![vec![]]);
    let b = |q: &str| run(&spec, q);
    assert_eq!(
        b("some $x in (1, 2, 3) satisfies $x gt 2").as_slice(),
        &[Item::Atomic(AtomicValue::Boolean(true))]
    );
    assert_eq!(
        b("year-from-dateTime(dateTime(\"1976-07-04T00:00:00.000\"))").as_slice(),
        &[Item::Atomic(AtomicValue::Integer(1976))]
    );
    assert_eq!(
        serialize_sequence(&b("upper-case(\"washington\")")),
        "WASHINGTON"
    );
    assert!(b("for $x in (1, 2) where $x eq 3 return $x").is_empty());
}
