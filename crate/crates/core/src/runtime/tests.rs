use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::{compile, Env};
use super::frame::Tuple;
use super::join::{hybrid_hash_join, nested_loop_join, JoinResources, JoinSpec};
use super::*;
use crate::algebra::{LExpr, Var};
use crate::frontend::corpus;
use crate::optimizer::{rules_without, run_optimizer, PhysicalOp, Stage};
use crate::oracle::eval_naive;
use crate::xdm::sequence::singleton;
use crate::xdm::serialize::serialize_sequence;
use crate::xdm::{AtomicValue, Item};
use crate::xml_ingest::tests::BOOKSTORE;
use crate::Error;

fn write(dir: &Path, rel: &str, text: &str) {
    let p = dir.join(rel);
    fs::create_dir_all(p.parent().unwrap()).unwrap();
    fs::write(p, text).unwrap();
}

fn store(titles: &[&str]) -> String {
    let mut s = String::from("<bookstore>");
    for t in titles {
        s.push_str(&format!("<book><title>{}</title><price>{}</price></book>", t, t.len()));
    }
    s.push_str("</bookstore>");
    s
}

fn books(dir: &Path, partitions: usize) -> PartitionSpec {
    write(dir, "part-0/ann-books/a.xml", &store(&["X", "Y", "YY"]));
    write(dir, "part-1/ann-books/b.xml", &store(&["Z", "QQQ"]));
    write(dir, "part-0/joe-books/a.xml", &store(&["Y", "Z", "Q"]));
    write(dir, "part-1/joe-books/b.xml", &store(&["QQQ", "X", "Z"]));
    for p in 0..2 {
        fs::create_dir_all(dir.join(format!("part-{}/books", p))).unwrap();
    }
    write(dir, "book.xml", BOOKSTORE);
    PartitionSpec::from_data_root(dir, partitions).unwrap()
}

fn engine(q: &str, spec: &PartitionSpec) -> Sequence {
    run_query(q, spec, &ExecConfig::default()).unwrap_or_else(|e| panic!("{}: {}", q, e))
}

fn oracle(q: &str, spec: &PartitionSpec) -> Sequence {
    eval_naive(q, spec).unwrap_or_else(|e| panic!("{}: {}", q, e))
}

fn sorted_lines(s: &Sequence) -> Vec<String> {
    let mut v: Vec<String> = s.iter().map(|i| serialize_sequence(std::slice::from_ref(i))).collect();
    v.sort();
    v
}

#[test]
fn bookstore_sample_returns_both_books_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let spec = books(dir.path(), 1);
    let out = engine(corpus::BOOK_PATH, &spec);
    assert_eq!(out.len(), 2);
    assert_eq!(serialize_sequence(&out), serialize_sequence(&oracle(corpus::BOOK_PATH, &spec)));
    assert!(serialize_sequence(&out).starts_with("<book id=\"1\" category=\"COOKING\">"));
}

#[test]
fn empty_collection_gives_empty_result() {
    let dir = tempfile::tempdir().unwrap();
    let spec = books(dir.path(), 2);
    assert!(engine(corpus::BOOKS_COLLECTION_PATH, &spec).is_empty());
    assert_eq!(engine(corpus::BOOKS_COUNT, &spec).as_slice(), &[Item::Atomic(AtomicValue::Integer(0))]);
}

#[test]
fn book_queries_match_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    for partitions in [1, 2] {
        let spec = books(dir.path(), partitions);
        let queries = [
            r#"collection("/ann-books")/bookstore/book/title"#,
            r#"count(collection("/ann-books")/bookstore/book)"#,
            r#"sum(collection("/ann-books")/bookstore/book/price)"#,
            r#"avg(collection("/joe-books")/bookstore/book/price)"#,
            r#"max(collection("/joe-books")/bookstore/book/price)"#,
            r#"for $b in collection("/joe-books")/bookstore/book where $b/price > 1 return $b/title"#,
            r#"for $x in (1, 2) return count(for $b in collection("/joe-books")/bookstore/book where $b/price >= $x return $b)"#,
            r#"some $b in collection("/ann-books")/bookstore/book satisfies $b/title eq "Z""#,
            r#"for $b in doc("book.xml")/bookstore/book return data($b/@id)"#,
        ];
        for q in queries {
            assert_eq!(
                serialize_sequence(&engine(q, &spec)),
                serialize_sequence(&oracle(q, &spec)),
                "{} on {} partitions",
                q,
                partitions
            );
        }
        let joins = [
            corpus::BOOKS_JOIN,
            r#"for $a in collection("/ann-books")/bookstore/book
               for $b in collection("/joe-books")/bookstore/book
               where $a/price lt $b/price return $a/title"#,
            r#"for $x in (1, 2) return count(
                 for $a in collection("/ann-books")/bookstore/book
                 for $b in collection("/joe-books")/bookstore/book
                 where $a/title eq $b/title and $a/price >= $x return $a)"#,
        ];
        for q in joins {
            assert_eq!(sorted_lines(&engine(q, &spec)), sorted_lines(&oracle(q, &spec)), "{}", q);
        }
    }
}

fn records(n: usize, payload: usize) -> String {
    let mut s = String::from("<r>");
    for i in 0..n {
        s.push_str(&format!("<x><v>{}</v><pad>{}</pad></x>", i, "p".repeat(payload)));
    }
    s.push_str("</r>");
    s
}

#[test]
fn pipelines_buffer_at_most_one_frame() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "part-0/c/a.xml", &records(2000, 10));
    let spec = PartitionSpec::from_data_root(dir.path(), 1).unwrap();
    let q = r#"for $x in collection("/c")/r/x where $x/v >= 0 return $x/v"#;
    let pp = compile_query(q, &spec, PhysicalConfig::default()).unwrap().physical;
    let config = ExecConfig {
        frame_size: 4096,
        ..ExecConfig::default()
    };
    let (out, stats) = execute_with_stats(&pp, &spec, &config).unwrap();
    assert_eq!(out.len(), 2000);
    assert!(stats.frames > 10, "{:?}", stats);
    assert!(stats.max_frame_tuples < 2000 / 10, "{:?}", stats);
}

#[test]
fn oversized_tuples_need_path_pushdown() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "part-0/c/a.xml", &records(500, 100));
    let spec = PartitionSpec::from_data_root(dir.path(), 1).unwrap();
    let q = r#"collection("/c")/r/x"#;
    let config = ExecConfig {
        frame_size: 8192,
        ..ExecConfig::default()
    };
    let pushed = compile_query(q, &spec, PhysicalConfig::default()).unwrap().physical;
    assert_eq!(execute(&pushed, &spec, &config).unwrap().len(), 500);

    let core = crate::frontend::compile_core(q).unwrap();
    let plan = run_optimizer(
        crate::algebra::translate(&core).unwrap(),
        &rules_without(&["push_child_into_datascan"]),
        &[Stage::Logical],
    )
    .unwrap();
    let whole = select_physical(&plan, &spec, PhysicalConfig::default()).unwrap();
    match execute(&whole, &spec, &config) {
        Err(e) => assert!(matches!(e.root(), Error::FrameOverflow { capacity: 8192, .. }), "{}", e),
        Ok(_) => panic!("whole documents fit in a frame"),
    }
}

fn random_data(dir: &Path, rng: &mut ChaCha8Rng, partitions: usize) {
    for p in 0..partitions {
        let files = rng.gen_range(0..3);
        fs::create_dir_all(dir.join(format!("part-{}/n", p))).unwrap();
        for f in 0..files {
            let mut s = String::from("<r>");
            for _ in 0..rng.gen_range(0..20) {
                let v: f64 = match rng.gen_range(0..3) {
                    0 => rng.gen_range(-50..50) as f64,
                    1 => rng.gen_range(-500..500) as f64 / 4.0,
                    _ => rng.gen_range(0..1000) as f64,
                };
                s.push_str(&format!("<x>{}</x>", v));
            }
            s.push_str("</r>");
            write(dir, &format!("part-{}/n/{}.xml", p, f), &s);
        }
    }
}

#[test]
fn two_step_aggregation_matches_single_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let single = PhysicalConfig {
        two_step: false,
        ..PhysicalConfig::default()
    };
    for round in 0..20 {
        let dir = tempfile::tempdir().unwrap();
        random_data(dir.path(), &mut rng, 4);
        let spec = PartitionSpec::from_data_root(dir.path(), 4).unwrap();
        for f in ["count", "sum", "avg", "min", "max"] {
            let q = format!(r#"{}(for $v in collection("/n")/r/x return $v)"#, f);
            let two = compile_query(&q, &spec, PhysicalConfig::default()).unwrap().physical;
            assert_eq!(two.count(|o| matches!(o, PhysicalOp::StreamingAggregate { .. })), 2);
            let one = compile_query(&q, &spec, single).unwrap().physical;
            let config = ExecConfig::default();
            let (a, sa) = execute_with_stats(&two, &spec, &config).unwrap();
            let (b, _) = execute_with_stats(&one, &spec, &config).unwrap();
            match (a.as_slice(), b.as_slice()) {
                ([Item::Atomic(x)], [Item::Atomic(y)]) if f == "avg" => {
                    let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
                    assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "round {} {}: {} vs {}", round, f, x, y);
                }
                _ => assert_eq!(a, b, "round {} {}", round, f),
            }
            assert_eq!(sa.merge_tuples, 4, "{} {:?}", f, sa);
            assert!(sa.merge_bytes <= 4 * 64, "{} {:?}", f, sa);
        }
    }
}

fn key_tuple(k: i64, tag: usize) -> Tuple {
    vec![singleton(AtomicValue::Integer(k)), singleton(AtomicValue::string(&format!("t{}", tag)))]
}

fn tuple_text(t: &Tuple) -> String {
    t.iter().map(|f| serialize_sequence(f)).collect::<Vec<_>>().join("|")
}

#[test]
fn hash_join_equals_nested_loop_join() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let env = Env::new(PartitionSpec::new("/nonexistent", vec![vec![]]));
    let stats = Stats::default();
    let scratch = tempfile::tempdir().unwrap();
    let cond = LExpr::call(
        "boolean",
        vec![LExpr::call("value-eq", vec![LExpr::Var(Var(1)), LExpr::Var(Var(3))])],
    );
    let cond = compile(&cond, &[Var(1), Var(2), Var(3), Var(4)]).unwrap();
    let spec = JoinSpec {
        build_keys: vec![0],
        probe_keys: vec![0],
        cond: cond.clone(),
    };
    for round in 0..200 {
        let keys = rng.gen_range(1..12);
        let build: Vec<Tuple> = (0..rng.gen_range(0..60)).map(|i| key_tuple(rng.gen_range(0..keys), i)).collect();
        let probe: Vec<Tuple> = (0..rng.gen_range(0..60)).map(|i| key_tuple(rng.gen_range(0..keys), i)).collect();
        let mut expected = Vec::new();
        nested_loop_join(&build, &probe, &cond, &env, &mut |t| {
            expected.push(tuple_text(&t));
            Ok(())
        })
        .unwrap();
        expected.sort();
        // Alternate a generous budget with one that forces spilling.
        let memory = if round % 2 == 0 { 1 << 20 } else { 64 };
        let res = JoinResources {
            env: &env,
            stats: &stats,
            memory,
            scratch: scratch.path(),
        };
        let mut got = Vec::new();
        hybrid_hash_join(build.clone(), probe.clone(), &spec, &res, &mut |t| {
            got.push(tuple_text(&t));
            Ok(())
        })
        .unwrap();
        got.sort();
        assert_eq!(got, expected, "round {}", round);
    }
    assert!(stats.snapshot().spilled_partitions > 0);
}

#[test]
fn tiny_join_emits_one_row_per_match() {
    let env = Env::new(PartitionSpec::new("/nonexistent", vec![vec![]]));
    let stats = Stats::default();
    let cond = compile(&LExpr::Const(AtomicValue::Boolean(true)), &[]).unwrap();
    let spec = JoinSpec {
        build_keys: vec![0],
        probe_keys: vec![0],
        cond,
    };
    let res = JoinResources {
        env: &env,
        stats: &stats,
        memory: 1 << 20,
        scratch: Path::new("/tmp"),
    };
    let mut n = 0;
    hybrid_hash_join(
        vec![key_tuple(1, 0), key_tuple(2, 1)],
        vec![key_tuple(2, 2), key_tuple(2, 3)],
        &spec,
        &res,
        &mut |_| {
            n += 1;
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(n, 2);
}

#[test]
fn spilling_join_query_matches_in_memory_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for p in 0..2 {
        for (coll, n) in [("a", 300), ("b", 200)] {
            let mut s = String::from("<r>");
            for _ in 0..n {
                s.push_str(&format!("<x><k>{}</k><pad>{}</pad></x>", rng.gen_range(0..50), "z".repeat(40)));
            }
            s.push_str("</r>");
            write(dir.path(), &format!("part-{}/{}/f.xml", p, coll), &s);
        }
    }
    let spec = PartitionSpec::from_data_root(dir.path(), 2).unwrap();
    let q = r#"for $a in collection("/a")/r/x for $b in collection("/b")/r/x where $a/k eq $b/k return $b/k"#;
    let pp = compile_query(q, &spec, PhysicalConfig::default()).unwrap().physical;
    assert_eq!(pp.count(|o| matches!(o, PhysicalOp::HybridHashJoin { .. })), 1);
    let scratch = tempfile::tempdir().unwrap();
    let small = ExecConfig {
        join_memory: 4096,
        scratch: Some(scratch.path().to_path_buf()),
        ..ExecConfig::default()
    };
    let (spilled, stats) = execute_with_stats(&pp, &spec, &small).unwrap();
    assert!(stats.spilled_partitions > 0);
    let in_memory = execute(&pp, &spec, &ExecConfig::default()).unwrap();
    assert_eq!(sorted_lines(&spilled), sorted_lines(&in_memory));
    assert_eq!(sorted_lines(&in_memory), sorted_lines(&oracle(q, &spec)));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let spec = books(dir.path(), 2);
    for q in [corpus::BOOKS_JOIN, r#"collection("/joe-books")/bookstore/book"#] {
        let first = serialize_sequence(&engine(q, &spec));
        for _ in 0..5 {
            assert_eq!(serialize_sequence(&engine(q, &spec)), first);
        }
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let dir = tempfile::tempdir().unwrap();
    let spec = books(dir.path(), 2);
    let seq = ExecConfig {
        parallel: false,
        ..ExecConfig::default()
    };
    for q in [corpus::BOOKS_JOIN, r#"count(collection("/joe-books")/bookstore/book)"#] {
        assert_eq!(
            serialize_sequence(&run_query(q, &spec, &seq).unwrap()),
            serialize_sequence(&engine(q, &spec))
        );
    }
}

#[test]
fn errors_name_the_partition() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "part-0/c/a.xml", "<r><x/></r>");
    write(dir.path(), "part-1/c/b.xml", "<r><x></r>");
    let spec = PartitionSpec::from_data_root(dir.path(), 2).unwrap();
    match run_query(r#"collection("/c")/r/x"#, &spec, &ExecConfig::default()) {
        Err(Error::InPartition { partition, source }) => {
            assert_eq!(partition, 1);
            assert!(matches!(*source, Error::Parse { .. }), "{}", source);
        }
        other => panic!("{:?}", other),
    }
}
