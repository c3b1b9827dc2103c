use super::*;
use crate::algebra::{fixtures, parse_plan, plan_alpha_equal, translate, LExpr, Var};
use crate::frontend::{compile_core, corpus};
use crate::xml_ingest::PartitionSpec;

fn translated(query: &str) -> LogicalPlan {
    translate(&compile_core(query).unwrap()).unwrap()
}

fn listing(text: &str) -> LogicalPlan {
    parse_plan(text).unwrap()
}

/// Asserts that the listings occur in the trace in the given order.
fn assert_trace_contains(opt: &Optimized, listings: &[(&str, &str)]) {
    let mut from = 0;
    for (name, text) in listings {
        let want = listing(text);
        let found = opt.trace[from..].iter().position(|s| plan_alpha_equal(&s.plan, &want));
        match found {
            Some(i) => from += i + 1,
            None => {
                let steps: Vec<String> = opt.trace.iter().map(|s| format!("-- {}\n{}", s.rule, s.text())).collect();
                panic!("{} not in trace after step {}:\n{}", name, from, steps.join("\n"));
            }
        }
    }
}

#[test]
fn single_document_path_follows_every_listing() {
    let opt = optimize(translated(corpus::BOOK_PATH)).unwrap();
    assert_trace_contains(
        &opt,
        &[
            ("sorts removed", fixtures::BOOK_SORTS_REMOVED),
            ("one subplan removed", fixtures::BOOK_ONE_SUBPLAN_REMOVED),
            ("subplans removed", fixtures::BOOK_SUBPLANS_REMOVED),
            ("unnesting", fixtures::BOOK_UNNESTING),
            ("combined", fixtures::BOOK_COMBINED),
        ],
    );
    assert!(plan_alpha_equal(&opt.plan, &listing(fixtures::BOOK_COMBINED)));
    let rules: Vec<&str> = opt.trace.iter().map(|s| s.rule).collect();
    assert_eq!(
        rules,
        [
            "remove_sort",
            "remove_sort",
            "remove_subplan",
            "remove_subplan",
            "scalar_to_unnest",
            "scalar_to_unnest",
            "combine_unnest"
        ]
    );
}

#[test]
fn collection_path_becomes_a_scan_with_a_path() {
    let opt = optimize(translated(corpus::BOOKS_COLLECTION_PATH)).unwrap();
    assert_trace_contains(
        &opt,
        &[
            ("after path rules", fixtures::BOOKS_AFTER_PATH_RULES),
            ("datascan", fixtures::BOOKS_DATASCAN),
            ("datascan with path", fixtures::BOOKS_DATASCAN_PATH),
        ],
    );
    assert!(plan_alpha_equal(&opt.plan, &listing(fixtures::BOOKS_DATASCAN_PATH)));
}

#[test]
fn count_becomes_a_two_step_aggregate() {
    let opt = optimize(translated(corpus::BOOKS_COUNT)).unwrap();
    assert_trace_contains(
        &opt,
        &[
            ("scalar count", fixtures::BOOKS_COUNT_SCALAR),
            ("aggregate count", fixtures::BOOKS_COUNT_AGGREGATE),
        ],
    );
    let text = print_plan(&opt.plan);
    assert!(text.contains("TWO-STEP( count, sum )"), "{}", text);
    assert_eq!(opt.trace.last().unwrap().rule, "annotate_two_step");
}

#[test]
fn join_query_reaches_the_two_branch_join() {
    let opt = optimize(translated(corpus::BOOKS_JOIN)).unwrap();
    assert_trace_contains(
        &opt,
        &[
            ("select over scans", fixtures::BOOKS_JOIN_SELECT),
            ("join", fixtures::BOOKS_JOIN),
        ],
    );
    assert!(plan_alpha_equal(&opt.plan, &listing(fixtures::BOOKS_JOIN)));
}

#[test]
fn plan_without_matches_is_unchanged() {
    let p = translated("\"hello\"");
    let opt = optimize(p.clone()).unwrap();
    assert!(opt.trace.is_empty());
    assert_eq!(opt.plan, p);
}

#[test]
fn every_corpus_query_reaches_a_fixpoint() {
    for q in corpus::ALL {
        let opt = optimize(translated(q.text)).unwrap_or_else(|e| panic!("{}: {}", q.name, e));
        assert!(opt.trace.len() < STEP_CEILING, "{}", q.name);
        validate(&opt.plan).unwrap();
        // A second run finds nothing left to do.
        assert!(optimize(opt.plan.clone()).unwrap().trace.is_empty(), "{}", q.name);
    }
}

#[test]
fn two_key_equijoin_recognizes_both_keys() {
    let opt = optimize(translated(corpus::TEMPERATURE_DIFFERENTIAL.text)).unwrap();
    let spec = PartitionSpec::new("/nonexistent", vec![vec![], vec![]]);
    let phys = select_physical(&opt.plan, &spec, PhysicalConfig::default()).unwrap();
    let mut keys = None;
    phys.root.walk(&mut |o| {
        if let PhysicalOp::HybridHashJoin { build_keys, .. } = o {
            keys = Some(build_keys.len());
        }
    });
    assert_eq!(keys, Some(2), "{}\n{}", print_plan(&opt.plan), phys);
}

#[test]
fn ordering_properties() {
    let p = translated(corpus::BOOK_PATH);
    // The doc ASSIGN's variable: a single document node.
    let mut doc_var = None;
    p.root.walk(&mut |o| {
        if let Op::Assign { var, expr, .. } = o {
            if expr.is_call("doc") {
                doc_var = Some(*var);
            }
        }
    });
    assert_eq!(analyze_ordering(&p.root, doc_var.unwrap()), OrderingProperty::INTACT);

    // Above a join the collected sequence loses its order.
    let join = listing(
        "DISTRIBUTE-RESULT( $$9 )\nUNNEST( $$9:iterate($$5) )\nSUBPLAN {\n  AGGREGATE( $$5:create_sequence($$1) )\n  JOIN( true )\n  {\n    DATASCAN(collection(\"/a\"),$$1,\"/x\")\n    NESTED-TUPLE-SOURCE\n  } {\n    DATASCAN(collection(\"/b\"),$$2,\"/y\")\n    NESTED-TUPLE-SOURCE\n  }\n}\nEMPTY-TUPLE-SOURCE\n",
    );
    let p = analyze_ordering(&join.root, Var(5));
    assert!(!p.document_ordered);
}

#[test]
fn sort_is_weakened_when_only_order_is_lost() {
    // Two child steps from the same document, concatenated: the analysis
    // cannot vouch for either property, so the sort stays.
    let text = "DISTRIBUTE-RESULT( $$5 )\nUNNEST( $$5:iterate($$4) )\nASSIGN( $$4:sort-distinct-nodes-asc-or-atomics($$3) )\nASSIGN( $$3:concatenate(child($$1, \"a\"), child($$1, \"b\")) )\nASSIGN( $$1:doc(\"x.xml\") )\nEMPTY-TUPLE-SOURCE\n";
    let opt = optimize(listing(text)).unwrap();
    assert!(print_plan(&opt.plan).contains("sort-distinct-nodes-asc-or-atomics"));

    // A distinct-only pass over an ordered, distinct sequence is dropped.
    let text = "DISTRIBUTE-RESULT( $$5 )\nUNNEST( $$5:iterate($$4) )\nASSIGN( $$4:distinct-nodes-or-atomics($$3) )\nASSIGN( $$3:child($$1, \"a\") )\nASSIGN( $$1:doc(\"x.xml\") )\nEMPTY-TUPLE-SOURCE\n";
    let opt = optimize(listing(text)).unwrap();
    assert!(!print_plan(&opt.plan).contains("distinct-nodes-or-atomics"));

    // Children of a sort-distinct result that may contain nested nodes are
    // duplicate free but not necessarily ordered: the sort is weakened.
    let text = "DISTRIBUTE-RESULT( $$6 )\nUNNEST( $$6:iterate($$5) )\nASSIGN( $$5:sort-distinct-nodes-asc-or-atomics($$4) )\nASSIGN( $$4:child($$3, \"c\") )\nASSIGN( $$3:sort-distinct-nodes-asc-or-atomics($$2) )\nASSIGN( $$2:concatenate(child($$1, \"a\"), $$1) )\nASSIGN( $$1:doc(\"x.xml\") )\nEMPTY-TUPLE-SOURCE\n";
    let opt = optimize(listing(text)).unwrap();
    let out = print_plan(&opt.plan);
    assert!(out.contains(":sort-nodes-asc-or-atomics(child("), "{}", out);
}

#[test]
fn physical_selection() {
    let spec = PartitionSpec::new("/nonexistent", vec![vec![]; 4]);
    let count = optimize(translated(corpus::BOOKS_COUNT)).unwrap().plan;
    let phys = select_physical(&count, &spec, PhysicalConfig::default()).unwrap();
    let local = phys.count(|o| matches!(o, PhysicalOp::StreamingAggregate { mode: physical::AggMode::Local(_), .. }));
    let global = phys.count(|o| matches!(o, PhysicalOp::StreamingAggregate { mode: physical::AggMode::Global(_), .. }));
    assert_eq!((local, global, phys.partitions), (1, 1, 4), "{}", phys);

    let join = optimize(translated(corpus::BOOKS_JOIN)).unwrap().plan;
    let phys = select_physical(&join, &spec, PhysicalConfig::default()).unwrap();
    assert_eq!(phys.count(|o| matches!(o, PhysicalOp::HybridHashJoin { .. })), 1, "{}", phys);
    // The bridged equality is restored in the evaluated condition.
    phys.root.walk(&mut |o| {
        if let PhysicalOp::HybridHashJoin { cond, .. } = o {
            assert!(cond.to_string().contains("value-eq"));
        }
    });

    let lt = translated(
        r#"for $a in collection("/ann-books")/bookstore/book
           for $b in collection("/joe-books")/bookstore/book
           where $a/price lt $b/price return $a"#,
    );
    let phys = select_physical(&optimize(lt).unwrap().plan, &spec, PhysicalConfig::default()).unwrap();
    assert_eq!(phys.count(|o| matches!(o, PhysicalOp::NestedLoopJoin { .. })), 1, "{}", phys);
}

#[test]
fn invalid_rewrites_name_the_rule() {
    fn breaks(op: &mut Op, _: rules::Locus, _: &analysis::Analysis) -> Option<rules::Edit> {
        if let Op::Unnest { expr, .. } = op {
            if !expr.is_call("data") {
                *expr = LExpr::call("data", vec![LExpr::Var(Var(999))]);
                return Some(rules::Edit::Local);
            }
        }
        None
    }
    let rule = RewriteRule {
        name: "breaks_things",
        stage: Stage::Logical,
        apply: breaks,
    };
    match run_optimizer(translated("1"), &[rule], &[Stage::Logical]) {
        Err(crate::Error::Rule { rule, .. }) => assert_eq!(rule, "breaks_things"),
        other => panic!("{:?}", other),
    }
}
