//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails, except a timing criterion whose
//! hardware precondition this machine does not meet (reported as FAIL with
//! the reason, but not counted).

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xq_core::algebra::{fixtures, parse_plan, plan_alpha_equal, translate, LogicalPlan};
use xq_core::datagen::{generate, GenSpec, Manifest};
use xq_core::frontend::{compile_core, corpus};
use xq_core::optimizer::{optimize, rules_without, run_optimizer, select_physical, PhysicalConfig, PhysicalOp, Stage, STEP_CEILING};
use xq_core::oracle::eval_naive;
use xq_core::runtime::{compile_query, execute, execute_with_stats, serialize_result, ExecConfig};
use xq_core::xdm::{AtomicValue, Item, Sequence};
use xq_core::xml_ingest::PartitionSpec;
use xq_core::Error;

/// Relative tolerance for averages.
const AVG_TOLERANCE: f64 = 1e-9;
/// Required ratio of 4-partition to 1-partition mean time.
const SPEEDUP_4: f64 = 0.6;
/// Allowed ratio of 8-partition to 4-partition mean time.
const FLAT_8: f64 = 1.25;
const JOIN_BUDGET: usize = 1 << 20;
const ROUNDS_TWO_STEP: usize = 50;
const RANDOM_QUERIES: usize = 200;

enum Verdict {
    Pass(String),
    Fail(String),
    /// The check cannot be met on this machine.
    Unattainable(String),
}

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lines(s: &Sequence) -> Vec<String> {
    s.iter().map(|i| serialize_result(std::slice::from_ref(i))).collect()
}

fn single_f64(s: &Sequence) -> Option<f64> {
    match s.as_slice() {
        [Item::Atomic(a @ AtomicValue::Double(_))] => a.as_f64(),
        _ => None,
    }
}

/// Equal as sequences (or multisets when `ordered` is false); a lone double
/// is compared with `tol` relative tolerance.
fn same(a: &Sequence, b: &Sequence, ordered: bool, tol: f64) -> bool {
    if let (Some(x), Some(y)) = (single_f64(a), single_f64(b)) {
        return x == y || (x - y).abs() <= tol * x.abs().max(y.abs());
    }
    let (mut la, mut lb) = (lines(a), lines(b));
    if !ordered {
        la.sort();
        lb.sort();
    }
    la == lb
}

fn preview(s: &Sequence) -> String {
    let t = serialize_result(s);
    if t.len() > 200 {
        format!("{}... ({} items)", &t[..200], s.len())
    } else {
        t
    }
}

fn write(dir: &Path, rel: &str, text: &str) {
    let p = dir.join(rel);
    fs::create_dir_all(p.parent().unwrap()).unwrap();
    fs::write(p, text).unwrap();
}

fn translated(q: &str) -> LogicalPlan {
    translate(&compile_core(q).unwrap()).unwrap()
}

// ---------------------------------------------------------------------------
// 1. Plan snapshots

fn plan_snapshots() -> Check {
    let mut checked = 0;
    let initial = translated(corpus::BOOK_PATH);
    ensure(plan_alpha_equal(&initial, &parse_plan(fixtures::BOOK_INITIAL).unwrap()), || {
        "translated book path differs from the initial listing".into()
    })?;
    checked += 1;
    let cases: [(&str, &[&str], &str); 4] = [
        (
            corpus::BOOK_PATH,
            &[
                fixtures::BOOK_SORTS_REMOVED,
                fixtures::BOOK_ONE_SUBPLAN_REMOVED,
                fixtures::BOOK_SUBPLANS_REMOVED,
                fixtures::BOOK_UNNESTING,
                fixtures::BOOK_COMBINED,
            ],
            fixtures::BOOK_COMBINED,
        ),
        (
            corpus::BOOKS_COLLECTION_PATH,
            &[fixtures::BOOKS_AFTER_PATH_RULES, fixtures::BOOKS_DATASCAN, fixtures::BOOKS_DATASCAN_PATH],
            fixtures::BOOKS_DATASCAN_PATH,
        ),
        (corpus::BOOKS_COUNT, &[fixtures::BOOKS_COUNT_SCALAR, fixtures::BOOKS_COUNT_AGGREGATE], ""),
        (corpus::BOOKS_JOIN, &[fixtures::BOOKS_JOIN_SELECT, fixtures::BOOKS_JOIN], fixtures::BOOKS_JOIN),
    ];
    for (query, listings, last) in cases {
        let opt = optimize(translated(query)).map_err(|e| e.to_string())?;
        let mut from = 0;
        for text in listings {
            let want = parse_plan(text).map_err(|e| e.to_string())?;
            match opt.trace[from..].iter().position(|s| plan_alpha_equal(&s.plan, &want)) {
                Some(i) => from += i + 1,
                None => return Err(format!("listing not reached for {}:\n{}", query, text)),
            }
            checked += 1;
        }
        if !last.is_empty() {
            ensure(plan_alpha_equal(&opt.plan, &parse_plan(last).unwrap()), || {
                format!("final plan for {} is not the last listing", query)
            })?;
        }
    }
    Ok(format!("{} listings alpha-equal", checked))
}

// ---------------------------------------------------------------------------
// 2 and 3. Weather queries against the oracle and the manifest

struct WeatherRun {
    /// Per query: engine mean milliseconds at 1 and 4 partitions.
    timings: Vec<(&'static str, f64, f64)>,
    oracle_equal: Check,
    manifest: Check,
}

fn weather(root: &Path) -> WeatherRun {
    let mut spec = GenSpec::new(20240601, 20, GenSpec::FULL_RANGE_DAYS, 8);
    spec.differential_days = 300;
    let started = Instant::now();
    let m = generate(&spec, root).expect("generate weather corpus");
    let mb = m.get_i64("bytes").unwrap() as f64 / 1e6;
    let mut timings = Vec::new();
    let mut mismatches = Vec::new();
    let mut truth_errors = Vec::new();
    let mut results = Vec::new();
    for q in corpus::WEATHER {
        let one = PartitionSpec::from_data_root(root, 1).unwrap();
        let expected = match eval_naive(q.text, &one) {
            Ok(s) => s,
            Err(e) => {
                mismatches.push(format!("{}: oracle error {}", q.name, e));
                continue;
            }
        };
        let mut t = (q.name, 0.0, 0.0);
        for p in [1, 2, 4] {
            let ps = PartitionSpec::from_data_root(root, p).unwrap();
            let start = Instant::now();
            let got = match xq_core::runtime::run_query(q.text, &ps, &ExecConfig::default()) {
                Ok(s) => s,
                Err(e) => {
                    mismatches.push(format!("{} at {}: {}", q.name, p, e));
                    continue;
                }
            };
            let ms = start.elapsed().as_secs_f64() * 1e3;
            match p {
                1 => t.1 = ms,
                4 => t.2 = ms,
                _ => {}
            }
            if !same(&got, &expected, q.ordered, AVG_TOLERANCE) {
                mismatches.push(format!("{} at {}: {} vs oracle {}", q.name, p, preview(&got), preview(&expected)));
            }
            results.push((q.name, p, got));
        }
        timings.push(t);
    }
    for (name, p, got) in &results {
        if let Err(e) = manifest_truth(name, got, &m) {
            truth_errors.push(format!("{} at {}: {}", name, p, e));
        }
    }
    let oracle_equal = if mismatches.is_empty() {
        Ok(format!(
            "8 queries x partitions 1,2,4 equal the oracle on {:.0} MB in {:.0}s",
            mb,
            started.elapsed().as_secs_f64()
        ))
    } else {
        Err(mismatches.join("; "))
    };
    let manifest = if truth_errors.is_empty() {
        Ok(format!(
            "precipitation {} tenths, max {} tenths, {} day-station readings reproduced at 1,2,4",
            m.get("annual_precipitation.sum_tenths").unwrap(),
            m.get("highest_temperature.max_tenths").unwrap(),
            m.get("day_station_readings.count").unwrap()
        ))
    } else {
        Err(truth_errors.join("; "))
    };
    WeatherRun {
        timings,
        oracle_equal,
        manifest,
    }
}

fn manifest_truth(name: &str, got: &Sequence, m: &Manifest) -> std::result::Result<(), String> {
    let tenths = |k: &str| m.get_i64(k).ok_or_else(|| format!("manifest lacks {}", k));
    let want_double = |v: f64| match single_f64(got) {
        Some(x) if x == v => Ok(()),
        _ => Err(format!("expected {} got {}", v, preview(got))),
    };
    let want_len = |n: i64| {
        ensure(got.len() as i64 == n, || format!("expected {} items got {}", n, got.len()))
    };
    match name {
        "station_date_history" => want_len(tenths("station_date_history.count")?),
        "extreme_wind" => want_len(tenths("extreme_wind.count")?),
        "annual_precipitation" => want_double(tenths("annual_precipitation.sum_tenths")? as f64 / 10.0),
        "highest_temperature" => want_double(tenths("highest_temperature.max_tenths")? as f64 / 10.0),
        "day_station_readings" => want_len(tenths("day_station_readings.count")?),
        "station_high_temperature" => want_len(3 * tenths("station_high_temperature.count")?),
        "us_min_temperature" => want_double(tenths("us_min_temperature.min_tenths")? as f64 / 10.0),
        "temperature_differential" => {
            let want = tenths("temperature_differential.sum_tenths")? as f64
                / tenths("temperature_differential.pairs")? as f64
                / 10.0;
            match single_f64(got) {
                Some(x) if (x - want).abs() <= AVG_TOLERANCE * want.abs() => Ok(()),
                _ => Err(format!("expected {} got {}", want, preview(got))),
            }
        }
        _ => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// 4. Speedup

fn cores() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Mean of the last three of five runs.
fn protocol_ms(text: &str, spec: &PartitionSpec) -> std::result::Result<f64, Error> {
    let q = compile_query(text, spec, PhysicalConfig::default())?;
    let mut times = Vec::new();
    for i in 0..5 {
        let t = Instant::now();
        execute(&q.physical, spec, &ExecConfig::default())?;
        if i >= 2 {
            times.push(t.elapsed().as_secs_f64() * 1e3);
        }
    }
    Ok(times.iter().sum::<f64>() / times.len() as f64)
}

fn speedup(scratch: &Path, small_run: &[(&'static str, f64, f64)]) -> Verdict {
    let speedup_queries = [corpus::EXTREME_WIND, corpus::ANNUAL_PRECIPITATION, corpus::HIGHEST_TEMPERATURE];
    let n = cores();
    if n < 4 || !cfg!(feature = "parallel") {
        let seen: Vec<String> = small_run
            .iter()
            .filter(|(name, ..)| speedup_queries.iter().any(|q| q.name == *name))
            .map(|(name, one, four)| format!("{} {:.2}", name, four / one))
            .collect();
        return Verdict::Unattainable(format!(
            "needs 4 cores with the parallel feature, found {}; single-run 4/1 ratios on the 100 MB corpus: {}",
            n,
            seen.join(", ")
        ));
    }
    let root = scratch.join("speedup");
    let mut spec = GenSpec::new(99, 100, GenSpec::FULL_RANGE_DAYS, 8);
    spec.differential_stations = 0;
    let m = match generate(&spec, &root) {
        Ok(m) => m,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let mb = m.get_i64("bytes").unwrap() as f64 / 1e6;
    let mut report = Vec::new();
    let mut ok = mb >= 500.0;
    for q in speedup_queries {
        let mut ms = [0.0; 3];
        for (slot, p) in [1, 4, 8].into_iter().enumerate() {
            let ps = PartitionSpec::from_data_root(&root, p).unwrap();
            match protocol_ms(q.text, &ps) {
                Ok(v) => ms[slot] = v,
                Err(e) => return Verdict::Fail(format!("{}: {}", q.name, e)),
            }
        }
        let (r4, r8) = (ms[1] / ms[0], ms[2] / ms[1]);
        ok &= r4 <= SPEEDUP_4 && r8 <= FLAT_8;
        report.push(format!("{} 4/1={:.2} 8/4={:.2}", q.name, r4, r8));
    }
    let _ = fs::remove_dir_all(&root);
    let text = format!("{:.0} MB: {}", mb, report.join(", "));
    if ok {
        Verdict::Pass(text)
    } else {
        Verdict::Fail(text)
    }
}

// ---------------------------------------------------------------------------
// 5. Two-step aggregation

fn numbers(dir: &Path, rng: &mut ChaCha8Rng, partitions: usize) {
    for p in 0..partitions {
        fs::create_dir_all(dir.join(format!("part-{}/n", p))).unwrap();
        for f in 0..rng.gen_range(0..3) {
            let mut s = String::from("<r>");
            for _ in 0..rng.gen_range(0..40) {
                let v: f64 = match rng.gen_range(0..3) {
                    0 => rng.gen_range(-50..50) as f64,
                    1 => rng.gen_range(-500..500) as f64 / 4.0,
                    _ => rng.gen_range(0..100000) as f64,
                };
                s.push_str(&format!("<x>{}</x>", v));
            }
            s.push_str("</r>");
            write(dir, &format!("part-{}/n/{}.xml", p, f), &s);
        }
    }
}

fn two_step() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let single = PhysicalConfig {
        two_step: false,
        ..PhysicalConfig::default()
    };
    let mut max_bytes_per_partition = 0u64;
    for round in 0..ROUNDS_TWO_STEP {
        let partitions = [2, 4, 8][round % 3];
        let dir = tempfile::tempdir().unwrap();
        numbers(dir.path(), &mut rng, partitions);
        let spec = PartitionSpec::from_data_root(dir.path(), partitions).unwrap();
        let one = PartitionSpec::from_data_root(dir.path(), 1).unwrap();
        for f in ["count", "sum", "avg", "min", "max"] {
            let q = format!(r#"{}(for $v in collection("/n")/r/x return $v)"#, f);
            let two = compile_query(&q, &spec, PhysicalConfig::default()).map_err(|e| e.to_string())?.physical;
            let aggs = two.count(|o| matches!(o, PhysicalOp::StreamingAggregate { .. }));
            ensure(aggs == 2, || format!("{}: {} aggregate operators", f, aggs))?;
            let (a, stats) = execute_with_stats(&two, &spec, &ExecConfig::default()).map_err(|e| e.to_string())?;
            let reference = compile_query(&q, &one, single).map_err(|e| e.to_string())?.physical;
            let b = execute(&reference, &one, &ExecConfig::default()).map_err(|e| e.to_string())?;
            ensure(same(&a, &b, true, AVG_TOLERANCE), || {
                format!("round {} {}: {} vs {}", round, f, preview(&a), preview(&b))
            })?;
            ensure(stats.merge_tuples == partitions as u64, || {
                format!("{}: {} tuples merged at {} partitions", f, stats.merge_tuples, partitions)
            })?;
            max_bytes_per_partition = max_bytes_per_partition.max(stats.merge_bytes / partitions as u64);
        }
    }
    ensure(max_bytes_per_partition <= 64, || {
        format!("{} merged bytes per partition", max_bytes_per_partition)
    })?;
    Ok(format!(
        "{} datasets x 5 aggregates equal; one partial per partition, at most {} bytes each",
        ROUNDS_TWO_STEP, max_bytes_per_partition
    ))
}

// ---------------------------------------------------------------------------
// 6. Join selection and the spill path

fn joins(weather_root: &Path) -> Check {
    let spec = PartitionSpec::from_data_root(weather_root, 4).unwrap();
    for q in [corpus::STATION_HIGH_TEMPERATURE, corpus::TEMPERATURE_DIFFERENTIAL] {
        let pp = compile_query(q.text, &spec, PhysicalConfig::default()).map_err(|e| e.to_string())?.physical;
        ensure(pp.count(|o| matches!(o, PhysicalOp::HybridHashJoin { .. })) == 1, || {
            format!("{} did not select a hash join:\n{}", q.name, pp)
        })?;
    }

    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for p in 0..4 {
        for (coll, n) in [("a", 1000), ("b", 750)] {
            let mut s = String::from("<r>");
            for _ in 0..n {
                s.push_str(&format!("<x><k>{}</k><pad>{}</pad></x>", rng.gen_range(0..1000), "z".repeat(400)));
            }
            s.push_str("</r>");
            write(dir.path(), &format!("part-{}/{}/f.xml", p, coll), &s);
        }
        let mut s = String::from("<r>");
        for _ in 0..60 {
            s.push_str(&format!("<x><k>{}</k></x>", rng.gen_range(0..100)));
        }
        s.push_str("</r>");
        write(dir.path(), &format!("part-{}/c/f.xml", p), &s);
        write(dir.path(), &format!("part-{}/d/f.xml", p), &s);
    }
    let spec = PartitionSpec::from_data_root(dir.path(), 4).unwrap();
    let scratch = tempfile::tempdir().unwrap();
    let budget = ExecConfig {
        join_memory: JOIN_BUDGET,
        scratch: Some(scratch.path().to_path_buf()),
        ..ExecConfig::default()
    };

    let equi = r#"for $a in collection("/a")/r/x for $b in collection("/b")/r/x where $a/k eq $b/k return $b/k"#;
    let pp = compile_query(equi, &spec, PhysicalConfig::default()).map_err(|e| e.to_string())?.physical;
    ensure(pp.count(|o| matches!(o, PhysicalOp::HybridHashJoin { .. })) == 1, || format!("no hash join:\n{}", pp))?;
    // One partition keeps the whole build side on one worker, well over the
    // budget.
    let one = PartitionSpec::from_data_root(dir.path(), 1).unwrap();
    let pp1 = compile_query(equi, &one, PhysicalConfig::default()).map_err(|e| e.to_string())?.physical;
    let (spilled, stats) = execute_with_stats(&pp1, &one, &budget).map_err(|e| e.to_string())?;
    ensure(stats.spilled_partitions > 0, || format!("no spill under {} bytes: {:?}", JOIN_BUDGET, stats))?;
    let parallel = execute(&pp, &spec, &budget).map_err(|e| e.to_string())?;
    let expected = eval_naive(equi, &one).map_err(|e| e.to_string())?;
    ensure(same(&spilled, &expected, false, 0.0), || "spilled hash join differs from the oracle".into())?;
    ensure(same(&parallel, &expected, false, 0.0), || "partitioned hash join differs from the oracle".into())?;

    let non_equi = r#"for $c in collection("/c")/r/x for $d in collection("/d")/r/x where $c/k < $d/k return ($c/k, $d/k)"#;
    let pp = compile_query(non_equi, &spec, PhysicalConfig::default()).map_err(|e| e.to_string())?.physical;
    ensure(pp.count(|o| matches!(o, PhysicalOp::NestedLoopJoin { .. })) == 1, || format!("no nested-loop join:\n{}", pp))?;
    ensure(pp.count(|o| matches!(o, PhysicalOp::HybridHashJoin { .. })) == 0, || "hash join on a non-equi predicate".into())?;
    let got = execute(&pp, &spec, &budget).map_err(|e| e.to_string())?;
    let expected = eval_naive(non_equi, &one).map_err(|e| e.to_string())?;
    ensure(same(&got, &expected, false, 0.0), || "nested-loop join differs from the oracle".into())?;

    Ok(format!(
        "hash join on both weather joins; {} spilled partitions under 1 MiB; nested-loop join on `<`; all oracle-equal",
        stats.spilled_partitions
    ))
}

// ---------------------------------------------------------------------------
// 7. Rewrite soundness over random queries

struct QueryGen {
    rng: ChaCha8Rng,
}

impl QueryGen {
    fn pick<'a>(&mut self, options: &[&'a str]) -> &'a str {
        options.choose(&mut self.rng).unwrap()
    }

    fn cond(&mut self, v: &str) -> String {
        let n = self.rng.gen_range(0..30);
        let c = match self.rng.gen_range(0..6) {
            0 => format!("{}/k > {}", v, n),
            1 => format!("{}/v <= {}", v, n * 3),
            2 => format!(r#"{}/t eq "{}""#, v, self.pick(&["a", "b", "c"])),
            3 => format!(r#"(some $g in {}/tags/tag satisfies $g eq "{}")"#, v, self.pick(&["red", "blue"])),
            4 => format!("count({}/tags/tag) >= {}", v, n % 3),
            _ => format!(r#"upper-case(data({}/t)) eq "A""#, v),
        };
        if self.rng.gen_bool(0.3) {
            format!("{} and {}", c, self.cond(v))
        } else {
            c
        }
    }

    fn ret(&mut self, v: &str) -> String {
        match self.rng.gen_range(0..5) {
            0 => v.to_string(),
            1 => format!("{}/k", v),
            2 => format!("({}/k, {}/t)", v, v),
            3 => format!("{}/tags/tag", v),
            _ => format!("data({}/v) + 1", v),
        }
    }

    fn source(&mut self) -> &'static str {
        self.pick(&[r#"collection("/a")/r/x"#, r#"collection("/b")/r/x"#, r#"doc("d.xml")/r/x"#])
    }

    /// A query and whether its result order is fixed.
    fn query(&mut self) -> (String, bool) {
        match self.rng.gen_range(0..7) {
            0 => {
                let src = self.source();
                let c = self.cond("$x");
                let r = self.ret("$x");
                (format!("for $x in {} where {} return {}", src, c, r), true)
            }
            1 => {
                let f = self.pick(&["count", "sum", "avg", "min", "max"]);
                let src = self.source();
                let c = self.cond("$x");
                (format!("{}(for $x in {} where {} return $x/v)", f, src, c), true)
            }
            2 => {
                let c = self.cond("$x");
                let r = self.ret("$y");
                (
                    format!(
                        r#"for $x in collection("/a")/r/x for $y in collection("/b")/r/x where $x/k eq $y/k and {} return {}"#,
                        c, r
                    ),
                    false,
                )
            }
            3 => {
                let src = self.source();
                (
                    format!(
                        r#"for $x in {} let $n := count(for $y in collection("/b")/r/x where $y/k eq $x/k return $y) return ($x/k, $n)"#,
                        src
                    ),
                    true,
                )
            }
            4 => {
                let src = self.source();
                let step = self.pick(&["/tags/tag", "/k", "/t", ""]);
                (format!("{}{}", src, step), true)
            }
            5 => {
                let f = self.pick(&["count", "max"]);
                (
                    format!(
                        r#"{}(for $x in collection("/a")/r/x for $y in collection("/b")/r/x where $x/t eq $y/t and $x/k < $y/k return $y/k)"#,
                        f
                    ),
                    true,
                )
            }
            _ => {
                let src = self.source();
                let c = self.cond("$x");
                (
                    format!("for $x in {} let $s := $x/tags/tag where {} return count($s)", src, c),
                    true,
                )
            }
        }
    }
}

fn random_corpus(dir: &Path, rng: &mut ChaCha8Rng) {
    let record = |rng: &mut ChaCha8Rng| {
        let mut s = format!(
            "<x><k>{}</k><v>{}</v><t>{}</t><tags>",
            rng.gen_range(0..30),
            rng.gen_range(-20..90),
            ["a", "b", "c"][rng.gen_range(0..3)]
        );
        for _ in 0..rng.gen_range(0..3) {
            s.push_str(&format!("<tag>{}</tag>", ["red", "blue", "green"][rng.gen_range(0..3)]));
        }
        s.push_str("</tags></x>");
        s
    };
    for p in 0..2 {
        for coll in ["a", "b"] {
            fs::create_dir_all(dir.join(format!("part-{}/{}", p, coll))).unwrap();
            for f in 0..rng.gen_range(0..3) {
                let body: String = (0..rng.gen_range(0..12)).map(|_| record(rng)).collect();
                write(dir, &format!("part-{}/{}/{}.xml", p, coll, f), &format!("<r>{}</r>", body));
            }
        }
    }
    let body: String = (0..rng.gen_range(1..10)).map(|_| record(rng)).collect();
    write(dir, "d.xml", &format!("<r>{}</r>", body));
}

fn rewrite_soundness() -> Check {
    let mut gen = QueryGen {
        rng: ChaCha8Rng::seed_from_u64(2024),
    };
    let mut data_rng = ChaCha8Rng::seed_from_u64(77);
    // Prefix plans may carry whole documents in a tuple.
    let big_frames = ExecConfig {
        frame_size: 16 << 20,
        ..ExecConfig::default()
    };
    let mut prefixes = 0;
    let mut longest = 0;
    let mut errors = 0;
    for _ in 0..RANDOM_QUERIES {
        let dir = tempfile::tempdir().unwrap();
        random_corpus(dir.path(), &mut data_rng);
        let spec = PartitionSpec::from_data_root(dir.path(), 2).unwrap();
        let (q, ordered) = gen.query();
        let expected = eval_naive(&q, &spec);
        let initial = translate(&compile_core(&q).map_err(|e| format!("{}: {}", q, e))?).map_err(|e| format!("{}: {}", q, e))?;
        let opt = optimize(initial.clone()).map_err(|e| format!("{}: {}", q, e))?;
        ensure(opt.trace.len() < STEP_CEILING, || format!("{}: {} steps", q, opt.trace.len()))?;
        longest = longest.max(opt.trace.len());
        let plans = std::iter::once(&initial).chain(opt.trace.iter().map(|s| &s.plan));
        for (step, plan) in plans.enumerate() {
            let got = select_physical(plan, &spec, PhysicalConfig::default()).and_then(|pp| execute(&pp, &spec, &big_frames));
            prefixes += 1;
            match (&got, &expected) {
                (Ok(g), Ok(e)) => ensure(same(g, e, ordered, AVG_TOLERANCE), || {
                    let rule = if step == 0 { "none" } else { opt.trace[step - 1].rule };
                    format!("{} after {} steps (last {}): {} vs oracle {}", q, step, rule, preview(g), preview(e))
                })?,
                // Both engines reject the query (e.g. a type error on this
                // data): the rewrite kept the failure.
                (Err(g), Err(e)) => {
                    errors += 1;
                    ensure(g.exit_code() == e.exit_code(), || format!("{}: engine error {} vs oracle error {}", q, g, e))?;
                }
                (Err(g), Ok(_)) => return Err(format!("{} after {} steps: engine error {}", q, step, g)),
                (Ok(g), Err(e)) => return Err(format!("{} after {} steps: {} but oracle error {}", q, step, preview(g), e)),
            }
        }
    }
    Ok(format!(
        "{} queries, {} rule-sequence prefixes oracle-equal ({} agreed errors); longest sequence {} steps",
        RANDOM_QUERIES, prefixes, errors, longest
    ))
}

// ---------------------------------------------------------------------------
// 8. Frame budget and child pushdown

fn pushdown_bound() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let frame = 8192;
    let mut s = String::from("<r>");
    for i in 0..2000 {
        s.push_str(&format!("<x><v>{}</v><pad>{}</pad></x>", i, "p".repeat(100)));
    }
    s.push_str("</r>");
    write(dir.path(), "part-0/c/big.xml", &s);
    ensure(s.len() > frame * 10, || "document too small".into())?;
    let spec = PartitionSpec::from_data_root(dir.path(), 1).unwrap();
    let q = r#"for $x in collection("/c")/r/x return $x/v"#;
    let config = ExecConfig {
        frame_size: frame,
        ..ExecConfig::default()
    };
    let pushed = compile_query(q, &spec, PhysicalConfig::default()).map_err(|e| e.to_string())?.physical;
    let out = execute(&pushed, &spec, &config).map_err(|e| format!("with pushdown: {}", e))?;
    ensure(out.len() == 2000, || format!("{} results", out.len()))?;

    let plan = run_optimizer(
        translated(q),
        &rules_without(&["push_child_into_datascan"]),
        &[Stage::Logical],
    )
    .map_err(|e| e.to_string())?;
    let whole = select_physical(&plan, &spec, PhysicalConfig::default()).map_err(|e| e.to_string())?;
    match execute(&whole, &spec, &config) {
        Err(e) if matches!(e.root(), Error::FrameOverflow { .. }) => Ok(format!(
            "{} byte document: completes with pushdown, FrameOverflow without ({})",
            s.len(),
            e.root()
        )),
        Err(e) => Err(format!("unexpected error without pushdown: {}", e)),
        Ok(_) => Err("completed without pushdown".into()),
    }
}

// ---------------------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Check) -> Verdict {
    let start = Instant::now();
    let secs = || format!(" [{:.1}s]", start.elapsed().as_secs_f64());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => Verdict::Pass(s + &secs()),
        Ok(Err(s)) => Verdict::Fail(s + &secs()),
        Err(p) => Verdict::Fail(format!(
            "panicked: {}",
            p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
        )),
    }
}

fn main() {
    let scratch = tempfile::tempdir().expect("scratch dir");
    let weather_root = scratch.path().join("weather");
    let mut verdicts: Vec<(&str, Verdict)> = Vec::new();

    verdicts.push(("1 plan snapshot fidelity", guarded(plan_snapshots)));
    let run = catch_unwind(AssertUnwindSafe(|| weather(&weather_root)));
    let timings = match run {
        Ok(r) => {
            let verdict = |c: Check| c.map_or_else(Verdict::Fail, Verdict::Pass);
            verdicts.push(("2 oracle equivalence", verdict(r.oracle_equal)));
            verdicts.push(("3 manifest ground truth", verdict(r.manifest)));
            r.timings
        }
        Err(_) => {
            verdicts.push(("2 oracle equivalence", Verdict::Fail("weather run panicked".into())));
            verdicts.push(("3 manifest ground truth", Verdict::Fail("weather run panicked".into())));
            Vec::new()
        }
    };
    verdicts.push(("4 speedup", speedup(scratch.path(), &timings)));
    verdicts.push(("5 two-step aggregation", guarded(two_step)));
    verdicts.push(("6 join algorithm selection", guarded(|| joins(&weather_root))));
    verdicts.push(("7 rewrite soundness", guarded(rewrite_soundness)));
    verdicts.push(("8 memory-bound pushdown", guarded(pushdown_bound)));

    let mut failed = 0;
    for (name, v) in &verdicts {
        match v {
            Verdict::Pass(d) => println!("PASS criterion {}: {}", name, d),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL criterion {}: {}", name, d);
            }
            Verdict::Unattainable(d) => println!("FAIL criterion {} (unattainable on this machine): {}", name, d),
        }
    }
    let passed = verdicts.iter().filter(|(_, v)| matches!(v, Verdict::Pass(_))).count();
    println!("acceptance: {} of {} criteria pass", passed, verdicts.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
