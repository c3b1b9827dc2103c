use std::path::Path;

use super::*;
use crate::frontend::corpus;
use crate::oracle::eval_naive;
use crate::runtime::{run_query, ExecConfig};
use crate::xdm::{AtomicValue, Item, Sequence};
use crate::xml_ingest::PartitionSpec;

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// A short window around New Year 2000 with planted values inside it.
fn window(seed: u64) -> GenSpec {
    let mut s = GenSpec::new(seed, 6, 20, 4);
    s.start = date(1999, 12, 20);
    s.records_per_file = 50;
    s.differential_days = 10;
    s.planted = vec![
        Planted {
            data_type: "TMAX".into(),
            value: 412,
            station: SYRACUSE.into(),
            date: date(2000, 1, 3),
        },
        Planted {
            data_type: "AWND".into(),
            value: 500,
            station: KEY_WEST.into(),
            date: date(1999, 12, 24),
        },
    ];
    s
}

fn double(s: &Sequence) -> f64 {
    match s.as_slice() {
        [Item::Atomic(AtomicValue::Double(d))] => *d,
        other => panic!("expected one double, got {:?}", other),
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    generate(&window(7), a.path()).unwrap();
    generate(&window(7), b.path()).unwrap();
    generate(&window(8), c.path()).unwrap();
    assert_eq!(tree(a.path()), tree(b.path()));
    assert_ne!(tree(a.path()), tree(c.path()));
}

#[test]
fn one_station_one_day() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = GenSpec::new(1, 1, 1, 1);
    s.planted.clear();
    s.differential_stations = 0;
    let m = generate(&s, dir.path()).unwrap();
    let spec = PartitionSpec::from_data_root(dir.path(), 1).unwrap();
    let count = |q: &str| match eval_naive(q, &spec).unwrap().as_slice() {
        [Item::Atomic(AtomicValue::Integer(n))] => *n,
        other => panic!("{:?}", other),
    };
    assert_eq!(count(r#"count(collection("/stations")/stationCollection/station)"#), 1);
    // One station-day: the three daily readings plus the optional ones.
    let readings = count(r#"count(collection("/sensors")/dataCollection/data)"#);
    assert_eq!(Some(readings), m.get_i64("sensor_readings"));
    assert!((3..=5).contains(&readings));
}

#[test]
fn manifest_round_trips_through_text() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate(&window(3), dir.path()).unwrap();
    assert_eq!(Manifest::read(dir.path()).unwrap(), m);
    assert_eq!(m.get_i64("highest_temperature.max_tenths"), Some(412));
    assert_eq!(m.get_i64("extreme_wind.count"), Some(1));
}

#[test]
fn planted_values_are_found_by_oracle_and_engine() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate(&window(11), dir.path()).unwrap();
    let precip = m.get_i64("annual_precipitation.sum_tenths").unwrap() as f64 / 10.0;
    for p in [1, 2, 4] {
        let spec = PartitionSpec::from_data_root(dir.path(), p).unwrap();
        for run in [eval_naive, |q: &str, s: &PartitionSpec| run_query(q, s, &ExecConfig::default())] {
            assert_eq!(double(&run(corpus::HIGHEST_TEMPERATURE.text, &spec).unwrap()), 41.2);
            assert_eq!(double(&run(corpus::ANNUAL_PRECIPITATION.text, &spec).unwrap()), precip);
            assert_eq!(run(corpus::EXTREME_WIND.text, &spec).unwrap().len(), 1);
            assert_eq!(
                run(corpus::STATION_HIGH_TEMPERATURE.text, &spec).unwrap().len() as i64,
                3 * m.get_i64("station_high_temperature.count").unwrap()
            );
        }
    }
}
