//! Deterministic generator of daily weather readings and station metadata,
//! with planted values whose query answers are recorded in a manifest.
//!
//! Layout under the output root: `part-NN/<collection>/NNNNNN.xml` for the
//! collections `sensors`, `stations`, `sensors_min` and `sensors_max`. Files
//! are numbered in generation order and dealt to partition directories in
//! contiguous runs, so reading partitions in ordinal order reproduces the
//! generation order for any partition count that divides the directory
//! count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const KEY_WEST: &str = "GHCND:USW00012836";
pub const SYRACUSE: &str = "GHCND:USW00014771";

pub const COLLECTIONS: [&str; 4] = ["sensors", "stations", "sensors_min", "sensors_max"];

/// A reading forced into the data set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Planted {
    pub data_type: String,
    /// Tenths of the unit, as stored.
    pub value: i64,
    pub station: String,
    pub date: NaiveDate,
}

#[derive(Clone, Debug)]
pub struct GenSpec {
    pub seed: u64,
    pub stations: usize,
    /// Consecutive days of readings starting at `start`.
    pub days: u32,
    pub start: NaiveDate,
    /// Number of `part-NN` directories written.
    pub partitions: usize,
    pub records_per_file: usize,
    /// Stations and days covered by the min/max temperature collections.
    pub differential_stations: usize,
    pub differential_days: u32,
    pub planted: Vec<Planted>,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

impl GenSpec {
    pub fn new(seed: u64, stations: usize, days: u32, partitions: usize) -> GenSpec {
        GenSpec {
            seed,
            stations,
            days,
            start: date(1976, 1, 1),
            partitions,
            records_per_file: 1000,
            differential_stations: 4,
            differential_days: 250,
            planted: GenSpec::default_planted(),
        }
    }

    /// A 41.2 degree maximum and two readings above the extreme wind
    /// threshold.
    pub fn default_planted() -> Vec<Planted> {
        let p = |t: &str, v: i64, s: &str, d: NaiveDate| Planted {
            data_type: t.into(),
            value: v,
            station: s.into(),
            date: d,
        };
        vec![
            p("TMAX", 412, SYRACUSE, date(1988, 7, 14)),
            p("AWND", 497, KEY_WEST, date(1980, 9, 2)),
            p("AWND", 512, SYRACUSE, date(1993, 3, 13)),
        ]
    }

    /// Days from 1976 through 2005: every date the weather queries ask for.
    pub const FULL_RANGE_DAYS: u32 = 10958;
}

struct Label {
    kind: &'static str,
    id: String,
    name: String,
}

struct Station {
    id: String,
    name: String,
    latitude: f64,
    longitude: f64,
    labels: Vec<Label>,
}

impl Station {
    fn in_state(&self, upper_name: &str) -> bool {
        self.labels.iter().any(|l| l.kind == "ST" && l.name.to_uppercase() == upper_name)
    }

    fn in_country(&self, id: &str) -> bool {
        self.labels.iter().any(|l| l.kind == "CNTRY" && l.id == id)
    }
}

const US_STATES: [(&str, &str, &str); 8] = [
    ("FIPS:53", "Washington", "WA"),
    ("FIPS:36", "New York", "NY"),
    ("FIPS:12", "Florida", "FL"),
    ("FIPS:06", "California", "CA"),
    ("FIPS:48", "Texas", "TX"),
    ("FIPS:17", "Illinois", "IL"),
    ("FIPS:08", "Colorado", "CO"),
    ("FIPS:25", "Massachusetts", "MA"),
];

const COUNTRIES: [(&str, &str, &str); 3] = [
    ("FIPS:CA", "Canada", "CA"),
    ("FIPS:MX", "Mexico", "MX"),
    ("FIPS:UK", "United Kingdom", "UK"),
];

fn us_station(id: &str, city: &str, state: usize, lat: f64, lon: f64) -> Station {
    let (fips, name, abbr) = US_STATES[state];
    Station {
        id: id.into(),
        name: format!("{}, {} US", city, abbr),
        latitude: lat,
        longitude: lon,
        labels: vec![
            Label {
                kind: "ST",
                id: fips.into(),
                name: name.into(),
            },
            Label {
                kind: "CNTRY",
                id: "FIPS:US".into(),
                name: "United States".into(),
            },
        ],
    }
}

fn stations(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Vec<Station> {
    let mut out = vec![
        us_station(KEY_WEST, "KEY WEST INTERNATIONAL AIRPORT", 2, 24.5571, -81.7552),
        us_station(SYRACUSE, "SYRACUSE HANCOCK INTERNATIONAL AIRPORT", 1, 43.1111, -76.1038),
        us_station("GHCND:USW00024233", "SEATTLE TACOMA INTERNATIONAL AIRPORT", 0, 47.4444, -122.3139),
    ];
    let mut i = 0;
    while out.len() < spec.stations {
        i += 1;
        let lat = rng.gen_range(-60.0..70.0f64);
        let lon = rng.gen_range(-170.0..170.0f64);
        if rng.gen_bool(0.7) {
            let state = rng.gen_range(0..US_STATES.len());
            out.push(us_station(&format!("GHCND:USC{:08}", 100000 + i), &format!("STATION {}", i), state, lat, lon));
        } else {
            let (fips, name, abbr) = COUNTRIES[rng.gen_range(0..COUNTRIES.len())];
            out.push(Station {
                id: format!("GHCND:{}C{:08}", abbr, 200000 + i),
                name: format!("STATION {}, {}", i, abbr),
                latitude: lat,
                longitude: lon,
                labels: vec![Label {
                    kind: "CNTRY",
                    id: fips.into(),
                    name: name.into(),
                }],
            });
        }
    }
    out.truncate(spec.stations);
    out
}

/// One generated reading.
struct Reading<'a> {
    date: NaiveDate,
    data_type: &'static str,
    station: &'a str,
    value: i64,
}

fn write_reading(out: &mut String, r: &Reading) {
    let _ = writeln!(
        out,
        "<data><date>{}T00:00:00.000</date><dataType>{}</dataType><station>{}</station><value>{}</value></data>",
        r.date.format("%Y-%m-%d"),
        r.data_type,
        r.station,
        r.value
    );
}

fn write_station(out: &mut String, s: &Station) {
    let _ = write!(
        out,
        "<station><id>{}</id><displayName>{}</displayName><latitude>{:.4}</latitude><longitude>{:.4}</longitude>",
        s.id, s.name, s.latitude, s.longitude
    );
    for l in &s.labels {
        let _ = write!(
            out,
            "<locationLabels><type>{}</type><id>{}</id><displayName>{}</displayName></locationLabels>",
            l.kind, l.id, l.name
        );
    }
    out.push_str("</station>\n");
}

/// Buffers records of one collection into numbered files.
struct CollectionWriter {
    name: &'static str,
    root_tag: &'static str,
    per_file: usize,
    pending: Vec<String>,
    files: Vec<String>,
}

impl CollectionWriter {
    fn new(name: &'static str, root_tag: &'static str, per_file: usize) -> Self {
        CollectionWriter {
            name,
            root_tag,
            per_file: per_file.max(1),
            pending: Vec::new(),
            files: Vec::new(),
        }
    }

    fn push(&mut self, record: String) {
        self.pending.push(record);
        if self.pending.len() == self.per_file {
            self.cut();
        }
    }

    fn cut(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let mut doc = format!("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<{}>\n", self.root_tag);
        for r in self.pending.drain(..) {
            doc.push_str(&r);
        }
        let _ = writeln!(doc, "</{}>", self.root_tag);
        self.files.push(doc);
    }

    /// Writes the files, dealing them to partition directories in order.
    fn write(mut self, root: &Path, partitions: usize) -> Result<u64> {
        self.cut();
        let n = self.files.len();
        let mut bytes = 0;
        for (i, doc) in self.files.iter().enumerate() {
            let p = i * partitions / n.max(1);
            let dir = root.join(part_dir(p)).join(self.name);
            let path = dir.join(format!("{:06}.xml", i));
            fs::write(&path, doc).map_err(|e| Error::io(&path, e))?;
            bytes += doc.len() as u64;
        }
        Ok(bytes)
    }
}

fn part_dir(p: usize) -> String {
    format!("part-{:02}", p)
}

/// Ground truths keyed by name; values are plain text.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub entries: BTreeMap<String, String>,
}

impl Manifest {
    fn set(&mut self, k: &str, v: impl ToString) {
        self.entries.insert(k.to_string(), v.to_string());
    }

    pub fn get(&self, k: &str) -> Option<&str> {
        self.entries.get(k).map(|s| s.as_str())
    }

    pub fn get_i64(&self, k: &str) -> Option<i64> {
        self.get(k)?.parse().ok()
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{}={}\n", k, v)).collect()
    }

    pub fn parse(text: &str) -> Manifest {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Manifest { entries }
    }

    pub fn read(root: &Path) -> Result<Manifest> {
        let path = root.join("manifest.txt");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Manifest::parse(&text))
    }
}

#[derive(Default)]
struct Truths {
    station_date_history: i64,
    extreme_wind: i64,
    annual_precipitation: i64,
    highest_temperature: Option<i64>,
    day_station_readings: i64,
    us_min_temperature: Option<i64>,
    station_high_temperature: i64,
    differential_sum: i64,
    differential_pairs: i64,
}

fn gen_value(rng: &mut ChaCha8Rng, data_type: &str, day: NaiveDate) -> i64 {
    // A seasonal curve keeps the numbers plausible; all stay below the
    // planted extremes.
    let season = ((day.ordinal() as f64 / 365.25) * std::f64::consts::TAU).cos();
    match data_type {
        "TMAX" => (200.0 - 120.0 * season) as i64 + rng.gen_range(-80..80),
        "TMIN" => (90.0 - 120.0 * season) as i64 + rng.gen_range(-80..40),
        "PRCP" => {
            if rng.gen_bool(0.6) {
                0
            } else {
                rng.gen_range(1..300)
            }
        }
        "AWND" => rng.gen_range(0..300),
        _ => rng.gen_range(0..200),
    }
}

/// Writes the corpus under `out` and returns its manifest, which is also
/// stored as `manifest.txt`.
pub fn generate(spec: &GenSpec, out: &Path) -> Result<Manifest> {
    let partitions = spec.partitions.max(1);
    for p in 0..partitions {
        for c in COLLECTIONS {
            let dir = out.join(part_dir(p)).join(c);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let stations = stations(spec, &mut rng);
    let mut t = Truths::default();

    let mut station_files = CollectionWriter::new("stations", "stationCollection", spec.records_per_file);
    for s in &stations {
        let mut rec = String::new();
        write_station(&mut rec, s);
        station_files.push(rec);
    }

    let mut sensors = CollectionWriter::new("sensors", "dataCollection", spec.records_per_file);
    let mut record = String::new();
    let mut readings = 0u64;
    let independence_day = date(1976, 7, 4);
    for s in &stations {
        let washington = s.in_state("WASHINGTON");
        let us = s.in_country("FIPS:US");
        for d in 0..spec.days {
            let day = spec.start + Duration::days(d as i64);
            for data_type in ["TMAX", "TMIN", "PRCP", "AWND", "SNOW"] {
                let planted = spec
                    .planted
                    .iter()
                    .find(|p| p.station == s.id && p.date == day && p.data_type == data_type);
                let present = match data_type {
                    "AWND" => rng.gen_bool(0.5),
                    "SNOW" => rng.gen_bool(0.2),
                    _ => true,
                };
                let generated = gen_value(&mut rng, data_type, day);
                let value = match planted {
                    Some(p) => p.value,
                    None if present => generated,
                    None => continue,
                };
                let r = Reading {
                    date: day,
                    data_type,
                    station: &s.id,
                    value,
                };
                if s.id == KEY_WEST && day.year() >= 2003 && day.month() == 12 && day.day() == 25 {
                    t.station_date_history += 1;
                }
                if data_type == "AWND" && value * 1000 > 491_744 {
                    t.extreme_wind += 1;
                }
                if s.id == SYRACUSE && data_type == "PRCP" && day.year() == 1999 {
                    t.annual_precipitation += value;
                }
                if data_type == "TMAX" {
                    t.highest_temperature = Some(t.highest_temperature.map_or(value, |m| m.max(value)));
                    if day.year() == 2000 {
                        t.station_high_temperature += 1;
                    }
                }
                if washington && day == independence_day {
                    t.day_station_readings += 1;
                }
                if us && data_type == "TMIN" && day.year() == 2001 {
                    t.us_min_temperature = Some(t.us_min_temperature.map_or(value, |m| m.min(value)));
                }
                record.clear();
                write_reading(&mut record, &r);
                sensors.push(record.clone());
                readings += 1;
            }
        }
    }

    // The differential collections: minimums in one, maximums in the other,
    // each with a share of unrelated readings.
    let mut mins = CollectionWriter::new("sensors_min", "dataCollection", spec.records_per_file);
    let mut maxs = CollectionWriter::new("sensors_max", "dataCollection", spec.records_per_file);
    let mut pairs: BTreeMap<(usize, u32), (Option<i64>, Option<i64>)> = BTreeMap::new();
    for (si, s) in stations.iter().take(spec.differential_stations).enumerate() {
        for d in 0..spec.differential_days {
            let day = spec.start + Duration::days(d as i64);
            let hi = gen_value(&mut rng, "TMAX", day);
            let lo = hi - rng.gen_range(0..150);
            for (w, data_type, v) in [(&mut mins, "TMIN", lo), (&mut maxs, "TMAX", hi)] {
                if rng.gen_bool(0.9) {
                    record.clear();
                    write_reading(
                        &mut record,
                        &Reading {
                            date: day,
                            data_type,
                            station: &s.id,
                            value: v,
                        },
                    );
                    w.push(record.clone());
                    let e = pairs.entry((si, d)).or_default();
                    if data_type == "TMIN" {
                        e.0 = Some(v);
                    } else {
                        e.1 = Some(v);
                    }
                }
                if rng.gen_bool(0.2) {
                    record.clear();
                    write_reading(
                        &mut record,
                        &Reading {
                            date: day,
                            data_type: "PRCP",
                            station: &s.id,
                            value: gen_value(&mut rng, "PRCP", day),
                        },
                    );
                    w.push(record.clone());
                }
            }
        }
    }
    for (lo, hi) in pairs.values() {
        if let (Some(lo), Some(hi)) = (lo, hi) {
            t.differential_sum += hi - lo;
            t.differential_pairs += 1;
        }
    }

    let mut bytes = station_files.write(out, partitions)?;
    bytes += sensors.write(out, partitions)?;
    bytes += mins.write(out, partitions)?;
    bytes += maxs.write(out, partitions)?;

    let mut m = Manifest::default();
    m.set("seed", spec.seed);
    m.set("stations", stations.len());
    m.set("days", spec.days);
    m.set("start", spec.start);
    m.set("partitions", partitions);
    m.set("records_per_file", spec.records_per_file);
    m.set("sensor_readings", readings);
    m.set("bytes", bytes);
    for (i, p) in spec.planted.iter().enumerate() {
        m.set(&format!("planted.{}", i), format!("{},{},{},{}", p.data_type, p.value, p.station, p.date));
    }
    m.set("station_date_history.count", t.station_date_history);
    m.set("extreme_wind.count", t.extreme_wind);
    m.set("annual_precipitation.sum_tenths", t.annual_precipitation);
    if let Some(v) = t.highest_temperature {
        m.set("highest_temperature.max_tenths", v);
    }
    m.set("day_station_readings.count", t.day_station_readings);
    m.set("station_high_temperature.count", t.station_high_temperature);
    if let Some(v) = t.us_min_temperature {
        m.set("us_min_temperature.min_tenths", v);
    }
    m.set("temperature_differential.sum_tenths", t.differential_sum);
    m.set("temperature_differential.pairs", t.differential_pairs);
    let path = out.join("manifest.txt");
    fs::write(&path, m.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(m)
}

#[cfg(test)]
mod tests;
