//! The benchmark and example queries, verbatim.

#[derive(Clone, Copy, Debug)]
pub struct CorpusQuery {
    pub name: &'static str,
    pub text: &'static str,
    /// Whether the query fixes its result order. Join results are compared
    /// as multisets.
    pub ordered: bool,
}

pub const STATION_DATE_HISTORY: CorpusQuery = CorpusQuery {
    name: "station_date_history",
    text: r#"for $r in collection("/sensors")/dataCollection/data
let $datetime := dateTime(data($r/date))
where $r/station eq "GHCND:USW00012836"
  and year-from-dateTime($datetime) ge 2003
  and month-from-dateTime($datetime) eq 12
  and day-from-dateTime($datetime) eq 25
return $r"#,
    ordered: true,
};

pub const EXTREME_WIND: CorpusQuery = CorpusQuery {
    name: "extreme_wind",
    text: r#"for $r in collection("/sensors")/dataCollection/data
where $r/dataType eq "AWND"
  and decimal(data($r/value)) gt 491.744
return $r"#,
    ordered: true,
};

pub const ANNUAL_PRECIPITATION: CorpusQuery = CorpusQuery {
    name: "annual_precipitation",
    text: r#"sum(
  for $r in collection("/sensors")/dataCollection/data
  where $r/station eq "GHCND:USW00014771"
    and $r/dataType eq "PRCP"
    and year-from-dateTime(dateTime(data($r/date))) eq 1999
  return $r/value
) div 10"#,
    ordered: true,
};

pub const HIGHEST_TEMPERATURE: CorpusQuery = CorpusQuery {
    name: "highest_temperature",
    text: r#"max(
  for $r in collection("/sensors")/dataCollection/data
  where $r/dataType eq "TMAX"
  return $r/value
) div 10"#,
    ordered: true,
};

pub const DAY_STATION_READINGS: CorpusQuery = CorpusQuery {
    name: "day_station_readings",
    text: r#"for $s in collection("/stations")/stationCollection/station
for $r in collection("/sensors")/dataCollection/data
where $s/id eq $r/station
  and (some $x in $s/locationLabels satisfies (
      $x/type eq "ST" and
      upper-case(data($x/displayName)) eq "WASHINGTON"))
  and dateTime(data($r/date))
      eq dateTime("1976-07-04T00:00:00.000")
return $r"#,
    ordered: false,
};

pub const STATION_HIGH_TEMPERATURE: CorpusQuery = CorpusQuery {
    name: "station_high_temperature",
    text: r#"for $s in collection("/stations")/stationCollection/station
for $r in collection("/sensors")/dataCollection/data
where $s/id eq $r/station
  and $r/dataType eq "TMAX"
  and year-from-dateTime(dateTime(data($r/date))) eq 2000
return ($s/displayName, $r/date, $r/value)"#,
    ordered: false,
};

pub const US_MIN_TEMPERATURE: CorpusQuery = CorpusQuery {
    name: "us_min_temperature",
    text: r#"min(
  for $s in collection("/stations")/stationCollection/station
  for $r in collection("/sensors")/dataCollection/data
    where $s/id eq $r/station
    and (some $x in $s/locationLabels satisfies
        ($x/type eq "CNTRY" and $x/id eq "FIPS:US"))
    and $r/dataType eq "TMIN"
    and year-from-dateTime(dateTime(data($r/date))) eq 2001
  return $r/value
) div 10"#,
    ordered: true,
};

pub const TEMPERATURE_DIFFERENTIAL: CorpusQuery = CorpusQuery {
    name: "temperature_differential",
    text: r#"avg(
  for $r_min in collection("/sensors_min")/dataCollection/data
  for $r_max in collection("/sensors_max")/dataCollection/data
  where $r_min/station eq $r_max/station
    and $r_min/date eq $r_max/date
    and $r_min/dataType eq "TMIN"
    and $r_max/dataType eq "TMAX"
  return $r_max/value - $r_min/value
) div 10"#,
    ordered: true,
};

/// The weather benchmark, in presentation order.
pub const WEATHER: [CorpusQuery; 8] = [
    STATION_DATE_HISTORY,
    EXTREME_WIND,
    ANNUAL_PRECIPITATION,
    HIGHEST_TEMPERATURE,
    DAY_STATION_READINGS,
    STATION_HIGH_TEMPERATURE,
    US_MIN_TEMPERATURE,
    TEMPERATURE_DIFFERENTIAL,
];

pub const BOOK_PATH: &str = r#"doc("book.xml")/bookstore/book"#;
pub const BOOKS_COLLECTION_PATH: &str = r#"collection("/books")/bookstore/book"#;
pub const BOOKS_COUNT: &str = r#"count(
  for $x in collection("/books")/bookstore/book
  return $x
)"#;
pub const BOOKS_JOIN: &str = r#"for $r in collection("/ann-books")/bookstore/book
for $s in collection("/joe-books")/bookstore/book
where $r/title eq $s/title
return $r"#;

pub const ALL: [CorpusQuery; 12] = [
    STATION_DATE_HISTORY,
    EXTREME_WIND,
    ANNUAL_PRECIPITATION,
    HIGHEST_TEMPERATURE,
    DAY_STATION_READINGS,
    STATION_HIGH_TEMPERATURE,
    US_MIN_TEMPERATURE,
    TEMPERATURE_DIFFERENTIAL,
    CorpusQuery {
        name: "book_path",
        text: BOOK_PATH,
        ordered: true,
    },
    CorpusQuery {
        name: "books_collection_path",
        text: BOOKS_COLLECTION_PATH,
        ordered: true,
    },
    CorpusQuery {
        name: "books_count",
        text: BOOKS_COUNT,
        ordered: true,
    },
    CorpusQuery {
        name: "books_join",
        text: BOOKS_JOIN,
        ordered: false,
    },
];

pub fn by_name(name: &str) -> Option<CorpusQuery> {
    ALL.iter().copied().find(|q| q.name == name)
}
