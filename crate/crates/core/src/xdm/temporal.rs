//! Date, time, dateTime and duration values.
//!
//! Instants are kept with millisecond precision. Values that carry a timezone
//! are normalized to UTC on construction; the offset itself is only remembered
//! as a flag so that the canonical form can print a trailing `Z`.

use std::fmt;

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike};

const MS_PER_DAY: i64 = 86_400_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DateTime {
    /// Milliseconds since 1970-01-01T00:00:00Z.
    pub millis: i64,
    pub has_tz: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Date {
    /// Days since 1970-01-01.
    pub days: i32,
    pub tz_minutes: Option<i16>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Time {
    pub millis_of_day: u32,
    pub has_tz: bool,
}

/// xs:duration split into its year-month and day-time parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Duration {
    pub months: i32,
    pub millis: i64,
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()
}

/// Splits an optional timezone suffix (`Z`, `+hh:mm`, `-hh:mm`) off `s`.
fn split_tz(s: &str) -> Option<(&str, Option<i16>)> {
    if let Some(body) = s.strip_suffix('Z') {
        return Some((body, Some(0)));
    }
    if s.len() > 6 {
        let (body, tail) = s.split_at(s.len() - 6);
        let b = tail.as_bytes();
        if (b[0] == b'+' || b[0] == b'-') && b[3] == b':' {
            let hh: i16 = tail[1..3].parse().ok()?;
            let mm: i16 = tail[4..6].parse().ok()?;
            if hh > 14 || mm > 59 || (hh == 14 && mm != 0) {
                return None;
            }
            let total = hh * 60 + mm;
            return Some((body, Some(if b[0] == b'-' { -total } else { total })));
        }
    }
    Some((s, None))
}

fn parse_date_part(s: &str) -> Option<NaiveDate> {
    // Years may carry a leading minus and more than four digits.
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let mut parts = body.splitn(3, '-');
    let y = parts.next()?;
    let m = parts.next()?;
    let d = parts.next()?;
    if y.len() < 4 || m.len() != 2 || d.len() != 2 {
        return None;
    }
    if !(y.bytes().all(|c| c.is_ascii_digit())
        && m.bytes().all(|c| c.is_ascii_digit())
        && d.bytes().all(|c| c.is_ascii_digit()))
    {
        return None;
    }
    let year: i32 = y.parse().ok()?;
    NaiveDate::from_ymd_opt(if neg { -year } else { year }, m.parse().ok()?, d.parse().ok()?)
}

/// Parses `hh:mm:ss(.fff)?` into milliseconds of day; `24:00:00` maps to a
/// full day so that callers can roll the date forward.
fn parse_time_part(s: &str) -> Option<u32> {
    let b = s.as_bytes();
    if b.len() < 8 || b[2] != b':' || b[5] != b':' {
        return None;
    }
    let digits = |r: std::ops::Range<usize>| -> Option<u32> {
        let t = &s[r];
        if t.bytes().all(|c| c.is_ascii_digit()) {
            t.parse().ok()
        } else {
            None
        }
    };
    let hh = digits(0..2)?;
    let mm = digits(3..5)?;
    let ss = digits(6..8)?;
    let mut ms = 0u32;
    if b.len() > 8 {
        if b[8] != b'.' || b.len() == 9 {
            return None;
        }
        let frac = &s[9..];
        if !frac.bytes().all(|c| c.is_ascii_digit()) {
            return None;
        }
        // Millisecond precision: extra digits are truncated.
        let mut scale = 100;
        for c in frac.bytes().take(3) {
            ms += (c - b'0') as u32 * scale;
            scale /= 10;
        }
    }
    if hh == 24 {
        return if mm == 0 && ss == 0 && ms == 0 {
            Some(MS_PER_DAY as u32)
        } else {
            None
        };
    }
    if hh > 23 || mm > 59 || ss > 59 {
        return None;
    }
    Some(((hh * 60 + mm) * 60 + ss) * 1000 + ms)
}

fn write_millis_of_day(f: &mut fmt::Formatter<'_>, ms: u32) -> fmt::Result {
    let secs = ms / 1000;
    write!(f, "{:02}:{:02}:{:02}", secs / 3600, secs / 60 % 60, secs % 60)?;
    let frac = ms % 1000;
    if frac != 0 {
        let digits = format!("{:03}", frac);
        write!(f, ".{}", digits.trim_end_matches('0'))?;
    }
    Ok(())
}

fn write_date(f: &mut fmt::Formatter<'_>, date: NaiveDate) -> fmt::Result {
    let y = date.year();
    if y < 0 {
        write!(f, "-{:04}", -y)?;
    } else {
        write!(f, "{:04}", y)?;
    }
    write!(f, "-{:02}-{:02}", date.month(), date.day())
}

impl DateTime {
    /// Accepts the xs:dateTime lexical form, e.g. `1976-07-04T00:00:00.000`,
    /// with an optional timezone that is folded into the UTC instant.
    pub fn parse(text: &str) -> Option<Self> {
        let s = text.trim();
        let (body, tz) = split_tz(s)?;
        let t = body.find('T')?;
        let date = parse_date_part(&body[..t])?;
        let time_ms = parse_time_part(&body[t + 1..])? as i64;
        let days = (date - epoch()).num_days();
        let offset_ms = tz.unwrap_or(0) as i64 * 60_000;
        Some(DateTime {
            millis: days * MS_PER_DAY + time_ms - offset_ms,
            has_tz: tz.is_some(),
        })
    }

    pub fn naive(self) -> NaiveDateTime {
        let days = self.millis.div_euclid(MS_PER_DAY);
        let ms = self.millis.rem_euclid(MS_PER_DAY) as u32;
        let date = epoch() + chrono::Duration::days(days);
        let time = NaiveTime::from_num_seconds_from_midnight_opt(ms / 1000, (ms % 1000) * 1_000_000)
            .unwrap();
        NaiveDateTime::new(date, time)
    }

    pub fn year(self) -> i64 {
        self.naive().year() as i64
    }

    pub fn month(self) -> i64 {
        self.naive().month() as i64
    }

    pub fn day(self) -> i64 {
        self.naive().day() as i64
    }

    pub fn from_date(date: Date) -> Self {
        DateTime {
            millis: date.days as i64 * MS_PER_DAY
                - date.tz_minutes.unwrap_or(0) as i64 * 60_000,
            has_tz: date.tz_minutes.is_some(),
        }
    }
}

impl fmt::Display for DateTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.naive();
        write_date(f, n.date())?;
        f.write_str("T")?;
        let ms = n.num_seconds_from_midnight() * 1000 + n.nanosecond() / 1_000_000;
        write_millis_of_day(f, ms)?;
        if self.has_tz {
            f.write_str("Z")?;
        }
        Ok(())
    }
}

impl Date {
    pub fn parse(text: &str) -> Option<Self> {
        let (body, tz) = split_tz(text.trim())?;
        let date = parse_date_part(body)?;
        Some(Date {
            days: (date - epoch()).num_days() as i32,
            tz_minutes: tz,
        })
    }

    pub fn naive(self) -> NaiveDate {
        epoch() + chrono::Duration::days(self.days as i64)
    }

    pub fn from_datetime(dt: DateTime) -> Self {
        Date {
            days: dt.millis.div_euclid(MS_PER_DAY) as i32,
            tz_minutes: if dt.has_tz { Some(0) } else { None },
        }
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_date(f, self.naive())?;
        match self.tz_minutes {
            None => Ok(()),
            Some(0) => f.write_str("Z"),
            Some(m) => {
                let sign = if m < 0 { '-' } else { '+' };
                write!(f, "{}{:02}:{:02}", sign, m.abs() / 60, m.abs() % 60)
            }
        }
    }
}

impl Time {
    pub fn parse(text: &str) -> Option<Self> {
        let (body, tz) = split_tz(text.trim())?;
        let ms = parse_time_part(body)? as i64;
        let offset = tz.unwrap_or(0) as i64 * 60_000;
        Some(Time {
            millis_of_day: (ms - offset).rem_euclid(MS_PER_DAY) as u32,
            has_tz: tz.is_some(),
        })
    }

    pub fn from_datetime(dt: DateTime) -> Self {
        Time {
            millis_of_day: dt.millis.rem_euclid(MS_PER_DAY) as u32,
            has_tz: dt.has_tz,
        }
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_millis_of_day(f, self.millis_of_day)?;
        if self.has_tz {
            f.write_str("Z")?;
        }
        Ok(())
    }
}

impl Duration {
    /// Parses `-?PnYnMnDTnHnMn(.n)?S`.
    pub fn parse(text: &str) -> Option<Self> {
        let s = text.trim();
        let (neg, s) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let mut rest = s.strip_prefix('P')?;
        if rest.is_empty() {
            return None;
        }
        let mut months: i64 = 0;
        let mut millis: i64 = 0;
        let mut in_time = false;
        let mut seen_any = false;
        while !rest.is_empty() {
            if let Some(r) = rest.strip_prefix('T') {
                if in_time || r.is_empty() {
                    return None;
                }
                in_time = true;
                rest = r;
                continue;
            }
            let end = rest.find(|c: char| !(c.is_ascii_digit() || c == '.'))?;
            let (num, tail) = rest.split_at(end);
            if num.is_empty() {
                return None;
            }
            let unit = tail.chars().next()?;
            rest = &tail[1..];
            seen_any = true;
            match (in_time, unit) {
                (false, 'Y') => months += num.parse::<i64>().ok()? * 12,
                (false, 'M') => months += num.parse::<i64>().ok()?,
                (false, 'D') => millis += num.parse::<i64>().ok()? * MS_PER_DAY,
                (true, 'H') => millis += num.parse::<i64>().ok()? * 3_600_000,
                (true, 'M') => millis += num.parse::<i64>().ok()? * 60_000,
                (true, 'S') => {
                    let secs: f64 = num.parse().ok()?;
                    millis += (secs * 1000.0).round() as i64;
                }
                _ => return None,
            }
        }
        if !seen_any {
            return None;
        }
        let sign = if neg { -1 } else { 1 };
        Some(Duration {
            months: i32::try_from(months * sign).ok()?,
            millis: millis * sign,
        })
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.months == 0 && self.millis == 0 {
            return f.write_str("PT0S");
        }
        let neg = self.months < 0 || self.millis < 0;
        if neg {
            f.write_str("-")?;
        }
        f.write_str("P")?;
        let months = self.months.unsigned_abs();
        let (y, m) = (months / 12, months % 12);
        if y > 0 {
            write!(f, "{}Y", y)?;
        }
        if m > 0 {
            write!(f, "{}M", m)?;
        }
        let ms = self.millis.unsigned_abs();
        let days = ms / MS_PER_DAY as u64;
        let rem = ms % MS_PER_DAY as u64;
        if days > 0 {
            write!(f, "{}D", days)?;
        }
        if rem > 0 {
            f.write_str("T")?;
            let h = rem / 3_600_000;
            let mi = rem / 60_000 % 60;
            let s = rem / 1000 % 60;
            let frac = rem % 1000;
            if h > 0 {
                write!(f, "{}H", h)?;
            }
            if mi > 0 {
                write!(f, "{}M", mi)?;
            }
            if s > 0 || frac > 0 {
                write!(f, "{}", s)?;
                if frac > 0 {
                    let digits = format!("{:03}", frac);
                    write!(f, ".{}", digits.trim_end_matches('0'))?;
                }
                f.write_str("S")?;
            }
        }
        Ok(())
    }
}
