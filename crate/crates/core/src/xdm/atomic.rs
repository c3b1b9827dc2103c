use std::fmt;
use std::sync::Arc;

use super::decimal::Decimal;
use super::temporal::{Date, DateTime, Duration, Time};
use crate::error::{Error, Result};

/// The atomic kinds the engine knows about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomicKind {
    Boolean,
    Byte,
    Short,
    Integer,
    Long,
    Double,
    Float,
    String,
    Binary,
    Decimal,
    Date,
    DateTime,
    Time,
    Duration,
    QName,
    UntypedAtomic,
}

impl AtomicKind {
    pub const ALL: [AtomicKind; 16] = [
        AtomicKind::Boolean,
        AtomicKind::Byte,
        AtomicKind::Short,
        AtomicKind::Integer,
        AtomicKind::Long,
        AtomicKind::Double,
        AtomicKind::Float,
        AtomicKind::String,
        AtomicKind::Binary,
        AtomicKind::Decimal,
        AtomicKind::Date,
        AtomicKind::DateTime,
        AtomicKind::Time,
        AtomicKind::Duration,
        AtomicKind::QName,
        AtomicKind::UntypedAtomic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AtomicKind::Boolean => "boolean",
            AtomicKind::Byte => "byte",
            AtomicKind::Short => "short",
            AtomicKind::Integer => "integer",
            AtomicKind::Long => "long",
            AtomicKind::Double => "double",
            AtomicKind::Float => "float",
            AtomicKind::String => "string",
            AtomicKind::Binary => "binary",
            AtomicKind::Decimal => "decimal",
            AtomicKind::Date => "date",
            AtomicKind::DateTime => "dateTime",
            AtomicKind::Time => "time",
            AtomicKind::Duration => "duration",
            AtomicKind::QName => "QName",
            AtomicKind::UntypedAtomic => "untypedAtomic",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        AtomicKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    pub fn is_integer(self) -> bool {
        matches!(
            self,
            AtomicKind::Byte | AtomicKind::Short | AtomicKind::Integer | AtomicKind::Long
        )
    }

    pub fn is_numeric(self) -> bool {
        self.is_integer()
            || matches!(
                self,
                AtomicKind::Decimal | AtomicKind::Float | AtomicKind::Double
            )
    }

    /// Position in the numeric promotion ladder used for arithmetic and
    /// comparison; higher wins.
    fn numeric_rank(self) -> u8 {
        match self {
            AtomicKind::Byte => 0,
            AtomicKind::Short => 1,
            AtomicKind::Integer => 2,
            AtomicKind::Long => 3,
            AtomicKind::Decimal => 4,
            AtomicKind::Float => 5,
            AtomicKind::Double => 6,
            _ => u8::MAX,
        }
    }
}

/// An atomic value. Strings share their buffer so cloning is cheap.
#[derive(Clone, Debug)]
pub enum AtomicValue {
    Boolean(bool),
    Byte(i8),
    Short(i16),
    Integer(i64),
    Long(i64),
    Double(f64),
    Float(f32),
    String(Arc<str>),
    Binary(Arc<[u8]>),
    Decimal(Decimal),
    Date(Date),
    DateTime(DateTime),
    Time(Time),
    Duration(Duration),
    QName(Arc<str>),
    UntypedAtomic(Arc<str>),
}

impl PartialEq for AtomicValue {
    /// Structural identity: same kind and same payload. Doubles compare by
    /// bit pattern so that NaN equals itself here; value comparison lives in
    /// `compare`.
    fn eq(&self, other: &Self) -> bool {
        use AtomicValue::*;
        match (self, other) {
            (Boolean(a), Boolean(b)) => a == b,
            (Byte(a), Byte(b)) => a == b,
            (Short(a), Short(b)) => a == b,
            (Integer(a), Integer(b)) => a == b,
            (Long(a), Long(b)) => a == b,
            (Double(a), Double(b)) => a.to_bits() == b.to_bits(),
            (Float(a), Float(b)) => a.to_bits() == b.to_bits(),
            (String(a), String(b)) => a == b,
            (Binary(a), Binary(b)) => a == b,
            (Decimal(a), Decimal(b)) => a == b,
            (Date(a), Date(b)) => a == b,
            (DateTime(a), DateTime(b)) => a == b,
            (Time(a), Time(b)) => a == b,
            (Duration(a), Duration(b)) => a == b,
            (QName(a), QName(b)) => a == b,
            (UntypedAtomic(a), UntypedAtomic(b)) => a == b,
            _ => false,
        }
    }
}

impl AtomicValue {
    pub fn string(s: &str) -> Self {
        AtomicValue::String(Arc::from(s))
    }

    pub fn untyped(s: &str) -> Self {
        AtomicValue::UntypedAtomic(Arc::from(s))
    }

    pub fn kind(&self) -> AtomicKind {
        match self {
            AtomicValue::Boolean(_) => AtomicKind::Boolean,
            AtomicValue::Byte(_) => AtomicKind::Byte,
            AtomicValue::Short(_) => AtomicKind::Short,
            AtomicValue::Integer(_) => AtomicKind::Integer,
            AtomicValue::Long(_) => AtomicKind::Long,
            AtomicValue::Double(_) => AtomicKind::Double,
            AtomicValue::Float(_) => AtomicKind::Float,
            AtomicValue::String(_) => AtomicKind::String,
            AtomicValue::Binary(_) => AtomicKind::Binary,
            AtomicValue::Decimal(_) => AtomicKind::Decimal,
            AtomicValue::Date(_) => AtomicKind::Date,
            AtomicValue::DateTime(_) => AtomicKind::DateTime,
            AtomicValue::Time(_) => AtomicKind::Time,
            AtomicValue::Duration(_) => AtomicKind::Duration,
            AtomicValue::QName(_) => AtomicKind::QName,
            AtomicValue::UntypedAtomic(_) => AtomicKind::UntypedAtomic,
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.kind().is_numeric()
    }

    /// Integer payload of the integer-family kinds.
    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            AtomicValue::Byte(v) => Some(v as i64),
            AtomicValue::Short(v) => Some(v as i64),
            AtomicValue::Integer(v) | AtomicValue::Long(v) => Some(v),
            _ => None,
        }
    }

    /// Numeric payload widened to a double.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AtomicValue::Double(v) => Some(*v),
            AtomicValue::Float(v) => Some(*v as f64),
            AtomicValue::Decimal(d) => Some(d.to_f64()),
            other => other.as_i64().map(|v| v as f64),
        }
    }

    pub fn as_decimal(&self) -> Option<Decimal> {
        match self {
            AtomicValue::Decimal(d) => Some(*d),
            other => other.as_i64().map(Decimal::from_i64),
        }
    }

    /// The string payload of string-like kinds.
    pub fn as_str(&self) -> Option<&str> {
        match self {
            AtomicValue::String(s) | AtomicValue::UntypedAtomic(s) | AtomicValue::QName(s) => {
                Some(s)
            }
            _ => None,
        }
    }

    /// Canonical lexical form, as produced by a cast to string.
    pub fn lexical(&self) -> String {
        self.to_string()
    }

    /// Casts following the lexical and numeric conversion rules. Impossible
    /// combinations are type errors; well-typed inputs with a bad lexical form
    /// are dynamic errors.
    pub fn cast(&self, target: AtomicKind) -> Result<AtomicValue> {
        if self.kind() == target {
            return Ok(self.clone());
        }
        match self {
            AtomicValue::String(s) | AtomicValue::UntypedAtomic(s) => from_lexical(s, target),
            _ => {
                if target == AtomicKind::String {
                    return Ok(AtomicValue::String(Arc::from(self.lexical())));
                }
                if target == AtomicKind::UntypedAtomic {
                    return Ok(AtomicValue::UntypedAtomic(Arc::from(self.lexical())));
                }
                cast_non_string(self, target)
            }
        }
    }

    /// Function-conversion promotion: untypedAtomic is cast, numerics widen
    /// along byte, short, integer, long, decimal, float, double, and matching
    /// kinds pass through unchanged. Anything else is a type error.
    pub fn promote(&self, target: AtomicKind) -> Result<AtomicValue> {
        let kind = self.kind();
        if kind == target {
            return Ok(self.clone());
        }
        if kind == AtomicKind::UntypedAtomic {
            return self.cast(target);
        }
        if kind.is_numeric()
            && target.is_numeric()
            && kind.numeric_rank() < target.numeric_rank()
        {
            return cast_non_string(self, target);
        }
        if kind == AtomicKind::QName && target == AtomicKind::String {
            return self.cast(target);
        }
        Err(Error::type_err(format!(
            "cannot promote {} to {}",
            kind.name(),
            target.name()
        )))
    }

    /// Numeric type shared by two operands under the promotion ladder.
    pub fn common_numeric_kind(a: AtomicKind, b: AtomicKind) -> AtomicKind {
        let k = if a.numeric_rank() >= b.numeric_rank() { a } else { b };
        if k.is_integer() {
            AtomicKind::Integer
        } else {
            k
        }
    }
}

fn invalid(text: &str, target: AtomicKind) -> Error {
    Error::dynamic(format!(
        "invalid lexical value {:?} for {}",
        text,
        target.name()
    ))
}

fn parse_double(text: &str) -> Option<f64> {
    match text {
        "INF" | "+INF" => Some(f64::INFINITY),
        "-INF" => Some(f64::NEG_INFINITY),
        "NaN" => Some(f64::NAN),
        _ => {
            let ok = !text.is_empty()
                && text
                    .bytes()
                    .all(|c| c.is_ascii_digit() || matches!(c, b'.' | b'e' | b'E' | b'+' | b'-'));
            if ok {
                text.parse().ok()
            } else {
                None
            }
        }
    }
}

fn parse_integer(text: &str) -> Option<i64> {
    let digits = text.strip_prefix(['+', '-']).unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) {
        return None;
    }
    text.strip_prefix('+').unwrap_or(text).parse().ok()
}

fn from_lexical(raw: &str, target: AtomicKind) -> Result<AtomicValue> {
    let text = raw.trim();
    let bad = || invalid(raw, target);
    Ok(match target {
        AtomicKind::String => AtomicValue::String(Arc::from(raw)),
        AtomicKind::UntypedAtomic => AtomicValue::UntypedAtomic(Arc::from(raw)),
        AtomicKind::QName => AtomicValue::QName(Arc::from(text)),
        AtomicKind::Boolean => match text {
            "true" | "1" => AtomicValue::Boolean(true),
            "false" | "0" => AtomicValue::Boolean(false),
            _ => return Err(bad()),
        },
        AtomicKind::Integer => AtomicValue::Integer(parse_integer(text).ok_or_else(bad)?),
        AtomicKind::Long => AtomicValue::Long(parse_integer(text).ok_or_else(bad)?),
        AtomicKind::Short => AtomicValue::Short(
            parse_integer(text)
                .and_then(|v| i16::try_from(v).ok())
                .ok_or_else(bad)?,
        ),
        AtomicKind::Byte => AtomicValue::Byte(
            parse_integer(text)
                .and_then(|v| i8::try_from(v).ok())
                .ok_or_else(bad)?,
        ),
        AtomicKind::Decimal => AtomicValue::Decimal(Decimal::parse(text).ok_or_else(bad)?),
        AtomicKind::Double => AtomicValue::Double(parse_double(text).ok_or_else(bad)?),
        AtomicKind::Float => AtomicValue::Float(parse_double(text).ok_or_else(bad)? as f32),
        AtomicKind::DateTime => AtomicValue::DateTime(DateTime::parse(text).ok_or_else(bad)?),
        AtomicKind::Date => AtomicValue::Date(Date::parse(text).ok_or_else(bad)?),
        AtomicKind::Time => AtomicValue::Time(Time::parse(text).ok_or_else(bad)?),
        AtomicKind::Duration => AtomicValue::Duration(Duration::parse(text).ok_or_else(bad)?),
        AtomicKind::Binary => {
            if !text.len().is_multiple_of(2) {
                return Err(bad());
            }
            let mut bytes = Vec::with_capacity(text.len() / 2);
            for pair in text.as_bytes().chunks(2) {
                let hex = std::str::from_utf8(pair).map_err(|_| bad())?;
                bytes.push(u8::from_str_radix(hex, 16).map_err(|_| bad())?);
            }
            AtomicValue::Binary(Arc::from(bytes))
        }
    })
}

fn integer_target(v: i64, target: AtomicKind) -> Result<AtomicValue> {
    let overflow = || Error::dynamic(format!("{} out of range for {}", v, target.name()));
    Ok(match target {
        AtomicKind::Integer => AtomicValue::Integer(v),
        AtomicKind::Long => AtomicValue::Long(v),
        AtomicKind::Short => AtomicValue::Short(i16::try_from(v).map_err(|_| overflow())?),
        AtomicKind::Byte => AtomicValue::Byte(i8::try_from(v).map_err(|_| overflow())?),
        _ => unreachable!("integer_target called with {:?}", target),
    })
}

fn cast_non_string(v: &AtomicValue, target: AtomicKind) -> Result<AtomicValue> {
    let kind = v.kind();
    let type_error = || {
        Error::type_err(format!(
            "cannot cast {} to {}",
            kind.name(),
            target.name()
        ))
    };
    if kind.is_numeric() {
        return match target {
            AtomicKind::Double => Ok(AtomicValue::Double(v.as_f64().unwrap())),
            AtomicKind::Float => Ok(AtomicValue::Float(v.as_f64().unwrap() as f32)),
            AtomicKind::Decimal => match v {
                AtomicValue::Double(_) | AtomicValue::Float(_) => {
                    Decimal::from_f64(v.as_f64().unwrap())
                        .map(AtomicValue::Decimal)
                        .ok_or_else(|| Error::dynamic("non-finite value cast to decimal"))
                }
                _ => Ok(AtomicValue::Decimal(v.as_decimal().unwrap())),
            },
            t if t.is_integer() => {
                let i = match v {
                    AtomicValue::Double(_) | AtomicValue::Float(_) => {
                        let f = v.as_f64().unwrap();
                        if !f.is_finite() || f.abs() >= 9.2e18 {
                            return Err(Error::dynamic("value out of integer range"));
                        }
                        f.trunc() as i64
                    }
                    AtomicValue::Decimal(d) => d
                        .trunc_i64()
                        .ok_or_else(|| Error::dynamic("value out of integer range"))?,
                    other => other.as_i64().unwrap(),
                };
                integer_target(i, t)
            }
            AtomicKind::Boolean => Ok(AtomicValue::Boolean({
                let f = v.as_f64().unwrap();
                f != 0.0 && !f.is_nan()
            })),
            _ => Err(type_error()),
        };
    }
    match (v, target) {
        (AtomicValue::Boolean(b), t) if t.is_numeric() => {
            let n = *b as i64;
            match t {
                AtomicKind::Double => Ok(AtomicValue::Double(n as f64)),
                AtomicKind::Float => Ok(AtomicValue::Float(n as f32)),
                AtomicKind::Decimal => Ok(AtomicValue::Decimal(Decimal::from_i64(n))),
                t => integer_target(n, t),
            }
        }
        (AtomicValue::DateTime(dt), AtomicKind::Date) => Ok(AtomicValue::Date(Date::from_datetime(*dt))),
        (AtomicValue::DateTime(dt), AtomicKind::Time) => Ok(AtomicValue::Time(Time::from_datetime(*dt))),
        (AtomicValue::Date(d), AtomicKind::DateTime) => Ok(AtomicValue::DateTime(DateTime::from_date(*d))),
        _ => Err(type_error()),
    }
}

/// Canonical form of a double: plain decimal notation for magnitudes in
/// [1e-6, 1e6), otherwise a mantissa with at least one fractional digit and
/// an `E` exponent.
pub fn format_double(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "INF".into() } else { "-INF".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let a = v.abs();
    if (1e-6..1e6).contains(&a) {
        return format!("{}", v);
    }
    exponent_form(format!("{:E}", v))
}

pub fn format_float(v: f32) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "INF".into() } else { "-INF".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let a = v.abs();
    if (1e-6..1e6).contains(&a) {
        return format!("{}", v);
    }
    exponent_form(format!("{:E}", v))
}

fn exponent_form(s: String) -> String {
    match s.find('E') {
        Some(i) if !s[..i].contains('.') => format!("{}.0{}", &s[..i], &s[i..]),
        _ => s,
    }
}

impl fmt::Display for AtomicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomicValue::Boolean(b) => write!(f, "{}", b),
            AtomicValue::Byte(v) => write!(f, "{}", v),
            AtomicValue::Short(v) => write!(f, "{}", v),
            AtomicValue::Integer(v) | AtomicValue::Long(v) => write!(f, "{}", v),
            AtomicValue::Double(v) => f.write_str(&format_double(*v)),
            AtomicValue::Float(v) => f.write_str(&format_float(*v)),
            AtomicValue::String(s) | AtomicValue::UntypedAtomic(s) | AtomicValue::QName(s) => {
                f.write_str(s)
            }
            AtomicValue::Binary(b) => {
                for byte in b.iter() {
                    write!(f, "{:02X}", byte)?;
                }
                Ok(())
            }
            AtomicValue::Decimal(d) => write!(f, "{}", d),
            AtomicValue::Date(d) => write!(f, "{}", d),
            AtomicValue::DateTime(d) => write!(f, "{}", d),
            AtomicValue::Time(t) => write!(f, "{}", t),
            AtomicValue::Duration(d) => write!(f, "{}", d),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untyped_promotes_by_lexical_rules() {
        let v = AtomicValue::untyped("491.744");
        assert_eq!(
            v.promote(AtomicKind::Decimal).unwrap(),
            AtomicValue::Decimal(Decimal::parse("491.744").unwrap())
        );
        assert_eq!(
            AtomicValue::untyped("2005").promote(AtomicKind::Integer).unwrap(),
            AtomicValue::Integer(2005)
        );
        assert!(matches!(
            AtomicValue::untyped("abc").promote(AtomicKind::Integer),
            Err(Error::Dynamic(_))
        ));
    }

    #[test]
    fn promotion_is_identity_on_matching_kind() {
        let a = AtomicValue::string("a");
        assert_eq!(a.promote(AtomicKind::String).unwrap(), a);
    }

    #[test]
    fn numeric_widening_only_goes_up() {
        assert_eq!(
            AtomicValue::Byte(3).promote(AtomicKind::Double).unwrap(),
            AtomicValue::Double(3.0)
        );
        assert_eq!(
            AtomicValue::Integer(3).promote(AtomicKind::Decimal).unwrap(),
            AtomicValue::Decimal(Decimal::from_i64(3))
        );
        assert!(AtomicValue::Double(3.0).promote(AtomicKind::Integer).is_err());
    }

    #[test]
    fn impossible_promotion_is_a_type_error() {
        let dt = AtomicValue::DateTime(DateTime::parse("2000-01-01T00:00:00").unwrap());
        assert!(matches!(dt.promote(AtomicKind::Integer), Err(Error::Type(_))));
        assert!(matches!(
            AtomicValue::string("1").promote(AtomicKind::Integer),
            Err(Error::Type(_))
        ));
    }

    #[test]
    fn double_lexical_forms() {
        assert_eq!(format_double(41.2), "41.2");
        assert_eq!(format_double(412.0), "412");
        assert_eq!(format_double(1e6), "1.0E6");
        assert_eq!(format_double(1.5e-7), "1.5E-7");
        assert_eq!(format_double(-0.0), "-0");
        assert_eq!(format_double(f64::NEG_INFINITY), "-INF");
    }

    #[test]
    fn casts_between_kinds() {
        assert_eq!(
            AtomicValue::Double(2.7).cast(AtomicKind::Integer).unwrap(),
            AtomicValue::Integer(2)
        );
        assert_eq!(
            AtomicValue::Integer(7).cast(AtomicKind::String).unwrap(),
            AtomicValue::string("7")
        );
        assert_eq!(
            AtomicValue::untyped("0A1b").cast(AtomicKind::Binary).unwrap().to_string(),
            "0A1B"
        );
        assert!(AtomicValue::untyped(" 12 ").cast(AtomicKind::Short).is_ok());
        assert!(AtomicValue::untyped("300").cast(AtomicKind::Byte).is_err());
    }
}
