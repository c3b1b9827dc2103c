use std::fmt;

use num_bigint::BigInt;

/// Fixed-point decimal with 18 fractional digits, stored as a scaled `i128`.
/// Results that need more precision are rounded half-to-even.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Decimal(i128);

const FRAC_DIGITS: usize = 18;
const SCALE: i128 = 1_000_000_000_000_000_000;

impl Decimal {
    pub const ZERO: Decimal = Decimal(0);

    pub fn from_scaled(raw: i128) -> Self {
        Decimal(raw)
    }

    pub fn scaled(self) -> i128 {
        self.0
    }

    pub fn from_i64(v: i64) -> Self {
        Decimal(v as i128 * SCALE)
    }

    /// Converts a finite double, rounding to 18 fractional digits.
    pub fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        // Go through the shortest round-trip text so that 0.1 becomes 0.1
        // rather than its binary expansion.
        Decimal::parse(&format!("{}", v)).or_else(|| {
            let scaled = v * SCALE as f64;
            if scaled.abs() < i128::MAX as f64 {
                Some(Decimal(scaled.round() as i128))
            } else {
                None
            }
        })
    }

    /// Parses the xs:decimal lexical space: optional sign, digits, optional
    /// fraction. Surrounding whitespace is tolerated.
    pub fn parse(text: &str) -> Option<Self> {
        let s = text.trim();
        let (neg, body) = match s.as_bytes().first()? {
            b'-' => (true, &s[1..]),
            b'+' => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = match body.find('.') {
            Some(i) => (&body[..i], &body[i + 1..]),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return None;
        }
        let mut value: i128 = 0;
        for b in int_part.bytes() {
            value = value.checked_mul(10)?.checked_add((b - b'0') as i128)?;
        }
        value = value.checked_mul(SCALE)?;
        let mut frac: i128 = 0;
        let kept = frac_part.len().min(FRAC_DIGITS);
        for b in frac_part[..kept].bytes() {
            frac = frac * 10 + (b - b'0') as i128;
        }
        for _ in kept..FRAC_DIGITS {
            frac *= 10;
        }
        let mut raw = value.checked_add(frac)?;
        if frac_part.len() > FRAC_DIGITS {
            let rest = &frac_part[FRAC_DIGITS..];
            let first = rest.as_bytes()[0] - b'0';
            let tail_nonzero = rest[1..].bytes().any(|b| b != b'0');
            let round_up = first > 5 || (first == 5 && (tail_nonzero || raw % 2 != 0));
            if round_up {
                raw = raw.checked_add(1)?;
            }
        }
        Some(Decimal(if neg { -raw } else { raw }))
    }

    pub fn to_f64(self) -> f64 {
        // Parsing the canonical text gives a correctly rounded double.
        self.to_string().parse().unwrap_or(f64::NAN)
    }

    pub fn is_integral(self) -> bool {
        self.0 % SCALE == 0
    }

    /// Truncates toward zero.
    pub fn trunc_i64(self) -> Option<i64> {
        i64::try_from(self.0 / SCALE).ok()
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_neg(self) -> Option<Self> {
        self.0.checked_neg().map(Decimal)
    }

    pub fn checked_add(self, rhs: Self) -> Option<Self> {
        self.0.checked_add(rhs.0).map(Decimal)
    }

    pub fn checked_sub(self, rhs: Self) -> Option<Self> {
        self.0.checked_sub(rhs.0).map(Decimal)
    }

    pub fn checked_mul(self, rhs: Self) -> Option<Self> {
        let product = BigInt::from(self.0) * BigInt::from(rhs.0);
        let q = div_round_half_even(&product, &BigInt::from(SCALE));
        i128::try_from(q).ok().map(Decimal)
    }

    /// None on division by zero or overflow.
    pub fn checked_div(self, rhs: Self) -> Option<Self> {
        if rhs.0 == 0 {
            return None;
        }
        let num = BigInt::from(self.0) * BigInt::from(SCALE);
        let q = div_round_half_even(&num, &BigInt::from(rhs.0));
        i128::try_from(q).ok().map(Decimal)
    }
}

fn div_round_half_even(num: &BigInt, den: &BigInt) -> BigInt {
    let q = num / den;
    let r = num - &q * den;
    let zero = BigInt::from(0);
    if r == zero {
        return q;
    }
    let twice = (&r * 2i32).magnitude().clone();
    let den_mag = den.magnitude().clone();
    let negative = (num < &zero) != (den < &zero);
    let away = if twice > den_mag {
        true
    } else if twice == den_mag {
        &q % 2i32 != zero
    } else {
        false
    };
    if away {
        if negative {
            q - 1i32
        } else {
            q + 1i32
        }
    } else {
        q
    }
}

impl fmt::Display for Decimal {
    /// Canonical xs:decimal form: no exponent, no trailing fractional zeros,
    /// and no decimal point at all for integral values.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = self.0 < 0;
        let mag = self.0.unsigned_abs();
        let int_part = mag / SCALE as u128;
        let frac = mag % SCALE as u128;
        if neg {
            f.write_str("-")?;
        }
        write!(f, "{}", int_part)?;
        if frac != 0 {
            let digits = format!("{:018}", frac);
            write!(f, ".{}", digits.trim_end_matches('0'))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Decimal({})", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Decimal {
        Decimal::parse(s).unwrap()
    }

    #[test]
    fn parse_and_print() {
        assert_eq!(d("491.744").to_string(), "491.744");
        assert_eq!(d("2005").to_string(), "2005");
        assert_eq!(d("-0.50").to_string(), "-0.5");
        assert_eq!(d(".5").to_string(), "0.5");
        assert!(Decimal::parse("1e3").is_none());
        assert!(Decimal::parse(".").is_none());
    }

    #[test]
    fn rounds_half_even_past_18_digits() {
        assert_eq!(d("0.0000000000000000005"), d("0"));
        assert_eq!(d("0.0000000000000000015"), d("0.000000000000000002"));
        assert_eq!(d("0.00000000000000000051"), d("0.000000000000000001"));
    }

    #[test]
    fn arithmetic() {
        assert_eq!(d("1").checked_div(d("3")).unwrap().to_string(), "0.333333333333333333");
        assert_eq!(d("2").checked_div(d("3")).unwrap().to_string(), "0.666666666666666667");
        assert_eq!(d("1.5").checked_mul(d("-2")).unwrap(), d("-3"));
        assert!(d("1").checked_div(Decimal::ZERO).is_none());
        assert_eq!(d("0.1").checked_add(d("0.2")).unwrap(), d("0.3"));
    }

    #[test]
    fn float_conversion() {
        assert_eq!(Decimal::from_f64(0.1).unwrap(), d("0.1"));
        assert_eq!(d("41.2").to_f64(), 41.2);
    }
}
