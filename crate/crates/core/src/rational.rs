//! Exact rational helpers shared by the market model, the wire formats and
//! the reports.
//!
//! Two textual forms exist:
//! - *exact* form: the minimal decimal expansion when the value terminates,
//!   otherwise `numerator/denominator` (used for reserves on disk);
//! - *fraction* form: always `numerator/denominator`, e.g. `4/1` (used for
//!   prices on the wire so consumers can parse one shape).

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact arbitrary-precision rational.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRationalError {
    input: String,
}

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid exact number {:?}", self.input)
    }
}

impl std::error::Error for ParseRationalError {}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// `10^exp` as a rational.
pub fn pow10(exp: u32) -> Rational {
    Rational::from_integer(BigInt::from(10u32).pow(exp))
}

/// Parses `"123"`, `"-0.5"`, `"20000.000000000000000001"` or `"1/3"`
/// without ever passing through binary floating point.
pub fn parse_rational(input: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        input: input.to_string(),
    };
    let s = input.trim();
    if s.is_empty() || s != input {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let numer = parse_integer(n).ok_or_else(err)?;
        let denom = parse_unsigned(d).ok_or_else(err)?;
        if denom.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(numer, denom));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    let digits_ok = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    if !digits_ok(whole) || !digits_ok(frac) || (body.contains('.') && frac.is_empty()) {
        return Err(err());
    }
    let mut all = String::with_capacity(whole.len() + frac.len());
    all.push_str(whole);
    all.push_str(frac);
    let magnitude = BigInt::parse_bytes(all.as_bytes(), 10).ok_or_else(err)?;
    let scale = BigInt::from(10u32).pow(frac.len() as u32);
    let value = Rational::new(magnitude, scale);
    Ok(if negative { -value } else { value })
}

fn parse_unsigned(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigInt::parse_bytes(s.as_bytes(), 10)
}

fn parse_integer(s: &str) -> Option<BigInt> {
    match s.strip_prefix('-') {
        Some(rest) => parse_unsigned(rest).map(|v| -v),
        None => parse_unsigned(s),
    }
}

/// Number of decimal digits after the point if `value` terminates in base 10.
fn terminating_scale(value: &Rational) -> Option<u32> {
    let mut d: BigUint = value.denom().magnitude().clone();
    let two = BigUint::from(2u32);
    let five = BigUint::from(5u32);
    let (mut twos, mut fives) = (0u32, 0u32);
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    d.is_one().then_some(twos.max(fives))
}

fn render_scaled(value: &Rational, scale: u32) -> String {
    let scaled = value * pow10(scale);
    debug_assert!(scaled.is_integer());
    let n = scaled.to_integer();
    let negative = n.sign() == Sign::Minus;
    let digits = n.magnitude().to_str_radix(10);
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    let scale = scale as usize;
    if scale == 0 {
        out.push_str(&digits);
        return out;
    }
    let padded = if digits.len() <= scale {
        format!("{}{}", "0".repeat(scale + 1 - digits.len()), digits)
    } else {
        digits
    };
    let split = padded.len() - scale;
    out.push_str(&padded[..split]);
    let frac = padded[split..].trim_end_matches('0');
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    out
}

/// Minimal exact decimal when the expansion terminates, else `n/d`.
pub fn format_exact(value: &Rational) -> String {
    match terminating_scale(value) {
        Some(scale) => render_scaled(value, scale),
        None => format_fraction(value),
    }
}

/// Always `numerator/denominator` in lowest terms.
pub fn format_fraction(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Decimal rendering for humans: exact when it terminates, otherwise rounded
/// half away from zero to `max_frac_digits` places.
pub fn format_decimal(value: &Rational, max_frac_digits: u32) -> String {
    if let Some(scale) = terminating_scale(value) {
        if scale <= max_frac_digits {
            return render_scaled(value, scale);
        }
    }
    let factor = pow10(max_frac_digits);
    let scaled = value * &factor;
    let half = ratio(1, 2);
    let rounded = if scaled.is_negative() {
        -((-scaled) + &half).floor()
    } else {
        (scaled + half).floor()
    };
    render_scaled(&(rounded / factor), max_frac_digits)
}

/// Nearest `f64`; tiny nonzero magnitudes never collapse to exactly zero.
pub fn to_f64(value: &Rational) -> f64 {
    if value.is_zero() {
        return 0.0;
    }
    let approx = value.to_f64().unwrap_or_else(|| {
        if value.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    });
    if approx == 0.0 {
        if value.is_negative() {
            -f64::MIN_POSITIVE
        } else {
            f64::MIN_POSITIVE
        }
    } else {
        approx
    }
}

/// Exact conversion of a finite `f64` (dyadic rational).
pub fn from_f64(value: f64) -> Option<Rational> {
    Rational::from_float(value)
}

/// Rounds a non-negative value down onto the grid `quantum·ℤ`.
pub fn floor_to_quantum(value: &Rational, quantum: &Rational) -> Rational {
    (value / quantum).floor() * quantum
}

/// Smallest rational of the form `s / 10^digits` that is `>= sqrt(value)`.
/// Returns the exact root when `value` is a ratio of perfect squares.
pub fn sqrt_upper(value: &Rational, digits: u32) -> Rational {
    assert!(!value.is_negative(), "square root of a negative rational");
    let numer = value.numer().magnitude();
    let denom = value.denom().magnitude();
    let (rn, rd) = (numer.sqrt(), denom.sqrt());
    if &(&rn * &rn) == numer && &(&rd * &rd) == denom {
        return Rational::new(BigInt::from(rn), BigInt::from(rd));
    }
    let scale = BigUint::from(10u32).pow(2 * digits);
    let target = (numer * scale).div_ceil(denom);
    let mut root = target.sqrt();
    if &root * &root < target {
        root += 1u32;
    }
    Rational::new(BigInt::from(root), BigInt::from(10u32).pow(digits))
}

/// Serde adapter: rationals travel as exact strings.
pub mod serde_exact {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_exact(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rational(&raw).map_err(de::Error::custom)
    }
}
