//! Exact rational quantities and their rendering.
//!
//! Every energy, power and time value inside the toolkit is a [`Q`]
//! (arbitrary precision fraction). Floating point only shows up when a
//! value is rendered for humans.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// Arbitrary precision rational.
pub type Q = BigRational;

/// Picoseconds per nanosecond.
pub const PS_PER_NS: u64 = 1_000;
/// Picoseconds per second.
pub const PS_PER_S: u64 = 1_000_000_000_000;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_u64(n: u64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn pow10(exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), exp as usize)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid decimal literal `{0}`")]
pub struct DecimalError(pub String);

/// Parses a plain decimal literal (`3.3`, `-0.25`, `87`, `1e-3`) exactly.
pub fn parse_decimal(text: &str) -> Result<Q, DecimalError> {
    let err = || DecimalError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..].parse().map_err(|_| err())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((a, b)) => (a, b),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let joined = format!("{int_part}{frac_part}");
    let numer: BigInt = if joined.is_empty() {
        BigInt::zero()
    } else {
        joined.parse().map_err(|_| err())?
    };
    let mut value = Q::new(numer, pow10(frac_part.len() as u32));
    if exponent >= 0 {
        value *= Q::from_integer(pow10(exponent as u32));
    } else {
        value /= Q::from_integer(pow10(exponent.unsigned_abs()));
    }
    Ok(if negative { -value } else { value })
}

/// Rounds to the nearest integer, ties to even.
pub fn round_half_even(value: &Q) -> BigInt {
    let floor = value.floor();
    let frac = value - &floor;
    let half = ratio(1, 2);
    let base = floor.to_integer();
    // ties go to the even neighbour
    if frac > half || (frac == half && base.is_odd()) {
        base + 1
    } else {
        base
    }
}

/// Decimal exponent `k` with `10^k <= |value| < 10^(k+1)`. `value` must be nonzero.
fn decimal_exponent(value: &Q) -> i32 {
    let abs = value.abs();
    let ten = q(10);
    let mut k = 0i32;
    let mut scaled = abs.clone();
    while scaled >= ten {
        scaled /= &ten;
        k += 1;
    }
    while scaled < Q::one() {
        scaled *= &ten;
        k -= 1;
    }
    k
}

/// Renders `mantissa * 10^-frac_digits` as a plain decimal string.
fn render_scaled(mantissa: &BigInt, frac_digits: u32) -> String {
    let negative = mantissa.is_negative();
    let digits = mantissa.abs().to_string();
    let body = if frac_digits == 0 {
        digits
    } else {
        let width = frac_digits as usize + 1;
        let padded = format!("{digits:0>width$}");
        let split = padded.len() - frac_digits as usize;
        format!("{}.{}", &padded[..split], &padded[split..])
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn strip_trailing_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

/// Rounds `value` to `sig` significant figures (ties to even) and renders it
/// without trailing zeros, the way the published result tables print
/// (`0.3`, `1.11`, `336.9`).
pub fn format_sig(value: &Q, sig: u32) -> String {
    assert!(sig > 0, "need at least one significant figure");
    if value.is_zero() {
        return "0".to_string();
    }
    let mut k = decimal_exponent(value);
    loop {
        let shift = sig as i32 - 1 - k;
        let scaled = if shift >= 0 {
            value * Q::from_integer(pow10(shift as u32))
        } else {
            value / Q::from_integer(pow10(shift.unsigned_abs()))
        };
        let rounded = round_half_even(&scaled);
        // carry into a new digit (e.g. 9.996 -> 10.00): redo with larger exponent
        if rounded.abs() >= pow10(sig) {
            k += 1;
            continue;
        }
        let rendered = if shift >= 0 {
            render_scaled(&rounded, shift as u32)
        } else {
            (rounded * pow10(shift.unsigned_abs())).to_string()
        };
        return strip_trailing_zeros(rendered);
    }
}

/// Exact decimal rendering when the denominator only has factors 2 and 5,
/// otherwise `numer/denom`.
pub fn format_exact(value: &Q) -> String {
    let denom = value.denom().clone();
    let mut rest = denom.clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&rest % &two).is_zero() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let digits = twos.max(fives);
    let scaled = value * Q::from_integer(pow10(digits));
    strip_trailing_zeros(render_scaled(&scaled.to_integer(), digits))
}

/// Lossy conversion for plotting and logs only.
pub fn to_f64(value: &Q) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Joules rendered in microjoules at `sig` significant figures.
pub fn micro(value: &Q) -> Q {
    value * q(1_000_000)
}

/// A quantity tagged with its unit, for display.
pub struct Display<'a> {
    pub value: &'a Q,
    pub sig: u32,
    pub unit: &'static str,
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", format_sig(self.value, self.sig), self.unit)
    }
}
