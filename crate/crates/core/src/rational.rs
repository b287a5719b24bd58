//! Exact rational numbers used for privacy parameters and credits.
//!
//! Noise scales in every mechanism are rational multiples of a user supplied
//! epsilon (`eps / 2`, `eps / 4`, `eps / bound`), so keeping them as ratios
//! makes budget arithmetic exact. The textual form is `"num/den"` or a plain
//! decimal such as `"0.7"`.

use std::str::FromStr;

use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = num_rational::Rational64;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot parse {input:?} as a rational number")]
pub struct ParseRationalError {
    pub input: String,
}

/// Parses `"3"`, `"-7/10"`, or `"0.25"` into an exact rational.
pub fn parse_rational(input: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError { input: input.to_string() };
    let s = input.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = i64::from_str(num.trim()).map_err(|_| err())?;
        let den = i64::from_str(den.trim()).map_err(|_| err())?;
        if den == 0 {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.trim_start().starts_with('-');
        let int_part = if int.is_empty() || int == "-" || int == "+" {
            0
        } else {
            i64::from_str(int).map_err(|_| err())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return Err(err());
        }
        let den = 10i64.pow(frac.len() as u32);
        let frac_num = i64::from_str(frac).map_err(|_| err())?;
        let whole = int_part.checked_mul(den).ok_or_else(err)?;
        let num = if negative { whole - frac_num } else { whole + frac_num };
        return Ok(Rational::new(num, den));
    }
    i64::from_str(s).map(Rational::from_integer).map_err(|_| err())
}

/// Canonical `"num/den"` rendering (always with a denominator).
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `max(r, 0)`; credits are never negative even when a mechanism is handed
/// a nonpositive epsilon.
pub fn clamp_nonneg(r: Rational) -> Rational {
    if r < Rational::zero() {
        Rational::zero()
    } else {
        r
    }
}

/// Serde adapter storing a [`Rational`] as a `"num/den"` string.
pub mod serde_str {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rational(&raw).map_err(D::Error::custom)
    }
}
