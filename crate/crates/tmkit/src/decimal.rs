//! Exact fixed-point numbers with two fractional digits.
//!
//! Every number in a model file (money, seconds) is a [`Decimal`]: an `i64`
//! count of hundredths. Addition and subtraction never round, so replaying a
//! scenario reproduces balances bit for bit: `(a + b) - b == a` always, and
//! `0.10 + 0.20 == 0.30` exactly.

use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Decimal(i64);

impl Decimal {
    pub const ZERO: Decimal = Decimal(0);

    /// Builds a value from a raw count of hundredths.
    pub const fn from_hundredths(n: i64) -> Decimal {
        Decimal(n)
    }

    pub const fn from_int(n: i64) -> Decimal {
        Decimal(n * 100)
    }

    pub const fn hundredths(self) -> i64 {
        self.0
    }

    pub fn checked_add(self, other: Decimal) -> Option<Decimal> {
        self.0.checked_add(other.0).map(Decimal)
    }

    pub fn checked_sub(self, other: Decimal) -> Option<Decimal> {
        self.0.checked_sub(other.0).map(Decimal)
    }

    pub fn checked_neg(self) -> Option<Decimal> {
        self.0.checked_neg().map(Decimal)
    }

    pub const fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Renders without trailing fractional zeros: `120.00` -> "120",
    /// `0.50` -> "0.5", `1.25` -> "1.25". Used in DSL output and diagram
    /// labels; record files always use the full two-digit [`fmt::Display`].
    pub fn compact(self) -> String {
        let full = self.to_string();
        let trimmed = full.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{}{}.{:02}", sign, abs / 100, abs % 100)
    }
}

impl fmt::Debug for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseDecimalError {
    #[error("empty number")]
    Empty,
    #[error("invalid digit in number")]
    InvalidDigit,
    #[error("numbers carry at most two fractional digits")]
    TooPrecise,
    #[error("number out of range")]
    Overflow,
}

impl FromStr for Decimal {
    type Err = ParseDecimalError;

    fn from_str(s: &str) -> Result<Decimal, ParseDecimalError> {
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        if body.is_empty() {
            return Err(ParseDecimalError::Empty);
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() || frac_part.len() > 2 {
            return Err(if frac_part.len() > 2 {
                ParseDecimalError::TooPrecise
            } else {
                ParseDecimalError::InvalidDigit
            });
        }
        if body.contains('.') && frac_part.is_empty() {
            return Err(ParseDecimalError::InvalidDigit);
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(ParseDecimalError::InvalidDigit);
        }
        let int: i64 = int_part
            .parse()
            .map_err(|_| ParseDecimalError::Overflow)?;
        let frac: i64 = match frac_part.len() {
            0 => 0,
            1 => frac_part.parse::<i64>().unwrap() * 10,
            _ => frac_part.parse().unwrap(),
        };
        let magnitude = int
            .checked_mul(100)
            .and_then(|v| v.checked_add(frac))
            .ok_or(ParseDecimalError::Overflow)?;
        Ok(Decimal(if neg { -magnitude } else { magnitude }))
    }
}
