//! Lossless decimal token amounts.
//!
//! Token quantities travel through the wire format as decimal strings. A
//! [`TokenAmount`] keeps the integer mantissa and the number of fractional
//! digits exactly as written, so ingest followed by re-emit reproduces the
//! original text.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest number of fractional digits accepted.
pub const MAX_SCALE: u8 = 36;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmountError {
    #[error("empty amount")]
    Empty,
    #[error("invalid decimal amount '{0}'")]
    Invalid(String),
    #[error("amount '{0}' exceeds 128-bit mantissa")]
    TooLarge(String),
    #[error("amount arithmetic overflowed")]
    Overflow,
    #[error("amount subtraction went negative")]
    Negative,
}

/// Non-negative decimal `mantissa / 10^scale`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenAmount {
    mantissa: u128,
    scale: u8,
}

fn pow10(scale: u8) -> u128 {
    10u128.pow(scale as u32)
}

impl TokenAmount {
    pub const ZERO: TokenAmount = TokenAmount { mantissa: 0, scale: 0 };

    pub fn from_units(mantissa: u128, scale: u8) -> Self {
        assert!(scale <= MAX_SCALE, "scale {scale} above {MAX_SCALE}");
        Self { mantissa, scale }
    }

    pub fn mantissa(&self) -> u128 {
        self.mantissa
    }

    pub fn scale(&self) -> u8 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0
    }

    pub fn to_f64(&self) -> f64 {
        if self.scale == 0 {
            self.mantissa as f64
        } else {
            self.mantissa as f64 / 10f64.powi(self.scale as i32)
        }
    }

    pub fn to_ratio(&self) -> BigRational {
        BigRational::new(BigInt::from(self.mantissa), BigInt::from(pow10(self.scale)))
    }

    /// Re-expresses the amount with `scale` fractional digits, if exact.
    pub fn rescale(&self, scale: u8) -> Result<Self, AmountError> {
        match scale.cmp(&self.scale) {
            Ordering::Equal => Ok(*self),
            Ordering::Greater => {
                let factor = pow10(scale - self.scale);
                let mantissa = self.mantissa.checked_mul(factor).ok_or(AmountError::Overflow)?;
                Ok(Self { mantissa, scale })
            }
            Ordering::Less => {
                let factor = pow10(self.scale - scale);
                if self.mantissa % factor != 0 {
                    return Err(AmountError::Invalid(self.to_string()));
                }
                Ok(Self { mantissa: self.mantissa / factor, scale })
            }
        }
    }

    fn aligned(&self, other: &Self) -> Result<(u128, u128, u8), AmountError> {
        let scale = self.scale.max(other.scale);
        Ok((self.rescale(scale)?.mantissa, other.rescale(scale)?.mantissa, scale))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, AmountError> {
        let (a, b, scale) = self.aligned(other)?;
        let mantissa = a.checked_add(b).ok_or(AmountError::Overflow)?;
        Ok(Self { mantissa, scale })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, AmountError> {
        let (a, b, scale) = self.aligned(other)?;
        let mantissa = a.checked_sub(b).ok_or(AmountError::Negative)?;
        Ok(Self { mantissa, scale })
    }
}

impl PartialEq for TokenAmount {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for TokenAmount {}

impl PartialOrd for TokenAmount {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TokenAmount {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.aligned(other) {
            Ok((a, b, _)) => a.cmp(&b),
            // Alignment only overflows for very different scales; fall back to rationals.
            Err(_) => self.to_ratio().cmp(&other.to_ratio()),
        }
    }
}

impl FromStr for TokenAmount {
    type Err = AmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(AmountError::Empty);
        }
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        let valid = !int_part.is_empty()
            && int_part.bytes().all(|b| b.is_ascii_digit())
            && frac_part.bytes().all(|b| b.is_ascii_digit())
            && !(s.contains('.') && frac_part.is_empty());
        if !valid {
            return Err(AmountError::Invalid(s.to_string()));
        }
        if frac_part.len() > MAX_SCALE as usize {
            return Err(AmountError::Invalid(s.to_string()));
        }
        let mut mantissa: u128 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            mantissa = mantissa
                .checked_mul(10)
                .and_then(|m| m.checked_add((b - b'0') as u128))
                .ok_or_else(|| AmountError::TooLarge(s.to_string()))?;
        }
        Ok(Self { mantissa, scale: frac_part.len() as u8 })
    }
}

impl fmt::Display for TokenAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let p = pow10(self.scale);
        write!(
            f,
            "{}.{:0width$}",
            self.mantissa / p,
            self.mantissa % p,
            width = self.scale as usize
        )
    }
}

impl Serialize for TokenAmount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

struct AmountVisitor;

impl Visitor<'_> for AmountVisitor {
    type Value = TokenAmount;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a non-negative decimal string")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<TokenAmount, E> {
        v.parse().map_err(E::custom)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<TokenAmount, E> {
        Ok(TokenAmount::from_units(v as u128, 0))
    }
}

impl<'de> Deserialize<'de> for TokenAmount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(AmountVisitor)
    }
}
