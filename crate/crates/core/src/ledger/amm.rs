//! Constant-product (`paired × base = k`) reserve math.
//!
//! [`Reserves`] is generic over [`ReserveNum`]: `BigRational` keeps the
//! product exact, `f64` trades exactness for speed on bulk replays. The
//! integer helpers at the bottom floor the output the way on-chain pairs do
//! and are what the scenario generator uses to emit integral balances.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::amount::TokenAmount;

use super::LedgerError;

pub trait ReserveNum: Clone + Debug + PartialOrd + Send + Sync {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    /// `None` when the result leaves the representable range.
    fn mul(&self, other: &Self) -> Option<Self>;
    /// Caller guarantees a non-zero divisor.
    fn div(&self, other: &Self) -> Self;
    fn from_amount(amount: &TokenAmount) -> Self;
    fn to_f64(&self) -> f64;
}

impl ReserveNum for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_negative(&self) -> bool {
        *self < 0.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Option<Self> {
        let p = self * other;
        p.is_finite().then_some(p)
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn from_amount(amount: &TokenAmount) -> Self {
        amount.to_f64()
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl ReserveNum for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Option<Self> {
        Some(self * other)
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn from_amount(amount: &TokenAmount) -> Self {
        amount.to_ratio()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Builds an exact rational from an integer pair.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapDirection {
    /// Base token in, paired token out.
    BuyPaired,
    /// Paired token in, base token out.
    SellPaired,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reserves<N> {
    pub paired: N,
    pub base: N,
}

impl<N: ReserveNum> Reserves<N> {
    pub fn new(paired: N, base: N) -> Self {
        Self { paired, base }
    }

    pub fn zero() -> Self {
        Self { paired: N::zero(), base: N::zero() }
    }

    pub fn product(&self) -> Result<N, LedgerError> {
        self.paired.mul(&self.base).ok_or(LedgerError::Overflow)
    }

    /// Quotes a swap against invariant `k` and returns `(amount_out, reserves')`.
    ///
    /// `amount_out = reserve_out − k / (reserve_in + amount_in)`.
    pub fn swap_with_k(
        &self,
        k: &N,
        direction: SwapDirection,
        amount_in: &N,
    ) -> Result<(N, Reserves<N>), LedgerError> {
        if self.paired.is_zero() || self.base.is_zero() || k.is_zero() {
            return Err(LedgerError::ZeroReserve);
        }
        if amount_in.is_zero() || amount_in.is_negative() {
            return Err(LedgerError::InvalidAmount(format!("{amount_in:?}")));
        }
        let (reserve_in, reserve_out) = match direction {
            SwapDirection::BuyPaired => (&self.base, &self.paired),
            SwapDirection::SellPaired => (&self.paired, &self.base),
        };
        let new_in = reserve_in.add(amount_in);
        if new_in.to_f64().is_infinite() {
            return Err(LedgerError::Overflow);
        }
        let new_out = k.div(&new_in);
        let amount_out = reserve_out.sub(&new_out);
        let next = match direction {
            SwapDirection::BuyPaired => Reserves { paired: new_out, base: new_in },
            SwapDirection::SellPaired => Reserves { paired: new_in, base: new_out },
        };
        Ok((amount_out, next))
    }

    pub fn swap(&self, direction: SwapDirection, amount_in: &N) -> Result<(N, Reserves<N>), LedgerError> {
        let k = self.product()?;
        self.swap_with_k(&k, direction, amount_in)
    }
}

/// Floored constant-product output for integral reserves.
pub fn quote_out_floor(reserve_in: u128, reserve_out: u128, amount_in: u128) -> Result<u128, LedgerError> {
    if reserve_in == 0 || reserve_out == 0 {
        return Err(LedgerError::ZeroReserve);
    }
    if amount_in == 0 {
        return Err(LedgerError::InvalidAmount("0".into()));
    }
    let numer = reserve_out.checked_mul(amount_in).ok_or(LedgerError::Overflow)?;
    let denom = reserve_in.checked_add(amount_in).ok_or(LedgerError::Overflow)?;
    Ok(numer / denom)
}

/// Smallest integral input whose floored output is at least `amount_out`.
pub fn quote_in_ceil(reserve_in: u128, reserve_out: u128, amount_out: u128) -> Result<u128, LedgerError> {
    if reserve_in == 0 || reserve_out == 0 {
        return Err(LedgerError::ZeroReserve);
    }
    if amount_out == 0 || amount_out >= reserve_out {
        return Err(LedgerError::InvalidAmount(amount_out.to_string()));
    }
    let numer = reserve_in.checked_mul(amount_out).ok_or(LedgerError::Overflow)?;
    let denom = reserve_out - amount_out;
    Ok(numer.div_ceil(denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(p: i64, b: i64) -> Reserves<BigRational> {
        Reserves::new(ratio(p, 1), ratio(b, 1))
    }

    #[test]
    fn buy_then_sell_returns_to_start() {
        let start = exact(100, 100);
        let (out, mid) = start.swap(SwapDirection::BuyPaired, &ratio(100, 1)).unwrap();
        assert_eq!(out, ratio(50, 1));
        assert_eq!(mid, exact(50, 200));
        let (back, end) = mid.swap(SwapDirection::SellPaired, &ratio(50, 1)).unwrap();
        assert_eq!(back, ratio(100, 1));
        assert_eq!(end, start);
    }

    #[test]
    fn zero_reserve_and_amount_errors() {
        let empty = Reserves::new(0.0, 10.0);
        assert_eq!(empty.swap(SwapDirection::BuyPaired, &1.0), Err(LedgerError::ZeroReserve));
        let r = Reserves::new(10.0, 10.0);
        assert!(matches!(r.swap(SwapDirection::BuyPaired, &0.0), Err(LedgerError::InvalidAmount(_))));
        let huge = Reserves::new(f64::MAX, f64::MAX);
        assert_eq!(huge.swap(SwapDirection::BuyPaired, &1.0), Err(LedgerError::Overflow));
    }

    #[test]
    fn floor_quotes_never_shrink_k() {
        let (rin, rout) = (1_000_003u128, 777_777u128);
        for amount in [1u128, 17, 999, 250_000, 5_000_000] {
            let out = quote_out_floor(rin, rout, amount).unwrap();
            assert!((rin + amount) * (rout - out) >= rin * rout);
            let back_in = quote_in_ceil(rin, rout, out.max(1)).unwrap();
            assert!(back_in <= amount || out == 0);
            assert!(quote_out_floor(rin, rout, back_in).unwrap() >= out.max(1));
        }
        assert_eq!(quote_out_floor(u128::MAX, u128::MAX, 2), Err(LedgerError::Overflow));
    }
}
