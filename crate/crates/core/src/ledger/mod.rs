//! Constant-product pool ledger.
//!
//! [`LedgerState`] replays a pool's ordered DEX activity and tracks the
//! base-token pool value in USD, the owner's liquidity share, reserves and
//! cumulative flow counters. Pool value follows signed base-token flows:
//! buys and deposits add `y_base × price_base`, sells and withdrawals remove
//! it. Only deposits and withdrawals touch the shares:
//!
//! ```text
//! owner_share' = owner_share · x_prev / x + (owner ? y / x : 0)
//! ```
//!
//! Non-owner liquidity is aggregated into a single residual share, so the
//! two shares always sum to one once the pool has been seeded.

pub mod amm;
pub mod types;

use num_rational::BigRational;
use thiserror::Error;

use crate::amount::TokenAmount;
pub use amm::{ReserveNum, Reserves, SwapDirection};
pub use types::{sort_orders, Dex, DexOrder, OrderCategory, PoolRecord};

/// Relative tolerance for recorded vs reconstructed balances.
pub const BALANCE_MISMATCH_TOLERANCE: f64 = 1e-6;
/// Relative tolerance used for floating-point pool-value and share checks.
pub const VALUE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LedgerError {
    #[error("swap against a zero reserve")]
    ZeroReserve,
    #[error("reserve product exceeds representable range")]
    Overflow,
    #[error("invalid amount {0}")]
    InvalidAmount(String),
    #[error("order at {got} precedes last applied timestamp {last}")]
    NonMonotonicTime { last: i64, got: i64 },
    #[error("order for pool {got} applied to ledger of pool {expected}")]
    PoolMismatch { expected: String, got: String },
    #[error("pool value would become {value} (inconsistent input)")]
    NegativePoolValue { value: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

/// Data-quality counters raised during replay. None of these abort replay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LedgerWarnings {
    pub balance_mismatch: u64,
    pub negative_reserve: u64,
    pub share_clamped: u64,
    pub drained_updates: u64,
}

impl LedgerWarnings {
    pub fn total(&self) -> u64 {
        self.balance_mismatch + self.negative_reserve + self.share_clamped + self.drained_updates
    }
}

/// Evolving pool state. `N` picks exact (`BigRational`) or fast (`f64`) reserve math.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerState<N = BigRational> {
    pub pool_address: String,
    /// Base-token pool value in USD (x / B^t).
    pub pool_value_usd: f64,
    pub owner_share: f64,
    /// Aggregate share of every non-owner liquidity provider.
    pub residual_share: f64,
    pub reserves: Reserves<N>,
    pub k: N,
    /// Paired units bought by non-owners (X^t).
    pub cum_user_buys: f64,
    /// Paired units sold by non-owners (Y^t).
    pub cum_user_sells: f64,
    /// USD withdrawn by the owner (W^t).
    pub cum_owner_withdrawn_usd: f64,
    pub order_index: u64,
    pub last_timestamp: Option<i64>,
    pub price_series: Vec<(i64, f64)>,
    pub volume_series: Vec<(i64, f64)>,
    pub record_series: bool,
    /// Set while the pool value is zero after a liquidity update.
    pub drained: bool,
    pub warnings: LedgerWarnings,
}

pub type ExactLedger = LedgerState<BigRational>;
pub type FastLedger = LedgerState<f64>;

impl<N: ReserveNum> LedgerState<N> {
    pub fn new(pool_address: impl Into<String>) -> Self {
        Self {
            pool_address: pool_address.into(),
            pool_value_usd: 0.0,
            owner_share: 0.0,
            residual_share: 0.0,
            reserves: Reserves::zero(),
            k: N::zero(),
            cum_user_buys: 0.0,
            cum_user_sells: 0.0,
            cum_owner_withdrawn_usd: 0.0,
            order_index: 0,
            last_timestamp: None,
            price_series: Vec::new(),
            volume_series: Vec::new(),
            record_series: true,
            drained: false,
            warnings: LedgerWarnings::default(),
        }
    }

    /// Ledger that keeps no per-order series (constant memory per order).
    pub fn streaming(pool_address: impl Into<String>) -> Self {
        Self { record_series: false, ..Self::new(pool_address) }
    }

    /// Seeds a ledger directly from reserves, e.g. for swap-only simulations.
    pub fn with_reserves(pool_address: impl Into<String>, paired: N, base: N) -> Result<Self, LedgerError> {
        let reserves = Reserves::new(paired, base);
        let k = reserves.product()?;
        Ok(Self { reserves, k, ..Self::new(pool_address) })
    }

    /// Pool value implied by the base reserve at a given base-token price.
    pub fn balance_value_usd(&self, price_base: f64) -> f64 {
        self.reserves.base.to_f64() * price_base
    }

    /// Relative deviation of the current reserve product from `k`.
    pub fn k_deviation(&self) -> f64 {
        let k = self.k.to_f64();
        match self.reserves.product() {
            Ok(p) if k != 0.0 => ((p.to_f64() - k) / k).abs(),
            Ok(p) => p.to_f64().abs(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Quotes a swap on the reserves without touching USD metrics.
    pub fn swap_quote(&self, direction: SwapDirection, amount_in: &N) -> Result<(N, Self), LedgerError> {
        let (out, reserves) = self.reserves.swap_with_k(&self.k, direction, amount_in)?;
        let mut next = self.clone();
        next.reserves = reserves;
        Ok((out, next))
    }

    fn value_tolerance(prev: f64, flow: f64) -> f64 {
        (VALUE_TOLERANCE * prev.abs().max(flow.abs())).max(1e-12)
    }

    /// Applies one order. On error the state is unchanged.
    pub fn apply_order(&mut self, order: &DexOrder, is_owner: bool) -> Result<(), LedgerError> {
        if !self.pool_address.is_empty() && order.pool_address != self.pool_address {
            return Err(LedgerError::PoolMismatch {
                expected: self.pool_address.clone(),
                got: order.pool_address.clone(),
            });
        }
        if let Some(last) = self.last_timestamp {
            if order.timestamp < last {
                return Err(LedgerError::NonMonotonicTime { last, got: order.timestamp });
            }
        }

        let flow = order.signed_value_usd();
        let prev = self.pool_value_usd;
        let mut value = prev + flow;
        if value < 0.0 {
            if value < -Self::value_tolerance(prev, flow) {
                return Err(LedgerError::NegativePoolValue { value });
            }
            value = 0.0;
        }

        if order.category.is_liquidity() {
            self.update_shares(prev, value, flow, is_owner);
        } else if value == 0.0 {
            self.drained = true;
        }
        self.pool_value_usd = value;

        self.update_reserves(order);

        match (order.category, is_owner) {
            (OrderCategory::Buy, false) => self.cum_user_buys += order.y_paired.to_f64(),
            (OrderCategory::Sell, false) => self.cum_user_sells += order.y_paired.to_f64(),
            (OrderCategory::Withdraw, true) => self.cum_owner_withdrawn_usd += flow.abs(),
            _ => {}
        }

        if self.record_series {
            self.price_series.push((order.timestamp, order.price_paired));
            if order.category.is_swap() {
                self.volume_series.push((order.timestamp, flow.abs()));
            }
        }
        self.order_index += 1;
        self.last_timestamp = Some(order.timestamp);
        Ok(())
    }

    fn update_shares(&mut self, prev: f64, value: f64, flow: f64, is_owner: bool) {
        // Eq-6 divides by the new pool value; a fully drained pool keeps its last shares.
        if value <= VALUE_TOLERANCE * prev.abs() || value == 0.0 {
            self.drained = true;
            self.warnings.drained_updates += 1;
            return;
        }
        self.drained = false;
        let scale = prev / value;
        let mut owner = self.owner_share * scale;
        let mut residual = self.residual_share * scale;
        if is_owner {
            owner += flow / value;
        } else {
            residual += flow / value;
        }
        self.owner_share = self.clamp_share(owner);
        self.residual_share = self.clamp_share(residual);
    }

    fn clamp_share(&mut self, share: f64) -> f64 {
        if !(-VALUE_TOLERANCE..=1.0 + VALUE_TOLERANCE).contains(&share) {
            self.warnings.share_clamped += 1;
        }
        share.clamp(0.0, 1.0)
    }

    fn update_reserves(&mut self, order: &DexOrder) {
        let y_paired = N::from_amount(&order.y_paired);
        let y_base = N::from_amount(&order.y_base);
        let r = &self.reserves;
        let (paired, base) = match order.category {
            OrderCategory::Buy => (r.paired.sub(&y_paired), r.base.add(&y_base)),
            OrderCategory::Sell => (r.paired.add(&y_paired), r.base.sub(&y_base)),
            OrderCategory::Deposit => (r.paired.add(&y_paired), r.base.add(&y_base)),
            OrderCategory::Withdraw => (r.paired.sub(&y_paired), r.base.sub(&y_base)),
        };
        let paired = self.settle_balance(paired, order.x_paired.as_ref());
        let base = self.settle_balance(base, order.x_base.as_ref());
        self.reserves = Reserves { paired, base };
        if order.category.is_liquidity() {
            if let Ok(k) = self.reserves.product() {
                self.k = k;
            }
        }
    }

    /// Trusts a recorded balance when present, flagging drift from the reconstruction.
    fn settle_balance(&mut self, reconstructed: N, recorded: Option<&TokenAmount>) -> N {
        match recorded {
            Some(amount) => {
                let rec = amount.to_f64();
                let rebuilt = reconstructed.to_f64();
                let scale = rec.abs().max(rebuilt.abs());
                if scale > 0.0 && (rec - rebuilt).abs() > BALANCE_MISMATCH_TOLERANCE * scale {
                    self.warnings.balance_mismatch += 1;
                }
                N::from_amount(amount)
            }
            None if reconstructed.is_negative() => {
                self.warnings.negative_reserve += 1;
                N::zero()
            }
            None => reconstructed,
        }
    }

    /// Replays `orders` attributing ownership by `owner`.
    pub fn replay<'a>(
        &mut self,
        orders: impl IntoIterator<Item = &'a DexOrder>,
        owner: &str,
    ) -> Result<(), LedgerError> {
        for order in orders {
            self.apply_order(order, order.sender == owner)?;
        }
        Ok(())
    }
}

/// Replays a pool's full order list from deployment.
pub fn replay_pool(pool: &PoolRecord, orders: &[DexOrder]) -> Result<ExactLedger, LedgerError> {
    let mut state = ExactLedger::new(pool.pool_address.clone());
    state.replay(orders, &pool.owner_address)?;
    Ok(state)
}

/// Replays orders with timestamp `<= at`.
pub fn replay_until<N: ReserveNum>(
    pool: &PoolRecord,
    orders: &[DexOrder],
    at: i64,
) -> Result<LedgerState<N>, LedgerError> {
    let mut state = LedgerState::<N>::new(pool.pool_address.clone());
    state.replay(orders.iter().take_while(|o| o.timestamp <= at), &pool.owner_address)?;
    Ok(state)
}

/// Checks that the owner's base reserve survives any investor round trip.
///
/// The scenario must open with the owner's deposit `(x, y)` followed only by
/// investor buys and sells. After every investor sells back what they still
/// hold, the base reserve must equal `y` (exact rational math; compared at
/// 1e-9 relative).
pub fn verify_owner_guarantee(scenario: &[DexOrder]) -> Result<bool, LedgerError> {
    let (first, rest) = scenario
        .split_first()
        .ok_or_else(|| LedgerError::PreconditionViolated("empty scenario".into()))?;
    if first.category != OrderCategory::Deposit {
        return Err(LedgerError::PreconditionViolated("scenario must open with the owner's deposit".into()));
    }
    let owner = &first.sender;
    let initial_base = first.y_base.to_ratio();
    let mut reserves = Reserves::new(first.y_paired.to_ratio(), initial_base.clone());
    let k = reserves.product()?;
    let mut investor_position = <BigRational as ReserveNum>::zero();

    for order in rest {
        if &order.sender == owner {
            return Err(LedgerError::PreconditionViolated(format!(
                "owner order {} after deployment",
                order.hash
            )));
        }
        match order.category {
            OrderCategory::Buy => {
                let (out, next) = reserves.swap_with_k(&k, SwapDirection::BuyPaired, &order.y_base.to_ratio())?;
                investor_position = ReserveNum::add(&investor_position, &out);
                reserves = next;
            }
            OrderCategory::Sell => {
                let amount = order.y_paired.to_ratio();
                if amount > investor_position {
                    return Err(LedgerError::PreconditionViolated(format!(
                        "investors sell more paired tokens than acquired at {}",
                        order.hash
                    )));
                }
                let (_, next) = reserves.swap_with_k(&k, SwapDirection::SellPaired, &amount)?;
                investor_position = ReserveNum::sub(&investor_position, &amount);
                reserves = next;
            }
            other => {
                return Err(LedgerError::PreconditionViolated(format!(
                    "{other} orders are outside the round-trip model"
                )))
            }
        }
    }
    if !ReserveNum::is_zero(&investor_position) {
        let (_, next) = reserves.swap_with_k(&k, SwapDirection::SellPaired, &investor_position)?;
        reserves = next;
    }
    let diff = ReserveNum::sub(&reserves.base, &initial_base).to_f64().abs();
    Ok(diff <= VALUE_TOLERANCE * initial_base.to_f64().abs())
}
