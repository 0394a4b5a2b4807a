use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::amount::TokenAmount;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dex {
    Uniswap,
    SushiSwap,
    Balancer,
    Curve,
    PancakeSwap,
    BancorSwap,
    Synthetic,
}

/// Static identity of a liquidity pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolRecord {
    pub pool_address: String,
    pub base_address: String,
    pub paired_address: String,
    pub owner_address: String,
    pub created_time_pool: i64,
    pub created_time_token: i64,
    pub dex: Dex,
    pub name: String,
    /// Whether the owner burned the initial LP tokens.
    pub lpt_burned: bool,
    #[serde(default)]
    pub deployment_gas_usd: f64,
}

impl PoolRecord {
    /// Checks the record-level invariants.
    pub fn validate(&self) -> Result<(), String> {
        if self.created_time_token > self.created_time_pool {
            return Err(format!(
                "pool {}: token created after pool ({} > {})",
                self.pool_address, self.created_time_token, self.created_time_pool
            ));
        }
        if self.base_address == self.paired_address {
            return Err(format!("pool {}: base and paired token are the same", self.pool_address));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OrderCategory {
    Buy,
    Sell,
    Deposit,
    Withdraw,
}

impl OrderCategory {
    pub const ALL: [OrderCategory; 4] =
        [OrderCategory::Buy, OrderCategory::Sell, OrderCategory::Deposit, OrderCategory::Withdraw];

    /// Base tokens flow into the pool for buys and deposits.
    pub fn is_inflow(self) -> bool {
        matches!(self, OrderCategory::Buy | OrderCategory::Deposit)
    }

    pub fn is_swap(self) -> bool {
        matches!(self, OrderCategory::Buy | OrderCategory::Sell)
    }

    pub fn is_liquidity(self) -> bool {
        !self.is_swap()
    }

    /// Sells and withdrawals are the owner's profit-taking kinds.
    pub fn is_profit_taking(self) -> bool {
        !self.is_inflow()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OrderCategory::Buy => "Buy",
            OrderCategory::Sell => "Sell",
            OrderCategory::Deposit => "Deposit",
            OrderCategory::Withdraw => "Withdraw",
        }
    }
}

impl fmt::Display for OrderCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OrderCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "buy" => Ok(OrderCategory::Buy),
            "sell" => Ok(OrderCategory::Sell),
            "deposit" => Ok(OrderCategory::Deposit),
            "withdraw" => Ok(OrderCategory::Withdraw),
            other => Err(format!("unknown order category '{other}'")),
        }
    }
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// One timestamped DEX activity against a pool.
///
/// `x_*` are the pool balances after the order (optional: reconstructed on
/// replay when absent), `y_*` the unsigned amounts moved. Direction comes
/// from `category`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DexOrder {
    pub block: u64,
    pub timestamp: i64,
    pub hash: String,
    pub category: OrderCategory,
    pub pool_address: String,
    pub sender: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_paired: Option<TokenAmount>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_base: Option<TokenAmount>,
    pub y_paired: TokenAmount,
    pub y_base: TokenAmount,
    pub price_paired: f64,
    pub price_base: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gas_fee_usd: f64,
}

impl DexOrder {
    /// USD value of the base-token leg.
    pub fn base_value_usd(&self) -> f64 {
        self.y_base.to_f64() * self.price_base
    }

    /// Base-token USD value signed by flow direction into the pool.
    pub fn signed_value_usd(&self) -> f64 {
        let v = self.base_value_usd();
        if self.category.is_inflow() {
            v
        } else {
            -v
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.price_base > 0.0) || !self.price_base.is_finite() {
            return Err(format!("order {}: price_base must be > 0", self.hash));
        }
        if !(self.price_paired >= 0.0) || !self.price_paired.is_finite() {
            return Err(format!("order {}: price_paired must be >= 0", self.hash));
        }
        if !(self.gas_fee_usd >= 0.0) || !self.gas_fee_usd.is_finite() {
            return Err(format!("order {}: gas_fee_usd must be >= 0", self.hash));
        }
        Ok(())
    }

    /// Stable replay order: `(timestamp, block, hash)`.
    pub fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.timestamp
            .cmp(&other.timestamp)
            .then(self.block.cmp(&other.block))
            .then_with(|| self.hash.cmp(&other.hash))
    }
}

/// Sorts a pool's orders by `(timestamp, block, hash)`.
pub fn sort_orders(orders: &mut [DexOrder]) {
    orders.sort_by(|a, b| a.sort_key_cmp(b));
}
