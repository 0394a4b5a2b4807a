//! Brute-force recomputation of the profit metrics for differential tests.
//!
//! Deliberately shares nothing with the ledger or metrics code: pool value
//! is a running sum and the owner's share comes from counting LP units.

use crate::ledger::{DexOrder, OrderCategory, PoolRecord};
use crate::metrics::{ProfitReport, ProfitTakingEvent, FIRST_MONTH_SECONDS};

struct LpUnits {
    owner: f64,
    total: f64,
}

impl LpUnits {
    fn share(&self) -> f64 {
        if self.total > 0.0 {
            self.owner / self.total
        } else {
            0.0
        }
    }

    /// Mints or burns units in proportion to the value moved.
    fn apply(&mut self, deposit: bool, is_owner: bool, value: f64, before: f64) {
        let after = if deposit { before + value } else { before - value };
        if deposit && before <= 0.0 {
            self.total = value;
            self.owner = if is_owner { value } else { 0.0 };
            return;
        }
        if after <= 1e-9 * before || after <= 0.0 {
            return;
        }
        let units = self.total * value / before;
        let signed = if deposit { units } else { -units };
        self.total += signed;
        if is_owner {
            self.owner += signed;
        }
    }
}

fn leg_usd(o: &DexOrder) -> f64 {
    o.y_base.to_f64() * o.price_base
}

/// Owner share after each order, from LP-unit counting.
pub fn lp_unit_shares(orders: &[DexOrder], owner: &str) -> Vec<f64> {
    let mut units = LpUnits { owner: 0.0, total: 0.0 };
    let mut value = 0.0f64;
    let mut out = Vec::with_capacity(orders.len());
    for o in orders {
        let v = leg_usd(o);
        match o.category {
            OrderCategory::Deposit => {
                units.apply(true, o.sender == owner, v, value);
                value += v;
            }
            OrderCategory::Withdraw => {
                units.apply(false, o.sender == owner, v, value);
                value -= v;
            }
            OrderCategory::Buy => value += v,
            OrderCategory::Sell => value -= v,
        }
        value = value.max(0.0);
        out.push(units.share());
    }
    out
}

pub fn oracle_report(orders: &[DexOrder], pool: &PoolRecord) -> ProfitReport {
    oracle_report_with(orders, pool, FIRST_MONTH_SECONDS)
}

pub fn oracle_report_with(orders: &[DexOrder], pool: &PoolRecord, first_month_seconds: i64) -> ProfitReport {
    let owner = pool.owner_address.as_str();
    let month_end = pool.created_time_pool + first_month_seconds;
    let shares = lp_unit_shares(orders, owner);

    let mut r = ProfitReport { gas_usd: pool.deployment_gas_usd, ..ProfitReport::default() };
    let mut value = 0.0f64;
    for (i, o) in orders.iter().enumerate() {
        let v = leg_usd(o);
        let before = value;
        let inflow = matches!(o.category, OrderCategory::Buy | OrderCategory::Deposit);
        value = if inflow { value + v } else { (value - v).max(0.0) };
        if o.timestamp <= month_end {
            r.unrealized_first_month_usd = value * shares[i];
        }
        if o.sender != owner {
            continue;
        }
        r.owner_activity_count += 1;
        r.gas_usd += o.gas_fee_usd;
        if inflow {
            r.invested_usd += v;
        } else {
            r.returned_usd += v;
            r.profit_taking.push(ProfitTakingEvent {
                order_index: i as u64,
                timestamp: o.timestamp,
                kind: o.category,
                value_usd: v,
                pool_value_before_usd: before,
                impact: if before > 0.0 { v / before } else { f64::INFINITY },
            });
        }
    }
    r.realized_profit_usd = r.returned_usd - r.invested_usd - r.gas_usd;
    r.unrealized_current_usd = value * shares.last().copied().unwrap_or(0.0);
    r.profit_taking_count = r.profit_taking.len();
    let finite: Vec<f64> = r.profit_taking.iter().map(|e| e.impact).filter(|i| i.is_finite()).collect();
    r.max_impact = finite.iter().copied().fold(0.0, f64::max);
    r.min_impact = if finite.is_empty() { 0.0 } else { finite.iter().copied().fold(f64::INFINITY, f64::min) };
    r
}
