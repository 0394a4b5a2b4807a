//! Owner profit metrics over a replayed pool.
//!
//! Realized profit is the owner's base-token USD taken out (sells and
//! withdrawals) minus what they put in (buys, deposits) and gas. Unrealized
//! return is the owner's share of the pool value, `x^t × owner_share^t`,
//! snapshotted at the end of the first month. Each owner sell or withdrawal
//! becomes a [`ProfitTakingEvent`] whose impact is its USD size over the
//! pool value immediately before it.

use serde::{Deserialize, Serialize};

use crate::ledger::{DexOrder, FastLedger, LedgerError, LedgerState, OrderCategory, PoolRecord, ReserveNum};

pub const DAY_SECONDS: i64 = 86_400;
/// "First month" is 30 days from pool creation.
pub const FIRST_MONTH_SECONDS: i64 = 30 * DAY_SECONDS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitTakingEvent {
    pub order_index: u64,
    pub timestamp: i64,
    pub kind: OrderCategory,
    pub value_usd: f64,
    pub pool_value_before_usd: f64,
    /// `value_usd / pool_value_before_usd`; `+∞` when the pool was empty.
    pub impact: f64,
}

impl ProfitTakingEvent {
    /// False for the zero-pool sentinel, which aggregates skip.
    pub fn has_finite_impact(&self) -> bool {
        self.impact.is_finite()
    }
}

/// Aggregates over profit-taking impacts. Sentinel (infinite) impacts are
/// counted but excluded from min/max/avg.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImpactStats {
    pub count: u64,
    pub finite_count: u64,
    pub zero_pool_before: u64,
    pub max: Option<f64>,
    pub min: Option<f64>,
    pub sum: f64,
}

impl ImpactStats {
    pub fn push(&mut self, impact: f64) {
        self.count += 1;
        if !impact.is_finite() {
            self.zero_pool_before += 1;
            return;
        }
        self.finite_count += 1;
        self.sum += impact;
        self.max = Some(self.max.map_or(impact, |m| m.max(impact)));
        self.min = Some(self.min.map_or(impact, |m| m.min(impact)));
    }

    pub fn from_events(events: &[ProfitTakingEvent]) -> Self {
        let mut stats = Self::default();
        for e in events {
            stats.push(e.impact);
        }
        stats
    }

    pub fn mean(&self) -> Option<f64> {
        (self.finite_count > 0).then(|| self.sum / self.finite_count as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfitReport {
    pub realized_profit_usd: f64,
    pub invested_usd: f64,
    pub returned_usd: f64,
    pub gas_usd: f64,
    pub unrealized_first_month_usd: f64,
    pub unrealized_current_usd: f64,
    pub profit_taking: Vec<ProfitTakingEvent>,
    /// `count(withdrawals) + count(sells)`.
    pub profit_taking_count: usize,
    /// Largest finite impact, 0 without events.
    pub max_impact: f64,
    /// Smallest finite impact, 0 without events.
    pub min_impact: f64,
    /// Owner DEX activities of any kind.
    #[serde(default)]
    pub owner_activity_count: u64,
}

impl ProfitReport {
    pub fn impact_stats(&self) -> ImpactStats {
        ImpactStats::from_events(&self.profit_taking)
    }
}

/// Constant-size view of a pool's metrics, produced by streaming replay.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfitSummary {
    pub realized_profit_usd: f64,
    pub invested_usd: f64,
    pub returned_usd: f64,
    pub gas_usd: f64,
    pub unrealized_first_month_usd: f64,
    pub unrealized_current_usd: f64,
    pub impacts: ImpactStats,
    /// Owner DEX activities of any kind.
    pub owner_activity_count: u64,
    pub order_count: u64,
}

impl From<&ProfitReport> for ProfitSummary {
    fn from(r: &ProfitReport) -> Self {
        Self {
            realized_profit_usd: r.realized_profit_usd,
            invested_usd: r.invested_usd,
            returned_usd: r.returned_usd,
            gas_usd: r.gas_usd,
            unrealized_first_month_usd: r.unrealized_first_month_usd,
            unrealized_current_usd: r.unrealized_current_usd,
            impacts: r.impact_stats(),
            owner_activity_count: r.owner_activity_count,
            order_count: 0,
        }
    }
}

/// Realized-profit fields over owner-only orders.
///
/// `deployment_gas_usd` is added to the per-order gas. Other fields stay zero.
pub fn realized_profit(owner_orders: &[DexOrder], deployment_gas_usd: f64) -> ProfitReport {
    let mut invested = 0.0;
    let mut returned = 0.0;
    let mut gas = deployment_gas_usd;
    for o in owner_orders {
        if o.category.is_inflow() {
            invested += o.base_value_usd();
        } else {
            returned += o.base_value_usd();
        }
        gas += o.gas_fee_usd;
    }
    ProfitReport {
        realized_profit_usd: returned - invested - gas,
        invested_usd: invested,
        returned_usd: returned,
        gas_usd: gas,
        ..ProfitReport::default()
    }
}

/// Owner's unrealized return, `x^t × owner_share^t`.
///
/// Callers label it profit only when realized profit at that time is ≥ 0.
pub fn unrealized_profit<N: ReserveNum>(state: &LedgerState<N>) -> f64 {
    state.pool_value_usd * state.owner_share
}

/// Incremental per-pool replay shared by the batch and streaming paths.
#[derive(Debug, Clone)]
pub struct PoolReplay {
    owner: String,
    first_month_end: i64,
    ledger: FastLedger,
    invested: f64,
    returned: f64,
    gas: f64,
    unrealized_1m: Option<f64>,
    impacts: ImpactStats,
    events: Option<Vec<ProfitTakingEvent>>,
    owner_activity_count: u64,
}

impl PoolReplay {
    /// `keep_events` retains every event; otherwise only aggregates are kept.
    pub fn new(pool: &PoolRecord, first_month_seconds: i64, keep_events: bool) -> Self {
        let mut ledger = FastLedger::streaming(pool.pool_address.clone());
        ledger.record_series = keep_events;
        Self {
            owner: pool.owner_address.clone(),
            first_month_end: pool.created_time_pool + first_month_seconds,
            ledger,
            invested: 0.0,
            returned: 0.0,
            gas: pool.deployment_gas_usd,
            unrealized_1m: None,
            impacts: ImpactStats::default(),
            events: keep_events.then(Vec::new),
            owner_activity_count: 0,
        }
    }

    pub fn ledger(&self) -> &FastLedger {
        &self.ledger
    }

    pub fn push(&mut self, order: &DexOrder) -> Result<(), LedgerError> {
        if self.unrealized_1m.is_none() && order.timestamp > self.first_month_end {
            self.unrealized_1m = Some(unrealized_profit(&self.ledger));
        }
        let is_owner = order.sender == self.owner;
        let before = self.ledger.pool_value_usd;
        let index = self.ledger.order_index;
        self.ledger.apply_order(order, is_owner)?;
        if !is_owner {
            return Ok(());
        }
        self.owner_activity_count += 1;
        self.gas += order.gas_fee_usd;
        let value = order.base_value_usd();
        if order.category.is_inflow() {
            self.invested += value;
            return Ok(());
        }
        self.returned += value;
        let impact = if before > 0.0 { value / before } else { f64::INFINITY };
        self.impacts.push(impact);
        if let Some(events) = self.events.as_mut() {
            events.push(ProfitTakingEvent {
                order_index: index,
                timestamp: order.timestamp,
                kind: order.category,
                value_usd: value,
                pool_value_before_usd: before,
                impact,
            });
        }
        Ok(())
    }

    pub fn summary(&self) -> ProfitSummary {
        let current = unrealized_profit(&self.ledger);
        ProfitSummary {
            realized_profit_usd: self.returned - self.invested - self.gas,
            invested_usd: self.invested,
            returned_usd: self.returned,
            gas_usd: self.gas,
            unrealized_first_month_usd: self.unrealized_1m.unwrap_or(current),
            unrealized_current_usd: current,
            impacts: self.impacts,
            owner_activity_count: self.owner_activity_count,
            order_count: self.ledger.order_index,
        }
    }

    pub fn into_report(self) -> (ProfitReport, FastLedger) {
        let s = self.summary();
        let events = self.events.unwrap_or_default();
        let report = ProfitReport {
            realized_profit_usd: s.realized_profit_usd,
            invested_usd: s.invested_usd,
            returned_usd: s.returned_usd,
            gas_usd: s.gas_usd,
            unrealized_first_month_usd: s.unrealized_first_month_usd,
            unrealized_current_usd: s.unrealized_current_usd,
            profit_taking_count: events.len(),
            profit_taking: events,
            max_impact: s.impacts.max.unwrap_or(0.0),
            min_impact: s.impacts.min.unwrap_or(0.0),
            owner_activity_count: s.owner_activity_count,
        };
        (report, self.ledger)
    }
}

/// Full profit report over a pool's sorted order history.
pub fn profit_report(
    pool: &PoolRecord,
    orders: &[DexOrder],
    first_month_seconds: i64,
) -> Result<(ProfitReport, FastLedger), LedgerError> {
    let mut replay = PoolReplay::new(pool, first_month_seconds, true);
    for o in orders {
        replay.push(o)?;
    }
    Ok(replay.into_report())
}

/// One event per owner sell/withdrawal, in replay order.
pub fn impact_series(orders: &[DexOrder], owner: &str) -> Result<Vec<ProfitTakingEvent>, LedgerError> {
    let mut ledger = FastLedger::streaming(String::new());
    let mut events = Vec::new();
    for order in orders {
        let before = ledger.pool_value_usd;
        let index = ledger.order_index;
        let is_owner = order.sender == owner;
        ledger.apply_order(order, is_owner)?;
        if is_owner && order.category.is_profit_taking() {
            let value = order.base_value_usd();
            events.push(ProfitTakingEvent {
                order_index: index,
                timestamp: order.timestamp,
                kind: order.category,
                value_usd: value,
                pool_value_before_usd: before,
                impact: if before > 0.0 { value / before } else { f64::INFINITY },
            });
        }
    }
    Ok(events)
}

/// Orders sent by `owner`.
pub fn owner_orders<'a>(orders: &'a [DexOrder], owner: &'a str) -> impl Iterator<Item = &'a DexOrder> + 'a {
    orders.iter().filter(move |o| o.sender == owner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{order, pool};
    use OrderCategory::*;

    #[test]
    fn realized_deposit_only() {
        let mut dep = order(0, Deposit, "owner", "1", "100");
        dep.gas_fee_usd = 1.0;
        let r = realized_profit(&[dep], 0.0);
        assert_eq!(r.realized_profit_usd, -101.0);
    }

    #[test]
    fn realized_mixed_matches_hand_sum() {
        let mut orders = vec![
            order(0, Deposit, "owner", "1", "100"),
            order(1, Buy, "owner", "1", "20"),
            order(2, Sell, "owner", "1", "60"),
            order(3, Sell, "owner", "1", "70"),
            order(4, Withdraw, "owner", "1", "30"),
        ];
        orders[0].gas_fee_usd = 5.0;
        let r = realized_profit(&orders, 0.0);
        // (60 + 70 + 30) − (20 + 100 + 5)
        assert_eq!(r.returned_usd, 160.0);
        assert_eq!(r.invested_usd + r.gas_usd, 125.0);
        assert_eq!(r.realized_profit_usd, 35.0);
        assert_eq!(r.realized_profit_usd, r.returned_usd - r.invested_usd - r.gas_usd);
    }

    #[test]
    fn sell_buy_gap_of_reference_pool() {
        let orders = vec![order(0, Sell, "owner", "1", "1400000"), order(1, Buy, "owner", "1", "783000")];
        let r = realized_profit(&orders, 0.0);
        assert_eq!(r.realized_profit_usd, 617_000.0);
    }

    #[test]
    fn unrealized_is_value_times_share() {
        let mut s = FastLedger::new("p");
        s.apply_order(&order(0, Deposit, "owner", "1", "100"), true).unwrap();
        s.apply_order(&order(1, Deposit, "u", "1", "100"), false).unwrap();
        assert_eq!(unrealized_profit(&s), 100.0);
        s.apply_order(&order(2, Withdraw, "u", "1", "100"), false).unwrap();
        s.apply_order(&order(3, Withdraw, "owner", "1", "100"), true).unwrap();
        assert_eq!(unrealized_profit(&s), 0.0);
    }

    #[test]
    fn impact_examples() {
        let orders = vec![
            order(0, Deposit, "owner", "10", "1000"),
            order(1, Sell, "owner", "1", "50"),
            order(2, Buy, "u", "1", "50"),
            order(3, Withdraw, "owner", "10", "1000"),
        ];
        let events = impact_series(&orders, "owner").unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].impact, 0.05);
        assert_eq!(events[0].pool_value_before_usd, 1000.0);
        assert_eq!(events[1].impact, 1.0);
        assert_eq!(events[1].kind, Withdraw);
    }

    #[test]
    fn empty_pool_impact_is_sentinel() {
        let orders = vec![order(0, Sell, "owner", "1", "0")];
        let events = impact_series(&orders, "owner").unwrap();
        assert!(events[0].impact.is_infinite());
        let stats = ImpactStats::from_events(&events);
        assert_eq!(stats.count, 1);
        assert_eq!(stats.max, None);
    }

    #[test]
    fn report_snapshots_first_month() {
        let p = pool("owner", 0);
        let day = DAY_SECONDS;
        let orders = vec![
            order(0, Deposit, "owner", "10", "100"),
            order(5 * day, Buy, "u", "1", "100"),
            order(30 * day, Sell, "owner", "1", "50"),
            order(31 * day, Buy, "u", "1", "350"),
        ];
        let (r, ledger) = profit_report(&p, &orders, FIRST_MONTH_SECONDS).unwrap();
        assert_eq!(r.unrealized_first_month_usd, 150.0);
        assert_eq!(r.unrealized_current_usd, 500.0);
        assert_eq!(r.profit_taking_count, 1);
        assert_eq!(r.max_impact, 0.25);
        assert_eq!(r.realized_profit_usd, -50.0);
        assert_eq!(ledger.order_index, 4);
    }

    #[test]
    fn no_exits_means_non_positive_realized() {
        let p = pool("owner", 0);
        let orders = vec![order(0, Deposit, "owner", "10", "100"), order(1, Buy, "owner", "1", "5")];
        let (r, _) = profit_report(&p, &orders, FIRST_MONTH_SECONDS).unwrap();
        assert_eq!(r.realized_profit_usd, -105.0);
        assert!(r.profit_taking.is_empty());
    }
}
