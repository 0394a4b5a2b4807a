//! Age, owner profit-taking and user trend reports over a dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use super::ingest::Dataset;
use super::IoError;
use crate::metrics::DAY_SECONDS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisKind {
    Age,
    Profit,
    Trend,
}

impl FromStr for AnalysisKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "age" => Ok(AnalysisKind::Age),
            "profit" => Ok(AnalysisKind::Profit),
            "trend" => Ok(AnalysisKind::Trend),
            other => Err(format!("unknown report kind '{other}' (age, profit, trend)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AnalysisReport {
    /// Age in whole days → (pools, pools alive past the horizon).
    pub age_histogram: BTreeMap<u64, (u64, u64)>,
    /// Day since deployment → (owner exits, base-leg USD).
    pub daily_profit_taking: BTreeMap<i64, (u64, f64)>,
    /// Day since deployment → (non-owner orders, base-leg USD).
    pub daily_trend: BTreeMap<i64, (u64, f64)>,
}

impl AnalysisReport {
    pub fn pool_count(&self) -> u64 {
        self.age_histogram.values().map(|c| c.0).sum()
    }

    pub fn alive_fraction(&self) -> f64 {
        let n = self.pool_count();
        if n == 0 {
            return 0.0;
        }
        self.age_histogram.values().map(|c| c.1).sum::<u64>() as f64 / n as f64
    }

    /// Share of all profit-taking USD that lands on `day`.
    pub fn profit_share_on_day(&self, day: i64) -> f64 {
        let total: f64 = self.daily_profit_taking.values().map(|c| c.1).sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.daily_profit_taking.get(&day).map_or(0.0, |c| c.1) / total
    }
}

fn day_of(ts: i64, created: i64) -> i64 {
    (ts - created).div_euclid(DAY_SECONDS)
}

/// Runs one analysis over all pools, or only over `only` when given.
/// A pool is alive when its active span reaches `alive_horizon_seconds`.
pub fn analyze(
    ds: &Dataset,
    which: AnalysisKind,
    only: Option<&BTreeSet<String>>,
    alive_horizon_seconds: i64,
) -> AnalysisReport {
    let mut r = AnalysisReport::default();
    for pool in &ds.pools {
        if only.is_some_and(|s| !s.contains(&pool.pool_address)) {
            continue;
        }
        let orders = ds.orders_of(&pool.pool_address);
        match which {
            AnalysisKind::Age => {
                let age = match (orders.iter().map(|o| o.timestamp).min(), orders.iter().map(|o| o.timestamp).max()) {
                    (Some(lo), Some(hi)) => hi - lo,
                    _ => 0,
                };
                let slot = r.age_histogram.entry((age / DAY_SECONDS) as u64).or_default();
                slot.0 += 1;
                if age >= alive_horizon_seconds {
                    slot.1 += 1;
                }
            }
            AnalysisKind::Profit => {
                for o in orders.iter().filter(|o| o.sender == pool.owner_address && o.category.is_profit_taking()) {
                    let slot = r.daily_profit_taking.entry(day_of(o.timestamp, pool.created_time_pool)).or_default();
                    slot.0 += 1;
                    slot.1 += o.base_value_usd();
                }
            }
            AnalysisKind::Trend => {
                for o in orders.iter().filter(|o| o.sender != pool.owner_address) {
                    let slot = r.daily_trend.entry(day_of(o.timestamp, pool.created_time_pool)).or_default();
                    slot.0 += 1;
                    slot.1 += o.base_value_usd();
                }
            }
        }
    }
    r
}

pub fn write_report_csv<W: Write>(writer: W, report: &AnalysisReport, which: AnalysisKind) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    match which {
        AnalysisKind::Age => {
            w.write_record(["age_days", "count", "alive_count"])?;
            for (age, (n, alive)) in &report.age_histogram {
                w.write_record([age.to_string(), n.to_string(), alive.to_string()])?;
            }
        }
        AnalysisKind::Profit => {
            w.write_record(["day", "event_count", "realized_usd"])?;
            for (day, (n, usd)) in &report.daily_profit_taking {
                w.write_record([day.to_string(), n.to_string(), usd.to_string()])?;
            }
        }
        AnalysisKind::Trend => {
            w.write_record(["day", "user_activity_count", "volume_usd"])?;
            for (day, (n, usd)) in &report.daily_trend {
                w.write_record([day.to_string(), n.to_string(), usd.to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| IoError::File { path: "report".into(), source: e })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::OrderCategory;
    use crate::testutil::{order, pool};

    fn dataset(orders: Vec<crate::ledger::DexOrder>) -> Dataset {
        let mut ds = Dataset { pools: vec![pool("o", 0)], ..Dataset::default() };
        ds.orders.insert("p".into(), orders);
        ds
    }

    #[test]
    fn ninety_day_span_lands_in_bucket_ninety() {
        let ds = dataset(vec![
            order(100, OrderCategory::Deposit, "o", "1", "1"),
            order(100 + 90 * DAY_SECONDS, OrderCategory::Buy, "a", "1", "1"),
        ]);
        let r = analyze(&ds, AnalysisKind::Age, None, 30 * DAY_SECONDS);
        assert_eq!(r.age_histogram, BTreeMap::from([(90, (1, 1))]));
        assert_eq!(r.pool_count(), 1);
    }

    #[test]
    fn profit_and_trend_split_by_sender() {
        let ds = dataset(vec![
            order(0, OrderCategory::Deposit, "o", "1", "100"),
            order(10, OrderCategory::Buy, "a", "1", "40"),
            order(DAY_SECONDS + 5, OrderCategory::Sell, "o", "1", "30"),
            order(DAY_SECONDS + 6, OrderCategory::Withdraw, "o", "1", "10"),
        ]);
        let p = analyze(&ds, AnalysisKind::Profit, None, 0);
        assert_eq!(p.daily_profit_taking, BTreeMap::from([(1, (2, 40.0))]));
        assert_eq!(p.profit_share_on_day(1), 1.0);
        let t = analyze(&ds, AnalysisKind::Trend, None, 0);
        assert_eq!(t.daily_trend, BTreeMap::from([(0, (1, 40.0))]));
        let none = analyze(&ds, AnalysisKind::Trend, Some(&BTreeSet::new()), 0);
        assert!(none.daily_trend.is_empty());
    }
}
