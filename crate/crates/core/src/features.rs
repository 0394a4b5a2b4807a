//! Per-pool feature vectors over the first `d` days after deployment.
//!
//! Features fall into four groups: owner activity counts, user activity,
//! owner profit and impact figures, and pool-level daily volume and value.
//! Ratios with a zero denominator are replaced by a finite sentinel and
//! flagged as missing.

use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::ledger::{DexOrder, LedgerError, OrderCategory, PoolRecord};
use crate::metrics::{unrealized_profit, PoolReplay, DAY_SECONDS};

pub const FEATURE_COUNT: usize = 57;
/// Replacement for `x / 0` with `x ≠ 0`, signed like `x`.
pub const RATIO_CAP: f64 = 1e9;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    // owner activity
    "Owner_dep",
    "Owner_with",
    "Owner_buy",
    "Owner_sell",
    // user activity
    "User_dep",
    "User_with",
    "User_buy",
    "User_sell",
    "User_count",
    "User_countfirst",
    "User_counthigh",
    "User_countlast",
    "User_countlow",
    "RUser_firstonhigh",
    "RUser_lastonlow",
    "RUser_firstonlow",
    "RUser_firstonlast",
    "RUser_lastonhigh",
    "RUser_lowonhigh",
    // owner profit
    "Owner_i",
    "Owner_u",
    "Owner_r",
    "Owner_total",
    "ROwner_toni",
    "ROwner_roni",
    "ROwner_roi",
    "ROwner_uonr",
    "ROwner_uoni",
    "Impact_min",
    "Impact_max",
    "Impact_avg",
    "RImpact_minonavg",
    "RImpact_maxonavg",
    "RImpact_minonmax",
    "Owner_ptcount",
    // liquidity pool
    "Age",
    "IsAlive",
    "Vol_f",
    "Vol_l",
    "Vol_max",
    "Vol_min",
    "Pval_f",
    "Pval_l",
    "Pval_max",
    "Pval_min",
    "RVol_fonl",
    "RVol_fonmin",
    "RVol_fonmax",
    "RVol_lonmin",
    "RVol_lonmax",
    "RVol_minmax",
    "RPval_fonl",
    "RPval_fonmin",
    "RPval_fonmax",
    "RPval_lonmin",
    "RPval_lonmax",
    "RPval_minmax",
];

/// Index of a feature by canonical name.
pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

/// Indices of count-type features, which never decrease as the window grows.
pub fn count_feature_indices() -> Vec<usize> {
    ["Owner_dep", "Owner_with", "Owner_buy", "Owner_sell", "User_dep", "User_with", "User_buy", "User_sell"]
        .iter()
        .chain(&["User_count", "Owner_ptcount"])
        .filter_map(|n| feature_index(n))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub pool_address: String,
    pub window_days: u32,
    pub label: bool,
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
    /// No order fell inside the window.
    pub empty_history: bool,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }

    pub fn is_missing(&self, name: &str) -> Option<bool> {
        feature_index(name).map(|i| self.missing[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureOptions {
    pub first_month_seconds: i64,
    pub alive_horizon_seconds: i64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self { first_month_seconds: crate::metrics::FIRST_MONTH_SECONDS, alive_horizon_seconds: 30 * DAY_SECONDS }
    }
}

struct Builder {
    values: Vec<f64>,
    missing: Vec<bool>,
}

impl Builder {
    fn put(&mut self, v: f64) {
        self.values.push(v);
        self.missing.push(false);
    }

    fn ratio(&mut self, num: f64, den: f64) {
        if den != 0.0 {
            self.put(num / den);
            return;
        }
        let v = if num == 0.0 { 0.0 } else { RATIO_CAP.copysign(num) };
        self.values.push(v);
        self.missing.push(true);
    }

    fn ratio_opt(&mut self, num: Option<f64>, den: Option<f64>) {
        match (num, den) {
            (Some(n), Some(d)) => self.ratio(n, d),
            _ => {
                self.values.push(0.0);
                self.missing.push(true);
            }
        }
    }
}

#[derive(Default)]
struct DayBucket {
    users: HashSet<String>,
    volume: f64,
    pool_value_end: f64,
}

struct Extremes {
    first: f64,
    last: f64,
    max: f64,
    min: f64,
}

fn extremes(values: impl Iterator<Item = f64>) -> Option<Extremes> {
    let mut out: Option<Extremes> = None;
    for v in values {
        match out.as_mut() {
            None => out = Some(Extremes { first: v, last: v, max: v, min: v }),
            Some(e) => {
                e.last = v;
                e.max = e.max.max(v);
                e.min = e.min.min(v);
            }
        }
    }
    out
}

fn push_extreme_ratios(b: &mut Builder, e: &Option<Extremes>) {
    let pick = |f: fn(&Extremes) -> f64| e.as_ref().map(f);
    let (first, last, max, min) = (pick(|e| e.first), pick(|e| e.last), pick(|e| e.max), pick(|e| e.min));
    b.ratio_opt(first, last);
    b.ratio_opt(first, min);
    b.ratio_opt(first, max);
    b.ratio_opt(last, min);
    b.ratio_opt(last, max);
    b.ratio_opt(min, max);
}

pub fn extract_features(pool: &PoolRecord, orders: &[DexOrder], d: u32) -> Result<FeatureVector, LedgerError> {
    extract_features_with(pool, orders, d, &FeatureOptions::default())
}

/// Features over orders with `timestamp < created_time_pool + d·86400`.
pub fn extract_features_with(
    pool: &PoolRecord,
    orders: &[DexOrder],
    d: u32,
    opts: &FeatureOptions,
) -> Result<FeatureVector, LedgerError> {
    assert!(d >= 1, "window must cover at least one day");
    let start = pool.created_time_pool;
    let window_end = start + d as i64 * DAY_SECONDS;
    let owner = pool.owner_address.as_str();

    let mut replay = PoolReplay::new(pool, opts.first_month_seconds, false);
    let mut owner_counts = [0u64; 4];
    let mut user_counts = [0u64; 4];
    let mut users: HashSet<&str> = HashSet::new();
    let mut days: Vec<(i64, DayBucket)> = Vec::new();
    let mut last_ts = None;

    for o in orders.iter().take_while(|o| o.timestamp < window_end) {
        replay.push(o)?;
        let slot = match o.category {
            OrderCategory::Deposit => 0,
            OrderCategory::Withdraw => 1,
            OrderCategory::Buy => 2,
            OrderCategory::Sell => 3,
        };
        let day = (o.timestamp - start).max(0) / DAY_SECONDS;
        if days.last().is_none_or(|(d, _)| *d != day) {
            days.push((day, DayBucket::default()));
        }
        let bucket = &mut days.last_mut().expect("bucket pushed above").1;
        if o.sender == owner {
            owner_counts[slot] += 1;
        } else {
            user_counts[slot] += 1;
            users.insert(o.sender.as_str());
            if !bucket.users.contains(&o.sender) {
                bucket.users.insert(o.sender.clone());
            }
        }
        if o.category.is_swap() {
            bucket.volume += o.base_value_usd();
        }
        bucket.pool_value_end = replay.ledger().pool_value_usd;
        last_ts = Some(o.timestamp);
    }

    let summary = replay.summary();
    let mut b = Builder { values: Vec::with_capacity(FEATURE_COUNT), missing: Vec::with_capacity(FEATURE_COUNT) };

    for c in owner_counts {
        b.put(c as f64);
    }

    for c in user_counts {
        b.put(c as f64);
    }
    b.put(users.len() as f64);
    let daily_users = extremes(days.iter().map(|(_, bk)| bk.users.len() as f64));
    match &daily_users {
        Some(e) => {
            b.put(e.first);
            b.put(e.max);
            b.put(e.last);
            b.put(e.min);
        }
        None => (0..4).for_each(|_| b.put(0.0)),
    }
    let pick = |f: fn(&Extremes) -> f64| daily_users.as_ref().map(f);
    let (first, last, high, low) = (pick(|e| e.first), pick(|e| e.last), pick(|e| e.max), pick(|e| e.min));
    b.ratio_opt(first, high);
    b.ratio_opt(last, low);
    b.ratio_opt(first, low);
    b.ratio_opt(first, last);
    b.ratio_opt(last, high);
    b.ratio_opt(low, high);

    let invested = summary.invested_usd + summary.gas_usd;
    let unrealized = unrealized_profit(replay.ledger());
    let realized = summary.returned_usd;
    let total = realized + unrealized - invested;
    b.put(invested);
    b.put(unrealized);
    b.put(realized);
    b.put(total);
    b.ratio(total, invested);
    b.ratio(realized, invested);
    b.ratio(realized - invested, invested);
    b.ratio(unrealized, realized);
    b.ratio(unrealized, invested);
    let imp = summary.impacts;
    let (min, max, avg) = (imp.min, imp.max, imp.mean());
    b.put(min.unwrap_or(0.0));
    b.put(max.unwrap_or(0.0));
    b.put(avg.unwrap_or(0.0));
    b.ratio_opt(min, avg);
    b.ratio_opt(max, avg);
    b.ratio_opt(min, max);
    b.put(imp.count as f64);

    let age = days.last().map_or(0, |(day, _)| (day + 1).min(d as i64));
    b.put(age as f64);
    let alive = last_ts.is_some_and(|t| t >= window_end - opts.alive_horizon_seconds);
    b.put(if alive { 1.0 } else { 0.0 });
    let vol = extremes(days.iter().map(|(_, bk)| bk.volume));
    let pval = extremes(days.iter().map(|(_, bk)| bk.pool_value_end));
    for e in [&vol, &pval] {
        match e {
            Some(e) => {
                b.put(e.first);
                b.put(e.last);
                b.put(e.max);
                b.put(e.min);
            }
            None => (0..4).for_each(|_| b.put(0.0)),
        }
    }
    push_extreme_ratios(&mut b, &vol);
    push_extreme_ratios(&mut b, &pval);

    debug_assert_eq!(b.values.len(), FEATURE_COUNT);
    let empty_history = last_ts.is_none();
    if empty_history {
        b.missing.iter_mut().for_each(|m| *m = true);
    }
    Ok(FeatureVector {
        pool_address: pool.pool_address.clone(),
        window_days: d,
        label: false,
        values: b.values,
        missing: b.missing,
        empty_history,
    })
}

/// CSV with `pool_address, window_days, label` and the 57 canonical columns.
pub fn write_feature_csv<W: Write>(out: W, rows: &[FeatureVector]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["pool_address", "window_days", "label"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.pool_address.clone(), r.window_days.to_string(), u8::from(r.label).to_string()];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
