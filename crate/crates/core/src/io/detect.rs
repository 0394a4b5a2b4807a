//! Full heuristic pipeline over streamed orders.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ingest::{load_pools, Dataset, IngestStats, SKIP_BASE, SKIP_UNKNOWN_POOL};
use super::{anonymize, BaseWhitelist, ChainSource, IoError};
use crate::ledger::{LedgerError, PoolRecord};
use crate::metrics::{PoolReplay, ProfitSummary};
use crate::validators::{classify, ClassifyInput, HeuristicConfig, Label, SecurityProfile};

/// One line of `verdicts.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub pool_address: String,
    pub label: Label,
    pub honeypot_pass: bool,
    pub profit_pass: bool,
    pub owner_activity_pass: bool,
    pub realized_usd: f64,
    pub unrealized_1m_usd: f64,
    pub max_impact: Option<f64>,
    /// Owner profit-taking count.
    pub c: u64,
}

fn verdict_row(
    pool: &PoolRecord,
    profile: Option<&SecurityProfile>,
    summary: &ProfitSummary,
    failed: bool,
    cfg: &HeuristicConfig,
) -> VerdictRow {
    let v = classify(pool, profile, &ClassifyInput::from(summary), cfg);
    VerdictRow {
        pool_address: pool.pool_address.clone(),
        label: if failed { Label::Undetermined } else { v.label },
        honeypot_pass: v.honeypot_pass,
        profit_pass: v.profit_pass,
        owner_activity_pass: v.owner_activity_pass,
        realized_usd: summary.realized_profit_usd,
        unrealized_1m_usd: summary.unrealized_first_month_usd,
        max_impact: summary.impacts.max,
        c: summary.impacts.count,
    }
}

struct Slot {
    replay: PoolReplay,
    failed: bool,
}

impl Slot {
    fn push(&mut self, order: &crate::ledger::DexOrder) -> Result<(), LedgerError> {
        if self.failed {
            return Ok(());
        }
        match self.replay.push(order) {
            Err(e @ LedgerError::NonMonotonicTime { .. }) => Err(e),
            Err(e) => {
                log::warn!("pool {}: replay stopped: {e}", order.pool_address);
                self.failed = true;
                Ok(())
            }
            Ok(()) => Ok(()),
        }
    }
}

/// Classifies every pool while reading orders once. Memory holds one
/// accumulator per pool and never the order stream; orders of one pool must
/// arrive in time order (any interleaving across pools is fine).
pub fn detect_stream(
    source: &mut dyn ChainSource,
    whitelist: &BaseWhitelist,
    cfg: &HeuristicConfig,
) -> Result<(Vec<VerdictRow>, IngestStats), IoError> {
    let mut stats = IngestStats::default();
    let table = load_pools(source, whitelist, &mut stats)?;
    let profiles = source.profiles()?;
    if profiles.is_none() {
        log::warn!("no security profiles; honeypot layer is Unknown for every pool");
    }
    let profiles = profiles.unwrap_or_default();
    stats.profiles_read = profiles.len() as u64;

    let pools: Vec<&PoolRecord> = table.pools.values().collect();
    let index: HashMap<&str, usize> = pools.iter().enumerate().map(|(i, p)| (p.pool_address.as_str(), i)).collect();
    let mut slots: Vec<Slot> = pools
        .iter()
        .map(|p| Slot { replay: PoolReplay::new(p, cfg.first_month_seconds, false), failed: false })
        .collect();

    let origin = source.orders_origin();
    source.orders(&mut |line, o| {
        stats.orders_read += 1;
        match index.get(o.pool_address.as_str()) {
            Some(&i) => {
                stats.orders_kept += 1;
                slots[i].push(&o).map_err(|e| {
                    IoError::schema(&origin, line, format!("{e}; orders of a pool must be time-sorted for streaming"))
                })
            }
            None if table.excluded.contains(&o.pool_address) => {
                stats.skip(SKIP_BASE);
                Ok(())
            }
            None => {
                stats.skip(SKIP_UNKNOWN_POOL);
                Ok(())
            }
        }
    })?;

    let rows = pools
        .iter()
        .zip(&slots)
        .map(|(p, s)| {
            let profile = profiles.get(&p.paired_address.to_ascii_lowercase());
            verdict_row(p, profile, &s.replay.summary(), s.failed, cfg)
        })
        .collect();
    Ok((rows, stats))
}

/// Same verdicts as [`detect_stream`] for an already ingested dataset.
pub fn detect_dataset(ds: &Dataset, cfg: &HeuristicConfig) -> Vec<VerdictRow> {
    use rayon::prelude::*;
    ds.pools
        .par_iter()
        .map(|p| {
            let mut slot = Slot { replay: PoolReplay::new(p, cfg.first_month_seconds, false), failed: false };
            for o in ds.orders_of(&p.pool_address) {
                if slot.push(o).is_err() {
                    slot.failed = true;
                }
            }
            let profile = if ds.profiles_available { ds.profile_of(p) } else { None };
            verdict_row(p, profile, &slot.replay.summary(), slot.failed, cfg)
        })
        .collect()
}

/// Writes `verdicts.csv`, rows sorted by pool address.
pub fn write_verdicts_csv<W: Write>(writer: W, rows: &[VerdictRow], anonymized: bool) -> Result<(), IoError> {
    let mut sorted: Vec<&VerdictRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.pool_address.cmp(&b.pool_address));
    let mut w = csv::Writer::from_writer(writer);
    for r in sorted {
        if anonymized {
            w.serialize(VerdictRow { pool_address: anonymize(&r.pool_address), ..r.clone() })?;
        } else {
            w.serialize(r)?;
        }
    }
    w.flush().map_err(|e| IoError::File { path: "verdicts".into(), source: e })?;
    Ok(())
}
