//! Whole-dataset ingestion into per-pool sorted order streams.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{anonymize, anonymize_order, anonymize_pool, create, write_row, BaseWhitelist, ChainSource, FileSource, IoError, ProfileRow};
use super::{ORDERS_FILE, POOLS_FILE, PROFILES_FILE};
use crate::ledger::{DexOrder, LedgerError, PoolRecord};
use crate::metrics::{profit_report, ProfitReport};
use crate::features::{extract_features_with, FeatureOptions, FeatureVector};
use crate::validators::{classify_pool, HeuristicConfig, Label, SecurityProfile, Verdict};

/// Row counts and skip reasons gathered during ingestion.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestStats {
    pub pools_read: u64,
    pub pools_kept: u64,
    pub orders_read: u64,
    pub orders_kept: u64,
    pub profiles_read: u64,
    pub skipped: BTreeMap<String, u64>,
}

impl IngestStats {
    pub fn skip(&mut self, reason: &str) {
        *self.skipped.entry(reason.to_string()).or_default() += 1;
    }

    pub fn skipped(&self, reason: &str) -> u64 {
        self.skipped.get(reason).copied().unwrap_or(0)
    }
}

pub const SKIP_UNKNOWN_POOL: &str = "order for unknown pool";
pub const SKIP_BASE: &str = "base token not whitelisted";
pub const SKIP_DUPLICATE_POOL: &str = "duplicate pool";

/// Filtered pool table shared by [`ingest`] and the streaming detector.
pub(crate) struct PoolTable {
    pub pools: BTreeMap<String, PoolRecord>,
    pub excluded: HashSet<String>,
}

pub(crate) fn load_pools(
    source: &mut dyn ChainSource,
    whitelist: &BaseWhitelist,
    stats: &mut IngestStats,
) -> Result<PoolTable, IoError> {
    let mut pools = BTreeMap::new();
    let mut excluded = HashSet::new();
    for p in source.pools()? {
        stats.pools_read += 1;
        if pools.contains_key(&p.pool_address) {
            stats.skip(SKIP_DUPLICATE_POOL);
        } else if !whitelist.allows(&p.base_address) {
            stats.skip(SKIP_BASE);
            excluded.insert(p.pool_address);
        } else {
            pools.insert(p.pool_address.clone(), p);
        }
    }
    if pools.is_empty() {
        return Err(IoError::EmptyDataset);
    }
    stats.pools_kept = pools.len() as u64;
    Ok(PoolTable { pools, excluded })
}

/// PoolData, DEXData and SecurityData after filtering and sorting.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    /// Sorted by pool address.
    pub pools: Vec<PoolRecord>,
    /// Per pool, sorted by (timestamp, block, hash).
    pub orders: BTreeMap<String, Vec<DexOrder>>,
    /// Keyed by lower-case token address.
    pub profiles: BTreeMap<String, SecurityProfile>,
    pub profiles_available: bool,
    pub stats: IngestStats,
}

/// ExtendedPoolData row.
#[derive(Debug, Clone)]
pub struct EnrichedPool {
    pub pool_address: String,
    pub report: ProfitReport,
    pub verdict: Verdict,
}

pub fn ingest(source: &mut dyn ChainSource, whitelist: &BaseWhitelist) -> Result<Dataset, IoError> {
    let mut stats = IngestStats::default();
    let table = load_pools(source, whitelist, &mut stats)?;
    let profiles = source.profiles()?;
    let profiles_available = profiles.is_some();
    let profiles = profiles.unwrap_or_default();
    stats.profiles_read = profiles.len() as u64;

    let mut orders: BTreeMap<String, Vec<DexOrder>> = table.pools.keys().map(|k| (k.clone(), Vec::new())).collect();
    source.orders(&mut |_, o| {
        stats.orders_read += 1;
        match orders.get_mut(&o.pool_address) {
            Some(v) => {
                v.push(o);
                stats.orders_kept += 1;
            }
            None if table.excluded.contains(&o.pool_address) => stats.skip(SKIP_BASE),
            None => stats.skip(SKIP_UNKNOWN_POOL),
        }
        Ok(())
    })?;
    for v in orders.values_mut() {
        v.sort_by(|a, b| (a.timestamp, a.block, &a.hash).cmp(&(b.timestamp, b.block, &b.hash)));
    }
    for (reason, n) in &stats.skipped {
        log::info!("ingest skipped {n} rows: {reason}");
    }
    Ok(Dataset { pools: table.pools.into_values().collect(), orders, profiles, profiles_available, stats })
}

/// Ingests a pools/orders/profiles file triple with the default whitelist.
pub fn ingest_files(pools: &Path, orders: &Path, profiles: Option<&Path>) -> Result<Dataset, IoError> {
    let mut src = FileSource::new(pools, orders, profiles.map(PathBuf::from));
    ingest(&mut src, &BaseWhitelist::default())
}

impl Dataset {
    pub fn orders_of(&self, pool_address: &str) -> &[DexOrder] {
        self.orders.get(pool_address).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn profile_of(&self, pool: &PoolRecord) -> Option<&SecurityProfile> {
        self.profiles.get(&pool.paired_address.to_ascii_lowercase())
    }

    pub fn order_count(&self) -> usize {
        self.orders.values().map(Vec::len).sum()
    }

    /// Profit report and verdict for every pool, in pool order.
    pub fn enrich(&self, cfg: &HeuristicConfig) -> Vec<Result<EnrichedPool, LedgerError>> {
        self.pools
            .par_iter()
            .map(|p| {
                let (report, _) = profit_report(p, self.orders_of(&p.pool_address), cfg.first_month_seconds)?;
                let verdict = classify_pool(p, self.profile_of(p), &report, cfg);
                Ok(EnrichedPool { pool_address: p.pool_address.clone(), report, verdict })
            })
            .collect()
    }

    /// SLID flags from the heuristic on the full history, keyed by pool.
    pub fn slid_labels(&self, cfg: &HeuristicConfig) -> BTreeMap<String, bool> {
        super::detect_dataset(self, cfg).into_iter().map(|r| (r.pool_address, r.label == Label::Slid)).collect()
    }

    /// Feature rows for window `d`, in pool order, labelled from `labels`.
    pub fn feature_matrix(
        &self,
        d: u32,
        labels: &BTreeMap<String, bool>,
        cfg: &HeuristicConfig,
    ) -> Result<Vec<FeatureVector>, LedgerError> {
        let opts = FeatureOptions {
            first_month_seconds: cfg.first_month_seconds,
            alive_horizon_seconds: cfg.alive_horizon_seconds,
        };
        self.pools
            .par_iter()
            .map(|p| {
                let mut v = extract_features_with(p, self.orders_of(&p.pool_address), d, &opts)?;
                v.label = labels.get(&p.pool_address).copied().unwrap_or(false);
                Ok(v)
            })
            .collect()
    }

    /// Re-emits pools, orders and profiles in canonical order. Profiles follow
    /// pool order; profiles of tokens without a pool come last, by address.
    pub fn write(&self, dir: &Path, anonymized: bool) -> Result<(), IoError> {
        std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
        let err = |e| IoError::file(dir, e);
        let mut pools = create(&dir.join(POOLS_FILE))?;
        let mut orders = create(&dir.join(ORDERS_FILE))?;
        for p in &self.pools {
            if anonymized {
                write_row(&mut pools, &anonymize_pool(p)).map_err(err)?;
            } else {
                write_row(&mut pools, p).map_err(err)?;
            }
            for o in self.orders_of(&p.pool_address) {
                if anonymized {
                    write_row(&mut orders, &anonymize_order(o)).map_err(err)?;
                } else {
                    write_row(&mut orders, o).map_err(err)?;
                }
            }
        }
        pools.flush().map_err(err)?;
        orders.flush().map_err(err)?;

        if self.profiles_available {
            let mut out = create(&dir.join(PROFILES_FILE))?;
            let mut written = HashSet::new();
            let tokens = self.pools.iter().map(|p| p.paired_address.to_ascii_lowercase());
            let ordered: Vec<String> = tokens.chain(self.profiles.keys().cloned()).collect();
            for token in ordered {
                let Some(profile) = self.profiles.get(&token) else { continue };
                if !written.insert(token.clone()) {
                    continue;
                }
                let token_address = if anonymized { anonymize(&token) } else { token };
                write_row(&mut out, &ProfileRow { token_address, profile: profile.clone() }).map_err(err)?;
            }
            out.flush().map_err(err)?;
        }
        Ok(())
    }
}
