//! Mixed corpora of generated scenarios, configured from `key = value` files.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sim::{address, derive_seed};
use super::{generate, GeneratedPool, ScenarioConfig, ScenarioKind, SynthError};
use crate::kv::{ConfigError, KvFile};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    pub seed: u64,
    pub legitimate: usize,
    pub rugpull: usize,
    pub honeypot: usize,
    pub slid: usize,
    pub slid_slow: usize,
    pub slid_multi: usize,
    /// Exact share of SLID pools that live past the first month.
    pub slid_alive_fraction: f64,
    pub slid_drain_count: u32,
    pub investor_arrival: f64,
    pub target_profit_multiple: Option<f64>,
    pub rug_drain_day: u32,
    pub rug_impact_min: f64,
    pub rug_impact_max: f64,
    pub initial_deposit_usd: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            legitimate: 100,
            rugpull: 200,
            honeypot: 0,
            slid: 200,
            slid_slow: 0,
            slid_multi: 0,
            slid_alive_fraction: 0.7,
            slid_drain_count: 423,
            investor_arrival: 10.0,
            target_profit_multiple: Some(10.3),
            rug_drain_day: 0,
            rug_impact_min: 0.96,
            rug_impact_max: 1.0,
            initial_deposit_usd: 19_000.0,
        }
    }
}

const KEYS: &[&str] = &[
    "seed",
    "legitimate",
    "rugpull",
    "honeypot",
    "slid",
    "slid_slow",
    "slid_multi",
    "slid_alive_fraction",
    "slid_drain_count",
    "investor_arrival",
    "target_profit_multiple",
    "rug_drain_day",
    "rug_impact_min",
    "rug_impact_max",
    "initial_deposit_usd",
];

impl CorpusConfig {
    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let kv = KvFile::parse(text)?;
        kv.reject_unknown(KEYS)?;
        let mut c = Self::default();
        kv.set("seed", &mut c.seed)?;
        kv.set("legitimate", &mut c.legitimate)?;
        kv.set("rugpull", &mut c.rugpull)?;
        kv.set("honeypot", &mut c.honeypot)?;
        kv.set("slid", &mut c.slid)?;
        kv.set("slid_slow", &mut c.slid_slow)?;
        kv.set("slid_multi", &mut c.slid_multi)?;
        kv.set("slid_alive_fraction", &mut c.slid_alive_fraction)?;
        kv.set("slid_drain_count", &mut c.slid_drain_count)?;
        kv.set("investor_arrival", &mut c.investor_arrival)?;
        kv.set_opt("target_profit_multiple", &mut c.target_profit_multiple)?;
        kv.set("rug_drain_day", &mut c.rug_drain_day)?;
        kv.set("rug_impact_min", &mut c.rug_impact_min)?;
        kv.set("rug_impact_max", &mut c.rug_impact_max)?;
        kv.set("initial_deposit_usd", &mut c.initial_deposit_usd)?;
        if !(0.0..=1.0).contains(&c.slid_alive_fraction) {
            return Err(ConfigError::Invalid("slid_alive_fraction outside [0, 1]".into()));
        }
        if !(c.rug_impact_min <= c.rug_impact_max) {
            return Err(ConfigError::Invalid("rug_impact_min exceeds rug_impact_max".into()));
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.legitimate + self.rugpull + self.honeypot + self.slid + self.slid_slow + self.slid_multi
    }

    /// Scenario configs in corpus order.
    pub fn scenarios(&self) -> Vec<ScenarioConfig> {
        let blocks = [
            (ScenarioKind::Legitimate, self.legitimate),
            (ScenarioKind::RugPull, self.rugpull),
            (ScenarioKind::Honeypot, self.honeypot),
            (ScenarioKind::Slid, self.slid),
            (ScenarioKind::SlidSlow, self.slid_slow),
            (ScenarioKind::SlidMultiAddress, self.slid_multi),
        ];
        let mut out = Vec::with_capacity(self.total());
        let mut index = 0u64;
        for (kind, count) in blocks {
            for k in 0..count {
                out.push(self.scenario(kind, index, k));
                index += 1;
            }
        }
        out
    }

    fn scenario(&self, kind: ScenarioKind, index: u64, k: usize) -> ScenarioConfig {
        let seed = derive_seed(self.seed, index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
        let mut cfg = ScenarioConfig::new(kind, seed);
        cfg.pool_index = index;
        cfg.investor_arrival = self.investor_arrival;
        cfg.initial_deposit_usd = self.initial_deposit_usd * rng.random_range(0.5..2.0);
        cfg.rug_drain_day = self.rug_drain_day;
        cfg.rug_impact = rng.random_range(self.rug_impact_min..=self.rug_impact_max);
        if kind != ScenarioKind::Honeypot {
            cfg.slid_drain_count = self.slid_drain_count;
        }
        if matches!(kind, ScenarioKind::Slid | ScenarioKind::SlidSlow | ScenarioKind::SlidMultiAddress) {
            cfg.target_profit_multiple = self.target_profit_multiple;
        }
        cfg.lifetime_days = match kind {
            ScenarioKind::Legitimate => rng.random_range(60.0..300.0),
            ScenarioKind::RugPull => self.rug_drain_day as f64 + 1.0,
            ScenarioKind::Honeypot => rng.random_range(10.0..60.0),
            ScenarioKind::SlidSlow => rng.random_range(215.0..260.0),
            ScenarioKind::Slid | ScenarioKind::SlidMultiAddress => {
                // stratified so exactly round(count × fraction) pools outlive the first month
                let f = self.slid_alive_fraction;
                let alive = ((k + 1) as f64 * f).floor() > (k as f64 * f).floor();
                if alive {
                    rng.random_range(35.0..200.0)
                } else {
                    rng.random_range(8.0..25.0)
                }
            }
        };
        cfg
    }
}

/// Generates every scenario of the corpus, sorted by pool address.
pub fn generate_corpus(cfg: &CorpusConfig) -> Result<Vec<GeneratedPool>, SynthError> {
    let mut out = Vec::with_capacity(cfg.total());
    for_each_pool(cfg, |p| {
        out.push(p);
        Ok::<_, SynthError>(())
    })?;
    Ok(out)
}

/// Streams the corpus pool by pool in pool-address order, holding at most
/// one small batch in memory.
pub fn for_each_pool<E: From<SynthError>>(
    cfg: &CorpusConfig,
    mut sink: impl FnMut(GeneratedPool) -> Result<(), E>,
) -> Result<(), E> {
    let mut scenarios = cfg.scenarios();
    scenarios.sort_by_cached_key(|s| address(s.seed, 1));
    for batch in scenarios.chunks(32) {
        let pools: Vec<GeneratedPool> = batch.par_iter().map(generate).collect::<Result<_, _>>()?;
        for p in pools {
            sink(p)?;
        }
    }
    Ok(())
}
