//! Labeled synthetic pool histories.
//!
//! Each scenario is planned first (event times, sizes and impacts drawn
//! from the seed) and then simulated on an integer constant-product pool.
//! Investor inflow is a single scale factor applied to the plan, so drain
//! sizing can search over it without disturbing the random draws.

pub mod corpus;
pub mod oracle;
pub mod sim;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{Dex, DexOrder, PoolRecord};
use crate::metrics::DAY_SECONDS;
use crate::validators::{Label, SecurityProfile, RUGPULL_IMPACT};
use sim::{address, units_to_usd, usd_to_units, PoolSim};

pub use corpus::{generate_corpus, CorpusConfig};
pub use oracle::{lp_unit_shares, oracle_report};

/// USDC on Ethereum mainnet; synthetic base tokens reuse it so ingestion's whitelist applies.
pub const SYNTH_BASE_ADDRESS: &str = "0xa0b86991c6218b36c1d19d4a2e9eb0ce3606eb48";
/// Paired tokens per USD of initial deposit.
const INITIAL_PAIRED_PER_USD: u128 = 1_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("infeasible scenario: {0}")]
    InfeasibleConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioKind {
    Legitimate,
    RugPull,
    Honeypot,
    #[serde(rename = "SLID")]
    Slid,
    SlidSlow,
    SlidMultiAddress,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Legitimate,
        ScenarioKind::RugPull,
        ScenarioKind::Honeypot,
        ScenarioKind::Slid,
        ScenarioKind::SlidSlow,
        ScenarioKind::SlidMultiAddress,
    ];

    pub fn true_label(self) -> Label {
        match self {
            ScenarioKind::Legitimate => Label::Legitimate,
            ScenarioKind::RugPull => Label::RugPull,
            ScenarioKind::Honeypot => Label::Honeypot,
            ScenarioKind::Slid | ScenarioKind::SlidSlow | ScenarioKind::SlidMultiAddress => Label::Slid,
        }
    }

    fn drains(self) -> bool {
        matches!(
            self,
            ScenarioKind::Slid | ScenarioKind::SlidSlow | ScenarioKind::SlidMultiAddress | ScenarioKind::Honeypot
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub seed: u64,
    /// Spreads creation times across a corpus.
    pub pool_index: u64,
    pub initial_deposit_usd: f64,
    pub investor_count: u32,
    /// Poisson rate of investor buys per day.
    pub investor_arrival: f64,
    /// Mean investor buy as a fraction of the initial deposit, before scaling.
    pub investor_buy_fraction: f64,
    /// Share of investors who later sell part of their holdings.
    pub investor_seller_fraction: f64,
    pub lifetime_days: f64,
    pub slid_drain_count: u32,
    pub slid_impact_range: (f64, f64),
    pub rug_drain_day: u32,
    pub rug_impact: f64,
    pub owner_noise_trades_per_day: f64,
    /// Realized profit over owner outlay that drains are sized to hit.
    pub target_profit_multiple: Option<f64>,
    pub slow_drain_start_day: f64,
    /// Early owner sells in slow scenarios; kept below the heuristic's count.
    pub slow_probe_sells: u32,
    pub linked_addresses: u32,
    /// Poisson rate of third-party liquidity deposits per day.
    pub lp_provider_rate: f64,
}

impl ScenarioConfig {
    /// Defaults for `kind`.
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        let base = Self {
            kind,
            seed,
            pool_index: 0,
            initial_deposit_usd: 19_000.0,
            investor_count: 150,
            investor_arrival: 10.0,
            investor_buy_fraction: 0.01,
            investor_seller_fraction: 0.3,
            lifetime_days: 90.0,
            slid_drain_count: 423,
            slid_impact_range: (0.0739, 0.4293),
            rug_drain_day: 0,
            rug_impact: 0.99,
            owner_noise_trades_per_day: 0.5,
            target_profit_multiple: Some(10.3),
            slow_drain_start_day: 200.0,
            slow_probe_sells: 2,
            linked_addresses: 3,
            lp_provider_rate: 0.0,
        };
        match kind {
            ScenarioKind::Legitimate => Self {
                lifetime_days: 120.0,
                target_profit_multiple: None,
                lp_provider_rate: 0.1,
                ..base
            },
            ScenarioKind::RugPull => Self { lifetime_days: 1.0, target_profit_multiple: None, ..base },
            ScenarioKind::Honeypot => Self {
                lifetime_days: 30.0,
                slid_drain_count: 12,
                slid_impact_range: (0.05, 0.5),
                target_profit_multiple: Some(2.0),
                ..base
            },
            ScenarioKind::SlidSlow => Self { lifetime_days: 240.0, ..base },
            _ => base,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InfeasibleConfig(m));
        let (lo, hi) = self.slid_impact_range;
        if !(0.0 < lo && lo < hi && hi < RUGPULL_IMPACT) {
            return bad(format!("impact range ({lo}, {hi}) must sit inside (0, {RUGPULL_IMPACT})"));
        }
        if !(RUGPULL_IMPACT..=1.0).contains(&self.rug_impact) {
            return bad(format!("rug impact {} below {RUGPULL_IMPACT}", self.rug_impact));
        }
        if !(self.initial_deposit_usd >= 1.0 && self.initial_deposit_usd <= 1e9) {
            return bad("initial deposit must lie in [1, 1e9] USD".into());
        }
        if self.investor_count == 0 || !(self.investor_arrival > 0.0) {
            return bad("scenarios need investors".into());
        }
        if !(self.lifetime_days > 0.0) {
            return bad("lifetime must be positive".into());
        }
        if self.kind.drains() && self.slid_drain_count == 0 {
            return bad("drain scenarios need at least one drain".into());
        }
        if self.kind == ScenarioKind::SlidSlow && self.lifetime_days <= self.slow_drain_start_day + 1.0 {
            return bad("slow scenario ends before its drains start".into());
        }
        if self.kind == ScenarioKind::SlidMultiAddress && self.linked_addresses == 0 {
            return bad("multi-address scenario needs linked addresses".into());
        }
        if matches!(self.target_profit_multiple, Some(m) if !(m > 0.0)) {
            return bad("profit multiple target must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedPool {
    pub kind: ScenarioKind,
    pub true_label: Label,
    pub pool: PoolRecord,
    pub profile: SecurityProfile,
    pub orders: Vec<DexOrder>,
    /// Non-owner addresses that act for the owner.
    pub linked_addresses: Vec<String>,
    pub inflow_scale: f64,
}

#[derive(Debug, Clone, Copy)]
enum Action {
    InvestorBuy { investor: u32, size: f64 },
    InvestorSell { investor: u32, fraction: f64 },
    ProviderDeposit { provider: u32, size: f64 },
    ProviderWithdraw { provider: u32, fraction: f64 },
    OwnerBuy { size: f64, gas: f64 },
    Drain { impact: f64, sender: u32, gas: f64 },
    RugWithdraw { impact: f64, gas: f64 },
}

struct Plan {
    deposit_units: u128,
    deposit_gas: f64,
    /// Offsets in seconds from pool creation, sorted.
    events: Vec<(i64, Action)>,
}

/// What a simulation returns besides the orders.
struct Outcome {
    drained_units: u128,
    owner_outlay_usd: f64,
}

struct Identity {
    pool: String,
    owner: String,
    created: i64,
    linked: Vec<String>,
    investors: Vec<String>,
    providers: Vec<String>,
}

fn day_offset(days: f64) -> i64 {
    (days * DAY_SECONDS as f64).round() as i64
}

fn poisson_times(rng: &mut ChaCha8Rng, rate_per_day: f64, from_days: f64, to_days: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(rate_per_day > 0.0) || to_days <= from_days {
        return out;
    }
    let exp = Exp::new(rate_per_day).expect("positive rate");
    let mut t = from_days;
    loop {
        t += exp.sample(rng);
        if t >= to_days {
            return out;
        }
        out.push(t);
    }
}

fn size_factor(rng: &mut ChaCha8Rng) -> f64 {
    const SIGMA: f64 = 0.8;
    LogNormal::new(-SIGMA * SIGMA / 2.0, SIGMA).expect("valid log-normal").sample(rng)
}

fn owner_gas(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(1.0..15.0)
}

fn plan(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Plan {
    let life = cfg.lifetime_days;
    let mut events: Vec<(f64, Action)> = Vec::new();

    let buy_end = if cfg.kind == ScenarioKind::RugPull {
        cfg.rug_drain_day as f64 + rng.random_range(4.0..20.0) / 24.0
    } else {
        life
    };
    let mut buy_times = poisson_times(rng, cfg.investor_arrival, 0.0, buy_end);
    if cfg.kind == ScenarioKind::RugPull {
        while buy_times.len() < 8 {
            buy_times.push(rng.random_range(0.0..buy_end));
        }
        buy_times.sort_by(f64::total_cmp);
    }
    let mut first_buy = vec![None; cfg.investor_count as usize];
    for t in buy_times {
        let investor = rng.random_range(0..cfg.investor_count);
        first_buy[investor as usize].get_or_insert(t);
        events.push((t, Action::InvestorBuy { investor, size: size_factor(rng) }));
    }
    if cfg.kind != ScenarioKind::RugPull {
        // the last order marks the end of the pool's life
        events.push((life, Action::InvestorBuy { investor: 0, size: size_factor(rng) }));
    }

    let investors_sell = !matches!(cfg.kind, ScenarioKind::Honeypot | ScenarioKind::RugPull);
    for (investor, first) in first_buy.iter().enumerate() {
        let seller = rng.random_bool(cfg.investor_seller_fraction.clamp(0.0, 1.0));
        if let (true, true, Some(&t0)) = (investors_sell, seller, first.as_ref()) {
            let t = rng.random_range(t0..life.max(t0 + 1e-6));
            let fraction = rng.random_range(0.1..=1.0);
            events.push((t.min(life), Action::InvestorSell { investor: investor as u32, fraction }));
        }
    }

    if cfg.kind == ScenarioKind::RugPull {
        events.push((buy_end, Action::RugWithdraw { impact: cfg.rug_impact, gas: owner_gas(rng) }));
    } else {
        for t in poisson_times(rng, cfg.owner_noise_trades_per_day, 0.0, life) {
            events.push((t, Action::OwnerBuy { size: size_factor(rng), gas: owner_gas(rng) }));
        }
    }

    let mut provider = 0;
    for t in poisson_times(rng, cfg.lp_provider_rate, 0.0, life) {
        events.push((t, Action::ProviderDeposit { provider, size: size_factor(rng) }));
        if rng.random_bool(0.5) {
            let tw = rng.random_range(t..life.max(t + 1e-6)).min(life);
            events.push((tw, Action::ProviderWithdraw { provider, fraction: rng.random_range(0.2..=1.0) }));
        }
        provider += 1;
    }

    if cfg.kind.drains() {
        let (lo, hi) = cfg.slid_impact_range;
        let start = match cfg.kind {
            ScenarioKind::SlidSlow => cfg.slow_drain_start_day,
            _ => (0.25f64).min(life / 4.0),
        };
        let senders = match cfg.kind {
            ScenarioKind::SlidMultiAddress => cfg.linked_addresses,
            _ => 0,
        };
        for _ in 0..cfg.slid_drain_count {
            let t = rng.random_range(start..life);
            let impact = rng.random_range(lo..hi);
            let sender = if senders > 0 { rng.random_range(1..=senders) } else { 0 };
            events.push((t, Action::Drain { impact, sender, gas: owner_gas(rng) }));
        }
        if cfg.kind == ScenarioKind::SlidSlow {
            for _ in 0..cfg.slow_probe_sells {
                let t = rng.random_range(1.0..56.0);
                let impact = rng.random_range(0.01..0.05);
                events.push((t, Action::Drain { impact, sender: 0, gas: owner_gas(rng) }));
            }
        }
    }

    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    Plan {
        deposit_units: usd_to_units(cfg.initial_deposit_usd),
        deposit_gas: owner_gas(rng),
        events: events.into_iter().map(|(t, a)| (day_offset(t).max(1), a)).collect(),
    }
}

fn simulate(cfg: &ScenarioConfig, id: &Identity, plan: &Plan, scale: f64, record: bool) -> (PoolSim, Outcome) {
    let mut sim = PoolSim::new(id.pool.clone(), id.created, cfg.seed);
    sim.record = record;
    let deposit = plan.deposit_units;
    let mut owner_units = sim.deposit_initial(id.created, &id.owner, deposit * INITIAL_PAIRED_PER_USD, deposit, plan.deposit_gas);
    let mut outlay = units_to_usd(deposit) + plan.deposit_gas;
    let mut drained = 0u128;
    let mut holdings = vec![0u128; id.investors.len()];
    let mut lp_units = vec![0u128; id.providers.len()];
    let buy_unit = cfg.investor_buy_fraction * cfg.initial_deposit_usd * scale;

    for &(offset, action) in &plan.events {
        let ts = id.created + offset;
        match action {
            Action::InvestorBuy { investor, size } => {
                let i = investor as usize;
                if let Ok(got) = sim.buy(ts, &id.investors[i], usd_to_units(buy_unit * size), 0.0) {
                    holdings[i] += got;
                }
            }
            Action::InvestorSell { investor, fraction } => {
                let i = investor as usize;
                let amount = (holdings[i] as f64 * fraction) as u128;
                if amount > 0 && sim.sell(ts, &id.investors[i], amount, 0.0).is_ok() {
                    holdings[i] -= amount;
                }
            }
            Action::ProviderDeposit { provider, size } => {
                let p = provider as usize;
                let base = usd_to_units(0.05 * cfg.initial_deposit_usd * scale * size);
                if let Ok(minted) = sim.deposit(ts, &id.providers[p], base, 0.0) {
                    lp_units[p] += minted;
                }
            }
            Action::ProviderWithdraw { provider, fraction } => {
                let p = provider as usize;
                let units = (lp_units[p] as f64 * fraction) as u128;
                sim.withdraw_units(ts, &id.providers[p], units, 0.0);
                lp_units[p] -= units.min(lp_units[p]);
            }
            Action::OwnerBuy { size, gas } => {
                let base = usd_to_units(0.002 * cfg.initial_deposit_usd * size);
                if sim.buy(ts, &id.owner, base, gas).is_ok() {
                    outlay += units_to_usd(base) + gas;
                }
            }
            Action::Drain { impact, sender, gas } => {
                let who = if sender == 0 { &id.owner } else { &id.linked[sender as usize - 1] };
                if let Ok(out) = sim.sell_for_fraction(ts, who, impact, gas) {
                    drained += out;
                    if sender == 0 {
                        outlay += gas;
                    }
                }
            }
            Action::RugWithdraw { impact, gas } => {
                let share = owner_units as f64 / sim.lp_total as f64;
                let out = sim.withdraw_fraction(ts, &id.owner, impact * share, gas);
                owner_units = 0;
                drained += out;
                outlay += gas;
            }
        }
    }
    (sim, Outcome { drained_units: drained, owner_outlay_usd: outlay })
}

fn profit_multiple(outcome: &Outcome, deployment_gas: f64) -> f64 {
    let outlay = outcome.owner_outlay_usd + deployment_gas;
    (units_to_usd(outcome.drained_units) - outlay) / outlay
}

/// Finds the inflow scale whose profit multiple hits `target` (false position in log space).
fn solve_scale(target: f64, eval: impl Fn(f64) -> f64) -> Result<f64, SynthError> {
    let f = |ln_s: f64| eval(ln_s.exp()) - target;
    let mut a = 0f64;
    let mut fa = f(a);
    while fa > 0.0 {
        a -= 2.0;
        if a < -14.0 {
            return Ok(a.exp());
        }
        fa = f(a);
    }
    let mut b = a + 2.0;
    let mut fb = f(b);
    while fb < 0.0 {
        a = b;
        fa = fb;
        b += 2.0;
        if b > 14.0 {
            return Err(SynthError::InfeasibleConfig(format!(
                "profit multiple {target} unreachable; investor inflow cannot fund the drains"
            )));
        }
        fb = f(b);
    }
    let tol = 0.005 * target;
    let mut side = 0;
    for _ in 0..60 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc.abs() <= tol || (b - a).abs() < 1e-9 {
            return Ok(c.exp());
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb /= 2.0;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa /= 2.0;
            }
            side = 1;
        }
    }
    Ok(((a + b) / 2.0).exp())
}

fn trigger_profile(rng: &mut ChaCha8Rng) -> SecurityProfile {
    let mut p = SecurityProfile::default();
    match rng.random_range(0..7) {
        0 => p.sell_tax = rng.random_range(0.55..1.0),
        1 => p.buy_tax = rng.random_range(0.55..1.0),
        2 => p.can_sell_all = false,
        3 => p.trading_pausable = true,
        4 => p.balance_change_by_owner = true,
        5 => p.transfer_pausable = true,
        _ => p.slippage_modifiable = true,
    }
    p
}

/// Generates one scenario.
pub fn generate(cfg: &ScenarioConfig) -> Result<GeneratedPool, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let created = PoolSim::genesis_time(cfg.pool_index) + rng.random_range(0..3_600);
    let mut id = Identity {
        pool: address(cfg.seed, 1),
        owner: address(cfg.seed, 3),
        created,
        linked: (0..cfg.linked_addresses).map(|k| address(cfg.seed, 500 + k as u64)).collect(),
        investors: (0..cfg.investor_count).map(|i| address(cfg.seed, 1_000 + i as u64)).collect(),
        providers: Vec::new(),
    };
    let pool = PoolRecord {
        pool_address: id.pool.clone(),
        base_address: SYNTH_BASE_ADDRESS.to_string(),
        paired_address: address(cfg.seed, 2),
        owner_address: id.owner.clone(),
        created_time_pool: created,
        created_time_token: created - rng.random_range(60..86_400),
        dex: Dex::Synthetic,
        name: format!("SYN{}", cfg.pool_index),
        lpt_burned: cfg.kind == ScenarioKind::Legitimate,
        deployment_gas_usd: rng.random_range(20.0..200.0),
    };
    let profile = if cfg.kind == ScenarioKind::Honeypot {
        trigger_profile(&mut rng)
    } else {
        SecurityProfile::default()
    };
    let plan = plan(cfg, &mut rng);
    let provider_count = plan
        .events
        .iter()
        .filter(|(_, a)| matches!(a, Action::ProviderDeposit { .. }))
        .count() as u64;
    id.providers = (0..provider_count).map(|j| address(cfg.seed, 1_000_000 + j)).collect();
    if plan.events.iter().filter(|(_, a)| matches!(a, Action::Drain { .. })).count() == 0 && cfg.kind.drains() {
        return Err(SynthError::InfeasibleConfig("no drain fits in the lifetime".into()));
    }

    let scale = match (cfg.kind, cfg.target_profit_multiple) {
        (ScenarioKind::RugPull, _) => {
            // investor inflow equal to the owner's deposit keeps the rug profitable
            let sizes: f64 = plan
                .events
                .iter()
                .filter_map(|(_, a)| match a {
                    Action::InvestorBuy { size, .. } => Some(*size),
                    _ => None,
                })
                .sum();
            1.0 / (cfg.investor_buy_fraction * sizes)
        }
        (kind, Some(target)) if kind.drains() => solve_scale(target, |s| {
            let (_, outcome) = simulate(cfg, &id, &plan, s, false);
            profit_multiple(&outcome, pool.deployment_gas_usd)
        })?,
        _ => 1.0,
    };
    let (sim, _) = simulate(cfg, &id, &plan, scale, true);

    Ok(GeneratedPool {
        kind: cfg.kind,
        true_label: cfg.kind.true_label(),
        pool,
        profile,
        orders: sim.orders,
        linked_addresses: if cfg.kind == ScenarioKind::SlidMultiAddress { id.linked } else { Vec::new() },
        inflow_scale: scale,
    })
}
