//! Slow-drain heuristic: three validators, the rug-pull baseline and the
//! layered filter that turns a pool's metrics into a [`Verdict`].
//!
//! A pool is labeled SLID only when it is not a honeypot, its owner has
//! positive realized profit and a positive first-month unrealized return,
//! and the owner took profit at least `t_count` times without any single
//! exit reaching `t_impact` of the pool value.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kv::{ConfigError, KvFile};
use crate::ledger::{LedgerState, OrderCategory, PoolRecord, ReserveNum};
use crate::metrics::{ImpactStats, ProfitReport, ProfitSummary, ProfitTakingEvent, FIRST_MONTH_SECONDS};

/// Lowest single-exit impact treated as a rug pull.
pub const RUGPULL_IMPACT: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidatorError {
    #[error("price or volume series is empty")]
    EmptySeries,
}

/// Token contract restrictions as reported by a security scanner.
///
/// Missing fields default to the benign value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SecurityProfile {
    pub buy_tax: f64,
    pub sell_tax: f64,
    pub tax_modifiable: bool,
    pub buyable: bool,
    pub can_sell_all: bool,
    pub balance_change_by_owner: bool,
    pub trading_cooldown: bool,
    pub trading_pausable: bool,
    pub anti_whale: bool,
    pub slippage_modifiable: bool,
    pub personal_slippage_modifiable: bool,
    pub transfer_pausable: bool,
}

impl Default for SecurityProfile {
    fn default() -> Self {
        Self {
            buy_tax: 0.0,
            sell_tax: 0.0,
            tax_modifiable: false,
            buyable: true,
            can_sell_all: true,
            balance_change_by_owner: false,
            trading_cooldown: false,
            trading_pausable: false,
            anti_whale: false,
            slippage_modifiable: false,
            personal_slippage_modifiable: false,
            transfer_pausable: false,
        }
    }
}

impl SecurityProfile {
    pub fn validate(&self) -> Result<(), String> {
        for (name, tax) in [("buy_tax", self.buy_tax), ("sell_tax", self.sell_tax)] {
            if !(0.0..=1.0).contains(&tax) {
                return Err(format!("{name} {tax} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Flags that appear in legitimate tokens too and never decide alone.
    pub fn soft_signals(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.anti_whale {
            out.push("anti_whale");
        }
        if self.trading_cooldown {
            out.push("trading_cooldown");
        }
        if self.tax_modifiable {
            out.push("tax_modifiable");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub t_count: u64,
    pub t_impact: f64,
    pub tax_threshold: f64,
    pub min_owner_actions_layer4: u64,
    pub delta: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub theta_p: Option<f64>,
    pub theta_v: Option<f64>,
    pub first_month_seconds: i64,
    /// A pool is alive if it saw an order this close to the observation end.
    pub alive_horizon_seconds: i64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            t_count: 5,
            t_impact: 0.95,
            tax_threshold: 0.5,
            min_owner_actions_layer4: 3,
            delta: 0.95,
            beta: 0.0,
            epsilon: 0.95,
            theta_p: None,
            theta_v: None,
            first_month_seconds: FIRST_MONTH_SECONDS,
            alive_horizon_seconds: FIRST_MONTH_SECONDS,
        }
    }
}

const CONFIG_KEYS: &[&str] = &[
    "t_count",
    "t_impact",
    "tax_threshold",
    "min_owner_actions_layer4",
    "delta",
    "beta",
    "epsilon",
    "theta_p",
    "theta_v",
    "first_month_seconds",
    "alive_horizon_seconds",
];

impl HeuristicConfig {
    /// Reads a `key = value` file over the defaults.
    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let kv = KvFile::parse(text)?;
        kv.reject_unknown(CONFIG_KEYS)?;
        let mut cfg = Self::default();
        kv.set("t_count", &mut cfg.t_count)?;
        kv.set("t_impact", &mut cfg.t_impact)?;
        kv.set("tax_threshold", &mut cfg.tax_threshold)?;
        kv.set("min_owner_actions_layer4", &mut cfg.min_owner_actions_layer4)?;
        kv.set("delta", &mut cfg.delta)?;
        kv.set("beta", &mut cfg.beta)?;
        kv.set("epsilon", &mut cfg.epsilon)?;
        kv.set_opt("theta_p", &mut cfg.theta_p)?;
        kv.set_opt("theta_v", &mut cfg.theta_v)?;
        kv.set("first_month_seconds", &mut cfg.first_month_seconds)?;
        kv.set("alive_horizon_seconds", &mut cfg.alive_horizon_seconds)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv_string(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "disabled".to_string(), |x| x.to_string());
        format!(
            "t_count = {}\nt_impact = {}\ntax_threshold = {}\nmin_owner_actions_layer4 = {}\n\
             delta = {}\nbeta = {}\nepsilon = {}\ntheta_p = {}\ntheta_v = {}\n\
             first_month_seconds = {}\nalive_horizon_seconds = {}\n",
            self.t_count,
            self.t_impact,
            self.tax_threshold,
            self.min_owner_actions_layer4,
            self.delta,
            self.beta,
            self.epsilon,
            opt(self.theta_p),
            opt(self.theta_v),
            self.first_month_seconds,
            self.alive_horizon_seconds,
        )
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.t_impact > 0.0 && self.t_impact <= RUGPULL_IMPACT) {
            return bad(format!("t_impact {} must lie in (0, {RUGPULL_IMPACT}]", self.t_impact));
        }
        if self.t_count < 1 {
            return bad("t_count must be >= 1".into());
        }
        if self.min_owner_actions_layer4 > self.t_count {
            return bad(format!(
                "min_owner_actions_layer4 {} exceeds t_count {}",
                self.min_owner_actions_layer4, self.t_count
            ));
        }
        if !(0.0..=1.0).contains(&self.tax_threshold) {
            return bad(format!("tax_threshold {} outside [0, 1]", self.tax_threshold));
        }
        for (name, v) in [("delta", self.delta), ("beta", self.beta), ("epsilon", self.epsilon)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a non-negative number"));
            }
        }
        for (name, v) in [("theta_p", self.theta_p), ("theta_v", self.theta_v)] {
            if matches!(v, Some(t) if !(t > 0.0)) {
                return bad(format!("{name} must be positive when enabled"));
            }
        }
        if self.first_month_seconds <= 0 || self.alive_horizon_seconds <= 0 {
            return bad("time spans must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Legitimate,
    RugPull,
    Honeypot,
    #[serde(rename = "SLID")]
    Slid,
    Undetermined,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Legitimate => "Legitimate",
            Label::RugPull => "RugPull",
            Label::Honeypot => "Honeypot",
            Label::Slid => "SLID",
            Label::Undetermined => "Undetermined",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "legitimate" => Ok(Label::Legitimate),
            "rugpull" => Ok(Label::RugPull),
            "honeypot" => Ok(Label::Honeypot),
            "slid" => Ok(Label::Slid),
            "undetermined" => Ok(Label::Undetermined),
            _ => Err(format!("unknown label '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerOutcome {
    Pass,
    Fail,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStep {
    pub layer: String,
    pub outcome: LayerOutcome,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub honeypot_pass: bool,
    pub profit_pass: bool,
    pub owner_activity_pass: bool,
    /// No security profile was available; the honeypot check was skipped.
    pub honeypot_unknown: bool,
    pub layer_trace: Vec<LayerStep>,
}

/// Returns `(is_honeypot, pass)`.
pub fn honeypot_validate(profile: &SecurityProfile, cfg: &HeuristicConfig) -> (bool, bool) {
    let p = profile;
    let is_honeypot = p.buy_tax > cfg.tax_threshold
        || p.sell_tax > cfg.tax_threshold
        || !p.buyable
        || !p.can_sell_all
        || p.balance_change_by_owner
        || p.trading_pausable
        || p.transfer_pausable
        || p.slippage_modifiable
        || p.personal_slippage_modifiable;
    (is_honeypot, !is_honeypot)
}

fn honeypot_reason(p: &SecurityProfile, cfg: &HeuristicConfig) -> String {
    let mut hits = Vec::new();
    if p.buy_tax > cfg.tax_threshold {
        hits.push(format!("buy_tax {}", p.buy_tax));
    }
    if p.sell_tax > cfg.tax_threshold {
        hits.push(format!("sell_tax {}", p.sell_tax));
    }
    let flags = [
        (!p.buyable, "not buyable"),
        (!p.can_sell_all, "cannot sell all"),
        (p.balance_change_by_owner, "balance_change_by_owner"),
        (p.trading_pausable, "trading_pausable"),
        (p.transfer_pausable, "transfer_pausable"),
        (p.slippage_modifiable, "slippage_modifiable"),
        (p.personal_slippage_modifiable, "personal_slippage_modifiable"),
    ];
    hits.extend(flags.iter().filter(|(on, _)| *on).map(|(_, n)| n.to_string()));
    hits.join(", ")
}

/// Profit validator over the realized and first-month unrealized figures.
pub fn profit_passes(realized_usd: f64, unrealized_first_month_usd: f64) -> bool {
    realized_usd > 0.0 && unrealized_first_month_usd > 0.0
}

pub fn profit_validate(report: &ProfitReport) -> bool {
    profit_passes(report.realized_profit_usd, report.unrealized_first_month_usd)
}

/// Owner-activity validator over aggregated impact statistics.
pub fn owner_activity_passes(pool: &PoolRecord, impacts: &ImpactStats, cfg: &HeuristicConfig) -> bool {
    !pool.lpt_burned && impacts.count >= cfg.t_count && impacts.max.is_none_or(|m| m < cfg.t_impact)
}

pub fn owner_activity_validate(pool: &PoolRecord, events: &[ProfitTakingEvent], cfg: &HeuristicConfig) -> bool {
    owner_activity_passes(pool, &ImpactStats::from_events(events), cfg)
}

pub fn rugpull_detected(pool: &PoolRecord, impacts: &ImpactStats) -> bool {
    !pool.lpt_burned && impacts.max.is_some_and(|m| m >= RUGPULL_IMPACT)
}

/// Baseline rug-pull detector: an unburned pool with one exit of at least 95%.
pub fn rugpull_detect(pool: &PoolRecord, events: &[ProfitTakingEvent]) -> bool {
    rugpull_detected(pool, &ImpactStats::from_events(events))
}

/// Everything the layered filter needs, in constant size.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassifyInput {
    pub realized_profit_usd: f64,
    pub unrealized_first_month_usd: f64,
    pub impacts: ImpactStats,
    pub owner_activity_count: u64,
}

impl From<&ProfitSummary> for ClassifyInput {
    fn from(s: &ProfitSummary) -> Self {
        Self {
            realized_profit_usd: s.realized_profit_usd,
            unrealized_first_month_usd: s.unrealized_first_month_usd,
            impacts: s.impacts,
            owner_activity_count: s.owner_activity_count,
        }
    }
}

impl From<&ProfitReport> for ClassifyInput {
    fn from(r: &ProfitReport) -> Self {
        Self {
            realized_profit_usd: r.realized_profit_usd,
            unrealized_first_month_usd: r.unrealized_first_month_usd,
            impacts: r.impact_stats(),
            owner_activity_count: r.owner_activity_count,
        }
    }
}

pub fn classify_pool(
    pool: &PoolRecord,
    profile: Option<&SecurityProfile>,
    report: &ProfitReport,
    cfg: &HeuristicConfig,
) -> Verdict {
    classify(pool, profile, &ClassifyInput::from(report), cfg)
}

/// Four filtering layers followed by the three validators.
pub fn classify(
    pool: &PoolRecord,
    profile: Option<&SecurityProfile>,
    input: &ClassifyInput,
    cfg: &HeuristicConfig,
) -> Verdict {
    let (honeypot_pass, honeypot_unknown, honeypot_why) = match profile {
        Some(p) => {
            let (is_hp, pass) = honeypot_validate(p, cfg);
            let why = if is_hp { honeypot_reason(p, cfg) } else { "no restriction".to_string() };
            (pass, false, why)
        }
        None => {
            log::warn!("pool {}: no security profile, honeypot check skipped", pool.pool_address);
            (true, true, "security profile missing".to_string())
        }
    };
    let profit_pass = profit_passes(input.realized_profit_usd, input.unrealized_first_month_usd);
    let owner_activity_pass = owner_activity_passes(pool, &input.impacts, cfg);

    let mut trace = Vec::new();
    let mut step = |layer: &str, outcome, reason: String| {
        trace.push(LayerStep { layer: layer.to_string(), outcome, reason });
    };

    let label = 'decide: {
        if input.realized_profit_usd <= 0.0 {
            step("L1 owner profit", LayerOutcome::Fail, format!("realized {:.6}", input.realized_profit_usd));
            break 'decide if input.impacts.count == 0 { Label::Legitimate } else { Label::Undetermined };
        }
        step("L1 owner profit", LayerOutcome::Pass, format!("realized {:.6}", input.realized_profit_usd));

        if !honeypot_pass {
            step("L2 honeypot", LayerOutcome::Fail, honeypot_why);
            break 'decide Label::Honeypot;
        }
        let outcome = if honeypot_unknown { LayerOutcome::Unknown } else { LayerOutcome::Pass };
        step("L2 honeypot", outcome, honeypot_why);

        if rugpull_detected(pool, &input.impacts) {
            step("L3 rug pull", LayerOutcome::Fail, format!("max impact {:.6}", input.impacts.max.unwrap_or(0.0)));
            break 'decide Label::RugPull;
        }
        step("L3 rug pull", LayerOutcome::Pass, "no exit at or above 0.95".into());

        if input.owner_activity_count < cfg.min_owner_actions_layer4 {
            step(
                "L4 owner activity",
                LayerOutcome::Fail,
                format!("{} owner activities", input.owner_activity_count),
            );
            break 'decide Label::Undetermined;
        }
        step("L4 owner activity", LayerOutcome::Pass, format!("{} owner activities", input.owner_activity_count));

        let pass = |b: bool| if b { LayerOutcome::Pass } else { LayerOutcome::Fail };
        step(
            "profit validator",
            pass(profit_pass),
            format!("unrealized first month {:.6}", input.unrealized_first_month_usd),
        );
        step(
            "owner activity validator",
            pass(owner_activity_pass),
            format!(
                "{} exits, max impact {:.6}, lpt_burned {}",
                input.impacts.count,
                input.impacts.max.unwrap_or(0.0),
                pool.lpt_burned
            ),
        );
        if honeypot_pass && profit_pass && owner_activity_pass {
            Label::Slid
        } else {
            Label::Undetermined
        }
    };

    Verdict { label, honeypot_pass, profit_pass, owner_activity_pass, honeypot_unknown, layer_trace: trace }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityOutcome {
    pub stable: bool,
    pub evaluated: bool,
    pub price_rel_std: Option<f64>,
    pub volume_rel_std: Option<f64>,
}

fn relative_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if mean == 0.0 {
        if std == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        std / mean.abs()
    }
}

/// Low-volatility diagnostic. Never feeds classification.
pub fn stability_check<N: ReserveNum>(
    state: &LedgerState<N>,
    cfg: &HeuristicConfig,
) -> Result<StabilityOutcome, ValidatorError> {
    if cfg.theta_p.is_none() && cfg.theta_v.is_none() {
        return Ok(StabilityOutcome { stable: true, evaluated: false, price_rel_std: None, volume_rel_std: None });
    }
    if state.price_series.is_empty() || state.volume_series.is_empty() {
        return Err(ValidatorError::EmptySeries);
    }
    let p = relative_std(state.price_series.iter().map(|&(_, v)| v));
    let v = relative_std(state.volume_series.iter().map(|&(_, v)| v));
    let stable = cfg.theta_p.is_none_or(|t| p < t) && cfg.theta_v.is_none_or(|t| v < t);
    Ok(StabilityOutcome { stable, evaluated: true, price_rel_std: Some(p), volume_rel_std: Some(v) })
}

/// The fraudulent-action conditions evaluated on an owner's exits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrainDiagnostics {
    pub lpt_unburned: bool,
    /// Every owner sell moved less than `delta` of the pool.
    pub small_sells: bool,
    /// Every owner withdrawal moved less than `epsilon` of the pool.
    pub bounded_withdrawals: bool,
    /// Cumulative withdrawal impact exceeds `beta`.
    pub significant_total: bool,
}

pub fn drain_diagnostics(pool: &PoolRecord, events: &[ProfitTakingEvent], cfg: &HeuristicConfig) -> DrainDiagnostics {
    let finite = events.iter().filter(|e| e.has_finite_impact());
    let small_sells = finite.clone().filter(|e| e.kind == OrderCategory::Sell).all(|e| e.impact < cfg.delta);
    let withdrawals = finite.filter(|e| e.kind == OrderCategory::Withdraw);
    let bounded_withdrawals = withdrawals.clone().all(|e| e.impact < cfg.epsilon);
    let total: f64 = withdrawals.map(|e| e.impact).sum();
    DrainDiagnostics {
        lpt_unburned: !pool.lpt_burned,
        small_sells,
        bounded_withdrawals,
        significant_total: total > cfg.beta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::FastLedger;
    use crate::testutil::pool;
    use proptest::prelude::*;

    fn event(impact: f64, kind: OrderCategory) -> ProfitTakingEvent {
        ProfitTakingEvent {
            order_index: 0,
            timestamp: 0,
            kind,
            value_usd: impact * 100.0,
            pool_value_before_usd: 100.0,
            impact,
        }
    }

    fn sells(impacts: &[f64]) -> Vec<ProfitTakingEvent> {
        impacts.iter().map(|&i| event(i, OrderCategory::Sell)).collect()
    }

    fn report(realized: f64, unrealized: f64, events: Vec<ProfitTakingEvent>, activity: u64) -> ProfitReport {
        ProfitReport {
            realized_profit_usd: realized,
            unrealized_first_month_usd: unrealized,
            profit_taking_count: events.len(),
            profit_taking: events,
            owner_activity_count: activity,
            ..ProfitReport::default()
        }
    }

    #[test]
    fn honeypot_examples() {
        let cfg = HeuristicConfig::default();
        let p = SecurityProfile { buy_tax: 0.6, ..SecurityProfile::default() };
        assert_eq!(honeypot_validate(&p, &cfg), (true, false));
        assert_eq!(honeypot_validate(&SecurityProfile::default(), &cfg), (false, true));
        let p = SecurityProfile { can_sell_all: false, ..SecurityProfile::default() };
        assert!(honeypot_validate(&p, &cfg).0);
        let soft = SecurityProfile { anti_whale: true, trading_cooldown: true, ..SecurityProfile::default() };
        assert_eq!(honeypot_validate(&soft, &cfg), (false, true));
        assert_eq!(soft.soft_signals(), vec!["anti_whale", "trading_cooldown"]);
    }

    #[test]
    fn profit_examples() {
        assert!(!profit_validate(&report(-101.0, 500.0, vec![], 0)));
        assert!(!profit_validate(&report(35.0, 0.0, vec![], 0)));
        assert!(profit_validate(&report(35.0, 1e-14, vec![], 0)));
    }

    #[test]
    fn owner_activity_examples() {
        let cfg = HeuristicConfig::default();
        let mut burned = pool("o", 0);
        burned.lpt_burned = true;
        assert!(!owner_activity_validate(&burned, &sells(&[0.3; 10]), &cfg));
        let p = pool("o", 0);
        assert!(owner_activity_validate(&p, &sells(&[0.3; 6]), &cfg));
        assert!(!owner_activity_validate(&p, &sells(&[0.3, 0.3, 0.3, 0.3, 0.3, 0.95]), &cfg));
        assert!(!owner_activity_validate(&p, &sells(&[0.3; 4]), &cfg));
    }

    #[test]
    fn rugpull_examples() {
        let p = pool("o", 0);
        assert!(rugpull_detect(&p, &[event(0.999, OrderCategory::Withdraw)]));
        assert!(!rugpull_detect(&p, &sells(&[0.42; 20])));
        assert!(!rugpull_detect(&p, &[]));
        assert!(rugpull_detect(&p, &sells(&[0.95])));
        assert!(!rugpull_detect(&p, &[event(f64::INFINITY, OrderCategory::Sell)]));
    }

    #[test]
    fn classify_legitimate_rugpull_slid() {
        let cfg = HeuristicConfig::default();
        let mut legit = pool("o", 0);
        legit.lpt_burned = true;
        let v = classify_pool(&legit, Some(&SecurityProfile::default()), &report(-1000.0, 900.0, vec![], 2), &cfg);
        assert_eq!(v.label, Label::Legitimate);
        assert_eq!(v.layer_trace.len(), 1);

        let p = pool("o", 0);
        let rug = report(5000.0, 10.0, vec![event(0.99, OrderCategory::Withdraw)], 2);
        assert_eq!(classify_pool(&p, Some(&SecurityProfile::default()), &rug, &cfg).label, Label::RugPull);

        let impacts: Vec<f64> = (0..423).map(|i| 0.07 + 0.36 * (i as f64 / 422.0)).collect();
        let slid = report(617_000.0, 1.56e5, sells(&impacts), 424);
        let v = classify_pool(&p, Some(&SecurityProfile::default()), &slid, &cfg);
        assert_eq!(v.label, Label::Slid);
        assert!(v.honeypot_pass && v.profit_pass && v.owner_activity_pass);
        assert_eq!(v.layer_trace.len(), 6);
    }

    #[test]
    fn honeypot_and_missing_profile() {
        let cfg = HeuristicConfig::default();
        let p = pool("o", 0);
        let r = report(100.0, 10.0, sells(&[0.1; 6]), 7);
        let hp = SecurityProfile { sell_tax: 0.9, ..SecurityProfile::default() };
        assert_eq!(classify_pool(&p, Some(&hp), &r, &cfg).label, Label::Honeypot);
        let v = classify_pool(&p, None, &r, &cfg);
        assert_eq!(v.label, Label::Slid);
        assert!(v.honeypot_unknown);
        assert_eq!(v.layer_trace[1].outcome, LayerOutcome::Unknown);
    }

    #[test]
    fn layer4_needs_three_owner_actions() {
        let cfg = HeuristicConfig::default();
        let r = report(100.0, 10.0, sells(&[0.1, 0.1]), 2);
        let v = classify_pool(&pool("o", 0), Some(&SecurityProfile::default()), &r, &cfg);
        assert_eq!(v.label, Label::Undetermined);
        assert_eq!(v.layer_trace.last().unwrap().layer, "L4 owner activity");
    }

    #[test]
    fn config_round_trip_and_rejections() {
        let cfg = HeuristicConfig { t_count: 7, theta_p: Some(0.1), ..HeuristicConfig::default() };
        assert_eq!(HeuristicConfig::from_kv_str(&cfg.to_kv_string()).unwrap(), cfg);
        assert!(HeuristicConfig::from_kv_str("t_impact = 0.99").is_err());
        assert!(HeuristicConfig::from_kv_str("t_count = 0").is_err());
        assert!(HeuristicConfig::from_kv_str("t_count = 2").is_err());
        assert!(matches!(HeuristicConfig::from_kv_str("bogus = 1"), Err(ConfigError::UnknownKey(_))));
    }

    fn series_ledger(prices: &[f64], volumes: &[f64]) -> FastLedger {
        let mut s = FastLedger::new("p");
        s.price_series = prices.iter().enumerate().map(|(i, &p)| (i as i64, p)).collect();
        s.volume_series = volumes.iter().enumerate().map(|(i, &v)| (i as i64, v)).collect();
        s
    }

    #[test]
    fn stability_examples() {
        let on = HeuristicConfig { theta_p: Some(0.1), theta_v: Some(0.1), ..HeuristicConfig::default() };
        let flat = series_ledger(&[2.0; 5], &[10.0; 5]);
        assert!(stability_check(&flat, &on).unwrap().stable);
        let halved = series_ledger(&[2.0, 1.0], &[10.0, 10.0]);
        assert!(!stability_check(&halved, &on).unwrap().stable);
        let off = stability_check(&halved, &HeuristicConfig::default()).unwrap();
        assert!(off.stable && !off.evaluated);
        assert_eq!(stability_check(&series_ledger(&[], &[]), &on), Err(ValidatorError::EmptySeries));
    }

    #[test]
    fn drain_conditions() {
        let cfg = HeuristicConfig::default();
        let events = vec![event(0.2, OrderCategory::Sell), event(0.3, OrderCategory::Withdraw)];
        let d = drain_diagnostics(&pool("o", 0), &events, &cfg);
        assert!(d.lpt_unburned && d.small_sells && d.bounded_withdrawals && d.significant_total);
        let d = drain_diagnostics(&pool("o", 0), &sells(&[0.2]), &cfg);
        assert!(!d.significant_total);
    }

    fn arb_input() -> impl Strategy<Value = (ClassifyInput, bool, bool)> {
        (
            -100.0..100.0f64,
            -10.0..10.0f64,
            proptest::collection::vec(0.0..1.2f64, 0..12),
            0u64..15,
            any::<bool>(),
            any::<bool>(),
        )
            .prop_map(|(realized, unrealized, impacts, extra, burned, honeypot)| {
                let mut stats = ImpactStats::default();
                for i in &impacts {
                    stats.push(*i);
                }
                let input = ClassifyInput {
                    realized_profit_usd: realized,
                    unrealized_first_month_usd: unrealized,
                    impacts: stats,
                    owner_activity_count: impacts.len() as u64 + extra,
                };
                (input, burned, honeypot)
            })
    }

    proptest! {
        #[test]
        fn verdict_invariants((input, burned, honeypot) in arb_input(), t_count in 3u64..10) {
            let mut p = pool("o", 0);
            p.lpt_burned = burned;
            let profile = SecurityProfile { trading_pausable: honeypot, ..SecurityProfile::default() };
            let cfg = HeuristicConfig { t_count, ..HeuristicConfig::default() };
            let v = classify(&p, Some(&profile), &input, &cfg);
            prop_assert_eq!(v.label == Label::Slid, v.honeypot_pass && v.profit_pass && v.owner_activity_pass);
            if rugpull_detected(&p, &input.impacts) {
                prop_assert_ne!(v.label, Label::Slid);
            }
            let stricter = HeuristicConfig { t_count: t_count + 1, ..cfg.clone() };
            let v2 = classify(&p, Some(&profile), &input, &stricter);
            if v.label != Label::Slid {
                prop_assert_ne!(v2.label, Label::Slid);
            }
            prop_assert_eq!(v, classify(&p, Some(&profile), &input, &cfg));
        }
    }
}
