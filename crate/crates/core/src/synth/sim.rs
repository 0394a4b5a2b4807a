//! Integer constant-product pool that emits [`DexOrder`]s with exact balances.

use crate::amount::TokenAmount;
use crate::ledger::amm::{quote_in_ceil, quote_out_floor};
use crate::ledger::{DexOrder, LedgerError, OrderCategory};

/// Fractional digits of both tokens.
pub const DECIMALS: u8 = 6;
pub const UNIT: u128 = 1_000_000;

const GENESIS_TS: i64 = 1_600_000_000;
const GENESIS_BLOCK: u64 = 10_000_000;

pub fn usd_to_units(usd: f64) -> u128 {
    (usd.max(0.0) * UNIT as f64).round() as u128
}

pub fn units_to_usd(units: u128) -> f64 {
    units as f64 / UNIT as f64
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent per-item seed drawn from a corpus seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Deterministic 20-byte hex address.
pub fn address(seed: u64, tag: u64) -> String {
    let a = splitmix64(seed ^ splitmix64(tag));
    let b = splitmix64(a);
    let c = splitmix64(b);
    format!("0x{a:016x}{b:016x}{:08x}", c as u32)
}

fn tx_hash(seed: u64, seq: u64) -> String {
    let mut parts = [0u64; 4];
    let mut x = seed ^ seq.wrapping_mul(0xA076_1D64_78BD_642F);
    for p in &mut parts {
        x = splitmix64(x);
        *p = x;
    }
    format!("0x{:016x}{:016x}{:016x}{:016x}", parts[0], parts[1], parts[2], parts[3])
}

fn amount(units: u128) -> TokenAmount {
    TokenAmount::from_units(units, DECIMALS)
}

#[derive(Debug, Clone)]
pub struct PoolSim {
    pub pool_address: String,
    pub reserve_paired: u128,
    pub reserve_base: u128,
    pub lp_total: u128,
    pub created: i64,
    last_ts: i64,
    hash_seed: u64,
    seq: u64,
    /// When false only reserves move; no orders are kept.
    pub record: bool,
    pub orders: Vec<DexOrder>,
}

impl PoolSim {
    pub fn new(pool_address: String, created: i64, hash_seed: u64) -> Self {
        Self {
            pool_address,
            reserve_paired: 0,
            reserve_base: 0,
            lp_total: 0,
            created,
            last_ts: created - 1,
            hash_seed,
            seq: 0,
            record: true,
            orders: Vec::new(),
        }
    }

    pub fn genesis_time(index: u64) -> i64 {
        GENESIS_TS + (index as i64 % 20_000) * 3_600
    }

    /// Strictly increasing timestamps keep the replay order equal to emission order.
    fn next_ts(&mut self, ts: i64) -> i64 {
        let ts = ts.max(self.last_ts + 1);
        self.last_ts = ts;
        ts
    }

    pub fn last_timestamp(&self) -> i64 {
        self.last_ts
    }

    #[allow(clippy::too_many_arguments)]
    fn emit(&mut self, ts: i64, category: OrderCategory, sender: &str, y_paired: u128, y_base: u128, price: f64, gas: f64) {
        let ts = self.next_ts(ts);
        self.seq += 1;
        if !self.record {
            return;
        }
        self.orders.push(DexOrder {
            block: GENESIS_BLOCK + ((ts - GENESIS_TS).max(0) / 12) as u64,
            timestamp: ts,
            hash: tx_hash(self.hash_seed, self.seq),
            category,
            pool_address: self.pool_address.clone(),
            sender: sender.to_string(),
            x_paired: Some(amount(self.reserve_paired)),
            x_base: Some(amount(self.reserve_base)),
            y_paired: amount(y_paired),
            y_base: amount(y_base),
            price_paired: price,
            price_base: 1.0,
            gas_fee_usd: gas,
        });
    }

    fn spot_price(&self) -> f64 {
        if self.reserve_paired == 0 {
            0.0
        } else {
            self.reserve_base as f64 / self.reserve_paired as f64
        }
    }

    pub fn deposit_initial(&mut self, ts: i64, owner: &str, paired: u128, base: u128, gas: f64) -> u128 {
        self.reserve_paired += paired;
        self.reserve_base += base;
        self.lp_total += base;
        let price = self.spot_price();
        self.emit(ts, OrderCategory::Deposit, owner, paired, base, price, gas);
        base
    }

    /// Proportional deposit worth `base` base units; returns minted LP units.
    pub fn deposit(&mut self, ts: i64, sender: &str, base: u128, gas: f64) -> Result<u128, LedgerError> {
        if self.reserve_base == 0 || base == 0 {
            return Err(LedgerError::ZeroReserve);
        }
        let paired = (base * self.reserve_paired).div_ceil(self.reserve_base);
        let minted = base * self.lp_total / self.reserve_base;
        self.reserve_paired += paired;
        self.reserve_base += base;
        self.lp_total += minted;
        let price = self.spot_price();
        self.emit(ts, OrderCategory::Deposit, sender, paired, base, price, gas);
        Ok(minted)
    }

    /// Burns `units` LP units; returns the base units paid out.
    pub fn withdraw_units(&mut self, ts: i64, sender: &str, units: u128, gas: f64) -> u128 {
        let units = units.min(self.lp_total);
        if units == 0 {
            return 0;
        }
        let base = units * self.reserve_base / self.lp_total;
        let paired = units * self.reserve_paired / self.lp_total;
        self.withdraw_exact(ts, sender, units, paired, base, gas)
    }

    /// Withdraws at least `fraction` of the base reserve (rounded up).
    pub fn withdraw_fraction(&mut self, ts: i64, sender: &str, fraction: f64, gas: f64) -> u128 {
        let base = ((self.reserve_base as f64 * fraction).ceil() as u128).min(self.reserve_base);
        let paired = ((self.reserve_paired as f64 * fraction).ceil() as u128).min(self.reserve_paired);
        let units = ((self.lp_total as f64 * fraction).ceil() as u128).min(self.lp_total);
        self.withdraw_exact(ts, sender, units, paired, base, gas)
    }

    fn withdraw_exact(&mut self, ts: i64, sender: &str, units: u128, paired: u128, base: u128, gas: f64) -> u128 {
        let price = self.spot_price();
        self.reserve_paired -= paired;
        self.reserve_base -= base;
        self.lp_total -= units;
        self.emit(ts, OrderCategory::Withdraw, sender, paired, base, price, gas);
        base
    }

    /// Buys paired with `base_in`; returns paired units received.
    pub fn buy(&mut self, ts: i64, sender: &str, base_in: u128, gas: f64) -> Result<u128, LedgerError> {
        let out = quote_out_floor(self.reserve_base, self.reserve_paired, base_in)?;
        if out == 0 {
            return Err(LedgerError::InvalidAmount("buy rounds to zero".into()));
        }
        self.reserve_base += base_in;
        self.reserve_paired -= out;
        self.emit(ts, OrderCategory::Buy, sender, out, base_in, base_in as f64 / out as f64, gas);
        Ok(out)
    }

    /// Sells `paired_in`; returns base units received.
    pub fn sell(&mut self, ts: i64, sender: &str, paired_in: u128, gas: f64) -> Result<u128, LedgerError> {
        let out = quote_out_floor(self.reserve_paired, self.reserve_base, paired_in)?;
        if out == 0 {
            return Err(LedgerError::InvalidAmount("sell rounds to zero".into()));
        }
        self.reserve_paired += paired_in;
        self.reserve_base -= out;
        self.emit(ts, OrderCategory::Sell, sender, paired_in, out, out as f64 / paired_in as f64, gas);
        Ok(out)
    }

    /// Sells enough paired to pull at least `fraction` of the base reserve.
    pub fn sell_for_fraction(&mut self, ts: i64, sender: &str, fraction: f64, gas: f64) -> Result<u128, LedgerError> {
        let target = ((self.reserve_base as f64 * fraction).ceil() as u128).max(1);
        let paired_in = quote_in_ceil(self.reserve_paired, self.reserve_base, target)?;
        self.sell(ts, sender, paired_in, gas)
    }
}
