//! Core library for detecting pools whose owners drain investor liquidity
//! through repeated sells and withdrawals.

pub mod amount;
pub mod ledger;
pub mod kv;
pub mod metrics;
pub mod validators;
pub mod features;
pub mod synth;
pub mod io;

pub use amount::{AmountError, TokenAmount};
pub use ledger::{Dex, DexOrder, LedgerError, LedgerState, OrderCategory, PoolRecord};
