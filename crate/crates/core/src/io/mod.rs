//! JSONL dataset files, ingestion, streaming detection and pool analysis reports.

pub mod analyze;
pub mod detect;
pub mod ingest;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use crate::kv::{ConfigError, KvFile};
use crate::ledger::{DexOrder, PoolRecord};
use crate::synth::{GeneratedPool, ScenarioKind, SynthError};
use crate::validators::{Label, SecurityProfile};

pub use analyze::{analyze, write_report_csv, AnalysisKind, AnalysisReport};
pub use detect::{detect_dataset, detect_stream, write_verdicts_csv, VerdictRow};
pub use ingest::{ingest, ingest_files, Dataset, EnrichedPool, IngestStats};

pub const POOLS_FILE: &str = "pools.jsonl";
pub const ORDERS_FILE: &str = "orders.jsonl";
pub const PROFILES_FILE: &str = "profiles.jsonl";
pub const TRUTH_FILE: &str = "truth.jsonl";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}:{line}: {message}")]
    Schema { path: String, line: u64, message: String },
    #[error("dataset contains no pools")]
    EmptyDataset,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl IoError {
    pub fn file(path: &Path, source: std::io::Error) -> Self {
        IoError::File { path: path.display().to_string(), source }
    }

    pub fn schema(path: &Path, line: u64, message: impl Into<String>) -> Self {
        IoError::Schema { path: path.display().to_string(), line, message: message.into() }
    }
}

/// One SecurityData row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub token_address: String,
    #[serde(flatten)]
    pub profile: SecurityProfile,
}

/// Generator ground truth, one row per pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub pool_address: String,
    pub kind: ScenarioKind,
    pub true_label: Label,
    #[serde(default)]
    pub linked_addresses: Vec<String>,
}

/// Accepted base tokens, by symbol and address.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseWhitelist {
    entries: BTreeMap<String, String>,
}

impl Default for BaseWhitelist {
    fn default() -> Self {
        let entries = [
            ("WETH", "0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2"),
            ("USDT", "0xdac17f958d2ee523a2206206994597c13d831ec7"),
            ("USDC", "0xa0b86991c6218b36c1d19d4a2e9eb0ce3606eb48"),
            ("DAI", "0x6b175474e89094c44da98b954eedeac495271d0f"),
        ];
        Self { entries: entries.iter().map(|(s, a)| (s.to_string(), a.to_string())).collect() }
    }
}

impl BaseWhitelist {
    /// Parses `SYMBOL = address` lines.
    pub fn from_kv_str(text: &str) -> Result<Self, ConfigError> {
        let kv = KvFile::parse(text)?;
        let mut entries = BTreeMap::new();
        for key in kv.keys() {
            let addr = kv.raw(key).unwrap_or_default().to_ascii_lowercase();
            if !addr.starts_with("0x") {
                return Err(ConfigError::InvalidValue { key: key.to_string(), message: "expected a 0x address".into() });
            }
            entries.insert(key.to_ascii_uppercase(), addr);
        }
        if entries.is_empty() {
            return Err(ConfigError::Invalid("base whitelist is empty".into()));
        }
        Ok(Self { entries })
    }

    /// Accepts either a listed address or a listed symbol.
    pub fn allows(&self, base: &str) -> bool {
        let lower = base.to_ascii_lowercase();
        self.entries.values().any(|a| *a == lower) || self.entries.contains_key(&base.to_ascii_uppercase())
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Truncates an address to its first and last five characters.
pub fn anonymize(address: &str) -> String {
    if address.chars().count() <= 10 {
        return address.to_string();
    }
    let head: String = address.chars().take(5).collect();
    let tail: String = address.chars().rev().take(5).collect::<Vec<_>>().into_iter().rev().collect();
    format!("{head}...{tail}")
}

pub(crate) fn anonymize_pool(p: &PoolRecord) -> PoolRecord {
    PoolRecord {
        pool_address: anonymize(&p.pool_address),
        base_address: anonymize(&p.base_address),
        paired_address: anonymize(&p.paired_address),
        owner_address: anonymize(&p.owner_address),
        ..p.clone()
    }
}

pub(crate) fn anonymize_order(o: &DexOrder) -> DexOrder {
    DexOrder { pool_address: anonymize(&o.pool_address), sender: anonymize(&o.sender), ..o.clone() }
}

/// Pluggable source of pools, security profiles and orders.
///
/// Orders are pushed to the sink together with a source position usable
/// in error messages.
pub trait ChainSource {
    fn pools(&mut self) -> Result<Vec<PoolRecord>, IoError>;
    /// `None` when the source carries no security data at all.
    fn profiles(&mut self) -> Result<Option<BTreeMap<String, SecurityProfile>>, IoError>;
    fn orders(&mut self, sink: &mut dyn FnMut(u64, DexOrder) -> Result<(), IoError>) -> Result<(), IoError>;
    /// Describes the order source for error messages.
    fn orders_origin(&self) -> PathBuf;
}

/// Reads the three JSONL files from disk.
#[derive(Debug, Clone)]
pub struct FileSource {
    pub pools_path: PathBuf,
    pub orders_path: PathBuf,
    pub profiles_path: Option<PathBuf>,
}

impl FileSource {
    pub fn new(pools: impl Into<PathBuf>, orders: impl Into<PathBuf>, profiles: Option<PathBuf>) -> Self {
        Self { pools_path: pools.into(), orders_path: orders.into(), profiles_path: profiles }
    }

    /// The standard file names inside a corpus directory.
    pub fn dir(dir: &Path) -> Self {
        Self::new(dir.join(POOLS_FILE), dir.join(ORDERS_FILE), Some(dir.join(PROFILES_FILE)))
    }
}

impl ChainSource for FileSource {
    fn pools(&mut self) -> Result<Vec<PoolRecord>, IoError> {
        let path = self.pools_path.clone();
        let mut pools = Vec::new();
        read_jsonl(&path, |line, p: PoolRecord| {
            p.validate().map_err(|m| IoError::schema(&path, line, m))?;
            pools.push(p);
            Ok(())
        })?;
        Ok(pools)
    }

    fn profiles(&mut self) -> Result<Option<BTreeMap<String, SecurityProfile>>, IoError> {
        let Some(path) = self.profiles_path.clone() else { return Ok(None) };
        if !path.exists() {
            log::warn!("profiles file {} not found; honeypot layer will be Unknown", path.display());
            return Ok(None);
        }
        let mut out = BTreeMap::new();
        read_jsonl(&path, |line, row: ProfileRow| {
            row.profile.validate().map_err(|m| IoError::schema(&path, line, m))?;
            out.insert(row.token_address.to_ascii_lowercase(), row.profile);
            Ok(())
        })?;
        Ok(Some(out))
    }

    fn orders(&mut self, sink: &mut dyn FnMut(u64, DexOrder) -> Result<(), IoError>) -> Result<(), IoError> {
        let path = self.orders_path.clone();
        read_jsonl(&path, |line, o: DexOrder| sink(line, o))
    }

    fn orders_origin(&self) -> PathBuf {
        self.orders_path.clone()
    }
}

/// Calls `f` with every non-blank line parsed as `T`; line numbers start at 1.
pub fn read_jsonl<T: DeserializeOwned>(
    path: &Path,
    mut f: impl FnMut(u64, T) -> Result<(), IoError>,
) -> Result<(), IoError> {
    let file = File::open(path).map_err(|e| IoError::file(path, e))?;
    let mut reader = BufReader::with_capacity(1 << 20, file);
    let mut buf = String::new();
    let mut line = 0u64;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(|e| IoError::file(path, e))?;
        if n == 0 {
            return Ok(());
        }
        line += 1;
        let text = buf.trim_end();
        if text.trim().is_empty() {
            continue;
        }
        let row: T = serde_json::from_str(text).map_err(|e| IoError::schema(path, line, e.to_string()))?;
        f(line, row)?;
    }
}

pub(crate) fn write_row<W: Write, T: Serialize>(w: &mut W, row: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, row)?;
    w.write_all(b"\n")
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    let f = File::create(path).map_err(|e| IoError::file(path, e))?;
    Ok(BufWriter::with_capacity(1 << 20, f))
}

/// Writes a generated corpus in the dataset schemas, one pool at a time.
pub struct CorpusWriter {
    dir: PathBuf,
    pools: BufWriter<File>,
    orders: BufWriter<File>,
    profiles: BufWriter<File>,
    truth: BufWriter<File>,
    anonymize: bool,
    pub pool_count: u64,
    pub order_count: u64,
}

impl CorpusWriter {
    pub fn create(dir: &Path, anonymize: bool) -> Result<Self, IoError> {
        std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            pools: create(&dir.join(POOLS_FILE))?,
            orders: create(&dir.join(ORDERS_FILE))?,
            profiles: create(&dir.join(PROFILES_FILE))?,
            truth: create(&dir.join(TRUTH_FILE))?,
            anonymize,
            pool_count: 0,
            order_count: 0,
        })
    }

    pub fn write(&mut self, g: &GeneratedPool) -> Result<(), IoError> {
        let dir = self.dir.clone();
        let err = |e| IoError::file(&dir, e);
        let anon = |s: &str| if self.anonymize { anonymize(s) } else { s.to_string() };
        let pool = if self.anonymize { anonymize_pool(&g.pool) } else { g.pool.clone() };
        write_row(&mut self.pools, &pool).map_err(err)?;
        for o in &g.orders {
            if self.anonymize {
                write_row(&mut self.orders, &anonymize_order(o)).map_err(err)?;
            } else {
                write_row(&mut self.orders, o).map_err(err)?;
            }
        }
        let profile = ProfileRow { token_address: anon(&g.pool.paired_address), profile: g.profile.clone() };
        write_row(&mut self.profiles, &profile).map_err(err)?;
        let truth = TruthRow {
            pool_address: anon(&g.pool.pool_address),
            kind: g.kind,
            true_label: g.true_label,
            linked_addresses: g.linked_addresses.iter().map(|a| anon(a)).collect(),
        };
        write_row(&mut self.truth, &truth).map_err(err)?;
        self.pool_count += 1;
        self.order_count += g.orders.len() as u64;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), IoError> {
        for w in [&mut self.pools, &mut self.orders, &mut self.profiles, &mut self.truth] {
            w.flush().map_err(|e| IoError::file(&self.dir, e))?;
        }
        Ok(())
    }
}

/// Reads generator ground truth keyed by pool address.
pub fn read_truth(path: &Path) -> Result<BTreeMap<String, TruthRow>, IoError> {
    let mut out = BTreeMap::new();
    read_jsonl(path, |_, row: TruthRow| {
        out.insert(row.pool_address.clone(), row);
        Ok(())
    })?;
    Ok(out)
}

/// Reads a matrix written by [`crate::features::write_feature_csv`]. Missing
/// flags are not stored in the file and come back as `false`.
pub fn read_feature_csv(path: &Path) -> Result<Vec<FeatureVector>, IoError> {
    let file = File::open(path).map_err(|e| IoError::file(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let header = r.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() != 3 + FEATURE_COUNT || names[..3] != ["pool_address", "window_days", "label"] || names[3..] != FEATURE_NAMES {
        return Err(IoError::schema(path, 1, "header does not match the feature schema"));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let bad = |m: String| IoError::schema(path, line, m);
        let window_days = rec[1].parse().map_err(|e| bad(format!("window_days: {e}")))?;
        let label = match &rec[2] {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(bad(format!("label '{other}'"))),
        };
        let values = rec
            .iter()
            .skip(3)
            .map(|v| v.parse::<f64>().map_err(|e| bad(format!("value '{v}': {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(FeatureVector {
            pool_address: rec[0].to_string(),
            window_days,
            label,
            values,
            missing: vec![false; FEATURE_COUNT],
            empty_history: false,
        });
    }
    Ok(out)
}
