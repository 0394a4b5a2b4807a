//! `slid`: generate corpora, detect slow liquidity drains, export features,
//! train early-warning models and sweep observation windows.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use slid_core::features::write_feature_csv;
use slid_core::io::{
    analyze, detect_stream, ingest, read_feature_csv, write_report_csv, write_verdicts_csv, AnalysisKind, BaseWhitelist,
    CorpusWriter, FileSource, IoError,
};
use slid_core::kv::ConfigError;
use slid_core::synth::corpus::for_each_pool;
use slid_core::synth::CorpusConfig;
use slid_core::validators::{HeuristicConfig, Label};
use slid_earlywarn::sweep::DEFAULT_D_LIST;
use slid_earlywarn::{predict, sweep, train, write_sweep_csv, ClassifierModel, Detector, EarlyWarnError, HyperGrid, ModelKind, SweepConfig};

#[derive(Parser, Debug)]
#[command(name = "slid", version, about = "Slow liquidity drain detection toolkit")]
struct Cli {
    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Inputs {
    #[arg(long)]
    pools: PathBuf,
    #[arg(long)]
    orders: PathBuf,
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Heuristic configuration (`key = value`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base-token whitelist (`SYMBOL = address`).
    #[arg(long)]
    whitelist: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit a synthetic corpus as JSONL.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        anonymize: bool,
    },
    /// Run the heuristic pipeline over streamed orders.
    Detect {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        anonymize: bool,
    },
    /// Re-emit a dataset sorted and filtered.
    Ingest {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        anonymize: bool,
    },
    /// Export the feature matrix for one observation window.
    Features {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        window: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on an exported feature matrix.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "forest")]
        model: ModelKind,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// `full` grid search or a `single` default point.
        #[arg(long, default_value = "full")]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a feature matrix with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Retrain and evaluate every detector for each window in the list.
    Sweep {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_D_LIST)]
        d_list: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "heuristic,logistic,forest")]
        detectors: Vec<Detector>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "full")]
        grid: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Age, owner profit-taking or user trend report.
    Report {
        #[arg(long)]
        kind: AnalysisKind,
        #[command(flatten)]
        inputs: Inputs,
        /// Restrict to pools the heuristic labels this way (e.g. SLID).
        #[arg(long)]
        only: Option<Label>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn heuristic_config(path: Option<&Path>) -> Result<HeuristicConfig> {
    match path {
        Some(p) => Ok(HeuristicConfig::from_kv_str(&read_text(p)?)?),
        None => Ok(HeuristicConfig::default()),
    }
}

fn grid(name: &str) -> Result<HyperGrid> {
    match name {
        "full" => Ok(HyperGrid::default()),
        "single" => Ok(HyperGrid::default().single()),
        other => Err(ConfigError::InvalidValue { key: "grid".into(), message: format!("'{other}' (full, single)") }.into()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

impl Inputs {
    fn source(&self) -> FileSource {
        FileSource::new(&self.pools, &self.orders, self.profiles.clone())
    }

    fn whitelist(&self) -> Result<BaseWhitelist> {
        match &self.whitelist {
            Some(p) => Ok(BaseWhitelist::from_kv_str(&read_text(p)?)?),
            None => Ok(BaseWhitelist::default()),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { config, out, anonymize } => {
            let cfg = match config {
                Some(p) => CorpusConfig::from_kv_str(&read_text(&p)?)?,
                None => CorpusConfig::default(),
            };
            let mut w = CorpusWriter::create(&out, anonymize)?;
            for_each_pool(&cfg, |p| w.write(&p))?;
            log::info!("wrote {} pools, {} orders to {}", w.pool_count, w.order_count, out.display());
            w.finish()?;
        }
        Command::Detect { inputs, out, anonymize } => {
            let cfg = heuristic_config(inputs.config.as_deref())?;
            let (rows, stats) = detect_stream(&mut inputs.source(), &inputs.whitelist()?, &cfg)?;
            for (reason, n) in &stats.skipped {
                log::warn!("skipped {n} rows: {reason}");
            }
            write_verdicts_csv(create(&out)?, &rows, anonymize)?;
        }
        Command::Ingest { inputs, out, anonymize } => {
            let ds = ingest(&mut inputs.source(), &inputs.whitelist()?)?;
            ds.write(&out, anonymize)?;
        }
        Command::Features { inputs, window, out } => {
            if window == 0 {
                return Err(ConfigError::InvalidValue { key: "window".into(), message: "must be at least 1".into() }.into());
            }
            let cfg = heuristic_config(inputs.config.as_deref())?;
            let ds = ingest(&mut inputs.source(), &inputs.whitelist()?)?;
            let labels = ds.slid_labels(&cfg);
            let rows = ds.feature_matrix(window, &labels, &cfg)?;
            write_feature_csv(create(&out)?, &rows)?;
        }
        Command::Train { features, model, seed, grid: g, out } => {
            let rows = read_feature_csv(&features)?;
            let m = train(&rows, model, seed, &grid(&g)?)?;
            m.save(&out)?;
        }
        Command::Predict { model, features, out } => {
            let m = ClassifierModel::load(&model)?;
            let rows = read_feature_csv(&features)?;
            let mut w = csv::Writer::from_writer(create(&out)?);
            w.write_record(["pool_address", "label", "score"])?;
            for r in &rows {
                let (label, score) = predict(&m, r)?;
                w.write_record([r.pool_address.clone(), u8::from(label).to_string(), score.to_string()])?;
            }
            w.flush()?;
        }
        Command::Sweep { corpus, d_list, detectors, seed, grid: g, config, out } => {
            if d_list.contains(&0) {
                return Err(ConfigError::InvalidValue { key: "d-list".into(), message: "windows must be at least 1".into() }.into());
            }
            let ds = ingest(&mut FileSource::dir(&corpus), &BaseWhitelist::default())?;
            let cfg = SweepConfig {
                d_list,
                detectors,
                seed,
                grid: grid(&g)?,
                heuristic: heuristic_config(config.as_deref())?,
                ..SweepConfig::default()
            };
            let metrics = sweep(&ds, &cfg)?;
            write_sweep_csv(create(&out)?, &metrics)?;
        }
        Command::Report { kind, inputs, only, out } => {
            let cfg = heuristic_config(inputs.config.as_deref())?;
            let ds = ingest(&mut inputs.source(), &inputs.whitelist()?)?;
            let filter: Option<BTreeSet<String>> = only.map(|label| {
                slid_core::io::detect_dataset(&ds, &cfg)
                    .into_iter()
                    .filter(|r| r.label == label)
                    .map(|r| r.pool_address)
                    .collect()
            });
            let report = analyze(&ds, kind, filter.as_ref(), cfg.alive_horizon_seconds);
            write_report_csv(create(&out)?, &report, kind)?;
        }
    }
    Ok(())
}

/// Machine-readable error code and process exit status.
fn classify_error(err: &anyhow::Error) -> (&'static str, u8) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<IoError>() {
            return match e {
                IoError::Schema { .. } => ("SCHEMA", 2),
                IoError::EmptyDataset => ("EMPTY_DATASET", 3),
                IoError::Config(_) => ("CONFIG", 4),
                IoError::Synth(_) => ("CONFIG", 4),
                IoError::File { .. } | IoError::Csv(_) => ("IO", 1),
            };
        }
        if cause.downcast_ref::<ConfigError>().is_some() {
            return ("CONFIG", 4);
        }
        if cause.downcast_ref::<slid_core::synth::SynthError>().is_some() {
            return ("CONFIG", 4);
        }
        if let Some(e) = cause.downcast_ref::<EarlyWarnError>() {
            return match e {
                EarlyWarnError::SingleClassInput | EarlyWarnError::DimensionMismatch { .. } => ("TRAINING", 1),
                EarlyWarnError::Model(_) | EarlyWarnError::Io(_) => ("IO", 1),
                EarlyWarnError::Ledger(_) => ("LEDGER", 1),
            };
        }
        if cause.downcast_ref::<slid_core::LedgerError>().is_some() {
            return ("LEDGER", 1);
        }
    }
    ("IO", 1)
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("ERROR USAGE: {}", one_line(&e.to_string()));
            return ExitCode::from(4);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, status) = classify_error(&e);
            eprintln!("ERROR {code}: {}", one_line(&format!("{e:#}")));
            ExitCode::from(status)
        }
    }
}
