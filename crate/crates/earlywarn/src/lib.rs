//! Early-warning classifiers over pool feature matrices and the
//! observation-window sweep that compares them with the heuristic.

pub mod eval;
pub mod forest;
pub mod logistic;
pub mod model;
pub mod sweep;
pub mod train;

use thiserror::Error;

pub use eval::{Confusion, Detector, EvalMetrics};
pub use model::{predict, ClassifierModel, ModelKind};
pub use sweep::{speedup, sweep, write_sweep_csv, SweepConfig};
pub use train::{train, train_with, HyperGrid, TrainOptions};

#[derive(Debug, Error)]
pub enum EarlyWarnError {
    #[error("training data contains a single class")]
    SingleClassInput,
    #[error("feature dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model file: {0}")]
    Model(String),
    #[error(transparent)]
    Ledger(#[from] slid_core::LedgerError),
    #[error("{0}")]
    Io(String),
}
