use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use slid_core::features::FeatureVector;

use crate::forest::ForestParams;
use crate::logistic::LogisticParams;
use crate::EarlyWarnError;

pub const MODEL_FORMAT: &str = "slid-classifier";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    LogisticRegression,
    RandomForest,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::LogisticRegression => "logistic",
            ModelKind::RandomForest => "forest",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" | "lr" | "logisticregression" => Ok(ModelKind::LogisticRegression),
            "forest" | "rf" | "randomforest" => Ok(ModelKind::RandomForest),
            other => Err(format!("unknown model kind '{other}' (logistic, forest)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Logistic(LogisticParams),
    Forest(ForestParams),
}

/// Trained classifier plus everything needed to apply it to a feature row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    /// (negative, positive)
    pub class_weights: (f64, f64),
    pub hyperparameters: BTreeMap<String, f64>,
    pub feature_names: Vec<String>,
    pub threshold: f64,
    pub parameters: ModelParams,
}

impl ClassifierModel {
    pub fn score_row(&self, x: &[f64]) -> Result<f64, EarlyWarnError> {
        if x.len() != self.feature_names.len() {
            return Err(EarlyWarnError::DimensionMismatch { expected: self.feature_names.len(), got: x.len() });
        }
        Ok(match &self.parameters {
            ModelParams::Logistic(p) => p.score(x),
            ModelParams::Forest(p) => p.score(x),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), EarlyWarnError> {
        let text = serde_json::to_string(self).map_err(|e| EarlyWarnError::Model(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| EarlyWarnError::Model(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, EarlyWarnError> {
        let text = std::fs::read_to_string(path).map_err(|e| EarlyWarnError::Model(format!("{}: {e}", path.display())))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| EarlyWarnError::Model(e.to_string()))?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(EarlyWarnError::Model(format!("unsupported model container {} v{}", m.format, m.version)));
        }
        Ok(m)
    }
}

/// Returns (label, score) with label = score ≥ model threshold.
pub fn predict(model: &ClassifierModel, v: &FeatureVector) -> Result<(bool, f64), EarlyWarnError> {
    let s = model.score_row(&v.values)?;
    Ok((s >= model.threshold, s))
}
