use std::collections::BTreeMap;

use rayon::prelude::*;
use slid_core::features::{FeatureVector, FEATURE_NAMES};

use crate::eval::{stratified_folds, Confusion};
use crate::forest::{self, ForestHyper, ForestParams, Tree};
use crate::logistic::{self, LogisticHyper, LogisticParams};
use crate::model::{ClassifierModel, ModelKind, ModelParams, MODEL_FORMAT, MODEL_VERSION};
use crate::EarlyWarnError;

#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub learning_rate: Vec<f64>,
    pub l2: Vec<f64>,
    pub epochs: Vec<u32>,
    pub trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_leaf: Vec<usize>,
    /// Features tried per split.
    pub max_features: usize,
    pub folds: usize,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            learning_rate: vec![0.01, 0.1],
            l2: vec![0.0, 0.01, 0.1],
            epochs: vec![500],
            trees: vec![50, 100],
            max_depth: vec![8, 16],
            min_leaf: vec![1, 5],
            max_features: (FEATURE_NAMES.len() as f64).sqrt() as usize,
            folds: 5,
        }
    }
}

impl HyperGrid {
    /// One-point grid, for fast runs.
    pub fn single(&self) -> Self {
        Self {
            learning_rate: vec![self.learning_rate[self.learning_rate.len() - 1]],
            l2: vec![self.l2[self.l2.len() / 2]],
            epochs: vec![self.epochs[0]],
            trees: vec![self.trees[0]],
            max_depth: vec![self.max_depth[0]],
            min_leaf: vec![self.min_leaf[0]],
            ..self.clone()
        }
    }

    fn candidates(&self, kind: ModelKind) -> Vec<Candidate> {
        let mut out = Vec::new();
        match kind {
            ModelKind::LogisticRegression => {
                for &learning_rate in &self.learning_rate {
                    for &l2 in &self.l2 {
                        for &epochs in &self.epochs {
                            out.push(Candidate::Logistic(LogisticHyper { learning_rate, l2, epochs }));
                        }
                    }
                }
            }
            ModelKind::RandomForest => {
                for &trees in &self.trees {
                    for &max_depth in &self.max_depth {
                        for &min_leaf in &self.min_leaf {
                            out.push(Candidate::Forest(ForestHyper {
                                trees,
                                max_depth,
                                min_leaf,
                                max_features: self.max_features,
                            }));
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Candidate {
    Logistic(LogisticHyper),
    Forest(ForestHyper),
}

impl Candidate {
    fn to_map(self) -> BTreeMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match self {
            Candidate::Logistic(h) => vec![("learning_rate", h.learning_rate), ("l2", h.l2), ("epochs", h.epochs as f64)],
            Candidate::Forest(h) => vec![
                ("trees", h.trees as f64),
                ("max_depth", h.max_depth as f64),
                ("min_leaf", h.min_leaf as f64),
                ("max_features", h.max_features as f64),
            ],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    fn fit(self, x: &[Vec<f64>], y: &[bool], weights: (f64, f64), seed: u64) -> ModelParams {
        let pos = y.iter().filter(|l| **l).count();
        if pos == 0 || pos == y.len() {
            return constant(self, x[0].len(), if pos == 0 { 0.0 } else { 1.0 });
        }
        match self {
            Candidate::Logistic(h) => {
                let sw: Vec<f64> = y.iter().map(|&l| if l { weights.1 } else { weights.0 }).collect();
                ModelParams::Logistic(logistic::fit(x, y, &sw, &h))
            }
            Candidate::Forest(h) => ModelParams::Forest(forest::fit(x, y, weights, &h, seed)),
        }
    }
}

fn constant(c: Candidate, dim: usize, p: f64) -> ModelParams {
    match c {
        Candidate::Logistic(_) => ModelParams::Logistic(LogisticParams::constant(dim, p)),
        Candidate::Forest(_) => ModelParams::Forest(ForestParams { trees: vec![Tree::leaf(p)] }),
    }
}

fn score(params: &ModelParams, x: &[f64]) -> f64 {
    match params {
        ModelParams::Logistic(p) => p.score(x),
        ModelParams::Forest(p) => p.score(x),
    }
}

/// Weights inversely proportional to class frequency, (negative, positive).
pub fn balanced_weights(y: &[bool]) -> (f64, f64) {
    let n = y.len() as f64;
    let pos = y.iter().filter(|l| **l).count() as f64;
    let neg = n - pos;
    let w = |c: f64| if c > 0.0 { n / (2.0 * c) } else { 1.0 };
    (w(neg), w(pos))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub class_weighting: bool,
    pub threshold: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { class_weighting: true, threshold: 0.5 }
    }
}

pub fn train(
    matrix: &[FeatureVector],
    kind: ModelKind,
    seed: u64,
    grid: &HyperGrid,
) -> Result<ClassifierModel, EarlyWarnError> {
    train_with(matrix, kind, seed, grid, &TrainOptions::default())
}

pub fn train_with(
    matrix: &[FeatureVector],
    kind: ModelKind,
    seed: u64,
    grid: &HyperGrid,
    opts: &TrainOptions,
) -> Result<ClassifierModel, EarlyWarnError> {
    let dim = FEATURE_NAMES.len();
    if let Some(bad) = matrix.iter().find(|v| v.values.len() != dim) {
        return Err(EarlyWarnError::DimensionMismatch { expected: dim, got: bad.values.len() });
    }
    let x: Vec<Vec<f64>> = matrix.iter().map(|v| v.values.clone()).collect();
    let y: Vec<bool> = matrix.iter().map(|v| v.label).collect();
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    train_rows(&x, &y, names, kind, seed, grid, opts)
}

/// Same as [`train_with`] over raw rows with explicit feature names.
pub fn train_rows(
    x: &[Vec<f64>],
    y: &[bool],
    feature_names: Vec<String>,
    kind: ModelKind,
    seed: u64,
    grid: &HyperGrid,
    opts: &TrainOptions,
) -> Result<ClassifierModel, EarlyWarnError> {
    let dim = feature_names.len();
    if let Some(bad) = x.iter().find(|r| r.len() != dim) {
        return Err(EarlyWarnError::DimensionMismatch { expected: dim, got: bad.len() });
    }
    let pos = y.iter().filter(|l| **l).count();
    if pos == 0 || pos == y.len() {
        return Err(EarlyWarnError::SingleClassInput);
    }
    let weights = if opts.class_weighting { balanced_weights(y) } else { (1.0, 1.0) };
    let candidates = grid.candidates(kind);
    let model = |c: Candidate, parameters| ClassifierModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        kind,
        class_weights: weights,
        hyperparameters: c.to_map(),
        feature_names: feature_names.clone(),
        threshold: opts.threshold,
        parameters,
    };

    if x.iter().all(|r| r == &x[0]) {
        log::warn!("SingleSignal: all feature rows are identical; model predicts the majority class");
        let majority = if 2 * pos > y.len() { 1.0 } else { 0.0 };
        return Ok(model(candidates[0], constant(candidates[0], dim, majority)));
    }

    let best = if candidates.len() == 1 {
        candidates[0]
    } else {
        let folds = stratified_folds(y, grid.folds, seed);
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|&c| cv_f1(c, x, y, &folds, grid.folds, seed, opts))
            .collect();
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        log::debug!("grid search {kind}: best {:?} (cv f1 {:.4})", candidates[best], scores[best]);
        candidates[best]
    };
    Ok(model(best, best.fit(x, y, weights, seed)))
}

fn cv_f1(c: Candidate, x: &[Vec<f64>], y: &[bool], folds: &[usize], k: usize, seed: u64, opts: &TrainOptions) -> f64 {
    let mut total = 0.0;
    for f in 0..k {
        let (mut tx, mut ty, mut vx, mut vy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..x.len() {
            if folds[i] == f {
                vx.push(x[i].clone());
                vy.push(y[i]);
            } else {
                tx.push(x[i].clone());
                ty.push(y[i]);
            }
        }
        if vx.is_empty() || tx.is_empty() {
            continue;
        }
        let w = if opts.class_weighting { balanced_weights(&ty) } else { (1.0, 1.0) };
        let params = c.fit(&tx, &ty, w, seed ^ (f as u64 + 1));
        let c = Confusion::from_pairs(vx.iter().zip(&vy).map(|(r, &l)| (score(&params, r) >= opts.threshold, l)));
        total += c.f1();
    }
    total / k as f64
}
