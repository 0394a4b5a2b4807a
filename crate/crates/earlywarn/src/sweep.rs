//! Observation-window sweep: retrain and evaluate every detector at each `d`.

use std::io::Write;

use rayon::prelude::*;
use slid_core::features::FeatureVector;
use slid_core::io::Dataset;
use slid_core::ledger::{DexOrder, PoolRecord};
use slid_core::metrics::{PoolReplay, DAY_SECONDS};
use slid_core::validators::{classify, ClassifyInput, HeuristicConfig, Label, SecurityProfile};

use crate::eval::{stratified_split, Confusion, Detector, EvalMetrics};
use crate::model::predict;
use crate::train::{train, HyperGrid};
use crate::EarlyWarnError;

pub const DEFAULT_D_LIST: [u32; 8] = [267, 150, 100, 60, 59, 58, 57, 56];

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub d_list: Vec<u32>,
    pub detectors: Vec<Detector>,
    pub seed: u64,
    pub test_fraction: f64,
    pub grid: HyperGrid,
    pub heuristic: HeuristicConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            d_list: DEFAULT_D_LIST.to_vec(),
            detectors: vec![Detector::Heuristic, Detector::LogisticRegression, Detector::RandomForest],
            seed: 1,
            test_fraction: 0.2,
            grid: HyperGrid::default(),
            heuristic: HeuristicConfig::default(),
        }
    }
}

/// Heuristic label using only orders inside the first `d` days.
pub fn heuristic_in_window(
    pool: &PoolRecord,
    orders: &[DexOrder],
    profile: Option<&SecurityProfile>,
    d: u32,
    cfg: &HeuristicConfig,
) -> Label {
    let end = pool.created_time_pool + i64::from(d) * DAY_SECONDS;
    let mut replay = PoolReplay::new(pool, cfg.first_month_seconds, false);
    for o in orders.iter().take_while(|o| o.timestamp < end) {
        if replay.push(o).is_err() {
            return Label::Undetermined;
        }
    }
    classify(pool, profile, &ClassifyInput::from(&replay.summary()), cfg).label
}

fn cell_seed(seed: u64, d: u32, detector: Detector) -> u64 {
    seed ^ (u64::from(d) << 8) ^ (detector as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Evaluates every (d, detector) cell on one stratified held-out split.
/// Labels come from the heuristic on each pool's full history.
pub fn sweep(ds: &Dataset, cfg: &SweepConfig) -> Result<Vec<EvalMetrics>, EarlyWarnError> {
    let labels = ds.slid_labels(&cfg.heuristic);
    let y: Vec<bool> = ds.pools.iter().map(|p| labels[&p.pool_address]).collect();
    let (train_idx, test_idx) = stratified_split(&y, cfg.test_fraction, cfg.seed);
    let mut out = Vec::new();
    for &d in &cfg.d_list {
        let needs_features = cfg.detectors.iter().any(|det| det.model_kind().is_some());
        let features = if needs_features { ds.feature_matrix(d, &labels, &cfg.heuristic)? } else { Vec::new() };
        for &det in &cfg.detectors {
            let confusion = match det.model_kind() {
                None => {
                    let pairs: Vec<(bool, bool)> = test_idx
                        .par_iter()
                        .map(|&i| {
                            let p = &ds.pools[i];
                            let profile = if ds.profiles_available { ds.profile_of(p) } else { None };
                            let l = heuristic_in_window(p, ds.orders_of(&p.pool_address), profile, d, &cfg.heuristic);
                            (l == Label::Slid, y[i])
                        })
                        .collect();
                    Confusion::from_pairs(pairs)
                }
                Some(kind) => {
                    let train_rows: Vec<FeatureVector> = train_idx.iter().map(|&i| features[i].clone()).collect();
                    let model = train(&train_rows, kind, cell_seed(cfg.seed, d, det), &cfg.grid)?;
                    let mut pairs = Vec::with_capacity(test_idx.len());
                    for &i in &test_idx {
                        pairs.push((predict(&model, &features[i])?.0, y[i]));
                    }
                    Confusion::from_pairs(pairs)
                }
            };
            let m = EvalMetrics::new(det, d, confusion);
            log::info!("d={d} {det}: f1 {:.4} recall {:.4}", m.f1, m.recall);
            out.push(m);
        }
    }
    Ok(out)
}

/// Smallest evaluated `d` whose F1 reaches 95% of the F1 at the largest `d`.
pub fn earliest_near_plateau(metrics: &[EvalMetrics], detector: Detector) -> Option<u32> {
    let rows: Vec<&EvalMetrics> = metrics.iter().filter(|m| m.detector == detector).collect();
    let plateau = rows.iter().max_by_key(|m| m.window_days)?.f1;
    rows.iter().filter(|m| m.f1 >= 0.95 * plateau).map(|m| m.window_days).min()
}

/// How many times earlier `ml` reaches its plateau than the heuristic.
pub fn speedup(metrics: &[EvalMetrics], ml: Detector) -> Option<f64> {
    let h = earliest_near_plateau(metrics, Detector::Heuristic)?;
    let m = earliest_near_plateau(metrics, ml)?;
    Some(f64::from(h) / f64::from(m))
}

pub fn write_sweep_csv<W: Write>(writer: W, metrics: &[EvalMetrics]) -> Result<(), EarlyWarnError> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| EarlyWarnError::Io(e.to_string());
    w.write_record(["detector", "d", "accuracy", "precision", "recall", "f1", "tp", "fp", "tn", "fn"]).map_err(io)?;
    for m in metrics {
        let c = m.confusion;
        w.write_record([
            m.detector.to_string(),
            m.window_days.to_string(),
            m.accuracy.to_string(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.f1.to_string(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            c.fn_.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| EarlyWarnError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(detector: Detector, d: u32, tp: u64, fn_: u64) -> EvalMetrics {
        EvalMetrics::new(detector, d, Confusion { tp, fp: 0, tn: 100, fn_ })
    }

    #[test]
    fn speedup_uses_plateau_at_largest_window() {
        let rows = vec![
            m(Detector::Heuristic, 267, 10, 0),
            m(Detector::Heuristic, 150, 7, 3),
            m(Detector::Heuristic, 56, 7, 3),
            m(Detector::RandomForest, 267, 20, 0),
            m(Detector::RandomForest, 150, 20, 0),
            m(Detector::RandomForest, 56, 19, 1),
        ];
        assert_eq!(earliest_near_plateau(&rows, Detector::Heuristic), Some(267));
        assert_eq!(earliest_near_plateau(&rows, Detector::RandomForest), Some(56));
        assert!((speedup(&rows, Detector::RandomForest).unwrap() - 267.0 / 56.0).abs() < 1e-12);
        assert_eq!(speedup(&rows, Detector::LogisticRegression), None);
    }

    #[test]
    fn sweep_csv_layout() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[m(Detector::RandomForest, 57, 1, 1)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "detector,d,accuracy,precision,recall,f1,tp,fp,tn,fn");
        assert!(text.lines().nth(1).unwrap().starts_with("forest,57,"));
    }
}
