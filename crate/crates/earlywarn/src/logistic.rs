//! Logistic regression fit by full-batch gradient descent on z-scored inputs.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticHyper {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: u32,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn standardizer(x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let dim = x[0].len();
    let mut mean = vec![0.0; dim];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for row in x {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let scale = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
    (mean, scale)
}

/// `sample_weight` already folds in class weights.
pub fn fit(x: &[Vec<f64>], y: &[bool], sample_weight: &[f64], h: &LogisticHyper) -> LogisticParams {
    let (mean, scale) = standardizer(x);
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|row| row.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect())
        .collect();
    let dim = mean.len();
    let total: f64 = sample_weight.iter().sum();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut grad = vec![0.0; dim];
    for _ in 0..h.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for ((row, &label), &sw) in z.iter().zip(y).zip(sample_weight) {
            let p = sigmoid(b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>());
            let err = sw * (p - f64::from(u8::from(label)));
            gb += err;
            for (g, a) in grad.iter_mut().zip(row) {
                *g += err * a;
            }
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= h.learning_rate * (g / total + h.l2 * *wi);
        }
        b -= h.learning_rate * gb / total;
    }
    LogisticParams { mean, scale, weights: w, bias: b }
}

impl LogisticParams {
    pub fn score(&self, x: &[f64]) -> f64 {
        let z: f64 = x
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .zip(&self.weights)
            .map(|(((v, m), s), w)| (v - m) / s * w)
            .sum();
        sigmoid(self.bias + z)
    }

    /// Model that ignores its input and returns `p`.
    pub fn constant(dim: usize, p: f64) -> Self {
        let p = p.clamp(1e-6, 1.0 - 1e-6);
        Self { mean: vec![0.0; dim], scale: vec![1.0; dim], weights: vec![0.0; dim], bias: (p / (1.0 - p)).ln() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn separates_a_threshold() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, 3.0]).collect();
        let y: Vec<bool> = (0..40).map(|i| i >= 20).collect();
        let p = fit(&x, &y, &[1.0; 40], &LogisticHyper { learning_rate: 0.5, l2: 0.0, epochs: 500 });
        assert!(p.score(&[35.0, 3.0]) > 0.9);
        assert!(p.score(&[2.0, 3.0]) < 0.1);
        assert_eq!(p.weights[1], 0.0);
    }
}
