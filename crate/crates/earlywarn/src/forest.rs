//! Random forest of CART trees grown on quantile-binned features.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Upper bound on candidate thresholds per feature.
const MAX_BINS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestHyper {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub max_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// `usize::MAX` marks a leaf.
    pub feature: usize,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    /// Weighted positive fraction at the node.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            let n = &self.nodes[i];
            if n.feature == usize::MAX {
                return n.value;
            }
            i = if x[n.feature] <= n.threshold { n.left } else { n.right } as usize;
        }
    }

    pub fn leaf(value: f64) -> Self {
        Self { nodes: vec![Node { feature: usize::MAX, threshold: 0.0, left: 0, right: 0, value }] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: Vec<Tree>,
}

impl ForestParams {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.score(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Column-major bin codes plus the raw threshold behind every bin edge.
struct Binned {
    codes: Vec<Vec<u8>>,
    edges: Vec<Vec<f64>>,
}

fn bin_features(x: &[Vec<f64>]) -> Binned {
    let dim = x[0].len();
    let mut codes = Vec::with_capacity(dim);
    let mut edges = Vec::with_capacity(dim);
    for f in 0..dim {
        let mut col: Vec<f64> = x.iter().map(|r| r[f]).collect();
        col.sort_by(f64::total_cmp);
        col.dedup();
        let cuts: Vec<f64> = if col.len() <= MAX_BINS {
            col.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect()
        } else {
            let mut c: Vec<f64> = (1..MAX_BINS).map(|k| col[k * col.len() / MAX_BINS - 1]).collect();
            c.dedup();
            c
        };
        codes.push(x.iter().map(|r| cuts.partition_point(|t| *t < r[f]) as u8).collect());
        edges.push(cuts);
    }
    Binned { codes, edges }
}

struct Grower<'a> {
    data: &'a Binned,
    y: &'a [bool],
    h: ForestHyper,
    nodes: Vec<Node>,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

impl Grower<'_> {
    /// `rows` pairs a row index with its bootstrap weight times class weight.
    fn grow(&mut self, rows: &mut [(u32, f64)], depth: usize, rng: &mut ChaCha8Rng) -> u32 {
        let (pos, total) = rows.iter().fold((0.0, 0.0), |(p, t), &(i, w)| {
            (p + if self.y[i as usize] { w } else { 0.0 }, t + w)
        });
        let id = self.nodes.len() as u32;
        let value = if total > 0.0 { pos / total } else { 0.0 };
        self.nodes.push(Node { feature: usize::MAX, threshold: 0.0, left: 0, right: 0, value });
        if depth >= self.h.max_depth || rows.len() < 2 * self.h.min_leaf || pos <= 0.0 || pos >= total {
            return id;
        }
        let Some((feature, bin)) = self.best_split(rows, pos, total, rng) else { return id };
        let codes = &self.data.codes[feature];
        let mut mid = 0;
        for k in 0..rows.len() {
            if codes[rows[k].0 as usize] as usize <= bin {
                rows.swap(k, mid);
                mid += 1;
            }
        }
        let (l, r) = rows.split_at_mut(mid);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        let n = &mut self.nodes[id as usize];
        n.feature = feature;
        n.threshold = self.data.edges[feature][bin];
        n.left = left;
        n.right = right;
        id
    }

    fn best_split(&self, rows: &[(u32, f64)], pos: f64, total: f64, rng: &mut ChaCha8Rng) -> Option<(usize, usize)> {
        let dim = self.data.codes.len();
        let parent = gini(pos, total) * total;
        let mut best: Option<(f64, usize, usize)> = None;
        let mut hist_w = [0.0f64; MAX_BINS];
        let mut hist_p = [0.0f64; MAX_BINS];
        let mut hist_n = [0usize; MAX_BINS];
        for f in sample(rng, dim, self.h.max_features.min(dim)).into_iter() {
            let nb = self.data.edges[f].len() + 1;
            if nb < 2 {
                continue;
            }
            hist_w[..nb].fill(0.0);
            hist_p[..nb].fill(0.0);
            hist_n[..nb].fill(0);
            let codes = &self.data.codes[f];
            for &(i, w) in rows {
                let b = codes[i as usize] as usize;
                hist_w[b] += w;
                hist_n[b] += 1;
                if self.y[i as usize] {
                    hist_p[b] += w;
                }
            }
            let (mut lw, mut lp, mut ln) = (0.0, 0.0, 0usize);
            for b in 0..nb - 1 {
                lw += hist_w[b];
                lp += hist_p[b];
                ln += hist_n[b];
                if ln < self.h.min_leaf || rows.len() - ln < self.h.min_leaf {
                    continue;
                }
                let rw = total - lw;
                let gain = parent - gini(lp, lw) * lw - gini(pos - lp, rw) * rw;
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, b));
                }
            }
        }
        best.map(|(_, f, b)| (f, b))
    }
}

fn tree_seed(seed: u64, t: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (t as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

/// `class_weight` is (negative, positive).
pub fn fit(x: &[Vec<f64>], y: &[bool], class_weight: (f64, f64), h: &ForestHyper, seed: u64) -> ForestParams {
    let data = bin_features(x);
    let n = x.len();
    let trees = (0..h.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, t));
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
            let mut rows: Vec<(u32, f64)> = counts
                .iter()
                .enumerate()
                .filter(|(_, c)| **c > 0)
                .map(|(i, &c)| (i as u32, c as f64 * if y[i] { class_weight.1 } else { class_weight.0 }))
                .collect();
            let mut g = Grower { data: &data, y, h: *h, nodes: Vec::new() };
            g.grow(&mut rows, 0, &mut rng);
            Tree { nodes: g.nodes }
        })
        .collect();
    ForestParams { trees }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper() -> ForestHyper {
        ForestHyper { trees: 20, max_depth: 8, min_leaf: 1, max_features: 2 }
    }

    #[test]
    fn learns_an_interaction() {
        let x: Vec<Vec<f64>> = (0..200).map(|i| vec![(i % 10) as f64, (i / 10 % 10) as f64, 1.0]).collect();
        let y: Vec<bool> = x.iter().map(|r| (r[0] >= 5.0) != (r[1] >= 5.0)).collect();
        let f = fit(&x, &y, (1.0, 1.0), &hyper(), 3);
        let correct = x.iter().zip(&y).filter(|(r, l)| (f.score(r) >= 0.5) == **l).count();
        assert!(correct >= 190, "{correct}");
    }

    #[test]
    fn same_seed_same_forest() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, (i * 7 % 13) as f64]).collect();
        let y: Vec<bool> = (0..50).map(|i| i % 3 == 0).collect();
        assert_eq!(fit(&x, &y, (1.0, 2.0), &hyper(), 9), fit(&x, &y, (1.0, 2.0), &hyper(), 9));
    }

    #[test]
    fn thresholds_bound_bins() {
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![(i * i) as f64]).collect();
        let b = bin_features(&x);
        assert!(b.edges[0].len() < MAX_BINS);
        for (row, code) in x.iter().zip(&b.codes[0]) {
            let c = *code as usize;
            assert!(c == b.edges[0].len() || row[0] <= b.edges[0][c]);
            assert!(c == 0 || row[0] > b.edges[0][c - 1]);
        }
    }
}
