//! Random forest of variance-reduction regression trees.
//!
//! Each tree is grown on a bootstrap resample with `m_try` candidate features
//! per split. Tree `t` draws from the stream keyed by `(seed, t)`, so a forest
//! is bit-identical for a fixed seed regardless of thread count.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use super::{Dataset, Predictor};
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` means `ceil(n_features / 3)`.
    pub m_try: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, max_depth: 12, min_leaf: 3, m_try: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TreeNode {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf(v) => return v,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf(_) => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Grower<'a, R: Rng> {
    data: &'a Dataset,
    max_depth: usize,
    min_leaf: usize,
    m_try: usize,
    rng: R,
    nodes: Vec<TreeNode>,
}

impl<R: Rng> Grower<'_, R> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let y = self.data.targets();
        let n = idx.len();
        let sum: f64 = idx.iter().map(|&i| y[i]).sum();
        let mean = sum / n as f64;
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf(mean));

        let constant = idx.iter().all(|&i| y[i] == y[idx[0]]);
        if depth >= self.max_depth || n < 2 * self.min_leaf || constant {
            return at;
        }

        // Maximizing sum_L^2/n_L + sum_R^2/n_R minimizes the children's SSE.
        let parent_score = sum * sum / n as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        let p = self.data.n_features();
        let features = sample(&mut self.rng, p, self.m_try.min(p));
        let mut order: Vec<(f64, f64)> = Vec::with_capacity(n);
        for f in features.iter() {
            order.clear();
            order.extend(idx.iter().map(|&i| (self.data.row(i)[f], y[i])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for split in 1..n {
                left_sum += order[split - 1].1;
                if split < self.min_leaf || n - split < self.min_leaf {
                    continue;
                }
                let (lo, hi) = (order[split - 1].0, order[split].0);
                if lo == hi {
                    continue;
                }
                let right_sum = sum - left_sum;
                let score = left_sum * left_sum / split as f64 + right_sum * right_sum / (n - split) as f64;
                if best.is_none_or(|(s, _, _)| score > s) {
                    let mid = lo + (hi - lo) / 2.0;
                    best = Some((score, f, if mid < hi { mid } else { lo }));
                }
            }
        }

        let Some((score, feature, threshold)) = best else {
            return at;
        };
        if score <= parent_score * (1.0 + 1e-12) {
            return at;
        }
        let split = partition(idx, |i| self.data.row(i)[feature] <= threshold);
        let (left_idx, right_idx) = idx.split_at_mut(split);
        let left = self.grow(left_idx, depth + 1);
        let right = self.grow(right_idx, depth + 1);
        self.nodes[at] = TreeNode::Split { feature, threshold, left, right };
        at
    }
}

/// Stable in-place partition; returns the size of the `true` block.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| pred(i));
    let k = yes.len();
    idx[..k].copy_from_slice(&yes);
    idx[k..].copy_from_slice(&no);
    k
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

impl RandomForest {
    /// Forest over an explicit tree list, e.g. the union of two forests.
    pub fn from_trees(trees: Vec<RegressionTree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::validation("a forest needs at least one tree"));
        }
        Ok(RandomForest { trees })
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }
}

impl Predictor for RandomForest {
    fn predict_row(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn fit_random_forest(train: &Dataset, params: &ForestParams) -> Result<RandomForest> {
    if params.n_trees < 1 {
        return Err(Error::validation("n_trees must be >= 1"));
    }
    if params.min_leaf < 1 {
        return Err(Error::validation("min_leaf must be >= 1"));
    }
    let p = train.n_features();
    let m_try = params.m_try.unwrap_or(p.div_ceil(3)).max(1);
    if p > 0 && m_try > p {
        return Err(Error::validation(format!("m_try {m_try} exceeds feature count {p}")));
    }
    let n = train.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(params.seed, t as u64, 0);
            let mut idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut grower = Grower {
                data: train,
                max_depth: params.max_depth,
                min_leaf: params.min_leaf,
                m_try: if p == 0 { 0 } else { m_try },
                rng,
                nodes: Vec::new(),
            };
            grower.grow(&mut idx, 0);
            RegressionTree { nodes: grower.nodes }
        })
        .collect();
    Ok(RandomForest { trees })
}
