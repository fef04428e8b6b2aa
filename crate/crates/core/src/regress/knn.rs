//! Brute-force k-nearest-neighbour regression.

use super::{Dataset, Predictor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnRegressor {
    train: Dataset,
    k: usize,
}

pub fn fit_knn(train: &Dataset, k: usize) -> Result<KnnRegressor> {
    if k < 1 || k > train.len() {
        return Err(Error::validation(format!("k must lie in 1..={} for this training set, got {k}", train.len())));
    }
    Ok(KnnRegressor { train: train.clone(), k })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl KnnRegressor {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Training row indices of the `k` nearest neighbours, ordered by
    /// `(distance, index)`.
    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        let mut order: Vec<(f64, usize)> = self.train.rows().enumerate().map(|(i, r)| (sq_dist(x, r), i)).collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < order.len() {
            order.select_nth_unstable_by(self.k - 1, cmp);
            order.truncate(self.k);
        }
        order.sort_by(cmp);
        order.into_iter().map(|(_, i)| i).collect()
    }
}

impl Predictor for KnnRegressor {
    fn predict_row(&self, x: &[f64]) -> f64 {
        let y = self.train.targets();
        let sum: f64 = self.neighbors(x).iter().map(|&i| y[i]).sum();
        sum / self.k as f64
    }
}
