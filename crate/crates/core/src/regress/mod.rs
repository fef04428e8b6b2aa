//! Regression suite: ordinary least squares, Bayesian ridge, k-nearest
//! neighbours and random forest, plus the repeated random-split harness.

pub mod bayes;
pub mod forest;
pub mod harness;
pub mod knn;
pub mod linear;

use crate::error::{Error, Result};
use crate::survey::JoinedSample;

pub use bayes::{fit_bayesian_ridge, BayesParams, BayesianRidge};
pub use forest::{fit_random_forest, ForestParams, RandomForest};
pub use harness::{median, split_harness, FitReport, HarnessOptions, SplitPrediction};
pub use knn::{fit_knn, KnnRegressor};
pub use linear::{fit_linear, LinearModel};

/// Row-major feature matrix with targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    ids: Vec<usize>,
    node_ids: Vec<usize>,
}

impl Dataset {
    /// `ids` default to `0..n` and node ids to the same when absent.
    pub fn new(rows: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        Self::with_ids(rows, y, (0..n).collect(), (0..n).collect())
    }

    pub fn with_ids(rows: Vec<Vec<f64>>, y: Vec<f64>, ids: Vec<usize>, node_ids: Vec<usize>) -> Result<Self> {
        let n = y.len();
        if rows.len() != n || ids.len() != n || node_ids.len() != n {
            return Err(Error::validation("dataset rows, targets and ids differ in length"));
        }
        if n < 2 {
            return Err(Error::validation(format!("dataset needs at least 2 rows, got {n}")));
        }
        let n_features = rows[0].len();
        let mut x = Vec::with_capacity(n * n_features);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_features {
                return Err(Error::validation(format!("row {i} has {} features, expected {n_features}", r.len())));
            }
            x.extend_from_slice(r);
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::validation("dataset contains non-finite values"));
        }
        Ok(Dataset { n_features, x, y, ids, node_ids })
    }

    pub fn from_joined(samples: &[JoinedSample]) -> Result<Self> {
        Self::with_ids(
            samples.iter().map(|s| s.features.clone()).collect(),
            samples.iter().map(|s| s.target).collect(),
            samples.iter().map(|s| s.cluster_id).collect(),
            samples.iter().map(|s| s.node_id).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn node_ids(&self) -> &[usize] {
        &self.node_ids
    }

    pub fn target_mean(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.len() as f64
    }

    /// Rows at `indices`, in that order. Subsets may hold a single row.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            x.extend_from_slice(self.row(i));
        }
        Dataset {
            n_features: self.n_features,
            x,
            y: indices.iter().map(|&i| self.y[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i]).collect(),
            node_ids: indices.iter().map(|&i| self.node_ids[i]).collect(),
        }
    }

    fn map_rows(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Dataset {
        let x: Vec<f64> = self.rows().flat_map(f).collect();
        Dataset { x, ..self.clone() }
    }
}

/// A fitted regression model.
pub trait Predictor: Send + Sync {
    fn predict_row(&self, x: &[f64]) -> f64;

    fn predict(&self, data: &Dataset) -> Vec<f64> {
        data.rows().map(|r| self.predict_row(r)).collect()
    }
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r_squared(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::validation("targets and predictions differ in length"));
    }
    if y.len() < 2 {
        return Err(Error::validation("R^2 needs at least two points"));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::domain("R^2 is undefined for a constant target"));
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Predicts the training mean everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanModel(pub f64);

impl Predictor for MeanModel {
    fn predict_row(&self, _x: &[f64]) -> f64 {
        self.0
    }
}

/// Model choice plus hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Linear,
    BayesianRidge(BayesParams),
    Knn {
        k: usize,
    },
    RandomForest(ForestParams),
    /// Baseline that ignores the features.
    TrainMean,
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Linear => "lr",
            ModelSpec::BayesianRidge(_) => "brr",
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::RandomForest(_) => "rf",
            ModelSpec::TrainMean => "mean",
        }
    }

    /// Spec with default hyperparameters for a short name (`lr`, `brr`, `knn`, `rf`, `mean`).
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "lr" => ModelSpec::Linear,
            "brr" => ModelSpec::BayesianRidge(BayesParams::default()),
            "knn" => ModelSpec::Knn { k: 5 },
            "rf" => ModelSpec::RandomForest(ForestParams::default()),
            "mean" => ModelSpec::TrainMean,
            other => {
                return Err(Error::validation(format!(
                    "unknown model `{other}` (expected one of lr, brr, knn, rf, mean)"
                )))
            }
        })
    }

    /// Fits on `train`; `seed` only matters for the random forest.
    pub fn fit(&self, train: &Dataset, seed: u64) -> Result<FittedModel> {
        let mut diag = FitDiagnostics::default();
        let predictor: Box<dyn Predictor> = match self {
            ModelSpec::Linear => {
                let m = fit_linear(train)?;
                diag.rank_deficient = m.rank_deficient();
                Box::new(m)
            }
            ModelSpec::BayesianRidge(p) => {
                let m = fit_bayesian_ridge(train, p)?;
                diag.not_converged = !m.converged();
                Box::new(m)
            }
            ModelSpec::Knn { k } => Box::new(fit_knn(train, *k)?),
            ModelSpec::RandomForest(p) => Box::new(fit_random_forest(train, &ForestParams { seed, ..p.clone() })?),
            ModelSpec::TrainMean => Box::new(MeanModel(train.target_mean())),
        };
        Ok(FittedModel { predictor, diag })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FitDiagnostics {
    pub rank_deficient: bool,
    pub not_converged: bool,
}

pub struct FittedModel {
    pub predictor: Box<dyn Predictor>,
    pub diag: FitDiagnostics,
}

/// Per-feature centering and scaling estimated on training data. Constant
/// features keep unit scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &Dataset) -> Self {
        let n = data.len() as f64;
        let p = data.n_features();
        let mut mean = vec![0.0; p];
        for r in data.rows() {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; p];
        for r in data.rows() {
            var.iter_mut().zip(r.iter().zip(&mean)).for_each(|(s, (v, m))| *s += (v - m).powi(2) / n);
        }
        let scale = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, scale }
    }

    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.mean.iter().zip(&self.scale)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn transform(&self, data: &Dataset) -> Dataset {
        data.map_rows(|r| self.transform_row(r))
    }
}
