//! Repeated random train/test splits with median test R^2.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{r_squared, Dataset, ModelSpec, Standardizer};
use crate::error::{Error, Result};
use crate::fmt::real;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnessOptions {
    pub n_splits: usize,
    pub train_frac: f64,
    pub seed: u64,
    /// Standardize features with training-set statistics before fitting.
    pub standardize: bool,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions { n_splits: 100, train_frac: 0.5, seed: 0, standardize: false }
    }
}

/// Held-out prediction from the first split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPrediction {
    pub cluster_id: usize,
    pub node_id: usize,
    pub actual: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: String,
    pub seed: u64,
    pub train_r2: Vec<f64>,
    /// `NaN` where the test targets of a split were constant.
    pub test_r2: Vec<f64>,
    pub median_test_r2: f64,
    pub undefined_splits: usize,
    pub rank_deficient_fits: usize,
    pub unconverged_fits: usize,
    pub first_split_predictions: Vec<SplitPrediction>,
}

impl FitReport {
    /// `split,train_r2,test_r2` rows followed by a `#` summary line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("split,train_r2,test_r2\n");
        for (s, (tr, te)) in self.train_r2.iter().zip(&self.test_r2).enumerate() {
            let _ = writeln!(out, "{s},{},{}", real(*tr), real(*te));
        }
        let _ = writeln!(
            out,
            "# model={} splits={} seed={} median_test_r2={} undefined_splits={} rank_deficient_fits={} unconverged_fits={}",
            self.model,
            self.test_r2.len(),
            self.seed,
            real(self.median_test_r2),
            self.undefined_splits,
            self.rank_deficient_fits,
            self.unconverged_fits
        );
        out
    }

    pub fn predictions_csv(&self) -> String {
        let mut out = String::from("cluster_id,node_id,actual,predicted\n");
        for p in &self.first_split_predictions {
            let _ = writeln!(out, "{},{},{},{}", p.cluster_id, p.node_id, real(p.actual), real(p.predicted));
        }
        out
    }
}

/// Median of the finite values (mean of the middle two when even); `NaN`
/// when none are finite.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

struct SplitOutcome {
    train_r2: f64,
    test_r2: f64,
    rank_deficient: bool,
    not_converged: bool,
    predictions: Vec<SplitPrediction>,
}

/// Fits `spec` on `n_splits` seeded random partitions and reports R^2 per split.
pub fn split_harness(data: &Dataset, spec: &ModelSpec, opts: &HarnessOptions) -> Result<FitReport> {
    let n = data.len();
    if n < 4 {
        return Err(Error::validation(format!("split harness needs at least 4 rows, got {n}")));
    }
    if opts.n_splits < 1 {
        return Err(Error::validation("n_splits must be >= 1"));
    }
    if !(opts.train_frac > 0.0 && opts.train_frac < 1.0) {
        return Err(Error::validation(format!("train_frac must lie in (0, 1), got {}", opts.train_frac)));
    }
    let n_train = ((n as f64 * opts.train_frac).round() as usize).clamp(2, n - 2);

    let outcomes = (0..opts.n_splits)
        .into_par_iter()
        .map(|s| -> Result<SplitOutcome> {
            let mut rng = stream(opts.seed, s as u64, 0);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let model_seed: u64 = rng.gen();
            let (mut train, mut test) = (data.subset(&perm[..n_train]), data.subset(&perm[n_train..]));
            if opts.standardize {
                let st = Standardizer::fit(&train);
                train = st.transform(&train);
                test = st.transform(&test);
            }
            let fitted = spec.fit(&train, model_seed)?;
            let train_pred = fitted.predictor.predict(&train);
            let test_pred = fitted.predictor.predict(&test);
            let predictions = if s == 0 {
                (0..test.len())
                    .map(|i| SplitPrediction {
                        cluster_id: test.ids()[i],
                        node_id: test.node_ids()[i],
                        actual: test.targets()[i],
                        predicted: test_pred[i],
                    })
                    .collect()
            } else {
                Vec::new()
            };
            Ok(SplitOutcome {
                train_r2: r_squared(train.targets(), &train_pred).unwrap_or(f64::NAN),
                test_r2: r_squared(test.targets(), &test_pred).unwrap_or(f64::NAN),
                rank_deficient: fitted.diag.rank_deficient,
                not_converged: fitted.diag.not_converged,
                predictions,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let test_r2: Vec<f64> = outcomes.iter().map(|o| o.test_r2).collect();
    Ok(FitReport {
        model: spec.name().to_string(),
        seed: opts.seed,
        train_r2: outcomes.iter().map(|o| o.train_r2).collect(),
        median_test_r2: median(&test_r2),
        undefined_splits: test_r2.iter().filter(|v| v.is_nan()).count(),
        test_r2,
        rank_deficient_fits: outcomes.iter().filter(|o| o.rank_deficient).count(),
        unconverged_fits: outcomes.iter().filter(|o| o.not_converged).count(),
        first_split_predictions: outcomes.into_iter().next().map(|o| o.predictions).unwrap_or_default(),
    })
}
