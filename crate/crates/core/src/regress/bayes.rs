//! Bayesian ridge regression by evidence maximization.
//!
//! Weights carry an isotropic Gaussian prior with precision `alpha`; the noise
//! has precision `beta`. Given the thin SVD `X = U S V^T` of the centered
//! design, the posterior mean is `V diag(s / (s^2 + alpha/beta)) U^T y`, and
//! the two precisions are re-estimated from the effective number of
//! well-determined parameters
//! `gamma = sum(beta s^2 / (alpha + beta s^2))`:
//!
//! ```text
//! alpha <- (gamma + 2 a1) / (|w|^2 + 2 a2)
//! beta  <- (n - gamma + 2 b1) / (|y - X w|^2 + 2 b2)
//! ```
//!
//! with weak Gamma hyperpriors `a1 = a2 = b1 = b2 = 1e-6`, which keep `beta`
//! finite on noiseless data.

use nalgebra::DVector;

use super::linear::{center, intercept_for};
use super::{Dataset, Predictor};
use crate::error::{Error, Result};

const HYPER: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BayesParams {
    pub max_iter: usize,
    /// Relative change in both precisions that counts as converged.
    pub tol: f64,
    /// Holds the weight precision fixed instead of re-estimating it.
    pub fixed_alpha: Option<f64>,
}

impl Default for BayesParams {
    fn default() -> Self {
        BayesParams { max_iter: 300, tol: 1e-4, fixed_alpha: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesianRidge {
    intercept: f64,
    coef: Vec<f64>,
    alpha: f64,
    beta: f64,
    iterations: usize,
    converged: bool,
}

impl BayesianRidge {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    /// Weight precision.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Noise precision.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }
}

impl Predictor for BayesianRidge {
    fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>()
    }
}

pub fn fit_bayesian_ridge(train: &Dataset, params: &BayesParams) -> Result<BayesianRidge> {
    if params.max_iter < 1 {
        return Err(Error::validation("max_iter must be >= 1"));
    }
    if !(params.tol > 0.0) {
        return Err(Error::validation(format!("tol must be > 0, got {}", params.tol)));
    }
    if let Some(a) = params.fixed_alpha {
        if !(a > 0.0) {
            return Err(Error::validation(format!("fixed alpha must be > 0, got {a}")));
        }
    }

    let c = center(train);
    let (n, p) = (train.len(), train.n_features());
    let svd = c.x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;
    let uty = u.transpose() * &c.y;

    let posterior_mean = |ratio: f64| -> DVector<f64> {
        let mut w = DVector::zeros(p);
        for (k, &sk) in s.iter().enumerate() {
            let denom = sk * sk + ratio;
            if denom > 0.0 && sk > 0.0 {
                w += v_t.row(k).transpose() * (sk * uty[k] / denom);
            }
        }
        w
    };

    let var_y = c.y.norm_squared() / n as f64;
    let mut alpha = params.fixed_alpha.unwrap_or(1.0);
    let mut beta = 1.0 / (var_y + f64::EPSILON);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iter {
        iterations += 1;
        let w = posterior_mean(alpha / beta);
        let resid = (&c.y - &c.x * &w).norm_squared();
        let gamma: f64 = s.iter().map(|&sk| beta * sk * sk / (alpha + beta * sk * sk)).sum();
        let new_alpha = match params.fixed_alpha {
            Some(a) => a,
            None => (gamma + 2.0 * HYPER) / (w.norm_squared() + 2.0 * HYPER),
        };
        let new_beta = (n as f64 - gamma + 2.0 * HYPER) / (resid + 2.0 * HYPER);
        let d_alpha = (new_alpha - alpha).abs() / alpha;
        let d_beta = (new_beta - beta).abs() / beta;
        alpha = new_alpha;
        beta = new_beta;
        if d_alpha < params.tol && d_beta < params.tol {
            converged = true;
            break;
        }
    }

    let coef: Vec<f64> = posterior_mean(alpha / beta).iter().copied().collect();
    Ok(BayesianRidge { intercept: intercept_for(&c, &coef), coef, alpha, beta, iterations, converged })
}
