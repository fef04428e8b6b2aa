//! Ordinary least squares with an intercept.
//!
//! Features and target are centered, and the slope is the minimum-norm
//! least-squares solution obtained from a singular value decomposition of the
//! centered design. The intercept follows from the means.

use nalgebra::{DMatrix, DVector};

use super::{Dataset, Predictor};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    intercept: f64,
    coef: Vec<f64>,
    rank: usize,
}

impl LinearModel {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The centered design has fewer independent columns than features.
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.coef.len()
    }
}

impl Predictor for LinearModel {
    fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>()
    }
}

pub(crate) struct Centered {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub x_mean: Vec<f64>,
    pub y_mean: f64,
}

pub(crate) fn center(data: &Dataset) -> Centered {
    let (n, p) = (data.len(), data.n_features());
    let nf = n as f64;
    let mut x_mean = vec![0.0; p];
    for r in data.rows() {
        x_mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    x_mean.iter_mut().for_each(|m| *m /= nf);
    let y_mean = data.target_mean();
    let x = DMatrix::from_fn(n, p, |i, j| data.row(i)[j] - x_mean[j]);
    let y = DVector::from_iterator(n, data.targets().iter().map(|v| v - y_mean));
    Centered { x, y, x_mean, y_mean }
}

pub(crate) fn intercept_for(c: &Centered, coef: &[f64]) -> f64 {
    c.y_mean - c.x_mean.iter().zip(coef).map(|(m, w)| m * w).sum::<f64>()
}

pub fn fit_linear(train: &Dataset) -> Result<LinearModel> {
    let c = center(train);
    let p = train.n_features();
    if p == 0 {
        return Ok(LinearModel { intercept: c.y_mean, coef: Vec::new(), rank: 0 });
    }
    let svd = c.x.clone().svd(true, true);
    let (u, v_t) = (svd.u.as_ref().expect("u requested"), svd.v_t.as_ref().expect("v_t requested"));
    let s = &svd.singular_values;
    let s_max = s.iter().copied().fold(0.0, f64::max);
    let cutoff = s_max * f64::EPSILON * train.len().max(p) as f64;

    let uty = u.transpose() * &c.y;
    let mut coef = DVector::zeros(p);
    let mut rank = 0;
    for (k, &sk) in s.iter().enumerate() {
        if sk > cutoff {
            rank += 1;
            coef += v_t.row(k).transpose() * (uty[k] / sk);
        }
    }
    let coef: Vec<f64> = coef.iter().copied().collect();
    Ok(LinearModel { intercept: intercept_for(&c, &coef), coef, rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::r_squared;

    #[test]
    fn recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let data =
            Dataset::new(xs.iter().map(|&x| vec![x]).collect(), xs.iter().map(|x| 2.0 * x + 1.0).collect()).unwrap();
        let m = fit_linear(&data).unwrap();
        assert!((m.intercept() - 1.0).abs() < 1e-9);
        assert!((m.coefficients()[0] - 2.0).abs() < 1e-9);
        assert!(!m.rank_deficient());
    }

    #[test]
    fn exact_plane_has_unit_r2() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 7) % 5) as f64, (i as f64).sqrt()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 0.5 - r[0] + 3.0 * r[1] + 0.25 * r[2]).collect();
        let data = Dataset::new(rows, y).unwrap();
        let m = fit_linear(&data).unwrap();
        let r2 = r_squared(data.targets(), &m.predict(&data)).unwrap();
        assert!((r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn duplicate_columns_take_minimum_norm() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, i as f64, ((i * 3) % 4) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 4.0 * r[0] - r[2] + 2.0).collect();
        let data = Dataset::new(rows, y).unwrap();
        let m = fit_linear(&data).unwrap();
        assert!(m.rank_deficient());
        assert_eq!(m.rank(), 2);
        // Weight is split evenly across identical columns.
        assert!((m.coefficients()[0] - 2.0).abs() < 1e-9);
        assert!((m.coefficients()[1] - 2.0).abs() < 1e-9);
        for (pred, y) in m.predict(&data).iter().zip(data.targets()) {
            assert!((pred - y).abs() < 1e-8);
        }
    }
}
