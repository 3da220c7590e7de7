//! Penalty selection by K-fold cross-validation over a log-spaced grid.

use alloc::vec::Vec;

use super::lasso::{fit_lasso_warm, lambda_max, LassoParams};
use super::logistic::{check_labels, fit_l1_logistic, LogisticParams};
use super::FitResult;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{sample_permutation, RngStream};

#[derive(Debug, Clone, PartialEq)]
pub struct CvGrid {
    pub folds: usize,
    pub n_lambda: usize,
    /// Smallest grid value as a fraction of the largest.
    pub min_ratio: f64,
}

impl Default for CvGrid {
    fn default() -> Self {
        CvGrid { folds: 5, n_lambda: 20, min_ratio: 0.01 }
    }
}

/// Descending, log-spaced from `lmax` to `lmax·min_ratio`.
pub fn lambda_grid(lmax: f64, n_lambda: usize, min_ratio: f64) -> Vec<f64> {
    if n_lambda <= 1 {
        return alloc::vec![lmax];
    }
    let step = libm::log(min_ratio) / (n_lambda - 1) as f64;
    (0..n_lambda).map(|k| lmax * libm::exp(step * k as f64)).collect()
}

fn fold_assignment(n: usize, folds: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
    if folds < 2 || folds > n {
        return Err(Error::param("folds", "need 2 ≤ folds ≤ n"));
    }
    let perm = sample_permutation(rng, n);
    let mut fold = alloc::vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold[i] = pos % folds;
    }
    Ok(fold)
}

fn split(x: &Matrix, y: &[f64], fold: &[usize], k: usize) -> (Matrix, Vec<f64>, Matrix, Vec<f64>) {
    let train: Vec<usize> = (0..y.len()).filter(|&i| fold[i] != k).collect();
    let test: Vec<usize> = (0..y.len()).filter(|&i| fold[i] == k).collect();
    (
        x.select_rows(&train),
        train.iter().map(|&i| y[i]).collect(),
        x.select_rows(&test),
        test.iter().map(|&i| y[i]).collect(),
    )
}

fn argmin(errors: &[f64]) -> usize {
    // first minimum on a descending grid prefers the larger penalty
    let mut best = 0;
    for (k, e) in errors.iter().enumerate() {
        if *e < errors[best] {
            best = k;
        }
    }
    best
}

/// Lasso penalty minimising K-fold mean squared prediction error.
pub fn select_lasso_lambda_cv(x: &Matrix, y: &[f64], base: &LassoParams, grid: &CvGrid, rng: &mut RngStream) -> Result<f64> {
    let lambdas = lambda_grid(lambda_max(x, y, base.intercept, base.standardize), grid.n_lambda, grid.min_ratio);
    let fold = fold_assignment(y.len(), grid.folds, rng)?;
    let mut errors = alloc::vec![0.0; lambdas.len()];
    for k in 0..grid.folds {
        let (xt, yt, xv, yv) = split(x, y, &fold, k);
        let mut warm: Option<FitResult> = None;
        for (l, &lambda) in lambdas.iter().enumerate() {
            let params = LassoParams { lambda, ..base.clone() };
            let fit = fit_lasso_warm(&xt, &yt, &params, warm.as_ref().map(|w| w.beta_hat.as_slice()))?;
            errors[l] += fit.pointwise_losses(&xv, &yv).iter().sum::<f64>();
            warm = Some(fit);
        }
    }
    Ok(lambdas[argmin(&errors)])
}

/// L1-logistic penalty minimising K-fold deviance.
pub fn select_logistic_lambda_cv(x: &Matrix, y: &[f64], base: &LogisticParams, grid: &CvGrid, rng: &mut RngStream) -> Result<f64> {
    let lambdas = lambda_grid(lambda_max(x, y, base.intercept, false), grid.n_lambda, grid.min_ratio);
    let fold = fold_assignment(y.len(), grid.folds, rng)?;
    let mut errors = alloc::vec![0.0; lambdas.len()];
    for k in 0..grid.folds {
        let (xt, yt, xv, yv) = split(x, y, &fold, k);
        check_labels(&yt)?;
        let mut warm: Option<FitResult> = None;
        for (l, &lambda) in lambdas.iter().enumerate() {
            let params = LogisticParams { lambda, ..base.clone() };
            let fit = fit_l1_logistic(&xt, &yt, &params, warm.as_ref())?;
            errors[l] += fit.pointwise_losses(&xv, &yv).iter().sum::<f64>();
            warm = Some(fit);
        }
    }
    Ok(lambdas[argmin(&errors)])
}
