use alloc::vec;
use alloc::vec::Vec;

use super::lasso::{coordinate_descent, Standardized};
use super::{FitResult, Link};
use crate::datagen::logistic;
use crate::error::{Error, Result};
use crate::linalg::{dot, least_squares, norm2, norm_inf, Matrix};
use crate::losses::deviance_loss;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    /// Newton steps below `tol·(1 + ‖β‖∞)` count as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Coefficient norm beyond which the data are treated as (quasi-)separated.
    pub norm_cap: f64,
    pub intercept: bool,
    /// L1 penalty on `(1/2n)·deviance`; zero gives plain maximum likelihood.
    pub lambda: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams { tol: 1e-10, max_iter: 300, norm_cap: 100.0, intercept: true, lambda: 0.0 }
    }
}

pub(crate) fn check_labels(y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Empty("logistic regression needs at least one instance"));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::param("y", "labels must be 0 or 1"));
    }
    if y.iter().all(|&v| v == 1.0) {
        return Err(Error::DegenerateResponse(1));
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateResponse(0));
    }
    Ok(())
}

/// IRLS weight `p(1−p)` and response residual `y − p`, both free of cancellation.
fn working_weight(eta: f64, y: f64) -> (f64, f64) {
    let p = logistic(eta);
    let q = logistic(-eta);
    let resid = if y == 1.0 { q } else { -p };
    ((p * q).max(1e-300), resid)
}

fn deviance(x: &Matrix, y: &[f64], beta: &[f64], intercept: f64) -> f64 {
    (0..x.rows()).map(|i| deviance_loss(y[i], logistic(intercept + dot(x.row(i), beta)))).sum()
}

/// Gradient of the log-likelihood, intercept first when fitted.
pub fn log_likelihood_gradient(x: &Matrix, y: &[f64], fit: &FitResult, with_intercept: bool) -> Vec<f64> {
    let resid: Vec<f64> = (0..x.rows()).map(|i| y[i] - fit.predict(x.row(i))).collect();
    let mut g = Vec::with_capacity(x.cols() + 1);
    if with_intercept {
        g.push(resid.iter().sum());
    }
    g.extend(x.tr_matvec(&resid));
    g
}

/// Logistic regression.
///
/// With `lambda = 0` this is maximum likelihood by iteratively reweighted
/// least squares (Newton with step halving). A positive `lambda` switches to
/// proximal Newton with a weighted coordinate-descent inner solve. Separation
/// is reported as `converged = false` once `‖β‖₂` exceeds `norm_cap`.
pub fn fit_logistic(x: &Matrix, y: &[f64], params: &LogisticParams) -> Result<FitResult> {
    check_labels(y)?;
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch(alloc::format!("{} labels for {} rows", y.len(), x.rows())));
    }
    if params.lambda > 0.0 {
        return fit_l1_logistic(x, y, params, None);
    }
    let n = x.rows();
    let design = if params.intercept { x.with_intercept() } else { x.clone() };
    let q = design.cols();
    let mut coef = vec![0.0; q];
    let dev_of = |c: &[f64]| -> f64 { (0..n).map(|i| deviance_loss(y[i], logistic(dot(design.row(i), c)))).sum() };
    let mut dev = dev_of(&coef);
    let mut iterations = 0;
    let mut converged = false;
    let mut polished = false;
    while iterations < params.max_iter {
        iterations += 1;
        let eta = design.matvec(&coef);
        let mut sqrt_w = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        for i in 0..n {
            let (w, resid) = working_weight(eta[i], y[i]);
            sqrt_w.push(libm::sqrt(w));
            z.push(eta[i] + resid / w);
        }
        let ls = least_squares(&design, &z, Some(&sqrt_w))?;
        let mut step: Vec<f64> = ls.beta.iter().zip(&coef).map(|(a, b)| a - b).collect();
        let mut candidate: Vec<f64> = ls.beta;
        let mut cand_dev = dev_of(&candidate);
        let mut halvings = 0;
        while cand_dev > dev * (1.0 + 1e-14) + 1e-300 && halvings < 40 {
            for s in step.iter_mut() {
                *s *= 0.5;
            }
            candidate = coef.iter().zip(&step).map(|(c, s)| c + s).collect();
            cand_dev = dev_of(&candidate);
            halvings += 1;
        }
        let size = norm_inf(&step);
        coef = candidate;
        dev = cand_dev;
        if norm2(&coef) > params.norm_cap {
            break;
        }
        if polished {
            converged = true;
            break;
        }
        if size < params.tol * (1.0 + norm_inf(&coef)) {
            // one more Newton step drives the gradient to rounding level
            polished = true;
        }
    }
    let (intercept, beta) = if params.intercept { (coef[0], coef[1..].to_vec()) } else { (0.0, coef) };
    let mut fit = FitResult::new(beta, intercept, dev, Link::Logit);
    fit.iterations = iterations;
    fit.converged = converged;
    Ok(fit)
}

/// Proximal Newton for `(1/2n)·deviance + λ‖β‖₁` (raw coefficients, unpenalised intercept).
pub(crate) fn fit_l1_logistic(x: &Matrix, y: &[f64], params: &LogisticParams, warm: Option<&FitResult>) -> Result<FitResult> {
    let n = x.rows();
    let p = x.cols();
    let mut beta = warm.map_or_else(|| vec![0.0; p], |w| w.beta_hat.clone());
    let mut intercept = warm.map_or(0.0, |w| w.intercept);
    let objective = |beta: &[f64], b0: f64| deviance(x, y, beta, b0) / (2.0 * n as f64) + params.lambda * beta.iter().map(|v| v.abs()).sum::<f64>();
    let mut obj = objective(&beta, intercept);
    let mut iterations = 0;
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    while iterations < params.max_iter {
        iterations += 1;
        let inner_tol = (1e-3 * last_change).clamp(1e-12, 1e-6);
        let mut w = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        for i in 0..n {
            let eta = intercept + dot(x.row(i), &beta);
            let (wi, resid) = working_weight(eta, y[i]);
            w.push(wi);
            z.push(eta + resid / wi);
        }
        let st = Standardized::new(x, &z, Some(&w), params.intercept, false);
        let cd = coordinate_descent(&st, &z, Some(&w), params.lambda, inner_tol, 10_000, Some(&beta));
        let new_b0 = if params.intercept { st.y_mean - dot(&st.means, &cd.b) } else { 0.0 };
        // damped step toward the quadratic-model minimiser
        let mut t = 1.0;
        let mut cand: Vec<f64> = cd.b.clone();
        let mut cand_b0 = new_b0;
        let mut cand_obj = objective(&cand, cand_b0);
        while cand_obj > obj + 1e-15 && t > 1e-6 {
            t *= 0.5;
            cand = beta.iter().zip(&cd.b).map(|(a, b)| a + t * (b - a)).collect();
            cand_b0 = intercept + t * (new_b0 - intercept);
            cand_obj = objective(&cand, cand_b0);
        }
        let change = beta.iter().zip(&cand).map(|(a, b)| (a - b).abs()).fold((cand_b0 - intercept).abs(), f64::max);
        beta = cand;
        intercept = cand_b0;
        obj = cand_obj;
        last_change = change;
        if norm2(&beta) > params.norm_cap {
            break;
        }
        if change < params.tol.max(1e-9) * (1.0 + norm_inf(&beta)) {
            converged = true;
            break;
        }
    }
    let mut fit = FitResult::new(beta, intercept, obj, Link::Logit);
    fit.iterations = iterations;
    fit.converged = converged;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn ten_points() -> (Matrix, Vec<f64>) {
        let x = Matrix::from_vec(10, 2, vec![
            0.5, 1.0, -1.2, 0.3, 2.0, -0.7, 0.1, 0.1, -0.4, 1.5, 1.1, -1.0, -2.0, 0.2, 0.8, 0.9, -0.6, -0.3, 1.4, 0.4,
        ])
        .unwrap();
        let y = vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        (x, y)
    }

    #[test]
    fn gradient_vanishes_at_optimum() {
        let (x, y) = ten_points();
        let fit = fit_logistic(&x, &y, &LogisticParams::default()).unwrap();
        assert!(fit.converged);
        let g = log_likelihood_gradient(&x, &y, &fit, true);
        assert!(norm_inf(&g) < 1e-8, "{g:?}");
    }

    #[test]
    fn symmetric_data_gives_zero_slope() {
        let xs = [0.3, 1.2, -0.7, 2.0];
        let ys = [1.0, 0.0, 1.0, 0.0];
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (a, b) in xs.iter().zip(&ys) {
            rows.push(vec![*a]);
            rows.push(vec![-*a]);
            y.push(*b);
            y.push(*b);
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let fit = fit_logistic(&x, &y, &LogisticParams::default()).unwrap();
        assert!(fit.beta_hat[0].abs() < 1e-6);
    }

    #[test]
    fn separable_pair_hits_norm_cap() {
        let x = Matrix::from_vec(2, 1, vec![-1.0, 1.0]).unwrap();
        let params = LogisticParams { intercept: false, ..Default::default() };
        let fit = fit_logistic(&x, &[0.0, 1.0], &params).unwrap();
        assert!(!fit.converged);
        assert!(norm2(&fit.beta_hat) > params.norm_cap);
    }

    #[test]
    fn constant_labels_rejected() {
        let (x, _) = ten_points();
        assert_eq!(fit_logistic(&x, &[1.0; 10], &LogisticParams::default()).unwrap_err(), Error::DegenerateResponse(1));
        assert_eq!(fit_logistic(&x, &[0.0; 10], &LogisticParams::default()).unwrap_err(), Error::DegenerateResponse(0));
    }

    #[test]
    fn l1_penalty_shrinks_toward_zero() {
        let mut rng = RngStream::seeded(4);
        let n = 80;
        let p = 30;
        let x = Matrix::from_vec(n, p, (0..n * p).map(|_| rng.standard_normal()).collect()).unwrap();
        let y: Vec<f64> = (0..n).map(|i| if rng.bernoulli(logistic(2.0 * x.get(i, 0) - x.get(i, 1))) { 1.0 } else { 0.0 }).collect();
        let small = fit_logistic(&x, &y, &LogisticParams { lambda: 0.02, ..Default::default() }).unwrap();
        let big = fit_logistic(&x, &y, &LogisticParams { lambda: 0.2, ..Default::default() }).unwrap();
        assert!(small.converged && big.converged);
        let l1 = |f: &FitResult| f.beta_hat.iter().map(|v| v.abs()).sum::<f64>();
        assert!(l1(&big) < l1(&small));
        assert!(small.beta_hat[0] > 0.0 && small.beta_hat[1] < 0.0);
        // subgradient optimality on the (1/2n) deviance scale
        let g = log_likelihood_gradient(&x, &y, &small, true);
        assert!(g[0].abs() / (n as f64) < 1e-6);
        for j in 0..p {
            let gj = g[j + 1] / n as f64;
            if small.beta_hat[j] == 0.0 {
                assert!(gj.abs() <= 0.02 + 1e-6);
            } else {
                assert!((gj - 0.02 * small.beta_hat[j].signum()).abs() < 1e-5);
            }
        }
    }
}
