use alloc::vec::Vec;

use super::{FitResult, Link};
use crate::error::{Error, Result};
use crate::linalg::{dot, least_squares, Matrix};

/// Least squares without intercept, solved by pivoted Householder QR.
pub fn fit_ols(x: &Matrix, y: &[f64]) -> Result<FitResult> {
    let ls = least_squares(x, y, None)?;
    let rss = rss(x, y, &ls.beta, 0.0);
    let mut fit = FitResult::new(ls.beta, 0.0, rss, Link::Identity);
    fit.iterations = 1;
    Ok(fit)
}

/// Least squares with an unpenalised intercept.
pub fn fit_ols_intercept(x: &Matrix, y: &[f64]) -> Result<FitResult> {
    let ls = least_squares(&x.with_intercept(), y, None)?;
    let intercept = ls.beta[0];
    let beta: Vec<f64> = ls.beta[1..].to_vec();
    let rss = rss(x, y, &beta, intercept);
    let mut fit = FitResult::new(beta, intercept, rss, Link::Identity);
    fit.iterations = 1;
    Ok(fit)
}

fn rss(x: &Matrix, y: &[f64], beta: &[f64], intercept: f64) -> f64 {
    (0..x.rows())
        .map(|i| {
            let r = y[i] - intercept - dot(x.row(i), beta);
            r * r
        })
        .sum()
}

/// Leave-one-out squared prediction errors `(e_i / (1 − h_ii))²` from a single
/// fit. Rows with leverage numerically equal to one are refit explicitly.
pub fn loo_ols_scores(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let n = x.rows();
    if n < x.cols() + 1 {
        return Err(Error::param("n", "leave-one-out needs n ≥ p + 1"));
    }
    let ls = least_squares(x, y, None)?;
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let row = x.row(i);
        let e = y[i] - dot(row, &ls.beta);
        let h = ls.leverage(row);
        if 1.0 - h > 1e-8 {
            let d = e / (1.0 - h);
            scores.push(d * d);
        } else {
            let keep: Vec<usize> = (0..n).filter(|&k| k != i).collect();
            let fit = fit_ols(&x.select_rows(&keep), &keep.iter().map(|&k| y[k]).collect::<Vec<_>>())
                .map_err(|e| Error::FoldFailed { fold: i, source: alloc::boxed::Box::new(e) })?;
            let d = y[i] - dot(row, &fit.beta_hat);
            scores.push(d * d);
        }
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_inf;
    use crate::rng::RngStream;
    use alloc::vec;

    fn random_design(rng: &mut RngStream, n: usize, p: usize) -> (Matrix, Vec<f64>) {
        let x = Matrix::from_vec(n, p, (0..n * p).map(|_| rng.standard_normal()).collect()).unwrap();
        let y = (0..n).map(|_| rng.standard_normal()).collect();
        (x, y)
    }

    #[test]
    fn exact_line_slope_two() {
        let x = Matrix::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let fit = fit_ols(&x, &[2.0, 4.0, 6.0]).unwrap();
        assert!((fit.beta_hat[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_recovery_and_gradient() {
        let mut rng = RngStream::seeded(11);
        let (x, _) = random_design(&mut rng, 50, 5);
        let beta = [1.0, -2.0, 0.5, 3.0, 0.0];
        let y = x.matvec(&beta);
        let fit = fit_ols(&x, &y).unwrap();
        let diff: Vec<f64> = fit.beta_hat.iter().zip(&beta).map(|(a, b)| a - b).collect();
        assert!(norm_inf(&diff) < 1e-8);

        let (x, y) = random_design(&mut rng, 50, 5);
        let fit = fit_ols(&x, &y).unwrap();
        let res: Vec<f64> = (0..50).map(|i| dot(x.row(i), &fit.beta_hat) - y[i]).collect();
        let grad: Vec<f64> = x.tr_matvec(&res).iter().map(|g| 2.0 * g).collect();
        assert!(norm_inf(&grad) < 1e-8);
    }

    #[test]
    fn scaling_response_scales_coefficients() {
        let mut rng = RngStream::seeded(12);
        let (x, y) = random_design(&mut rng, 30, 4);
        let a = fit_ols(&x, &y).unwrap();
        let y3: Vec<f64> = y.iter().map(|v| 3.0 * v).collect();
        let b = fit_ols(&x, &y3).unwrap();
        for (u, v) in a.beta_hat.iter().zip(&b.beta_hat) {
            assert!((3.0 * u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 2.0]])
            .unwrap();
        // third column = first + second
        match fit_ols(&x, &[1.0, 2.0, 3.0, 4.0]) {
            Err(Error::RankDeficient { deficient, cols }) => assert_eq!((deficient, cols), (1, 3)),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn loo_shortcut_matches_refits() {
        let mut rng = RngStream::seeded(13);
        let (x, y) = random_design(&mut rng, 30, 3);
        let fast = loo_ols_scores(&x, &y).unwrap();
        for i in 0..30 {
            let keep: Vec<usize> = (0..30).filter(|&k| k != i).collect();
            let yk: Vec<f64> = keep.iter().map(|&k| y[k]).collect();
            let fit = fit_ols(&x.select_rows(&keep), &yk).unwrap();
            let d = y[i] - dot(x.row(i), &fit.beta_hat);
            assert!((fast[i] - d * d).abs() < 1e-8);
        }
    }
}
