use alloc::vec;
use alloc::vec::Vec;

use super::{FitResult, Link};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LassoParams {
    pub lambda: f64,
    /// Stop once the largest coordinate change of a sweep falls below this.
    pub tol: f64,
    /// Cap on coordinate-descent sweeps.
    pub max_iter: usize,
    pub intercept: bool,
    /// Penalise coefficients of unit-variance columns instead of raw ones.
    pub standardize: bool,
}

impl Default for LassoParams {
    fn default() -> Self {
        LassoParams { lambda: 0.1, tol: 1e-10, max_iter: 100_000, intercept: true, standardize: true }
    }
}

impl LassoParams {
    pub fn with_lambda(lambda: f64) -> Self {
        LassoParams { lambda, ..Default::default() }
    }
}

/// Columns centred (when an intercept is fitted) and scaled, stored column-major.
pub(crate) struct Standardized {
    pub n: usize,
    pub p: usize,
    pub cols: Vec<f64>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub y_mean: f64,
}

impl Standardized {
    pub fn new(x: &Matrix, y: &[f64], w: Option<&[f64]>, intercept: bool, standardize: bool) -> Self {
        let n = x.rows();
        let p = x.cols();
        let wsum: f64 = w.map_or(n as f64, |w| w.iter().sum());
        let wi = |i: usize| w.map_or(1.0, |w| w[i]);
        let mut means = vec![0.0; p];
        let mut y_mean = 0.0;
        if intercept && wsum > 0.0 {
            for i in 0..n {
                let row = x.row(i);
                for j in 0..p {
                    means[j] += wi(i) * row[j];
                }
                y_mean += wi(i) * y[i];
            }
            for m in means.iter_mut() {
                *m /= wsum;
            }
            y_mean /= wsum;
        }
        let mut cols = vec![0.0; n * p];
        for i in 0..n {
            let row = x.row(i);
            for j in 0..p {
                cols[j * n + i] = row[j] - means[j];
            }
        }
        let mut scales = vec![1.0; p];
        if standardize {
            for j in 0..p {
                let c = &mut cols[j * n..(j + 1) * n];
                let ss: f64 = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
                let s = libm::sqrt(ss);
                scales[j] = s;
                if s > 0.0 {
                    for v in c.iter_mut() {
                        *v /= s;
                    }
                }
            }
        }
        Standardized { n, p, cols, means, scales, y_mean }
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }
}

pub(crate) struct CdOutcome {
    /// Coefficients in working (scaled) coordinates.
    pub b: Vec<f64>,
    pub residual: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

#[inline]
fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on `(1/2n) Σ w_i (y_i − ȳ − x̃_i b)² + λ‖b‖₁`.
pub(crate) fn coordinate_descent(
    st: &Standardized,
    y: &[f64],
    w: Option<&[f64]>,
    lambda: f64,
    tol: f64,
    max_iter: usize,
    warm: Option<&[f64]>,
) -> CdOutcome {
    let n = st.n;
    let p = st.p;
    let nf = n as f64;
    let wi = |i: usize| w.map_or(1.0, |w| w[i]);
    let curv: Vec<f64> = (0..p)
        .map(|j| st.col(j).iter().enumerate().map(|(i, v)| wi(i) * v * v).sum::<f64>() / nf)
        .collect();
    let mut b = vec![0.0; p];
    if let Some(w0) = warm {
        for j in 0..p {
            if curv[j] > 0.0 && st.scales[j] > 0.0 {
                b[j] = w0[j] * st.scales[j];
            }
        }
    }
    let mut residual: Vec<f64> = (0..n).map(|i| y[i] - st.y_mean).collect();
    for j in 0..p {
        if b[j] != 0.0 {
            for (r, x) in residual.iter_mut().zip(st.col(j)) {
                *r -= x * b[j];
            }
        }
    }
    let mut active = vec![false; p];
    let mut sweeps = 0;
    let mut converged = false;

    let update = |j: usize, b: &mut [f64], residual: &mut [f64]| -> f64 {
        if curv[j] <= 0.0 {
            return 0.0;
        }
        let col = st.col(j);
        let mut g = 0.0;
        for i in 0..n {
            g += wi(i) * col[i] * residual[i];
        }
        let z = g / nf + curv[j] * b[j];
        let new = soft_threshold(z, lambda) / curv[j];
        let delta = new - b[j];
        if delta != 0.0 {
            for (r, x) in residual.iter_mut().zip(col) {
                *r -= x * delta;
            }
            b[j] = new;
        }
        delta.abs()
    };

    while sweeps < max_iter {
        // full sweep, refreshing the active set
        sweeps += 1;
        let mut max_change = 0.0_f64;
        for j in 0..p {
            max_change = max_change.max(update(j, &mut b, &mut residual));
            active[j] = b[j] != 0.0;
        }
        if max_change < tol {
            converged = true;
            break;
        }
        // iterate on the active set until it settles
        while sweeps < max_iter {
            sweeps += 1;
            let mut change = 0.0_f64;
            for j in 0..p {
                if active[j] {
                    change = change.max(update(j, &mut b, &mut residual));
                }
            }
            if change < tol {
                break;
            }
        }
    }
    CdOutcome { b, residual, sweeps, converged }
}

pub(crate) fn lasso_on(
    x: &Matrix,
    y: &[f64],
    w: Option<&[f64]>,
    params: &LassoParams,
    warm: Option<&[f64]>,
) -> Result<FitResult> {
    if !(params.lambda >= 0.0) {
        return Err(Error::param("lambda", "penalty must be non-negative"));
    }
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch(alloc::format!("{} responses for {} rows", y.len(), x.rows())));
    }
    if x.rows() == 0 {
        return Err(Error::Empty("lasso needs at least one instance"));
    }
    let st = Standardized::new(x, y, w, params.intercept, params.standardize);
    let cd = coordinate_descent(&st, y, w, params.lambda, params.tol, params.max_iter, warm);
    let beta: Vec<f64> = (0..st.p).map(|j| if st.scales[j] > 0.0 { cd.b[j] / st.scales[j] } else { 0.0 }).collect();
    let intercept = if params.intercept { st.y_mean - crate::linalg::dot(&st.means, &beta) } else { 0.0 };
    let wi = |i: usize| w.map_or(1.0, |w| w[i]);
    let loss: f64 = cd.residual.iter().enumerate().map(|(i, r)| wi(i) * r * r).sum::<f64>() / (2.0 * st.n as f64);
    let penalty: f64 = cd.b.iter().map(|v| v.abs()).sum::<f64>() * params.lambda;
    let mut fit = FitResult::new(beta, intercept, loss + penalty, Link::Identity);
    fit.iterations = cd.sweeps;
    fit.converged = cd.converged;
    Ok(fit)
}

/// Lasso by cyclic coordinate descent with soft-thresholding.
///
/// Minimises `(1/2n) Σ (y_i − b₀ − x_i β)² + λ Σ s_j |β_j|` where `s_j` is the
/// column standard deviation when `standardize` is set and 1 otherwise. The
/// returned `objective` is that value; coefficients are on the original scale.
/// Running out of sweeps is reported through `converged = false`.
pub fn fit_lasso(x: &Matrix, y: &[f64], params: &LassoParams) -> Result<FitResult> {
    lasso_on(x, y, None, params, None)
}

/// [`fit_lasso`] started from `warm` (original-scale coefficients).
pub fn fit_lasso_warm(x: &Matrix, y: &[f64], params: &LassoParams, warm: Option<&[f64]>) -> Result<FitResult> {
    lasso_on(x, y, None, params, warm)
}

/// Smallest penalty at which every coefficient is zero.
pub fn lambda_max(x: &Matrix, y: &[f64], intercept: bool, standardize: bool) -> f64 {
    let st = Standardized::new(x, y, None, intercept, standardize);
    (0..st.p)
        .map(|j| {
            let g: f64 = st.col(j).iter().zip(y).map(|(c, yi)| c * (yi - st.y_mean)).sum();
            (g / st.n as f64).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest violation of the lasso optimality conditions in working coordinates:
/// `max(|g_j| − λ, 0)` off the support and `|g_j − λ·sign(b_j)|` on it, with
/// `g_j = (1/n) x̃_jᵀ r`.
pub fn lasso_kkt_residual(x: &Matrix, y: &[f64], params: &LassoParams, fit: &FitResult) -> f64 {
    let st = Standardized::new(x, y, None, params.intercept, params.standardize);
    let r: Vec<f64> = (0..x.rows()).map(|i| y[i] - fit.linear_predictor(x.row(i))).collect();
    let mut worst = 0.0_f64;
    for j in 0..st.p {
        if st.scales[j] == 0.0 {
            continue;
        }
        let g: f64 = st.col(j).iter().zip(&r).map(|(c, ri)| c * ri).sum::<f64>() / st.n as f64;
        let b = fit.beta_hat[j];
        let v = if b == 0.0 { (g.abs() - params.lambda).max(0.0) } else { (g - params.lambda * b.signum()).abs() };
        worst = worst.max(v);
    }
    worst
}
