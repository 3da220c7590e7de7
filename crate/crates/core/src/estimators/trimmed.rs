//! Concentration-step (C-step) search shared by the trimmed estimators.
//!
//! A C-step fits the model on the current working subset, scores every
//! instance under that fit and keeps the `h` instances with the smallest
//! losses. The trimmed objective never increases along C-steps; a run stops
//! when the subset repeats, when an update fails to improve, or after
//! `max_steps`. The search follows FAST-LTS: many cheap starts get
//! `initial_steps` C-steps, the `keep_best` distinct candidates are iterated to
//! convergence, and the best one wins.

use alloc::vec;
use alloc::vec::Vec;

use super::lasso::{lasso_on, LassoParams};
use super::logistic::{check_labels, fit_l1_logistic, fit_logistic, LogisticParams};
use super::ols::fit_ols;
use super::FitResult;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{sample_subset, RngStream};
use crate::{binomial, floor_count};

/// Upper bound on starts produced by exhaustive h-subset enumeration.
pub const MAX_ENUMERATED_STARTS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    /// Random starts; every start subset is enumerated instead when there are at most this many.
    pub n_starts: usize,
    /// Use every h-subset as a start (small problems and oracle checks).
    pub exhaustive: bool,
    pub initial_steps: usize,
    pub keep_best: usize,
    pub max_steps: usize,
    /// Consecutive degenerate random starts tolerated before giving up.
    pub max_retries: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { n_starts: 500, exhaustive: false, initial_steps: 2, keep_best: 10, max_steps: 50, max_retries: 100 }
    }
}

impl SearchParams {
    pub fn with_starts(n_starts: usize) -> Self {
        SearchParams { n_starts, ..Default::default() }
    }

    pub fn exhaustive() -> Self {
        SearchParams { exhaustive: true, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtsParams {
    pub alpha: f64,
    pub search: SearchParams,
}

impl Default for LtsParams {
    fn default() -> Self {
        LtsParams { alpha: 0.5, search: SearchParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseLtsParams {
    pub alpha: f64,
    pub lambda: f64,
    pub search: SearchParams,
    /// Coordinate-descent tolerance of the inner Lasso fits.
    pub lasso_tol: f64,
    pub intercept: bool,
}

impl Default for SparseLtsParams {
    fn default() -> Self {
        SparseLtsParams { alpha: 0.5, lambda: 0.1, search: SearchParams::default(), lasso_tol: 1e-10, intercept: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrimmedLogisticParams {
    pub alpha: f64,
    pub search: SearchParams,
    pub logistic: LogisticParams,
}

impl Default for TrimmedLogisticParams {
    fn default() -> Self {
        TrimmedLogisticParams { alpha: 0.25, search: SearchParams::with_starts(50), logistic: LogisticParams::default() }
    }
}

/// `h = n − ⌊αn⌋`
pub fn trimmed_size(n: usize, alpha: f64) -> usize {
    n - floor_count(n, alpha)
}

fn check_alpha(alpha: f64, upper: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha <= upper) {
        return Err(Error::param("alpha", alloc::format!("trimming rate must lie in [0, {upper}]")));
    }
    Ok(())
}

trait SubsetModel {
    fn fit_subset(&self, x: &Matrix, y: &[f64], idx: &[usize], warm: Option<&FitResult>) -> Result<FitResult>;
    fn objective(&self, fit: &FitResult, kept_loss: f64, h: usize) -> f64;
    fn start_size(&self, p: usize, h: usize) -> usize;
}

fn subset_response(y: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| y[i]).collect()
}

fn l1(beta: &[f64]) -> f64 {
    beta.iter().map(|v| v.abs()).sum()
}

struct Lts;

impl SubsetModel for Lts {
    fn fit_subset(&self, x: &Matrix, y: &[f64], idx: &[usize], _warm: Option<&FitResult>) -> Result<FitResult> {
        fit_ols(&x.select_rows(idx), &subset_response(y, idx))
    }
    fn objective(&self, _fit: &FitResult, kept_loss: f64, _h: usize) -> f64 {
        kept_loss
    }
    fn start_size(&self, p: usize, _h: usize) -> usize {
        p
    }
}

struct SparseLts<'a>(&'a SparseLtsParams);

impl SubsetModel for SparseLts<'_> {
    fn fit_subset(&self, x: &Matrix, y: &[f64], idx: &[usize], warm: Option<&FitResult>) -> Result<FitResult> {
        let params = LassoParams {
            lambda: self.0.lambda,
            tol: self.0.lasso_tol,
            max_iter: 100_000,
            intercept: self.0.intercept,
            standardize: false,
        };
        lasso_on(&x.select_rows(idx), &subset_response(y, idx), None, &params, warm.map(|w| w.beta_hat.as_slice()))
    }
    fn objective(&self, fit: &FitResult, kept_loss: f64, h: usize) -> f64 {
        kept_loss / (2.0 * h as f64) + self.0.lambda * l1(&fit.beta_hat)
    }
    fn start_size(&self, _p: usize, h: usize) -> usize {
        h.min(3)
    }
}

struct TrimmedLogit<'a>(&'a LogisticParams);

impl SubsetModel for TrimmedLogit<'_> {
    fn fit_subset(&self, x: &Matrix, y: &[f64], idx: &[usize], warm: Option<&FitResult>) -> Result<FitResult> {
        let xs = x.select_rows(idx);
        let ys = subset_response(y, idx);
        if self.0.lambda > 0.0 {
            check_labels(&ys)?;
            fit_l1_logistic(&xs, &ys, self.0, warm)
        } else {
            fit_logistic(&xs, &ys, self.0)
        }
    }
    fn objective(&self, fit: &FitResult, kept_loss: f64, h: usize) -> f64 {
        if self.0.lambda > 0.0 {
            kept_loss / (2.0 * h as f64) + self.0.lambda * l1(&fit.beta_hat)
        } else {
            kept_loss
        }
    }
    fn start_size(&self, _p: usize, h: usize) -> usize {
        h
    }
}

/// Indices of the `h` smallest losses, ties broken by lower index; returned sorted.
pub fn h_smallest(losses: &[f64], h: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    order.truncate(h);
    order.sort_unstable();
    order
}

struct Run {
    fit: FitResult,
    subset: Vec<usize>,
    objective: f64,
    trace: Vec<f64>,
    steps: usize,
    done: bool,
}

fn evaluate(model: &dyn SubsetModel, x: &Matrix, y: &[f64], h: usize, fit: &FitResult) -> (Vec<usize>, f64) {
    let losses = fit.pointwise_losses(x, y);
    let subset = h_smallest(&losses, h);
    let kept: f64 = subset.iter().map(|&i| losses[i]).sum();
    let obj = model.objective(fit, kept, h);
    (subset, obj)
}

fn start_run(model: &dyn SubsetModel, x: &Matrix, y: &[f64], h: usize, start: &[usize]) -> Result<Run> {
    let fit = model.fit_subset(x, y, start, None)?;
    let (subset, objective) = evaluate(model, x, y, h, &fit);
    Ok(Run { fit, subset, objective, trace: vec![objective], steps: 0, done: false })
}

fn advance(model: &dyn SubsetModel, x: &Matrix, y: &[f64], h: usize, run: &mut Run, steps: usize, max_steps: usize) {
    for _ in 0..steps {
        if run.done || run.steps >= max_steps {
            return;
        }
        let fit = match model.fit_subset(x, y, &run.subset, Some(&run.fit)) {
            Ok(f) => f,
            Err(_) => {
                run.done = true;
                return;
            }
        };
        run.steps += 1;
        let (subset, objective) = evaluate(model, x, y, h, &fit);
        if objective > run.objective {
            run.done = true;
            return;
        }
        let repeated = subset == run.subset;
        run.trace.push(objective);
        run.fit = fit;
        run.subset = subset;
        run.objective = objective;
        if repeated {
            run.done = true;
            return;
        }
    }
}

/// Lexicographic k-combinations of `0..n`.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    crate::for_each_combination(n, k, |c| out.push(c.to_vec()));
    out
}

fn search(
    model: &dyn SubsetModel,
    x: &Matrix,
    y: &[f64],
    h: usize,
    params: &SearchParams,
    rng: &mut RngStream,
    hint: Option<&[usize]>,
) -> Result<FitResult> {
    let n = x.rows();
    let mut runs: Vec<Run> = Vec::new();
    let push = |run: Run, runs: &mut Vec<Run>| {
        let mut run = run;
        advance(model, x, y, h, &mut run, params.initial_steps, params.max_steps);
        runs.push(run);
    };

    if h == n {
        let all: Vec<usize> = (0..n).collect();
        let run = start_run(model, x, y, h, &all)?;
        push(run, &mut runs);
    } else {
        let k = model.start_size(x.cols(), h);
        if params.exhaustive {
            let count = binomial(n as u64, h as u64);
            if count > MAX_ENUMERATED_STARTS {
                return Err(Error::param("exhaustive", alloc::format!("{count} h-subsets is too many to enumerate")));
            }
            for start in combinations(n, h) {
                if let Ok(run) = start_run(model, x, y, h, &start) {
                    push(run, &mut runs);
                }
            }
        } else if binomial(n as u64, k as u64) <= params.n_starts as u128 {
            for start in combinations(n, k) {
                if let Ok(run) = start_run(model, x, y, h, &start) {
                    push(run, &mut runs);
                }
            }
        } else {
            let mut failures = 0;
            let mut made = 0;
            while made < params.n_starts {
                let start = sample_subset(rng, n, k)?;
                match start_run(model, x, y, h, &start) {
                    Ok(run) => {
                        push(run, &mut runs);
                        made += 1;
                        failures = 0;
                    }
                    Err(_) => {
                        failures += 1;
                        if failures >= params.max_retries {
                            return Err(Error::DegenerateSubsets(failures));
                        }
                    }
                }
            }
        }
        if let Some(hint) = hint {
            if hint.len() == h && hint.iter().all(|&i| i < n) {
                if let Ok(run) = start_run(model, x, y, h, hint) {
                    push(run, &mut runs);
                }
            }
        }
    }
    if runs.is_empty() {
        return Err(Error::DegenerateSubsets(0));
    }

    runs.sort_by(|a, b| a.objective.total_cmp(&b.objective));
    let mut finalists: Vec<Run> = Vec::new();
    for run in runs {
        if finalists.len() >= params.keep_best.max(1) {
            break;
        }
        if finalists.iter().all(|f| f.subset != run.subset) {
            finalists.push(run);
        }
    }
    for run in finalists.iter_mut() {
        advance(model, x, y, h, run, params.max_steps, params.max_steps);
    }
    let best = finalists
        .into_iter()
        .min_by(|a, b| a.objective.total_cmp(&b.objective))
        .expect("at least one finalist");
    let mut fit = best.fit;
    fit.objective = best.objective;
    fit.converged = best.done && fit.converged;
    fit.iterations = best.steps;
    fit.subset = Some(best.subset);
    fit.trace = best.trace;
    Ok(fit)
}

/// Least trimmed squares by FAST-LTS: minimises the sum of the `h = n − ⌊αn⌋`
/// smallest squared residuals. Starts are random `p`-subsets (all of them when
/// there are at most `n_starts`), or every `h`-subset in exhaustive mode.
pub fn fit_lts(x: &Matrix, y: &[f64], params: &LtsParams, rng: &mut RngStream) -> Result<FitResult> {
    fit_lts_with_hint(x, y, params, rng, None)
}

pub(crate) fn fit_lts_with_hint(
    x: &Matrix,
    y: &[f64],
    params: &LtsParams,
    rng: &mut RngStream,
    hint: Option<&[usize]>,
) -> Result<FitResult> {
    check_alpha(params.alpha, 0.5)?;
    let h = trimmed_size(x.rows(), params.alpha);
    if h < x.cols() {
        return Err(Error::param("alpha", alloc::format!("h = {h} is below p = {}", x.cols())));
    }
    search(&Lts, x, y, h, &params.search, rng, hint)
}

/// Sparse LTS: C-steps with a Lasso fit on each working subset, minimising
/// `(1/2h) Σ_{i∈H} r_i² + λ‖β‖₁` (raw coefficients, unpenalised intercept).
/// Random starts are 3-subsets.
pub fn fit_sparse_lts(x: &Matrix, y: &[f64], params: &SparseLtsParams, rng: &mut RngStream) -> Result<FitResult> {
    fit_sparse_lts_with_hint(x, y, params, rng, None)
}

pub(crate) fn fit_sparse_lts_with_hint(
    x: &Matrix,
    y: &[f64],
    params: &SparseLtsParams,
    rng: &mut RngStream,
    hint: Option<&[usize]>,
) -> Result<FitResult> {
    check_alpha(params.alpha, 0.5)?;
    if !(params.lambda >= 0.0) {
        return Err(Error::param("lambda", "penalty must be non-negative"));
    }
    let h = trimmed_size(x.rows(), params.alpha);
    if h < 2 {
        return Err(Error::param("alpha", "sparse LTS needs h ≥ 2"));
    }
    search(&SparseLts(params), x, y, h, &params.search, rng, hint)
}

/// Trimmed maximum likelihood for logistic regression: C-steps on deviance
/// residuals starting from random `h`-subsets.
pub fn fit_trimmed_logistic(x: &Matrix, y: &[f64], params: &TrimmedLogisticParams, rng: &mut RngStream) -> Result<FitResult> {
    fit_trimmed_logistic_with_hint(x, y, params, rng, None)
}

pub(crate) fn fit_trimmed_logistic_with_hint(
    x: &Matrix,
    y: &[f64],
    params: &TrimmedLogisticParams,
    rng: &mut RngStream,
    hint: Option<&[usize]>,
) -> Result<FitResult> {
    check_alpha(params.alpha, 0.5)?;
    // whole-sample label check: no subset can do better
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::DegenerateResponse(y.first().map_or(0, |&v| v as u8)));
    }
    let h = trimmed_size(x.rows(), params.alpha);
    search(&TrimmedLogit(&params.logistic), x, y, h, &params.search, rng, hint)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_enumerate_all() {
        let c = combinations(5, 2);
        assert_eq!(c.len(), 10);
        assert_eq!(c[0], vec![0, 1]);
        assert_eq!(c[9], vec![3, 4]);
        assert_eq!(combinations(4, 4), vec![vec![0, 1, 2, 3]]);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn h_smallest_breaks_ties_by_index() {
        assert_eq!(h_smallest(&[5.0, 5.0, 5.0, 5.0], 3), vec![0, 1, 2]);
        assert_eq!(h_smallest(&[3.0, 1.0, 2.0, 0.5], 2), vec![1, 3]);
    }

    #[test]
    fn trimmed_size_follows_floor() {
        assert_eq!(trimmed_size(10, 0.5), 5);
        assert_eq!(trimmed_size(250, 0.5), 125);
        assert_eq!(trimmed_size(7, 0.0), 7);
        assert_eq!(trimmed_size(9, 0.25), 7);
    }
}
