//! Classical and robust model fitting.
//!
//! Every fitter returns a [`FitResult`]. The trimmed estimators (LTS, sparse
//! LTS, trimmed logistic) share the concentration-step search in [`trimmed`].

use alloc::vec::Vec;

use crate::error::Result;
use crate::linalg::{dot, Matrix};
use crate::losses::{deviance_loss, squared_loss};
use crate::rng::RngStream;

mod lasso;
mod logistic;
mod ols;
pub mod trimmed;
pub mod tuning;

pub use lasso::{fit_lasso, fit_lasso_warm, lasso_kkt_residual, lambda_max, LassoParams};
pub use logistic::{fit_logistic, log_likelihood_gradient, LogisticParams};
pub use ols::{fit_ols, fit_ols_intercept, loo_ols_scores};
pub use trimmed::{
    fit_lts, fit_sparse_lts, fit_trimmed_logistic, trimmed_size, LtsParams, SearchParams, SparseLtsParams,
    TrimmedLogisticParams,
};
pub use tuning::{lambda_grid, select_lasso_lambda_cv, select_logistic_lambda_cv, CvGrid};

/// How the linear predictor maps to the response scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Identity,
    Logit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    pub intercept: f64,
    pub objective: f64,
    /// The h-subset of trimmed estimators, sorted ascending.
    pub subset: Option<Vec<usize>>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each concentration step (trimmed estimators only).
    pub trace: Vec<f64>,
    pub link: Link,
}

impl FitResult {
    pub(crate) fn new(beta_hat: Vec<f64>, intercept: f64, objective: f64, link: Link) -> Self {
        FitResult {
            beta_hat,
            intercept,
            objective,
            subset: None,
            iterations: 0,
            converged: true,
            trace: Vec::new(),
            link,
        }
    }

    /// A fixed model, e.g. the true coefficients, for evaluation.
    pub fn from_coefficients(beta_hat: Vec<f64>, intercept: f64, link: Link) -> Self {
        let mut fit = FitResult::new(beta_hat, intercept, f64::NAN, link);
        fit.converged = true;
        fit
    }

    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        self.intercept + dot(row, &self.beta_hat)
    }

    /// Prediction on the response scale (probability for logistic fits).
    pub fn predict(&self, row: &[f64]) -> f64 {
        let eta = self.linear_predictor(row);
        match self.link {
            Link::Identity => eta,
            Link::Logit => crate::datagen::logistic(eta),
        }
    }

    /// Squared loss for regression fits, deviance for logistic fits.
    pub fn pointwise_loss(&self, row: &[f64], y: f64) -> f64 {
        match self.link {
            Link::Identity => squared_loss(y, self.predict(row)),
            Link::Logit => deviance_loss(y, self.predict(row)),
        }
    }

    pub fn pointwise_losses(&self, x: &Matrix, y: &[f64]) -> Vec<f64> {
        (0..x.rows()).map(|i| self.pointwise_loss(x.row(i), y[i])).collect()
    }

    /// True when the recorded concentration trace never increases.
    pub fn trace_is_monotone(&self) -> bool {
        self.trace.windows(2).all(|w| w[1] <= w[0])
    }
}

/// A fitting procedure with its tuning, as selected by experiment strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    Ols,
    Lts(LtsParams),
    Lasso(LassoParams),
    SparseLts(SparseLtsParams),
    Logistic(LogisticParams),
    TrimmedLogistic(TrimmedLogisticParams),
}

impl Estimator {
    pub fn fit(&self, x: &Matrix, y: &[f64], rng: &mut RngStream) -> Result<FitResult> {
        match self {
            Estimator::Ols => fit_ols(x, y),
            Estimator::Lts(p) => fit_lts(x, y, p, rng),
            Estimator::Lasso(p) => fit_lasso(x, y, p),
            Estimator::SparseLts(p) => fit_sparse_lts(x, y, p, rng),
            Estimator::Logistic(p) => fit_logistic(x, y, p),
            Estimator::TrimmedLogistic(p) => fit_trimmed_logistic(x, y, p, rng),
        }
    }

    /// Fit with an additional warm start: the previous fit for smooth
    /// estimators, a candidate h-subset for trimmed ones.
    pub fn fit_warm(&self, x: &Matrix, y: &[f64], rng: &mut RngStream, warm: Option<&FitResult>, subset_hint: Option<&[usize]>) -> Result<FitResult> {
        match self {
            Estimator::Lasso(p) => fit_lasso_warm(x, y, p, warm.map(|w| w.beta_hat.as_slice())),
            Estimator::Logistic(p) if p.lambda > 0.0 => {
                logistic::check_labels(y)?;
                logistic::fit_l1_logistic(x, y, p, warm)
            }
            Estimator::Lts(p) => trimmed::fit_lts_with_hint(x, y, p, rng, subset_hint),
            Estimator::SparseLts(p) => trimmed::fit_sparse_lts_with_hint(x, y, p, rng, subset_hint),
            Estimator::TrimmedLogistic(p) => trimmed::fit_trimmed_logistic_with_hint(x, y, p, rng, subset_hint),
            _ => self.fit(x, y, rng),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Ols => "ols",
            Estimator::Lts(_) => "lts",
            Estimator::Lasso(_) => "lasso",
            Estimator::SparseLts(_) => "sparse_lts",
            Estimator::Logistic(p) if p.lambda > 0.0 => "l1_logit",
            Estimator::Logistic(_) => "logit",
            Estimator::TrimmedLogistic(p) if p.logistic.lambda > 0.0 => "trimmed_l1_logit",
            Estimator::TrimmedLogistic(_) => "trimmed_logit",
        }
    }

    pub fn is_robust(&self) -> bool {
        matches!(self, Estimator::Lts(_) | Estimator::SparseLts(_) | Estimator::TrimmedLogistic(_))
    }

    /// Estimator-side trimming rate (0 for classical fits).
    pub fn trimming_rate(&self) -> f64 {
        match self {
            Estimator::Lts(p) => p.alpha,
            Estimator::SparseLts(p) => p.alpha,
            Estimator::TrimmedLogistic(p) => p.alpha,
            _ => 0.0,
        }
    }
}
