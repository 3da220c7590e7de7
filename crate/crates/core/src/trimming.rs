//! Training-instance, test-instance and batch trimming.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::datagen::CvScheme;
use crate::error::{Error, Result};
use crate::estimators::{loo_ols_scores, Estimator, FitResult};
use crate::linalg::Matrix;
use crate::losses::{aggregate_trimmed, largest_indices, LossVector, RankVector};
use crate::rng::{sample_permutation, sample_subset, RngStream};

/// Outcome of trimming `count` items by outlyingness score.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimReport {
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    pub scores: Vec<f64>,
    pub base_model: Option<FitResult>,
}

impl TrimReport {
    /// Drops the `⌈α·len⌉` highest scores; ties drop the higher index.
    pub fn from_scores(scores: Vec<f64>, alpha: f64, base_model: Option<FitResult>) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::param("alpha", format!("{alpha} not in [0, 1)")));
        }
        let dropped = largest_indices(&scores, crate::ceil_count(scores.len(), alpha));
        let mut is_dropped = alloc::vec![false; scores.len()];
        for &i in &dropped {
            is_dropped[i] = true;
        }
        let kept = (0..scores.len()).filter(|&i| !is_dropped[i]).collect();
        Ok(TrimReport { kept, dropped, scores, base_model })
    }
}

/// How leave-one-out fits are computed for fitters without a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LooMode {
    /// Refit each fold with the fitter's own settings.
    Exact,
    /// Warm-start each fold from the full-data fit and cap the random starts.
    Warm { starts_per_fold: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LooOptions {
    pub mode: LooMode,
    /// Use the `e_i/(1−h_ii)` identity for OLS instead of refitting.
    pub ols_fast_path: bool,
}

impl Default for LooOptions {
    fn default() -> Self {
        LooOptions { mode: LooMode::Exact, ols_fast_path: true }
    }
}

fn with_start_budget(fitter: &Estimator, starts: usize) -> Estimator {
    let mut f = fitter.clone();
    match &mut f {
        Estimator::Lts(p) => p.search.n_starts = starts,
        Estimator::SparseLts(p) => p.search.n_starts = starts,
        Estimator::TrimmedLogistic(p) => p.search.n_starts = starts,
        _ => {}
    }
    f
}

/// Leave-one-out loss of every instance under `fitter`.
pub fn loo_scores(x: &Matrix, y: &[f64], fitter: &Estimator, rng: &RngStream, opts: &LooOptions) -> Result<(Vec<f64>, FitResult)> {
    let n = y.len();
    if n != x.rows() {
        return Err(Error::DimensionMismatch(format!("{} labels for {} rows", n, x.rows())));
    }
    let penalized = match fitter {
        Estimator::Lasso(_) | Estimator::SparseLts(_) => true,
        Estimator::Logistic(p) => p.lambda > 0.0,
        Estimator::TrimmedLogistic(p) => p.logistic.lambda > 0.0,
        _ => false,
    };
    if !penalized && n < x.cols() + 1 {
        return Err(Error::param("n", "leave-one-out needs n ≥ p + 1"));
    }
    let base = fitter.fit(x, y, &mut rng.child("loo-base"))?;
    if matches!(fitter, Estimator::Ols) && opts.ols_fast_path {
        return Ok((loo_ols_scores(x, y)?, base));
    }
    let fold_fitter = match opts.mode {
        LooMode::Exact => fitter.clone(),
        LooMode::Warm { starts_per_fold } => with_start_budget(fitter, starts_per_fold),
    };
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&k| k != i).collect();
        let xs = x.select_rows(&keep);
        let ys: Vec<f64> = keep.iter().map(|&k| y[k]).collect();
        let mut fold_rng = rng.child(&format!("loo-{i}"));
        let fit = match opts.mode {
            LooMode::Exact => fold_fitter.fit(&xs, &ys, &mut fold_rng),
            LooMode::Warm { .. } => {
                // base subset re-indexed into the reduced data
                let hint: Option<Vec<usize>> = base
                    .subset
                    .as_ref()
                    .map(|s| s.iter().filter(|&&k| k != i).map(|&k| if k > i { k - 1 } else { k }).collect());
                fold_fitter.fit_warm(&xs, &ys, &mut fold_rng, Some(&base), hint.as_deref())
            }
        }
        .map_err(|e| Error::FoldFailed { fold: i, source: Box::new(e) })?;
        scores.push(fit.pointwise_loss(x.row(i), y[i]));
    }
    Ok((scores, base))
}

/// Drops the `⌈αn⌉` training instances with the largest leave-one-out loss.
pub fn loo_trim_training(
    x: &Matrix,
    y: &[f64],
    alpha: f64,
    fitter: &Estimator,
    rng: &RngStream,
    opts: &LooOptions,
) -> Result<TrimReport> {
    if crate::ceil_count(y.len(), alpha) == 0 && (0.0..1.0).contains(&alpha) {
        return TrimReport::from_scores(alloc::vec![0.0; y.len()], alpha, None);
    }
    let (scores, base) = loo_scores(x, y, fitter, rng, opts)?;
    TrimReport::from_scores(scores, alpha, Some(base))
}

/// Drops the `⌈α·n_test⌉` test instances with the largest loss under `model`.
pub fn trim_test_instances(test_x: &Matrix, test_y: &[f64], model: &FitResult, alpha: f64) -> Result<TrimReport> {
    if test_y.len() != test_x.rows() {
        return Err(Error::DimensionMismatch(format!("{} labels for {} rows", test_y.len(), test_x.rows())));
    }
    TrimReport::from_scores(model.pointwise_losses(test_x, test_y), alpha, Some(model.clone()))
}

/// A training batch and the instances held out from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub train: Vec<usize>,
    pub held_out: Vec<usize>,
}

fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    let mut inside = alloc::vec![false; n];
    for &i in set {
        inside[i] = true;
    }
    (0..n).filter(|&i| !inside[i]).collect()
}

/// Randomized: `B` uniform subsets of size `n_sub`. K-fold: a random partition
/// into `K` folds of near-equal size, each batch training on a fold's complement.
pub fn make_batches(n: usize, cv: CvScheme, n_sub: usize, rng: &mut RngStream) -> Result<Vec<Batch>> {
    match cv {
        CvScheme::Randomized { batches } => {
            if batches == 0 {
                return Err(Error::param("batches", "need at least one batch"));
            }
            let mut out = Vec::with_capacity(batches);
            for _ in 0..batches {
                let train = sample_subset(rng, n, n_sub)?;
                let held_out = complement(n, &train);
                out.push(Batch { train, held_out });
            }
            Ok(out)
        }
        CvScheme::KFold { folds } => {
            if folds < 2 || folds > n {
                return Err(Error::param("folds", format!("need 2 ≤ K ≤ n = {n}, got {folds}")));
            }
            let perm = sample_permutation(rng, n);
            let mut out = Vec::with_capacity(folds);
            let (base, extra) = (n / folds, n % folds);
            let mut start = 0;
            for k in 0..folds {
                let size = base + usize::from(k < extra);
                let mut held_out = perm[start..start + size].to_vec();
                held_out.sort_unstable();
                start += size;
                let train = complement(n, &held_out);
                out.push(Batch { train, held_out });
            }
            Ok(out)
        }
    }
}

/// Contaminated fraction of each batch's training part.
pub fn batch_contamination(batches: &[Batch], contaminated: &[bool]) -> Vec<f64> {
    batches
        .iter()
        .map(|b| {
            if b.train.is_empty() {
                0.0
            } else {
                b.train.iter().filter(|&&i| contaminated[i]).count() as f64 / b.train.len() as f64
            }
        })
        .collect()
}

/// Ranks batches by contaminated fraction, most contaminated first.
pub fn true_batch_ranking(batches: &[Batch], contaminated: &[bool]) -> RankVector {
    RankVector::from_scores(&batch_contamination(batches, contaminated))
}

/// Outlyingness score computed per batch by [`rank_batches`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchScore {
    TrainLoss,
    TrainLossTrimmed,
    TestLoss,
    TestLossTrimmed,
    CoefDeviation,
}

impl BatchScore {
    pub const ALL: [BatchScore; 5] = [
        BatchScore::TrainLoss,
        BatchScore::TrainLossTrimmed,
        BatchScore::TestLoss,
        BatchScore::TestLossTrimmed,
        BatchScore::CoefDeviation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BatchScore::TrainLoss => "train_loss",
            BatchScore::TrainLossTrimmed => "train_loss_trimmed",
            BatchScore::TestLoss => "test_loss",
            BatchScore::TestLossTrimmed => "test_loss_trimmed",
            BatchScore::CoefDeviation => "coef_deviation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRanking {
    pub ranks: RankVector,
    pub scores: Vec<f64>,
    /// Batches whose fit failed; they score `+∞`.
    pub failed: Vec<bool>,
}

/// Fits `fitter` on every batch's training part; numerical failures give `None`.
pub fn fit_batches(batches: &[Batch], x: &Matrix, y: &[f64], fitter: &Estimator, rng: &RngStream) -> Result<Vec<Option<FitResult>>> {
    let mut fits = Vec::with_capacity(batches.len());
    for (b, batch) in batches.iter().enumerate() {
        let xb = x.select_rows(&batch.train);
        let yb: Vec<f64> = batch.train.iter().map(|&i| y[i]).collect();
        match fitter.fit(&xb, &yb, &mut rng.child(&format!("batch-{b}"))) {
            Ok(fit) => fits.push(Some(fit)),
            Err(e) if e.is_numerical() || matches!(e, Error::DegenerateResponse(_)) => fits.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(fits)
}

/// Scores already fitted batches. Batches without a fit score `+∞`.
///
/// Loss scores use `classical`; `robust` is needed only for
/// [`BatchScore::CoefDeviation`]. Without an external `test` set each batch is
/// evaluated on its held-out instances.
#[allow(clippy::too_many_arguments)]
pub fn score_fitted_batches(
    batches: &[Batch],
    x: &Matrix,
    y: &[f64],
    method: BatchScore,
    classical: &[Option<FitResult>],
    robust: Option<&[Option<FitResult>]>,
    test: Option<(&Matrix, &[f64])>,
    alpha: f64,
) -> Result<BatchRanking> {
    if method == BatchScore::CoefDeviation && robust.is_none() {
        return Err(Error::param("robust", "coefficient deviation needs a robust fitter"));
    }
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::param("alpha", format!("{alpha} not in [0, 0.5]")));
    }
    if classical.len() != batches.len() || robust.is_some_and(|r| r.len() != batches.len()) {
        return Err(Error::DimensionMismatch(format!("{} batches but fits of other length", batches.len())));
    }
    let mut scores = Vec::with_capacity(batches.len());
    let mut failed = Vec::with_capacity(batches.len());
    for (b, batch) in batches.iter().enumerate() {
        let fit = classical[b].as_ref();
        let other = robust.map(|r| r[b].as_ref());
        let score = match (fit, method, other) {
            (None, _, _) | (_, BatchScore::CoefDeviation, Some(None)) => None,
            (Some(f), BatchScore::CoefDeviation, Some(Some(g))) => {
                let d2: f64 = f.beta_hat.iter().zip(&g.beta_hat).map(|(a, b)| (a - b) * (a - b)).sum();
                Some(libm::sqrt(d2))
            }
            (Some(f), _, _) => Some(loss_score(batch, x, y, f, method, test, alpha)?),
        };
        scores.push(score.unwrap_or(f64::INFINITY));
        failed.push(score.is_none());
    }
    Ok(BatchRanking { ranks: RankVector::from_scores(&scores), scores, failed })
}

fn loss_score(
    batch: &Batch,
    x: &Matrix,
    y: &[f64],
    fit: &FitResult,
    method: BatchScore,
    test: Option<(&Matrix, &[f64])>,
    alpha: f64,
) -> Result<f64> {
    let on_test = matches!(method, BatchScore::TestLoss | BatchScore::TestLossTrimmed);
    let trimmed = matches!(method, BatchScore::TrainLossTrimmed | BatchScore::TestLossTrimmed);
    let losses = match (on_test, test) {
        (true, Some((tx, ty))) => fit.pointwise_losses(tx, ty),
        (true, None) => {
            let hx = x.select_rows(&batch.held_out);
            let hy: Vec<f64> = batch.held_out.iter().map(|&i| y[i]).collect();
            fit.pointwise_losses(&hx, &hy)
        }
        (false, _) => {
            let xb = x.select_rows(&batch.train);
            let yb: Vec<f64> = batch.train.iter().map(|&i| y[i]).collect();
            fit.pointwise_losses(&xb, &yb)
        }
    };
    aggregate_trimmed(&LossVector::new(losses), if trimmed { alpha } else { 0.0 })
}

/// Fits and ranks batches; rank 1 is the most outlying batch. Failed fits are
/// flagged and score `+∞`.
#[allow(clippy::too_many_arguments)]
pub fn rank_batches(
    batches: &[Batch],
    x: &Matrix,
    y: &[f64],
    method: BatchScore,
    classical: &Estimator,
    robust: Option<&Estimator>,
    test: Option<(&Matrix, &[f64])>,
    alpha: f64,
    rng: &RngStream,
) -> Result<BatchRanking> {
    if method == BatchScore::CoefDeviation && robust.is_none() {
        return Err(Error::param("robust", "coefficient deviation needs a robust fitter"));
    }
    let fits = fit_batches(batches, x, y, classical, rng)?;
    let robust_fits = match (method, robust) {
        (BatchScore::CoefDeviation, Some(r)) => Some(fit_batches(batches, x, y, r, rng)?),
        _ => None,
    };
    score_fitted_batches(batches, x, y, method, &fits, robust_fits.as_deref(), test, alpha)
}
