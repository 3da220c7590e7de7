//! Pointwise losses, aggregation of test losses, U-statistics and ranking errors.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::rng::{sample_subset, RngStream};

/// Probability clamp used by [`deviance_loss`].
pub const PROB_CLAMP: f64 = 1e-12;

/// Largest number of index subsets a U-statistic enumerates before it subsamples.
pub const U_STAT_EXHAUSTIVE_MAX: u128 = 1_000_000;

/// Subsets drawn when a U-statistic is subsampled.
pub const U_STAT_SAMPLES: usize = 100_000;

pub fn squared_loss(y: f64, yhat: f64) -> f64 {
    let r = y - yhat;
    r * r
}

/// Binomial deviance of a 0/1 label under predicted probability `p_hat`.
pub fn deviance_loss(y: f64, p_hat: f64) -> f64 {
    let p = p_hat.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -2.0 * (y * libm::log(p) + (1.0 - y) * libm::log(1.0 - p))
}

/// Per-instance test losses with optional ground-truth contamination flags.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector {
    pub values: Vec<f64>,
    pub source_flags: Option<Vec<bool>>,
}

impl LossVector {
    pub fn new(values: Vec<f64>) -> Self {
        LossVector { values, source_flags: None }
    }

    pub fn with_flags(values: Vec<f64>, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != values.len() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{} losses but {} flags",
                values.len(),
                flags.len()
            )));
        }
        Ok(LossVector { values, source_flags: Some(flags) })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Arithmetic mean. `+∞` entries propagate.
pub fn aggregate_mean(l: &LossVector) -> f64 {
    mean(&l.values)
}

/// Indices of the `count` largest values; among equal values the higher index goes first.
pub fn largest_indices(values: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| desc_nan_first(values[a], values[b]).then(b.cmp(&a)));
    order.truncate(count);
    order.sort_unstable();
    order
}

fn desc_nan_first(a: f64, b: f64) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => b.partial_cmp(&a).unwrap_or(Ordering::Equal),
    }
}

/// Drops the `⌊mα⌋` largest losses and divides the rest by `⌈(1−α)m⌉`.
pub fn aggregate_trimmed(l: &LossVector, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let m = l.len();
    if m == 0 {
        return Err(Error::Empty("loss vector"));
    }
    let mut sorted = l.values.clone();
    sorted.sort_by(|a, b| desc_nan_first(*b, *a));
    // summed in ascending order
    let sum: f64 = sorted[..m - crate::floor_count(m, alpha)].iter().sum();
    Ok(sum / crate::ceil_count(m, 1.0 - alpha) as f64)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::param("alpha", alloc::format!("{alpha} not in [0, 0.5]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Arctan,
}

impl Transform {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Transform::Arctan => libm::atan(v),
        }
    }
}

/// Mean of the transformed losses.
pub fn aggregate_transformed(l: &LossVector, transform: Transform) -> f64 {
    l.values.iter().map(|&v| transform.apply(v)).sum::<f64>() / l.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMean {
    pub value: f64,
    pub count: usize,
}

/// Mean over the entries not flagged as contaminated.
pub fn aggregate_oracle(l: &LossVector) -> Result<OracleMean> {
    let flags = l
        .source_flags
        .as_ref()
        .ok_or_else(|| Error::param("source_flags", "oracle aggregation needs contamination flags"))?;
    let clean: Vec<f64> = l.values.iter().zip(flags).filter(|(_, &f)| !f).map(|(v, _)| *v).collect();
    if clean.is_empty() {
        return Err(Error::Empty("clean test instances"));
    }
    Ok(OracleMean { value: mean(&clean), count: clean.len() })
}

/// Mean over folds of the per-fold trimmed loss.
pub fn aggregate_fold_trimmed_cv(fold_losses: &[LossVector], alpha: f64) -> Result<f64> {
    if fold_losses.is_empty() {
        return Err(Error::Empty("folds"));
    }
    let mut sum = 0.0;
    for fold in fold_losses {
        sum += aggregate_trimmed(fold, alpha)?;
    }
    Ok(sum / fold_losses.len() as f64)
}

/// 1 iff the pair is ordered oppositely by truth and prediction.
pub fn pairwise_misranking_loss(y_i: f64, y_j: f64, yhat_i: f64, yhat_j: f64) -> f64 {
    if (y_i - y_j) * (yhat_i - yhat_j) < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// How [`u_statistic`] covered the index subsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UStatistic {
    pub value: f64,
    pub evaluations: usize,
    pub exhaustive: bool,
}

/// Average of a k-ary loss over size-k index subsets in increasing order.
///
/// All `C(m,k)` subsets are used when there are at most [`U_STAT_EXHAUSTIVE_MAX`];
/// otherwise [`U_STAT_SAMPLES`] subsets are drawn uniformly from `rng`.
pub fn u_statistic<F>(loss: F, y: &[f64], yhat: &[f64], k: usize, rng: &mut RngStream) -> Result<UStatistic>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let m = y.len();
    if yhat.len() != m {
        return Err(Error::DimensionMismatch(alloc::format!("{} labels but {} predictions", m, yhat.len())));
    }
    if k == 0 || k > m {
        return Err(Error::param("k", alloc::format!("need 1 ≤ k ≤ m = {m}, got {k}")));
    }
    let mut ys = alloc::vec![0.0; k];
    let mut hs = alloc::vec![0.0; k];
    let mut eval = |idx: &[usize]| {
        for (s, &i) in idx.iter().enumerate() {
            ys[s] = y[i];
            hs[s] = yhat[i];
        }
        loss(&ys, &hs)
    };
    let total = crate::binomial(m as u64, k as u64);
    if total <= U_STAT_EXHAUSTIVE_MAX {
        let mut sum = 0.0;
        crate::for_each_combination(m, k, |idx| sum += eval(idx));
        let n = total as usize;
        return Ok(UStatistic { value: sum / n as f64, evaluations: n, exhaustive: true });
    }
    let mut sum = 0.0;
    for _ in 0..U_STAT_SAMPLES {
        let idx = sample_subset(rng, m, k)?;
        sum += eval(&idx);
    }
    Ok(UStatistic { value: sum / U_STAT_SAMPLES as f64, evaluations: U_STAT_SAMPLES, exhaustive: false })
}

/// Ranks with ties, 1 = most outlying. Tied entries share the mid-rank.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    ranks: Vec<f64>,
}

impl RankVector {
    /// Ranks scores so that the highest score gets rank 1. NaN counts as the highest.
    pub fn from_scores(scores: &[f64]) -> Self {
        let k = scores.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| desc_nan_first(scores[a], scores[b]).then(a.cmp(&b)));
        let mut ranks = alloc::vec![0.0; k];
        let tied = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        let mut start = 0;
        while start < k {
            let mut end = start + 1;
            while end < k && tied(scores[order[end]], scores[order[start]]) {
                end += 1;
            }
            // positions start..end hold ranks start+1..=end
            let mid = (start + 1 + end) as f64 / 2.0;
            for &i in &order[start..end] {
                ranks[i] = mid;
            }
            start = end;
        }
        RankVector { ranks }
    }

    /// Validates that `ranks` follow the mid-rank convention for `1..=K`.
    pub fn new(ranks: Vec<f64>) -> Result<Self> {
        if ranks.iter().any(|r| !r.is_finite()) {
            return Err(Error::param("ranks", "ranks must be finite"));
        }
        let negated: Vec<f64> = ranks.iter().map(|r| -r).collect();
        let canonical = RankVector::from_scores(&negated);
        if canonical.ranks != ranks {
            return Err(Error::param("ranks", "not a valid mid-rank vector"));
        }
        Ok(canonical)
    }

    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn is_all_tied(&self) -> bool {
        self.ranks.windows(2).all(|w| w[0] == w[1])
    }
}

/// Fraction of truth-ordered pairs the prediction gets wrong; predicted ties count one half.
pub fn hard_ranking_error(truth: &RankVector, predicted: &RankVector) -> Result<f64> {
    let k = truth.len();
    if predicted.len() != k {
        return Err(Error::DimensionMismatch(alloc::format!(
            "truth has {} entries, prediction {}",
            k,
            predicted.len()
        )));
    }
    let (t, p) = (truth.ranks(), predicted.ranks());
    let mut pairs = 0usize;
    let mut wrong = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            let dt = t[a] - t[b];
            if dt == 0.0 {
                continue;
            }
            pairs += 1;
            let dp = p[a] - p[b];
            if dp == 0.0 {
                wrong += 0.5;
            } else if (dt < 0.0) != (dp < 0.0) {
                wrong += 1.0;
            }
        }
    }
    Ok(if pairs == 0 { 0.0 } else { wrong / pairs as f64 })
}

/// `(2/K)·#{k ∈ Best_M : π̂_k > M}`.
pub fn weak_ranking_error(truth_outliers: &[usize], predicted: &RankVector, m: usize) -> Result<f64> {
    let k = predicted.len();
    if truth_outliers.len() != m || m > k {
        return Err(Error::param(
            "M",
            alloc::format!("need |Best_M| = M ≤ K, got |Best_M| = {}, M = {m}, K = {k}", truth_outliers.len()),
        ));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let mut misses = 0usize;
    for &i in truth_outliers {
        if i >= k {
            return Err(Error::param("Best_M", alloc::format!("index {i} out of range for K = {k}")));
        }
        if predicted.ranks()[i] > m as f64 {
            misses += 1;
        }
    }
    Ok(2.0 * misses as f64 / k as f64)
}
