//! Consistency probes and breakdown-point calculators.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimators::FitResult;
use crate::linalg::Matrix;

/// Compares a functional value `t` against a competitor `x` under `loss(y, action)`.
#[derive(Debug, Clone, Copy)]
pub struct ConsistencyProbe<L> {
    pub t: f64,
    pub x: f64,
    pub loss: L,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeOutcome {
    pub risk_t: f64,
    pub risk_x: f64,
    pub t_wins: bool,
}

impl<L: Fn(f64, f64) -> f64> ConsistencyProbe<L> {
    pub fn new(t: f64, x: f64, loss: L) -> Result<Self> {
        if t == x {
            return Err(Error::param("x", "competitor must differ from the functional value"));
        }
        Ok(ConsistencyProbe { t, x, loss })
    }
}

/// Empirical risks of `t` and `x`; `t` wins iff its risk is strictly smaller.
pub fn probe_consistency<L: Fn(f64, f64) -> f64>(probe: &ConsistencyProbe<L>, sample: &[f64]) -> Result<ProbeOutcome> {
    if probe.t == probe.x {
        return Err(Error::param("x", "competitor must differ from the functional value"));
    }
    if sample.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let m = sample.len() as f64;
    let risk_t = sample.iter().map(|&y| (probe.loss)(y, probe.t)).sum::<f64>() / m;
    let risk_x = sample.iter().map(|&y| (probe.loss)(y, probe.x)).sum::<f64>() / m;
    Ok(ProbeOutcome { risk_t, risk_x, t_wins: risk_t < risk_x })
}

/// Running means of `losses` at each prefix length in `checkpoints`.
pub fn running_risks(losses: &[f64], checkpoints: &[usize]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut sum = 0.0;
    let mut done = 0;
    for &m in checkpoints {
        if m == 0 || m < done || m > losses.len() {
            return Err(Error::param("checkpoints", "must be increasing, positive and within the sample"));
        }
        sum += losses[done..m].iter().sum::<f64>();
        done = m;
        out.push(sum / m as f64);
    }
    Ok(out)
}

/// True if some successive pair of running risks at checkpoints beyond `from`
/// differs by more than `threshold` in relative terms.
pub fn fails_to_stabilize(risks: &[f64], checkpoints: &[usize], from: usize, threshold: f64) -> bool {
    risks.windows(2).zip(checkpoints.windows(2)).any(|(r, m)| {
        m[1] > from && {
            let denom = r[0].abs().max(f64::MIN_POSITIVE);
            (r[1] - r[0]).abs() / denom > threshold
        }
    })
}

/// Replaces clean test instances one at a time with crafted ones until
/// `model_t` no longer has the smaller empirical risk; returns how many were needed.
///
/// Each crafted label is either a gross outlier at distance `gross` from
/// `model_t`'s prediction on `model_x`'s side, or `model_x`'s prediction itself,
/// whichever shifts the risk difference more. The instance with the largest gain goes first.
pub fn demonstrate_breakdown<L: Fn(f64, f64) -> f64>(
    test_x: &Matrix,
    test_y: &[f64],
    gross: f64,
    model_t: &FitResult,
    model_x: &FitResult,
    loss: L,
) -> Result<usize> {
    let n = test_y.len();
    if n == 0 || test_x.rows() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {} rows", n, test_x.rows())));
    }
    if model_t.beta_hat == model_x.beta_hat && model_t.intercept == model_x.intercept {
        return Err(Error::param("model_x", "models must differ"));
    }
    if !(gross > 0.0) {
        return Err(Error::param("gross", "must be positive"));
    }
    let pt: Vec<f64> = (0..n).map(|i| model_t.predict(test_x.row(i))).collect();
    let px: Vec<f64> = (0..n).map(|i| model_x.predict(test_x.row(i))).collect();
    let mut sum_t: f64 = (0..n).map(|i| loss(test_y[i], pt[i])).sum();
    let sum_x: f64 = (0..n).map(|i| loss(test_y[i], px[i])).sum();
    if !(sum_t < sum_x) {
        return Err(Error::param("model_t", "must strictly beat model_x on the clean test set"));
    }
    // gain of replacing instance i: change in sum_t − sum_x
    let gains: Vec<f64> = (0..n)
        .map(|i| {
            let old = loss(test_y[i], pt[i]) - loss(test_y[i], px[i]);
            let side = if px[i] >= pt[i] { 1.0 } else { -1.0 };
            let far = pt[i] + side * gross;
            let g_far = loss(far, pt[i]) - loss(far, px[i]);
            let g_near = loss(px[i], pt[i]) - loss(px[i], px[i]);
            g_far.max(g_near) - old
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b)));
    for (count, &i) in order.iter().enumerate() {
        if !(gains[i] > 0.0) {
            break;
        }
        sum_t += gains[i];
        if sum_t >= sum_x {
            return Ok(count + 1);
        }
    }
    Err(Error::NoBreakdown(n))
}

/// Per-evaluation BDP `c` spread over `n_eval` loss evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdpRecord {
    pub c: f64,
    pub k: usize,
    pub n_eval: u128,
    pub empirical_bdp: f64,
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::param("c", format!("{c} not in (0, 1]")));
    }
    Ok(())
}

fn record(c: f64, k: usize, n_eval: u128) -> Result<BdpRecord> {
    if n_eval == 0 {
        return Err(Error::param("k", "no loss evaluations"));
    }
    Ok(BdpRecord { c, k, n_eval, empirical_bdp: c / n_eval as f64 })
}

/// `c / C(n_test, k)`.
pub fn empirical_bdp(c: f64, n_test: usize, k: usize) -> Result<BdpRecord> {
    check_c(c)?;
    if k == 0 || k > n_test {
        return Err(Error::param("k", format!("need 1 ≤ k ≤ n_test = {n_test}, got {k}")));
    }
    record(c, k, crate::binomial(n_test as u64, k as u64))
}

/// `c / (B·C(n_val, k))` for `B` resampled validation sets.
pub fn empirical_bdp_resampled(c: f64, n_val: usize, k: usize, batches: usize) -> Result<BdpRecord> {
    check_c(c)?;
    if k == 0 || k > n_val || batches == 0 {
        return Err(Error::param("k", format!("need 1 ≤ k ≤ n_val = {n_val} and B ≥ 1")));
    }
    let n_eval = crate::binomial(n_val as u64, k as u64).saturating_mul(batches as u128);
    record(c, k, n_eval)
}

/// Fraction of repetitions whose weak ranking error is positive.
pub fn experiment_bdp(weak_errors: &[f64]) -> Result<f64> {
    if weak_errors.is_empty() {
        return Err(Error::Empty("repetitions"));
    }
    Ok(weak_errors.iter().filter(|&&e| e > 0.0).count() as f64 / weak_errors.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::squared_loss;

    #[test]
    fn bdp_arithmetic() {
        let r = empirical_bdp(1.0, 100, 1).unwrap();
        assert_eq!(r.n_eval, 100);
        assert_eq!(r.empirical_bdp, 0.01);
        let r = empirical_bdp(0.5, 100, 2).unwrap();
        assert_eq!(r.n_eval, 4950);
        assert_eq!(r.empirical_bdp, 0.5 / 4950.0);
        assert!(empirical_bdp(1.0, 1000, 1).unwrap().empirical_bdp < 0.01);
        assert!(empirical_bdp(0.0, 10, 1).is_err());
        let r = empirical_bdp_resampled(1.0, 50, 1, 10).unwrap();
        assert_eq!(r.n_eval, 500);
    }

    #[test]
    fn experiment_level_bdp() {
        assert_eq!(experiment_bdp(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(experiment_bdp(&[0.0, 0.5, 0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(experiment_bdp(&[0.1, 0.2]).unwrap(), 1.0);
    }

    #[test]
    fn probe_rejects_equal_actions_and_handles_infinity() {
        assert!(ConsistencyProbe::new(1.0, 1.0, squared_loss).is_err());
        let probe = ConsistencyProbe::new(0.0, 1.0, |y: f64, a: f64| if a == 0.0 && y > 5.0 { f64::INFINITY } else { 0.0 }).unwrap();
        let out = probe_consistency(&probe, &[0.0, 10.0]).unwrap();
        assert!(!out.t_wins);
        assert_eq!(out.risk_t, f64::INFINITY);
    }

    #[test]
    fn running_risk_prefixes() {
        let r = running_risks(&[1.0, 3.0, 5.0, 7.0], &[1, 2, 4]).unwrap();
        assert_eq!(r, alloc::vec![1.0, 2.0, 4.0]);
        assert!(fails_to_stabilize(&r, &[1, 2, 4], 1, 0.5));
        assert!(!fails_to_stabilize(&r, &[1, 2, 4], 4, 0.5));
    }
}
