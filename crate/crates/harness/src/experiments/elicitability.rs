//! E0 (test-loss fluctuation under clean data) and E1 (Cauchy-contaminated validation).

use robust_elicit_core::datagen::{draw_coefficients, gen_regression_with, Noise, TrueModel};
use robust_elicit_core::estimators::{fit_lts, fit_ols, FitResult, Link, LtsParams, SearchParams};
use robust_elicit_core::linalg::dot;
use robust_elicit_core::losses::{
    aggregate_mean, aggregate_oracle, aggregate_transformed, aggregate_trimmed, LossVector, Transform,
};

use super::{Lineage, Rows, Setup, E1_MIX, E1_TRIM};
use crate::error::Result;
use crate::metrics::MetricName;

fn holdout(n: usize) -> String {
    format!("holdout-{n}")
}

/// Mean of the first `n` losses for each `n` in `sizes`.
fn prefix_means(losses: &[f64], sizes: &[usize]) -> Vec<f64> {
    let mut sums = Vec::with_capacity(losses.len() + 1);
    let mut acc = 0.0;
    sums.push(acc);
    for &l in losses {
        acc += l;
        sums.push(acc);
    }
    sizes.iter().map(|&n| sums[n] / n as f64).collect()
}

/// OLS trained at each SNR of the grid on a shared β, evaluated together with
/// the true β on nested test sets of every grid SNR.
pub(super) fn run_e0(setup: &Setup, rep: usize, rows: &mut Rows<'_>) -> Result<()> {
    let base = &setup.base;
    let lineage = Lineage::new(setup, format!("fluctuation/p{}/n{}", base.p, base.n), rep);
    let beta = draw_coefficients(base.p, base.s0, &mut lineage.stream("model"))?;
    let model_at = |snr: f64| TrueModel { beta: beta.clone(), sigma: (dot(&beta, &beta) / snr).sqrt() };
    let max_val = setup.n_val.iter().copied().max().unwrap_or(0);

    let mut fits = Vec::with_capacity(setup.grid.len());
    for &s in &setup.grid {
        let model = model_at(s);
        let mut rng = lineage.stream(&format!("train/snr={s}"));
        let train = gen_regression_with(base.mu, &model, Noise::Gaussian { sigma: model.sigma }, &mut rng, base.n)?;
        fits.push((format!("trained-snr={s}"), fit_ols(&train.x, &train.y)?));
    }
    let truth = FitResult::from_coefficients(beta.clone(), 0.0, Link::Identity);

    for &t in &setup.grid {
        let model = model_at(t);
        let mut rng = lineage.stream(&format!("test/snr={t}"));
        let test = gen_regression_with(base.mu, &model, Noise::Gaussian { sigma: model.sigma }, &mut rng, max_val)?;
        rows.g = t;
        let truth_means = prefix_means(&truth.pointwise_losses(&test.x, &test.y), &setup.n_val);
        for (&nv, &v) in setup.n_val.iter().zip(&truth_means) {
            rows.push("truth", "truth", &holdout(nv), 0.0, 0.0, MetricName::AvgTestLoss, v);
        }
        for (label, fit) in &fits {
            let means = prefix_means(&fit.pointwise_losses(&test.x, &test.y), &setup.n_val);
            for (&nv, &v) in setup.n_val.iter().zip(&means) {
                rows.push("ols", label, &holdout(nv), 0.0, 0.0, MetricName::AvgTestLoss, v);
            }
        }
    }
    Ok(())
}

const AGGREGATORS: [&str; 4] = ["mean", "oracle", "trimmed", "arctan"];

fn aggregates(losses: &[f64], flags: &[bool]) -> Result<[f64; 4]> {
    let l = LossVector::with_flags(losses.to_vec(), flags.to_vec())?;
    Ok([
        aggregate_mean(&l),
        aggregate_oracle(&l)?.value,
        aggregate_trimmed(&l, E1_TRIM)?,
        aggregate_transformed(&l, Transform::Arctan),
    ])
}

/// OLS and LTS against the true β on nested test sets drawn, like the
/// training set, with 5 % Cauchy noise.
pub(super) fn run_e1(setup: &Setup, rep: usize, rows: &mut Rows<'_>) -> Result<()> {
    let base = &setup.base;
    let lineage = Lineage::new(setup, format!("cauchy/p{}/n{}", base.p, base.n), rep);
    let beta = draw_coefficients(base.p, base.p, &mut lineage.stream("model"))?;
    let model = TrueModel { beta: beta.clone(), sigma: 1.0 };
    let noise = Noise::CauchyMixture { mix: E1_MIX };
    let train = gen_regression_with(base.mu, &model, noise, &mut lineage.stream("train"), base.n)?;
    let max_val = setup.n_val.iter().copied().max().unwrap_or(0);
    let test = gen_regression_with(base.mu, &model, noise, &mut lineage.stream("test"), max_val)?;

    let lts = LtsParams { alpha: 0.5, search: SearchParams::with_starts(setup.n_starts) };
    let models = [
        ("ols", fit_ols(&train.x, &train.y)?),
        ("lts", fit_lts(&train.x, &train.y, &lts, &mut lineage.stream("fit-lts"))?),
    ];
    let truth = FitResult::from_coefficients(beta, 0.0, Link::Identity);
    let truth_losses = truth.pointwise_losses(&test.x, &test.y);
    let model_losses: Vec<Vec<f64>> = models.iter().map(|(_, m)| m.pointwise_losses(&test.x, &test.y)).collect();

    rows.g = base.mu;
    for &nv in &setup.n_val {
        let cv = holdout(nv);
        let flags = &test.contaminated[..nv];
        let t = aggregates(&truth_losses[..nv], flags)?;
        for (agg, v) in AGGREGATORS.iter().zip(t) {
            rows.push("truth", agg, &cv, 0.0, 0.0, MetricName::AvgTestLoss, v);
        }
        for ((name, _), losses) in models.iter().zip(&model_losses) {
            let m = aggregates(&losses[..nv], flags)?;
            for ((agg, v), tv) in AGGREGATORS.iter().zip(m).zip(t) {
                rows.push(name, agg, &cv, 0.0, 0.0, MetricName::AvgTestLoss, v);
                rows.push(name, agg, &cv, 0.0, 0.0, MetricName::FlipRate, f64::from(u8::from(v < tv)));
            }
        }
    }
    Ok(())
}
