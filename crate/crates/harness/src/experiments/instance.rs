//! Instance identification: LOO scores on training data, full-data model
//! scores on test data (E5), and test scoring after LOO trimming (E6).

use robust_elicit_core::datagen::Dataset;
use robust_elicit_core::estimators::{Estimator, FitResult};
use robust_elicit_core::losses::{weak_ranking_error, RankVector};
use robust_elicit_core::trimming::{loo_scores, TrimReport};

use super::{contaminate, generate, loo_options, make_fitters, Lineage, Rows, Setup};
use crate::error::Result;
use crate::metrics::MetricName;

fn contaminated_indices(data: &Dataset) -> Vec<usize> {
    (0..data.len()).filter(|&i| data.contaminated[i]).collect()
}

/// Weak ranking error of outlyingness `scores` against the flagged instances,
/// with `M` the realized contaminated count.
fn weak_error(data: &Dataset, scores: &[f64]) -> Result<f64> {
    let best = contaminated_indices(data);
    Ok(weak_ranking_error(&best, &RankVector::from_scores(scores), best.len())?)
}

fn push_weak(rows: &mut Rows<'_>, estimator: &str, strategy: &str, r: f64, r_val: f64, metric: MetricName, w: f64) {
    rows.push(estimator, strategy, "none", r, r_val, metric, w);
    // per-repetition indicator; its mean over repetitions is the empirical BDP
    rows.push(estimator, strategy, "none", r, r_val, MetricName::EmpiricalBdp, f64::from(u8::from(w > 0.0)));
}

fn loo(setup: &Setup, lineage: &Lineage, train: &Dataset, fitter: &Estimator) -> Result<Vec<f64>> {
    let rng = lineage.stream(&format!("loo/{}", fitter.name()));
    Ok(loo_scores(&train.x, &train.y, fitter, &rng, &loo_options(setup))?.0)
}

fn score_tests(
    setup: &Setup,
    lineage: &Lineage,
    rows: &mut Rows<'_>,
    clean_test: &Dataset,
    r: f64,
    models: &[(&str, FitResult)],
    strategy: &str,
) -> Result<()> {
    for &r_val in &setup.r_val_grid {
        if r_val == 0.0 {
            continue;
        }
        let test = contaminate(setup, clean_test, r_val, &mut lineage.stream("contam-test"))?;
        for (name, model) in models {
            let w = weak_error(&test, &model.pointwise_losses(&test.x, &test.y))?;
            push_weak(rows, name, strategy, r, r_val, MetricName::WeakRankingErrorTest, w);
        }
    }
    Ok(())
}

pub(super) fn run_e5(setup: &Setup, lineage: &Lineage, rows: &mut Rows<'_>, g: f64) -> Result<()> {
    let data = generate(setup, lineage, g)?;
    for &r in &setup.r_grid {
        let train = contaminate(setup, &data.train, r, &mut lineage.stream("contam-train"))?;
        let fitters = make_fitters(setup, &train, &mut lineage.stream("lambda"))?;
        let mut models = Vec::with_capacity(2);
        for fitter in fitters.both() {
            if setup.train_identification && r > 0.0 {
                let w = weak_error(&train, &loo(setup, lineage, &train, fitter)?)?;
                push_weak(rows, fitter.name(), "loo", r, 0.0, MetricName::WeakRankingErrorTrain, w);
            }
            models.push((fitter.name(), fitter.fit(&train.x, &train.y, &mut lineage.stream("fit-full"))?));
        }
        score_tests(setup, lineage, rows, &data.test, r, &models, "full_fit")?;
    }
    Ok(())
}

pub(super) fn run_e6(setup: &Setup, lineage: &Lineage, rows: &mut Rows<'_>, g: f64) -> Result<()> {
    let data = generate(setup, lineage, g)?;
    for &r in &setup.r_grid {
        let train = contaminate(setup, &data.train, r, &mut lineage.stream("contam-train"))?;
        let fitters = make_fitters(setup, &train, &mut lineage.stream("lambda"))?;
        let alpha = setup.trim_alpha.unwrap_or(r);
        for base in fitters.both() {
            let identify = setup.train_identification && r > 0.0;
            let scores = if alpha > 0.0 || identify { Some(loo(setup, lineage, &train, base)?) } else { None };
            if let (true, Some(s)) = (identify, &scores) {
                push_weak(rows, base.name(), "loo", r, 0.0, MetricName::WeakRankingErrorTrain, weak_error(&train, s)?);
            }
            let report = TrimReport::from_scores(scores.unwrap_or_else(|| vec![0.0; train.len()]), alpha, None)?;
            let kept = train.subset(&report.kept);
            let mut models = Vec::with_capacity(2);
            for scorer in fitters.both() {
                models.push((scorer.name(), scorer.fit(&kept.x, &kept.y, &mut lineage.stream("fit-full"))?));
            }
            score_tests(setup, lineage, rows, &data.test, r, &models, &format!("trim={}", base.name()))?;
        }
    }
    Ok(())
}
