//! Batch-ranking experiments: clean test set (E2), LOO-trimmed training data
//! (E3) and a contaminated, model-cleaned test set (E4).

use robust_elicit_core::datagen::{CvScheme, Dataset};
use robust_elicit_core::linalg::Matrix;
use robust_elicit_core::losses::hard_ranking_error;
use robust_elicit_core::trimming::{
    fit_batches, loo_trim_training, make_batches, score_fitted_batches, trim_test_instances, true_batch_ranking, Batch,
    BatchScore,
};

use super::{contaminate, generate, loo_options, make_fitters, Fitters, Lineage, Rows, Setup, BATCH_TRIM};
use crate::error::Result;
use crate::metrics::MetricName;

/// Batches of one CV scheme with both fitters' models on every batch.
struct FittedBatches {
    batches: Vec<Batch>,
    truth: robust_elicit_core::losses::RankVector,
    fits: [Vec<Option<robust_elicit_core::estimators::FitResult>>; 2],
}

fn fit_scheme(lineage: &Lineage, setup: &Setup, train: &Dataset, fitters: &Fitters, cv: CvScheme) -> Result<FittedBatches> {
    let batches = make_batches(train.len(), cv, setup.base.n_sub, &mut lineage.stream(&format!("batches/{cv}")))?;
    let truth = true_batch_ranking(&batches, &train.contaminated);
    let rng = lineage.stream(&format!("fit/{cv}"));
    let fits = [
        fit_batches(&batches, &train.x, &train.y, &fitters.classical, &rng)?,
        fit_batches(&batches, &train.x, &train.y, &fitters.robust, &rng)?,
    ];
    Ok(FittedBatches { batches, truth, fits })
}

/// Hard ranking error of every (fitter, score) pair; the coefficient deviation
/// uses both fitters at once and is labelled `classical+robust`.
fn rank_errors(
    fb: &FittedBatches,
    train: &Dataset,
    fitters: &Fitters,
    methods: &[BatchScore],
    test: (&Matrix, &[f64]),
) -> Result<Vec<(String, BatchScore, f64)>> {
    let mut out = Vec::new();
    for &method in methods {
        if method == BatchScore::CoefDeviation {
            let ranking = score_fitted_batches(
                &fb.batches,
                &train.x,
                &train.y,
                method,
                &fb.fits[0],
                Some(&fb.fits[1]),
                Some(test),
                BATCH_TRIM,
            )?;
            let label = format!("{}+{}", fitters.classical.name(), fitters.robust.name());
            out.push((label, method, hard_ranking_error(&fb.truth, &ranking.ranks)?));
            continue;
        }
        for (fitter, fits) in fitters.both().into_iter().zip(&fb.fits) {
            let ranking =
                score_fitted_batches(&fb.batches, &train.x, &train.y, method, fits, None, Some(test), BATCH_TRIM)?;
            out.push((fitter.name().to_string(), method, hard_ranking_error(&fb.truth, &ranking.ranks)?));
        }
    }
    Ok(out)
}

pub(super) fn run_e2(setup: &Setup, lineage: &Lineage, rows: &mut Rows<'_>, g: f64) -> Result<()> {
    let data = generate(setup, lineage, g)?;
    let test = (&data.test.x, data.test.y.as_slice());
    for &r in &setup.r_grid {
        let train = contaminate(setup, &data.train, r, &mut lineage.stream("contam-train"))?;
        let fitters = make_fitters(setup, &train, &mut lineage.stream("lambda"))?;
        for &cv in &setup.cv {
            let fb = fit_scheme(lineage, setup, &train, &fitters, cv)?;
            for (estimator, method, err) in rank_errors(&fb, &train, &fitters, &BatchScore::ALL, test)? {
                rows.push(&estimator, method.as_str(), &cv.to_string(), r, 0.0, MetricName::HardRankingError, err);
            }
        }
    }
    Ok(())
}

pub(super) fn run_e3(setup: &Setup, lineage: &Lineage, rows: &mut Rows<'_>, g: f64) -> Result<()> {
    let data = generate(setup, lineage, g)?;
    let test = (&data.test.x, data.test.y.as_slice());
    for &r in &setup.r_grid {
        let train = contaminate(setup, &data.train, r, &mut lineage.stream("contam-train"))?;
        let fitters = make_fitters(setup, &train, &mut lineage.stream("lambda"))?;
        for base in fitters.both() {
            let loo_rng = lineage.stream(&format!("loo/{}", base.name()));
            let report = loo_trim_training(&train.x, &train.y, r, base, &loo_rng, &loo_options(setup))?;
            let kept = train.subset(&report.kept);
            for &cv in &setup.cv {
                let fb = fit_scheme(lineage, setup, &kept, &fitters, cv)?;
                for (estimator, method, err) in rank_errors(&fb, &kept, &fitters, &BatchScore::ALL, test)? {
                    let strategy = format!("{}/trim={}", method.as_str(), base.name());
                    rows.push(&estimator, &strategy, &cv.to_string(), r, 0.0, MetricName::HardRankingError, err);
                }
            }
        }
    }
    Ok(())
}

pub(super) fn run_e4(setup: &Setup, lineage: &Lineage, rows: &mut Rows<'_>, g: f64) -> Result<()> {
    let data = generate(setup, lineage, g)?;
    let methods = [BatchScore::TestLoss, BatchScore::TestLossTrimmed];
    for &r in &setup.r_grid {
        let train = contaminate(setup, &data.train, r, &mut lineage.stream("contam-train"))?;
        let fitters = make_fitters(setup, &train, &mut lineage.stream("lambda"))?;
        let mut cleaners = Vec::with_capacity(2);
        for fitter in fitters.both() {
            cleaners.push((fitter.name(), fitter.fit(&train.x, &train.y, &mut lineage.stream("fit-full"))?));
        }
        let schemes: Vec<(CvScheme, FittedBatches)> = setup
            .cv
            .iter()
            .map(|&cv| fit_scheme(lineage, setup, &train, &fitters, cv).map(|fb| (cv, fb)))
            .collect::<Result<_>>()?;
        for &r_val in &setup.r_val_grid {
            let test = contaminate(setup, &data.test, r_val, &mut lineage.stream("contam-test"))?;
            for (cleaner, model) in &cleaners {
                let report = trim_test_instances(&test.x, &test.y, model, r_val)?;
                let cleaned = test.subset(&report.kept);
                for (cv, fb) in &schemes {
                    let errors = rank_errors(fb, &train, &fitters, &methods, (&cleaned.x, &cleaned.y))?;
                    for (estimator, method, err) in errors {
                        let strategy = format!("{}/clean={cleaner}", method.as_str());
                        rows.push(&estimator, &strategy, &cv.to_string(), r, r_val, MetricName::HardRankingError, err);
                    }
                }
            }
        }
    }
    Ok(())
}
