//! Scenario runners E0–E6. Each repetition draws every random quantity from
//! its own lineage streams, so results do not depend on scheduling.

mod batch;
mod elicitability;
mod instance;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use robust_elicit_core::datagen::{
    draw_coefficients, draw_model, gen_classification_with, gen_regression_with, inject_contamination, preset,
    ContamScheme, CvScheme, Dataset, Noise, ScenarioConfig, Task, CONTAM_TEST_R_GRID, TABLE_R_GRID,
};
use robust_elicit_core::estimators::{
    select_lasso_lambda_cv, select_logistic_lambda_cv, CvGrid, Estimator, LassoParams, LogisticParams, LtsParams,
    SearchParams, SparseLtsParams, TrimmedLogisticParams,
};
use robust_elicit_core::rng::{derive_stream, RngStream};
use robust_elicit_core::trimming::{LooMode, LooOptions};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::metrics::{sort_rows, MetricName, MetricRow};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_N_STARTS: usize = 100;
pub const DEFAULT_LOO_STARTS: usize = 2;
/// Test-set sizes of E0: 100..900, 1000..9000, 10000..90000 and 10^5.
pub fn default_n_val_grid() -> Vec<usize> {
    let mut grid = Vec::new();
    for scale in [100, 1_000, 10_000] {
        grid.extend((1..10).map(|k| k * scale));
    }
    grid.push(100_000);
    grid
}
pub const E0_SNR_GRID: [f64; 3] = [5.0, 1.0, 0.2];
pub const E1_N_TEST_GRID: [usize; 3] = [100, 1_000, 10_000];
pub const E1_MIX: f64 = 0.05;
pub const E1_TRIM: f64 = 0.05;
/// Trimming rate of the trimmed batch losses.
pub const BATCH_TRIM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    E0,
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
}

impl Experiment {
    pub const ALL: [Experiment; 7] =
        [Experiment::E0, Experiment::E1, Experiment::E2, Experiment::E3, Experiment::E4, Experiment::E5, Experiment::E6];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::E0 => "E0",
            Experiment::E1 => "E1",
            Experiment::E2 => "E2",
            Experiment::E3 => "E3",
            Experiment::E4 => "E4",
            Experiment::E5 => "E5",
            Experiment::E6 => "E6",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| HarnessError::Usage(format!("unknown experiment `{s}`; expected E0..E6")))
    }
}

/// A fully resolved run: preset values with every override applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub experiment: Experiment,
    pub base: ScenarioConfig,
    pub seed: u64,
    pub repetitions: usize,
    /// SNR (regression) or μ (classification) points.
    pub grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub r_val_grid: Vec<f64>,
    pub cv: Vec<CvScheme>,
    pub n_starts: usize,
    pub loo_starts: usize,
    pub trim_alpha: Option<f64>,
    pub n_val: Vec<usize>,
    pub train_identification: bool,
}

fn check_radii(key: &str, grid: &[f64]) -> Result<()> {
    match grid.iter().find(|r| !(0.0..1.0).contains(*r)) {
        Some(r) => Err(HarnessError::config(key, format!("{r} not in [0, 1)"))),
        None => Ok(()),
    }
}

impl Setup {
    pub fn resolve(experiment: Experiment, cfg: &RunConfig) -> Result<Setup> {
        let name = cfg.preset.clone().unwrap_or_else(|| "reg-p20".to_string());
        let preset = preset(&name).ok_or_else(|| HarnessError::config("preset", format!("unknown preset `{name}`")))?;
        let mut base = preset.base;
        if matches!(experiment, Experiment::E0 | Experiment::E1) && base.task != Task::Regression {
            return Err(HarnessError::config("preset", format!("{experiment} needs a regression preset")));
        }
        macro_rules! apply {
            ($($field:ident),*) => { $( if let Some(v) = cfg.$field { base.$field = v; } )* };
        }
        apply!(p, n, n_test, n_sub, s0, mu, gross_value);
        if let Some(snr) = cfg.snr {
            base.snr = Some(snr);
        }
        if base.task == Task::Classification {
            if cfg.contam_scheme == Some(ContamScheme::CaseY) {
                return Err(HarnessError::config("contam_scheme", "case_y does not apply to classification"));
            }
            base.contam_scheme = ContamScheme::CellX;
        } else if let Some(s) = cfg.contam_scheme {
            base.contam_scheme = s;
        }
        let grid = match (&cfg.snr_or_mu, experiment) {
            (Some(g), _) => g.clone(),
            (None, Experiment::E0) => E0_SNR_GRID.to_vec(),
            (None, _) => vec![match base.task {
                Task::Regression => base.snr.unwrap_or(5.0),
                Task::Classification => base.mu,
            }],
        };
        if grid.iter().any(|g| !(*g > 0.0) && base.task == Task::Regression) {
            return Err(HarnessError::config("snr_or_mu", "SNR points must be positive"));
        }
        let contam_test = matches!(experiment, Experiment::E4 | Experiment::E5 | Experiment::E6);
        let r_grid = cfg.r.clone().unwrap_or_else(|| if contam_test { CONTAM_TEST_R_GRID.to_vec() } else { TABLE_R_GRID.to_vec() });
        let r_val_grid = match (&cfg.r_val, contam_test) {
            (Some(g), true) => g.clone(),
            (Some(_), false) => return Err(HarnessError::config("r_val", format!("{experiment} uses a clean test set"))),
            (None, true) => CONTAM_TEST_R_GRID.to_vec(),
            (None, false) => vec![0.0],
        };
        check_radii("r", &r_grid)?;
        check_radii("r_val", &r_val_grid)?;
        let all_cv = cfg.cv.clone().unwrap_or_else(|| {
            vec![
                CvScheme::Randomized { batches: 10 },
                CvScheme::Randomized { batches: 100 },
                CvScheme::KFold { folds: 5 },
                CvScheme::KFold { folds: 10 },
            ]
        });
        let cv: Vec<CvScheme> = all_cv
            .into_iter()
            .filter(|c| match experiment {
                Experiment::E3 => matches!(c, CvScheme::KFold { .. }),
                Experiment::E4 => matches!(c, CvScheme::Randomized { .. }),
                _ => true,
            })
            .collect();
        if cv.is_empty() && matches!(experiment, Experiment::E2 | Experiment::E3 | Experiment::E4) {
            let need = if experiment == Experiment::E3 { "a kfold" } else { "a randomized" };
            return Err(HarnessError::config("cv", format!("{experiment} needs {need} scheme")));
        }
        let n_val = match (&cfg.n_val, experiment) {
            (Some(v), _) => v.clone(),
            (None, Experiment::E0) => default_n_val_grid(),
            (None, _) => E1_N_TEST_GRID.to_vec(),
        };
        if n_val.contains(&0) {
            return Err(HarnessError::config("n_val", "test sizes must be positive"));
        }
        if let Some(a) = cfg.trim_alpha {
            if !(0.0..1.0).contains(&a) {
                return Err(HarnessError::config("trim_alpha", format!("{a} not in [0, 1)")));
            }
        }
        let repetitions = cfg.repetitions.unwrap_or(if experiment == Experiment::E1 { 100 } else { base.repetitions });
        if repetitions == 0 {
            return Err(HarnessError::config("repetitions", "need at least one repetition"));
        }
        base.repetitions = repetitions;
        if let Some(&s) = grid.first() {
            match base.task {
                Task::Regression => base.snr = Some(s),
                Task::Classification => base.mu = s,
            }
        }
        base.validate()?;
        Ok(Setup {
            experiment,
            base,
            seed: cfg.seed.unwrap_or(DEFAULT_SEED),
            repetitions,
            grid,
            r_grid,
            r_val_grid,
            cv,
            n_starts: cfg.n_starts.unwrap_or(DEFAULT_N_STARTS),
            loo_starts: cfg.loo_starts.unwrap_or(DEFAULT_LOO_STARTS),
            trim_alpha: cfg.trim_alpha,
            n_val,
            train_identification: cfg.train_identification.unwrap_or(true),
        })
    }

    pub fn scenario_id(&self) -> String {
        match self.experiment {
            Experiment::E0 => format!("E0/fluctuation-p{}", self.base.p),
            Experiment::E1 => format!("E1/cauchy-p{}", self.base.p),
            e => format!("{e}/{}", self.base.name),
        }
    }

    pub fn high_dimensional(&self) -> bool {
        self.base.p >= self.base.n_sub
    }

    fn contam_label(&self) -> &'static str {
        match self.experiment {
            Experiment::E0 => "none",
            Experiment::E1 => "cauchy_mix",
            _ => self.base.contam_scheme.as_str(),
        }
    }

    fn kfold_count(&self) -> usize {
        self.cv.iter().filter(|c| matches!(c, CvScheme::KFold { .. })).count()
    }

    /// Number of rows `run` emits.
    pub fn expected_rows(&self) -> usize {
        let v = self.repetitions;
        let g = self.grid.len();
        let nr = self.r_grid.len();
        let positive_r = self.r_grid.iter().filter(|&&r| r > 0.0).count();
        let positive_rv = self.r_val_grid.iter().filter(|&&r| r > 0.0).count();
        let train_rows = if self.train_identification { positive_r * 2 * 2 } else { 0 };
        match self.experiment {
            Experiment::E0 => v * g * self.n_val.len() * (1 + g),
            Experiment::E1 => v * self.n_val.len() * 20,
            Experiment::E2 => v * g * nr * self.cv.len() * 9,
            Experiment::E3 => v * g * nr * self.kfold_count() * 2 * 9,
            Experiment::E4 => v * g * nr * self.cv.len() * self.r_val_grid.len() * 8,
            Experiment::E5 => v * g * (train_rows + nr * positive_rv * 2 * 2),
            Experiment::E6 => v * g * (train_rows + nr * positive_rv * 2 * 2 * 2),
        }
    }
}

/// Deterministic lineage: the scenario key names the preset and grid point but
/// not the experiment, so experiments share data under the same seed.
pub(crate) struct Lineage {
    seed: u64,
    key: String,
    rep: usize,
}

impl Lineage {
    pub(crate) fn new(setup: &Setup, key: String, rep: usize) -> Self {
        Lineage { seed: setup.seed, key, rep }
    }

    pub(crate) fn stream(&self, purpose: &str) -> RngStream {
        derive_stream(self.seed, &self.key, self.rep as u64, purpose)
    }
}

fn scenario_key(setup: &Setup, g: f64) -> String {
    format!("{}/p{}/n{}/{g}", setup.base.name, setup.base.p, setup.base.n)
}

/// Clean training and test data of one repetition at grid point `g`.
pub(crate) struct RepData {
    pub train: Dataset,
    pub test: Dataset,
}

pub(crate) fn generate(setup: &Setup, lineage: &Lineage, g: f64) -> Result<RepData> {
    let base = &setup.base;
    let mut model_rng = lineage.stream("model");
    let (train, test) = match base.task {
        Task::Regression => {
            let mut cfg = base.clone();
            cfg.snr = Some(g);
            let model = draw_model(&cfg, &mut model_rng)?;
            let noise = Noise::Gaussian { sigma: model.sigma };
            (
                gen_regression_with(base.mu, &model, noise, &mut lineage.stream("train"), base.n)?,
                gen_regression_with(base.mu, &model, noise, &mut lineage.stream("test"), base.n_test)?,
            )
        }
        Task::Classification => {
            let beta = draw_coefficients(base.p, base.s0, &mut model_rng)?;
            (
                gen_classification_with(g, &beta, &mut lineage.stream("train"), base.n)?,
                gen_classification_with(g, &beta, &mut lineage.stream("test"), base.n_test)?,
            )
        }
    };
    Ok(RepData { train, test })
}

/// The training (or test) set a runner would see in repetition `rep` at the
/// first grid point, contaminated at radius `r`.
pub fn sample_dataset(setup: &Setup, rep: usize, r: f64, test: bool) -> Result<Dataset> {
    let g = setup.grid[0];
    let lineage = Lineage::new(setup, scenario_key(setup, g), rep);
    let data = generate(setup, &lineage, g)?;
    let (clean, tag) = if test { (data.test, "contam-test") } else { (data.train, "contam-train") };
    contaminate(setup, &clean, r, &mut lineage.stream(tag))
}

pub(crate) fn contaminate(setup: &Setup, data: &Dataset, r: f64, rng: &mut RngStream) -> Result<Dataset> {
    Ok(inject_contamination(data, setup.base.contam_scheme, r, setup.base.gross_value, rng)?)
}

/// The classical fitter and its robust counterpart for one training set.
pub(crate) struct Fitters {
    pub classical: Estimator,
    pub robust: Estimator,
}

impl Fitters {
    pub(crate) fn both(&self) -> [&Estimator; 2] {
        [&self.classical, &self.robust]
    }
}

fn experiment_lasso() -> LassoParams {
    LassoParams { standardize: false, tol: 1e-7, max_iter: 20_000, ..Default::default() }
}

pub(crate) fn make_fitters(setup: &Setup, train: &Dataset, rng: &mut RngStream) -> Result<Fitters> {
    let search = SearchParams::with_starts(setup.n_starts);
    let fitters = match (setup.base.task, setup.high_dimensional()) {
        (Task::Regression, false) => {
            Fitters { classical: Estimator::Ols, robust: Estimator::Lts(LtsParams { alpha: 0.5, search }) }
        }
        (Task::Regression, true) => {
            let base = experiment_lasso();
            let lambda = select_lasso_lambda_cv(&train.x, &train.y, &base, &CvGrid::default(), rng)?;
            Fitters {
                classical: Estimator::Lasso(LassoParams { lambda, ..base.clone() }),
                robust: Estimator::SparseLts(SparseLtsParams { alpha: 0.5, lambda, search, lasso_tol: base.tol, intercept: true }),
            }
        }
        (Task::Classification, false) => Fitters {
            classical: Estimator::Logistic(LogisticParams::default()),
            robust: Estimator::TrimmedLogistic(TrimmedLogisticParams { search, ..Default::default() }),
        },
        (Task::Classification, true) => {
            let base = LogisticParams::default();
            let lambda = select_logistic_lambda_cv(&train.x, &train.y, &base, &CvGrid::default(), rng)?;
            let logistic = LogisticParams { lambda, ..base };
            Fitters {
                classical: Estimator::Logistic(logistic.clone()),
                robust: Estimator::TrimmedLogistic(TrimmedLogisticParams { search, logistic, ..Default::default() }),
            }
        }
    };
    Ok(fitters)
}

pub(crate) fn loo_options(setup: &Setup) -> LooOptions {
    LooOptions { mode: LooMode::Warm { starts_per_fold: setup.loo_starts }, ols_fast_path: true }
}

/// Row builder for one repetition at one grid point.
pub(crate) struct Rows<'a> {
    setup: &'a Setup,
    scenario_id: String,
    /// Value of the `snr_or_mu` column.
    pub g: f64,
    rep: usize,
    pub rows: Vec<MetricRow>,
}

impl<'a> Rows<'a> {
    pub(crate) fn new(setup: &'a Setup, g: f64, rep: usize) -> Self {
        Rows { setup, scenario_id: setup.scenario_id(), g, rep, rows: Vec::new() }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn push(&mut self, estimator: &str, strategy: &str, cv: &str, r: f64, r_val: f64, metric: MetricName, value: f64) {
        self.rows.push(MetricRow {
            scenario_id: self.scenario_id.clone(),
            task: self.setup.base.task.as_str().to_string(),
            contam_scheme: self.setup.contam_label().to_string(),
            estimator: estimator.to_string(),
            strategy: strategy.to_string(),
            cv_scheme: cv.to_string(),
            r,
            r_val,
            snr_or_mu: self.g,
            repetition: self.rep,
            metric_name: metric,
            value,
        });
    }
}

fn run_unit(setup: &Setup, g: f64, rep: usize) -> Result<Vec<MetricRow>> {
    let lineage = Lineage::new(setup, scenario_key(setup, g), rep);
    let mut rows = Rows::new(setup, g, rep);
    match setup.experiment {
        Experiment::E0 => elicitability::run_e0(setup, rep, &mut rows)?,
        Experiment::E1 => elicitability::run_e1(setup, rep, &mut rows)?,
        Experiment::E2 => batch::run_e2(setup, &lineage, &mut rows, g)?,
        Experiment::E3 => batch::run_e3(setup, &lineage, &mut rows, g)?,
        Experiment::E4 => batch::run_e4(setup, &lineage, &mut rows, g)?,
        Experiment::E5 => instance::run_e5(setup, &lineage, &mut rows, g)?,
        Experiment::E6 => instance::run_e6(setup, &lineage, &mut rows, g)?,
    }
    Ok(rows.rows)
}

/// Runs every repetition (and grid point) on `threads` workers; rows come back
/// in canonical order whatever the thread count.
pub fn run(setup: &Setup, threads: usize) -> Result<Vec<MetricRow>> {
    let units: Vec<(f64, usize)> = match setup.experiment {
        // the grid is internal to these runners
        Experiment::E0 | Experiment::E1 => (0..setup.repetitions).map(|rep| (setup.grid[0], rep)).collect(),
        _ => setup.grid.iter().flat_map(|&g| (0..setup.repetitions).map(move |rep| (g, rep))).collect(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot start worker threads: {e}")))?;
    let chunks: Vec<Result<Vec<MetricRow>>> = pool.install(|| units.par_iter().map(|&(g, rep)| run_unit(setup, g, rep)).collect());
    let mut rows = Vec::with_capacity(setup.expected_rows());
    for chunk in chunks {
        rows.extend(chunk?);
    }
    sort_rows(&mut rows);
    Ok(rows)
}
