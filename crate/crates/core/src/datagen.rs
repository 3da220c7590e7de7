//! Ideal data generators and the two contamination schemes.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::rng::{sample_binomial, sample_subset, RngStream};
use crate::floor_count;

pub const DEFAULT_GROSS_VALUE: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Regression,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContamScheme {
    /// Case-wise response contamination: whole responses replaced by the gross value.
    CaseY,
    /// Cell-wise predictor contamination: `⌊0.1p⌋` cells per flagged row.
    CellX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CvScheme {
    Randomized { batches: usize },
    KFold { folds: usize },
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Regression => "regression",
            Task::Classification => "classification",
        }
    }
}

impl ContamScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            ContamScheme::CaseY => "case_y",
            ContamScheme::CellX => "cell_x",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for ContamScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for CvScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CvScheme::Randomized { batches } => write!(f, "randomized-{batches}"),
            CvScheme::KFold { folds } => write!(f, "kfold-{folds}"),
        }
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Task::Regression),
            "classification" => Ok(Task::Classification),
            _ => Err(Error::param("task", alloc::format!("unknown task `{s}`"))),
        }
    }
}

impl FromStr for ContamScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "case_y" => Ok(ContamScheme::CaseY),
            "cell_x" => Ok(ContamScheme::CellX),
            _ => Err(Error::param("contam_scheme", alloc::format!("unknown scheme `{s}`"))),
        }
    }
}

impl FromStr for CvScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param("cv", alloc::format!("expected randomized-<B> or kfold-<K>, got `{s}`"));
        let (kind, num) = s.rsplit_once('-').ok_or_else(bad)?;
        let num: usize = num.parse().map_err(|_| bad())?;
        if num == 0 {
            return Err(bad());
        }
        match kind {
            "randomized" => Ok(CvScheme::Randomized { batches: num }),
            "kfold" => Ok(CvScheme::KFold { folds: num }),
            _ => Err(bad()),
        }
    }
}

/// One data configuration (a row of the scenario tables plus the chosen grid point).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub task: Task,
    pub p: usize,
    pub n: usize,
    pub n_test: usize,
    pub n_sub: usize,
    pub s0: usize,
    pub mu: f64,
    /// Regression only; `f64::INFINITY` gives noiseless responses.
    pub snr: Option<f64>,
    pub r: f64,
    pub r_val: f64,
    pub contam_scheme: ContamScheme,
    pub repetitions: usize,
    pub cv: CvScheme,
    pub gross_value: f64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n == 0 {
            return Err(Error::param("p", "dimensions must be positive"));
        }
        if self.s0 > self.p {
            return Err(Error::param("s0", "more non-zero coefficients than predictors"));
        }
        if self.n_sub > self.n {
            return Err(Error::param("n_sub", "batch size exceeds training size"));
        }
        if !(0.0..1.0).contains(&self.r) {
            return Err(Error::param("r", "contamination radius must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.r_val) {
            return Err(Error::param("r_val", "contamination radius must lie in [0, 1)"));
        }
        match (self.task, self.snr) {
            (Task::Regression, Some(s)) if s > 0.0 => {}
            (Task::Regression, _) => return Err(Error::param("snr", "regression needs a positive SNR")),
            (Task::Classification, _) => {}
        }
        Ok(())
    }
}

/// A preset with the grids its table row declares.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub base: ScenarioConfig,
    pub snr_grid: Vec<f64>,
    pub mu_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
}

pub const PRESET_NAMES: [&str; 6] = ["reg-p20", "reg-p250", "reg-p500", "cls-p20", "cls-p250", "cls-p500"];

/// Radii of the scenario tables.
pub const TABLE_R_GRID: [f64; 4] = [0.05, 0.15, 0.25, 0.5];
/// Radii of the contaminated-test experiments, used for both `r` and `r_val`.
pub const CONTAM_TEST_R_GRID: [f64; 3] = [0.1, 0.25, 0.5];

pub fn preset(name: &str) -> Option<Preset> {
    // (p, n, n_test, n_sub, s0)
    let (task, dims) = match name {
        "reg-p20" => (Task::Regression, (20, 250, 100, 125, 20)),
        "reg-p250" => (Task::Regression, (250, 100, 50, 50, 15)),
        "reg-p500" => (Task::Regression, (500, 100, 50, 50, 15)),
        "cls-p20" => (Task::Classification, (20, 250, 100, 125, 20)),
        "cls-p250" => (Task::Classification, (250, 100, 50, 50, 15)),
        "cls-p500" => (Task::Classification, (500, 100, 50, 50, 15)),
        _ => return None,
    };
    let (p, n, n_test, n_sub, s0) = dims;
    let (snr_grid, mu_grid, mu, snr) = match task {
        Task::Regression => (vec![0.5, 2.0, 5.0], vec![2.0], 2.0, Some(5.0)),
        Task::Classification => (Vec::new(), vec![0.5, 3.0, 8.0], 3.0, None),
    };
    let base = ScenarioConfig {
        name: name.to_string(),
        task,
        p,
        n,
        n_test,
        n_sub,
        s0,
        mu,
        snr,
        r: 0.0,
        r_val: 0.0,
        contam_scheme: ContamScheme::CaseY,
        repetitions: if p == 500 { 20 } else { 50 },
        cv: CvScheme::KFold { folds: 5 },
        gross_value: DEFAULT_GROSS_VALUE,
    };
    Some(Preset { base, snr_grid, mu_grid, r_grid: TABLE_R_GRID.to_vec() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: Task,
    pub x: Matrix,
    pub y: Vec<f64>,
    pub contaminated: Vec<bool>,
    pub beta_true: Vec<f64>,
    pub sigma: f64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn n_contaminated(&self) -> usize {
        self.contaminated.iter().filter(|&&c| c).count()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            task: self.task,
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            contaminated: idx.iter().map(|&i| self.contaminated[i]).collect(),
            beta_true: self.beta_true.clone(),
            sigma: self.sigma,
        }
    }
}

/// The ground-truth model shared by the training and test sets of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    pub beta: Vec<f64>,
    pub sigma: f64,
}

/// Noise model for regression responses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    Gaussian { sigma: f64 },
    /// `(1 − mix)·N(0,1) + mix·Cauchy(0,1)`; Cauchy draws flag their instance.
    CauchyMixture { mix: f64 },
}

/// `s0` non-zero coefficients at uniform positions, values i.i.d. `N(1,1)`.
pub fn draw_coefficients(p: usize, s0: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    if s0 > p {
        return Err(Error::param("s0", "more non-zero coefficients than predictors"));
    }
    let support = sample_subset(rng, p, s0)?;
    let mut beta = vec![0.0; p];
    for j in support {
        beta[j] = 1.0 + rng.standard_normal();
    }
    Ok(beta)
}

/// Coefficients plus the noise level `σ² = ‖β‖² / SNR` (predictor covariance is `I_p`).
pub fn draw_model(cfg: &ScenarioConfig, rng: &mut RngStream) -> Result<TrueModel> {
    let beta = draw_coefficients(cfg.p, cfg.s0, rng)?;
    let sigma = match (cfg.task, cfg.snr) {
        (Task::Regression, Some(snr)) if snr > 0.0 => libm::sqrt(dot(&beta, &beta) / snr),
        (Task::Regression, _) => return Err(Error::param("snr", "SNR must be positive")),
        (Task::Classification, _) => 0.0,
    };
    Ok(TrueModel { beta, sigma })
}

fn gen_design(p: usize, mu: f64, rng: &mut RngStream, size: usize) -> Matrix {
    let mut data = Vec::with_capacity(size * p);
    for _ in 0..size * p {
        data.push(mu + rng.standard_normal());
    }
    Matrix::from_vec(size, p, data).expect("shape is consistent")
}

/// Regression data `y = Xβ + ε` with rows i.i.d. `N_p(μ·1, I_p)`.
pub fn gen_regression(cfg: &ScenarioConfig, rng: &mut RngStream, size: usize) -> Result<Dataset> {
    if cfg.task != Task::Regression {
        return Err(Error::param("task", "gen_regression needs a regression scenario"));
    }
    let model = draw_model(cfg, rng)?;
    gen_regression_with(cfg.mu, &model, Noise::Gaussian { sigma: model.sigma }, rng, size)
}

pub fn gen_regression_with(
    mu: f64,
    model: &TrueModel,
    noise: Noise,
    rng: &mut RngStream,
    size: usize,
) -> Result<Dataset> {
    if size == 0 {
        return Err(Error::param("size", "sample size must be positive"));
    }
    let p = model.beta.len();
    let x = gen_design(p, mu, rng, size);
    let mut y = x.matvec(&model.beta);
    let mut contaminated = vec![false; size];
    match noise {
        Noise::Gaussian { sigma } => {
            if !(sigma >= 0.0) {
                return Err(Error::param("sigma", "noise level must be non-negative"));
            }
            for yi in y.iter_mut() {
                *yi += sigma * rng.standard_normal();
            }
        }
        Noise::CauchyMixture { mix } => {
            if !(0.0..=1.0).contains(&mix) {
                return Err(Error::param("mix", "mixture weight must lie in [0, 1]"));
            }
            for (yi, flag) in y.iter_mut().zip(contaminated.iter_mut()) {
                if rng.bernoulli(mix) || mix == 1.0 {
                    *flag = true;
                    *yi += rng.standard_cauchy();
                } else {
                    *yi += rng.standard_normal();
                }
            }
        }
    }
    let sigma = match noise {
        Noise::Gaussian { sigma } => sigma,
        Noise::CauchyMixture { .. } => 1.0,
    };
    Ok(Dataset { task: Task::Regression, x, y, contaminated, beta_true: model.beta.clone(), sigma })
}

/// Linear model with Cauchy-mixture errors: `μ = 2`, all `p` coefficients `N(1,1)`, ideal noise `N(0,1)`.
pub fn gen_cauchy_mixture_regression(n: usize, p: usize, mix: f64, rng: &mut RngStream) -> Result<Dataset> {
    let beta = draw_coefficients(p, p, rng)?;
    let model = TrueModel { beta, sigma: 1.0 };
    gen_regression_with(2.0, &model, Noise::CauchyMixture { mix }, rng, n)
}

/// Binary responses `Y_i ~ B(1, p_i)` with `p_i` the logistic of the sample-centred `X_iβ`.
pub fn gen_classification(cfg: &ScenarioConfig, rng: &mut RngStream, size: usize) -> Result<Dataset> {
    if cfg.task != Task::Classification {
        return Err(Error::param("task", "gen_classification needs a classification scenario"));
    }
    let beta = draw_coefficients(cfg.p, cfg.s0, rng)?;
    gen_classification_with(cfg.mu, &beta, rng, size)
}

pub fn gen_classification_with(mu: f64, beta: &[f64], rng: &mut RngStream, size: usize) -> Result<Dataset> {
    if size == 0 {
        return Err(Error::param("size", "sample size must be positive"));
    }
    let x = gen_design(beta.len(), mu, rng, size);
    let probs = class_probabilities(&x, beta);
    let y = probs.iter().map(|&pi| if rng.bernoulli(pi) { 1.0 } else { 0.0 }).collect();
    Ok(Dataset {
        task: Task::Classification,
        x,
        y,
        contaminated: vec![false; size],
        beta_true: beta.to_vec(),
        sigma: 0.0,
    })
}

/// `p_i = exp(Ỹ_i)/(1 + exp(Ỹ_i))` with `Ỹ_i = X_iβ − mean_k X_kβ`.
pub fn class_probabilities(x: &Matrix, beta: &[f64]) -> Vec<f64> {
    let lin = x.matvec(beta);
    let mean = lin.iter().sum::<f64>() / lin.len() as f64;
    lin.iter().map(|&l| logistic(l - mean)).collect()
}

pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + libm::exp(-t))
    } else {
        let e = libm::exp(t);
        e / (1.0 + e)
    }
}

/// Number of cells replaced per row under cell-wise contamination.
pub fn cells_per_row(p: usize) -> usize {
    floor_count(p, 0.1)
}

/// Contaminate a copy of `data`; the input is left untouched.
pub fn inject_contamination(
    data: &Dataset,
    scheme: ContamScheme,
    r: f64,
    gross_value: f64,
    rng: &mut RngStream,
) -> Result<Dataset> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::param("r", "contamination radius must lie in [0, 1)"));
    }
    let mut out = data.clone();
    let n = data.len();
    match scheme {
        ContamScheme::CaseY => {
            if data.task == Task::Classification {
                return Err(Error::param("contam_scheme", "case_y does not apply to binary responses"));
            }
            let m = sample_binomial(rng, n, r)?;
            for i in sample_subset(rng, n, m)? {
                out.y[i] = gross_value;
                out.contaminated[i] = true;
            }
        }
        ContamScheme::CellX => {
            let rows = floor_count(n, r);
            if rows == 0 {
                return Ok(out);
            }
            let p = data.p();
            let cells = cells_per_row(p);
            if cells == 0 {
                return Err(Error::param(
                    "contam_scheme",
                    alloc::format!("cell_x replaces floor(0.1·p) = 0 cells for p = {p}"),
                ));
            }
            for i in sample_subset(rng, n, rows)? {
                for j in sample_subset(rng, p, cells)? {
                    out.x.set(i, j, gross_value);
                }
                out.contaminated[i] = true;
            }
        }
    }
    Ok(out)
}
