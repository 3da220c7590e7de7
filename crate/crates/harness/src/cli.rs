//! Command-line surface. Exit codes: 0 success, 1 usage or input error,
//! 2 numerical failure.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use robust_elicit_core::bdp::{demonstrate_breakdown, empirical_bdp, empirical_bdp_resampled};
use robust_elicit_core::datagen::{draw_coefficients, gen_regression_with, Noise, Task, TrueModel};
use robust_elicit_core::estimators::{
    Estimator, FitResult, LassoParams, LogisticParams, LtsParams, SearchParams, SparseLtsParams,
    TrimmedLogisticParams,
};
use robust_elicit_core::losses::{squared_loss, Transform};
use robust_elicit_core::rng::{derive_stream, RngStream};

use crate::config::RunConfig;
use crate::dataset_io::{read_dataset, write_dataset};
use crate::error::{HarnessError, Result};
use crate::experiments::{run, sample_dataset, Experiment, Setup};
use crate::metrics::{read_metrics_file, write_metrics_file};
use crate::report::write_report;

pub const THREADS_ENV: &str = "ROBUST_ELICIT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "robust-elicit", version, about = "Contamination-aware model validation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a simulated dataset as CSV
    Gen(GenArgs),
    /// Fit one estimator on a dataset CSV and print the fit as JSON
    Fit(FitArgs),
    /// Run an experiment and write its metrics CSV
    Run(RunArgs),
    /// Summarise metrics CSVs into means and SVG charts
    Report(ReportArgs),
    /// Breakdown-point calculators
    Bdp(BdpArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value = "reg-p20")]
    preset: String,
    /// Contamination radius
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    repetition: usize,
    #[arg(long)]
    scheme: Option<String>,
    /// SNR (regression) or μ (classification)
    #[arg(long)]
    snr_or_mu: Option<f64>,
    /// Emit the test set instead of the training set
    #[arg(long)]
    test: bool,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum EstimatorKind {
    Ols,
    Lts,
    Lasso,
    SparseLts,
    Logit,
    TrimmedLogit,
    L1Logit,
    TrimmedL1Logit,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    estimator: EstimatorKind,
    /// Trimming rate of the robust estimators
    #[arg(long)]
    alpha: Option<f64>,
    /// Penalty of the sparse estimators
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 500)]
    n_starts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// E0..E6
    experiment: String,
    /// key = value or JSON config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Repetitions V
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Extra config entries, e.g. --set r=0.05,0.5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Metrics CSV files
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum LossKind {
    Squared,
    Arctan,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("mode").required(true).args(["empirical", "demo"])))]
struct BdpArgs {
    /// Print c / c(n_test, k), or c / (B·c(n_val, k)) with --batches
    #[arg(long)]
    empirical: bool,
    /// Count crafted test instances needed to flip a model comparison
    #[arg(long)]
    demo: bool,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    n_test: usize,
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long, default_value_t = 1e6)]
    gross: f64,
    #[arg(long, value_enum, default_value = "squared")]
    loss: LossKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Fit(a) => fit(a),
        Command::Run(a) => run_cmd(a),
        Command::Report(a) => report(a),
        Command::Bdp(a) => bdp(a),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let mut cfg = RunConfig { preset: Some(a.preset), seed: Some(a.seed), ..Default::default() };
    if let Some(s) = &a.scheme {
        cfg.set("contam_scheme", s)?;
    }
    if let Some(g) = a.snr_or_mu {
        cfg.snr_or_mu = Some(vec![g]);
    }
    if !(0.0..1.0).contains(&a.r) {
        return Err(HarnessError::Usage(format!("--r {} not in [0, 1)", a.r)));
    }
    let setup = Setup::resolve(Experiment::E2, &cfg)?;
    let data = sample_dataset(&setup, a.repetition, a.r, a.test)?;
    match a.out {
        Some(path) => {
            let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
            write_dataset(BufWriter::new(file), &data)
        }
        None => write_dataset(io::stdout().lock(), &data),
    }
}

fn estimator(a: &FitArgs) -> Estimator {
    let search = SearchParams::with_starts(a.n_starts);
    let logistic = |lambda: f64| LogisticParams { lambda, ..Default::default() };
    match a.estimator {
        EstimatorKind::Ols => Estimator::Ols,
        EstimatorKind::Lts => Estimator::Lts(LtsParams { alpha: a.alpha.unwrap_or(0.5), search }),
        EstimatorKind::Lasso => Estimator::Lasso(LassoParams::with_lambda(a.lambda)),
        EstimatorKind::SparseLts => Estimator::SparseLts(SparseLtsParams {
            alpha: a.alpha.unwrap_or(0.5),
            lambda: a.lambda,
            search,
            ..Default::default()
        }),
        EstimatorKind::Logit => Estimator::Logistic(logistic(0.0)),
        EstimatorKind::L1Logit => Estimator::Logistic(logistic(a.lambda)),
        EstimatorKind::TrimmedLogit | EstimatorKind::TrimmedL1Logit => {
            let lambda = if a.estimator == EstimatorKind::TrimmedLogit { 0.0 } else { a.lambda };
            let defaults = TrimmedLogisticParams::default();
            Estimator::TrimmedLogistic(TrimmedLogisticParams {
                alpha: a.alpha.unwrap_or(defaults.alpha),
                search,
                logistic: logistic(lambda),
            })
        }
    }
}

fn fit_json(name: &str, fit: &FitResult) -> serde_json::Value {
    serde_json::json!({
        "estimator": name,
        "beta_hat": fit.beta_hat,
        "intercept": fit.intercept,
        "objective": fit.objective,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "subset": fit.subset,
    })
}

fn fit(a: FitArgs) -> Result<()> {
    let est = estimator(&a);
    let task = match a.estimator {
        EstimatorKind::Ols | EstimatorKind::Lts | EstimatorKind::Lasso | EstimatorKind::SparseLts => Task::Regression,
        _ => Task::Classification,
    };
    let file = File::open(&a.input).map_err(|e| HarnessError::io(&a.input, e))?;
    let data = read_dataset(file, task)?;
    let result = est.fit(&data.x, &data.y, &mut RngStream::seeded(a.seed))?;
    let text = serde_json::to_string_pretty(&fit_json(est.name(), &result))
        .map_err(|e| HarnessError::format("fit output", e.to_string()))?;
    println!("{text}");
    Ok(())
}

/// Worker count: the flag or config value (else all cores), capped by the environment.
fn thread_count(requested: Option<usize>) -> Result<usize> {
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut threads = requested.unwrap_or(available).max(1);
    if let Ok(cap) = std::env::var(THREADS_ENV) {
        let cap: usize = cap
            .trim()
            .parse()
            .map_err(|_| HarnessError::Usage(format!("{THREADS_ENV}=`{cap}` is not a thread count")))?;
        threads = threads.min(cap.max(1));
    }
    Ok(threads)
}

fn run_cmd(a: RunArgs) -> Result<()> {
    let experiment: Experiment = a.experiment.parse()?;
    let mut cfg = match &a.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for entry in &a.set {
        let (k, v) = entry
            .split_once('=')
            .ok_or_else(|| HarnessError::Usage(format!("--set expects KEY=VALUE, got `{entry}`")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(p) = a.preset {
        cfg.preset = Some(p);
    }
    if let Some(s) = a.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = a.out {
        cfg.out = Some(o);
    }
    if let Some(v) = a.reps {
        cfg.repetitions = Some(v);
    }
    if let Some(t) = a.threads {
        cfg.threads = Some(t);
    }
    let setup = Setup::resolve(experiment, &cfg)?;
    let rows = run(&setup, thread_count(cfg.threads)?)?;
    let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&out_dir).map_err(|e| HarnessError::io(&out_dir, e))?;
    let path = metrics_path(&out_dir, &setup);
    write_metrics_file(&path, &rows)?;
    println!("{}", path.display());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let mut rows = Vec::new();
    for path in &a.input {
        rows.extend(read_metrics_file(path)?);
    }
    let written = write_report(&rows, &a.out)?;
    let mut out = io::stdout().lock();
    for path in written {
        let _ = writeln!(out, "{}", path.display());
    }
    Ok(())
}

fn bdp(a: BdpArgs) -> Result<()> {
    if a.empirical {
        let record = match a.batches {
            Some(b) => empirical_bdp_resampled(a.c, a.n_test, a.k, b)?,
            None => empirical_bdp(a.c, a.n_test, a.k)?,
        };
        println!("{}", record.empirical_bdp);
        return Ok(());
    }
    let flips = breakdown_demo(a.n_test, a.gross, a.loss, a.seed)?;
    println!("{flips}");
    Ok(())
}

/// Clean test data from a 20-predictor linear model; the true model competes
/// with a perturbed one.
fn breakdown_demo(n_test: usize, gross: f64, loss: LossKind, seed: u64) -> Result<usize> {
    let lineage = |tag: &str| derive_stream(seed, "bdp-demo", 0, tag);
    let beta = draw_coefficients(20, 20, &mut lineage("model"))?;
    let model = TrueModel { beta: beta.clone(), sigma: 1.0 };
    let test = gen_regression_with(2.0, &model, Noise::Gaussian { sigma: 1.0 }, &mut lineage("test"), n_test)?;
    let truth = FitResult::from_coefficients(beta.clone(), 0.0, robust_elicit_core::estimators::Link::Identity);
    let other = FitResult::from_coefficients(beta.iter().map(|b| b + 0.5).collect(), 0.0, truth.link);
    let flips = match loss {
        LossKind::Squared => demonstrate_breakdown(&test.x, &test.y, gross, &truth, &other, squared_loss)?,
        LossKind::Arctan => demonstrate_breakdown(&test.x, &test.y, gross, &truth, &other, |y, yhat| {
            Transform::Arctan.apply(squared_loss(y, yhat))
        })?,
    };
    Ok(flips)
}

/// Where `run` writes its metrics for `setup`.
pub fn metrics_path(out_dir: &Path, setup: &Setup) -> PathBuf {
    out_dir.join(format!("{}.csv", setup.scenario_id().replace('/', "-")))
}
