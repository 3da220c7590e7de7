//! Metric rows and their CSV form.

use std::cmp::Ordering;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{HarnessError, Result};

pub const HEADER: [&str; 12] = [
    "scenario_id",
    "task",
    "contam_scheme",
    "estimator",
    "strategy",
    "cv_scheme",
    "r",
    "r_val",
    "snr_or_mu",
    "repetition",
    "metric_name",
    "value",
];

pub const TASKS: [&str; 2] = ["regression", "classification"];
/// `none` for clean experiments, `cauchy_mix` for the heavy-tailed noise runs.
pub const CONTAM_SCHEMES: [&str; 4] = ["case_y", "cell_x", "cauchy_mix", "none"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricName {
    HardRankingError,
    WeakRankingErrorTrain,
    WeakRankingErrorTest,
    EmpiricalBdp,
    AvgTestLoss,
    FlipRate,
}

impl MetricName {
    pub const ALL: [MetricName; 6] = [
        MetricName::HardRankingError,
        MetricName::WeakRankingErrorTrain,
        MetricName::WeakRankingErrorTest,
        MetricName::EmpiricalBdp,
        MetricName::AvgTestLoss,
        MetricName::FlipRate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::HardRankingError => "hard_ranking_error",
            MetricName::WeakRankingErrorTrain => "weak_ranking_error_train",
            MetricName::WeakRankingErrorTest => "weak_ranking_error_test",
            MetricName::EmpiricalBdp => "empirical_bdp",
            MetricName::AvgTestLoss => "avg_test_loss",
            MetricName::FlipRate => "flip_rate",
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        MetricName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HarnessError::format("metrics csv", format!("unknown metric `{s}`")))
    }
}

/// One observation of one metric for one strategy in one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub scenario_id: String,
    pub task: String,
    pub contam_scheme: String,
    pub estimator: String,
    pub strategy: String,
    pub cv_scheme: String,
    pub r: f64,
    pub r_val: f64,
    pub snr_or_mu: f64,
    pub repetition: usize,
    pub metric_name: MetricName,
    pub value: f64,
}

impl MetricRow {
    /// Row order: every key column in header order, then the value.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.scenario_id
            .cmp(&other.scenario_id)
            .then_with(|| self.task.cmp(&other.task))
            .then_with(|| self.contam_scheme.cmp(&other.contam_scheme))
            .then_with(|| self.estimator.cmp(&other.estimator))
            .then_with(|| self.strategy.cmp(&other.strategy))
            .then_with(|| self.cv_scheme.cmp(&other.cv_scheme))
            .then_with(|| self.r.total_cmp(&other.r))
            .then_with(|| self.r_val.total_cmp(&other.r_val))
            .then_with(|| self.snr_or_mu.total_cmp(&other.snr_or_mu))
            .then_with(|| self.repetition.cmp(&other.repetition))
            .then_with(|| self.metric_name.cmp(&other.metric_name))
            .then_with(|| self.value.total_cmp(&other.value))
    }

    fn record(&self) -> [String; 12] {
        [
            self.scenario_id.clone(),
            self.task.clone(),
            self.contam_scheme.clone(),
            self.estimator.clone(),
            self.strategy.clone(),
            self.cv_scheme.clone(),
            format_float(self.r),
            format_float(self.r_val),
            format_float(self.snr_or_mu),
            self.repetition.to_string(),
            self.metric_name.to_string(),
            format_float(self.value),
        ]
    }
}

pub fn sort_rows(rows: &mut [MetricRow]) {
    rows.sort_by(MetricRow::canonical_cmp);
}

/// 17 significant digits in scientific notation, which round-trips every `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_float(s: &str) -> Result<f64> {
    s.parse().map_err(|_| HarnessError::format("metrics csv", format!("not a number: `{s}`")))
}

/// Writes `rows` in canonical order. An empty slice gives a header-only file.
pub fn write_metrics<W: Write>(w: W, rows: &[MetricRow]) -> Result<()> {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER)?;
    for row in &sorted {
        out.write_record(row.record())?;
    }
    out.flush().map_err(|e| HarnessError::format("metrics csv", e.to_string()))
}

pub fn write_metrics_file(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_metrics(BufWriter::new(file), rows)
}

pub fn read_metrics<R: Read>(r: R) -> Result<Vec<MetricRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(HarnessError::format("metrics csv", format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record?;
        let task = rec[1].to_string();
        if !TASKS.contains(&task.as_str()) {
            return Err(HarnessError::format("metrics csv", format!("unknown task `{task}`")));
        }
        let contam_scheme = rec[2].to_string();
        if !CONTAM_SCHEMES.contains(&contam_scheme.as_str()) {
            return Err(HarnessError::format("metrics csv", format!("unknown contamination scheme `{contam_scheme}`")));
        }
        rows.push(MetricRow {
            scenario_id: rec[0].to_string(),
            task,
            contam_scheme,
            estimator: rec[3].to_string(),
            strategy: rec[4].to_string(),
            cv_scheme: rec[5].to_string(),
            r: parse_float(&rec[6])?,
            r_val: parse_float(&rec[7])?,
            snr_or_mu: parse_float(&rec[8])?,
            repetition: rec[9]
                .parse()
                .map_err(|_| HarnessError::format("metrics csv", format!("bad repetition `{}`", &rec[9])))?,
            metric_name: rec[10].parse()?,
            value: parse_float(&rec[11])?,
        });
    }
    Ok(rows)
}

pub fn read_metrics_file(path: &Path) -> Result<Vec<MetricRow>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_metrics(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(strategy: &str, r: f64, value: f64) -> MetricRow {
        MetricRow {
            scenario_id: "E2/reg-p20".into(),
            task: "regression".into(),
            contam_scheme: "case_y".into(),
            estimator: "ols".into(),
            strategy: strategy.into(),
            cv_scheme: "kfold-5".into(),
            r,
            r_val: 0.0,
            snr_or_mu: 5.0,
            repetition: 0,
            metric_name: MetricName::HardRankingError,
            value,
        }
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(format_float(0.05), "5.0000000000000003e-2");
        for v in [0.1, 1.0 / 3.0, 1e-300, f64::INFINITY, -0.0, 123456.789] {
            assert_eq!(parse_float(&format_float(v)).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn rows_are_sorted_on_write() {
        let rows = vec![row("train_loss", 0.5, 0.3), row("test_loss", 0.05, 0.1), row("test_loss", 0.05, 0.0)];
        let mut buf = Vec::new();
        write_metrics(&mut buf, &rows).unwrap();
        let back = read_metrics(buf.as_slice()).unwrap();
        assert_eq!(back[0].value, 0.0);
        assert_eq!(back[2].strategy, "train_loss");
    }

    #[test]
    fn empty_input_gives_a_header_only_file() {
        let mut buf = Vec::new();
        write_metrics(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", HEADER.join(",")));
    }

    #[test]
    fn unknown_vocabulary_is_rejected() {
        let text = format!("{}\nE2,regression,bogus,ols,s,kfold-5,0,0,0,0,hard_ranking_error,0\n", HEADER.join(","));
        assert!(read_metrics(text.as_bytes()).is_err());
        let text = format!("{}\nE2,regression,case_y,ols,s,kfold-5,0,0,0,0,accuracy,0\n", HEADER.join(","));
        assert!(read_metrics(text.as_bytes()).is_err());
    }
}
