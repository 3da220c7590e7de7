//! Per-strategy means over repetitions and the charts of a metrics file.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::chart::{render_chart, ChartSpec, Field};
use crate::error::{HarnessError, Result};
use crate::metrics::{format_float, MetricRow};

pub const SUMMARY_HEADER: [&str; 13] = [
    "scenario_id",
    "task",
    "contam_scheme",
    "estimator",
    "strategy",
    "cv_scheme",
    "r",
    "r_val",
    "snr_or_mu",
    "metric_name",
    "mean",
    "sd",
    "count",
];

/// Mean, standard deviation and count of one metric over repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// A representative row; its repetition and value are not meaningful.
    pub key: MetricRow,
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

/// Groups rows by every key column except the repetition.
pub fn summarize(rows: &[MetricRow]) -> Vec<SummaryRow> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| {
        let mut a = a.clone();
        let mut b = b.clone();
        a.repetition = 0;
        b.repetition = 0;
        a.value = 0.0;
        b.value = 0.0;
        a.canonical_cmp(&b)
    });
    let same = |a: &MetricRow, b: &MetricRow| {
        a.scenario_id == b.scenario_id
            && a.task == b.task
            && a.contam_scheme == b.contam_scheme
            && a.estimator == b.estimator
            && a.strategy == b.strategy
            && a.cv_scheme == b.cv_scheme
            && a.r.to_bits() == b.r.to_bits()
            && a.r_val.to_bits() == b.r_val.to_bits()
            && a.snr_or_mu.to_bits() == b.snr_or_mu.to_bits()
            && a.metric_name == b.metric_name
    };
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && same(&sorted[start], &sorted[end]) {
            end += 1;
        }
        let values: Vec<f64> = sorted[start..end].iter().map(|r| r.value).collect();
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let sd = if count > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut key = sorted[start].clone();
        key.repetition = 0;
        key.value = mean;
        out.push(SummaryRow { key, mean, sd, count });
        start = end;
    }
    out
}

pub fn write_summary<W: Write>(w: W, summary: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for s in summary {
        let k = &s.key;
        out.write_record([
            k.scenario_id.clone(),
            k.task.clone(),
            k.contam_scheme.clone(),
            k.estimator.clone(),
            k.strategy.clone(),
            k.cv_scheme.clone(),
            format_float(k.r),
            format_float(k.r_val),
            format_float(k.snr_or_mu),
            k.metric_name.to_string(),
            format_float(s.mean),
            format_float(s.sd),
            s.count.to_string(),
        ])?;
    }
    out.flush().map_err(|e| HarnessError::format("summary csv", e.to_string()))
}

/// Chart layout for an experiment: the fields that split rows into charts,
/// then the x axis, facets and line keys within a chart.
fn layout(experiment: &str) -> (Vec<Field>, Field, Vec<Field>, Vec<Field>, bool) {
    let common = [Field::Scenario, Field::Task, Field::ContamScheme, Field::Metric];
    let with = |extra: &[Field]| common.iter().chain(extra).copied().collect::<Vec<_>>();
    match experiment {
        "E0" => (with(&[]), Field::HoldoutSize, vec![Field::SnrOrMu], vec![Field::Estimator, Field::Strategy], true),
        "E1" => (with(&[Field::SnrOrMu]), Field::HoldoutSize, vec![Field::Strategy], vec![Field::Estimator], true),
        "E2" | "E3" => (
            with(&[Field::SnrOrMu, Field::LossSide, Field::Variant]),
            Field::R,
            vec![Field::CvScheme],
            vec![Field::Estimator, Field::Method],
            false,
        ),
        "E4" => (
            with(&[Field::SnrOrMu, Field::Variant]),
            Field::R,
            vec![Field::CvScheme, Field::RVal],
            vec![Field::Estimator, Field::Method],
            false,
        ),
        _ => (with(&[Field::SnrOrMu, Field::Strategy]), Field::R, vec![Field::RVal], vec![Field::Estimator], false),
    }
}

fn file_stem(parts: &[String]) -> String {
    parts
        .iter()
        .filter(|p| !p.is_empty())
        .map(|p| p.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect::<String>())
        .collect::<Vec<_>>()
        .join("_")
}

/// One chart per split group, as (file name, spec, rows).
pub fn plan_charts(rows: &[MetricRow]) -> Vec<(String, ChartSpec, Vec<MetricRow>)> {
    let mut groups: BTreeMap<Vec<String>, (ChartSpec, Vec<MetricRow>)> = BTreeMap::new();
    for row in rows {
        let experiment = row.scenario_id.split('/').next().unwrap_or("").to_string();
        let (split, x, facets, lines, log_x) = layout(&experiment);
        let parts: Vec<String> = split.iter().map(|f| f.text(row)).collect();
        let entry = groups.entry(parts.clone()).or_insert_with(|| {
            let spec = ChartSpec {
                title: parts.iter().filter(|p| !p.is_empty()).cloned().collect::<Vec<_>>().join(" · "),
                x,
                facets,
                lines,
                y_label: format!("mean {}", row.metric_name),
                log_x,
            };
            (spec, Vec::new())
        });
        entry.1.push(row.clone());
    }
    groups.into_iter().map(|(parts, (spec, rows))| (format!("{}.svg", file_stem(&parts)), spec, rows)).collect()
}

/// Writes `summary.csv` and every chart into `out_dir`; returns the files written.
pub fn write_report(rows: &[MetricRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut written = Vec::new();
    let summary_path = out_dir.join("summary.csv");
    let file = fs::File::create(&summary_path).map_err(|e| HarnessError::io(&summary_path, e))?;
    write_summary(std::io::BufWriter::new(file), &summarize(rows))?;
    written.push(summary_path);
    for (name, spec, group) in plan_charts(rows) {
        let path = out_dir.join(name);
        let svg = render_chart(&group, &spec)?;
        fs::write(&path, svg).map_err(|e| HarnessError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
