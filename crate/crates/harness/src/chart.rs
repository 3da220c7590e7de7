//! Static SVG line charts of mean metric values, one panel per facet.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{HarnessError, Result};
use crate::metrics::MetricRow;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 240.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 44.0;
const LEGEND_ROW: f64 = 18.0;
const PALETTE: [&str; 10] =
    ["#000000", "#2ca02c", "#d62728", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"];
const DASHES: [&str; 3] = ["", "6 3", "2 2"];

/// A column of a metric row, or a part of one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Scenario,
    Task,
    ContamScheme,
    Estimator,
    Strategy,
    /// Strategy text before the first `/`.
    Method,
    /// Strategy text after the first `/`, empty when there is none.
    Variant,
    /// `train`, `test` or `coef` from the strategy name.
    LossSide,
    CvScheme,
    R,
    RVal,
    SnrOrMu,
    Metric,
    /// The `N` of a `holdout-N` cv scheme.
    HoldoutSize,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Scenario => "scenario_id",
            Field::Task => "task",
            Field::ContamScheme => "contam_scheme",
            Field::Estimator => "estimator",
            Field::Strategy => "strategy",
            Field::Method => "method",
            Field::Variant => "variant",
            Field::LossSide => "side",
            Field::CvScheme => "cv_scheme",
            Field::R => "r",
            Field::RVal => "r_val",
            Field::SnrOrMu => "snr_or_mu",
            Field::Metric => "metric_name",
            Field::HoldoutSize => "n_test",
        }
    }

    pub fn text(self, row: &MetricRow) -> String {
        match self {
            Field::Scenario => row.scenario_id.clone(),
            Field::Task => row.task.clone(),
            Field::ContamScheme => row.contam_scheme.clone(),
            Field::Estimator => row.estimator.clone(),
            Field::Strategy => row.strategy.clone(),
            Field::Method => row.strategy.split('/').next().unwrap_or("").to_string(),
            Field::Variant => row.strategy.split_once('/').map(|(_, v)| v.to_string()).unwrap_or_default(),
            Field::LossSide => {
                let s = &row.strategy;
                if s.starts_with("train") {
                    "train".into()
                } else if s.starts_with("test") {
                    "test".into()
                } else if s.starts_with("coef") {
                    "coef".into()
                } else {
                    String::new()
                }
            }
            Field::CvScheme => row.cv_scheme.clone(),
            Field::Metric => row.metric_name.to_string(),
            Field::R | Field::RVal | Field::SnrOrMu | Field::HoldoutSize => {
                self.value(row).map(|v| format!("{v}")).unwrap_or_default()
            }
        }
    }

    pub fn value(self, row: &MetricRow) -> Option<f64> {
        match self {
            Field::R => Some(row.r),
            Field::RVal => Some(row.r_val),
            Field::SnrOrMu => Some(row.snr_or_mu),
            Field::HoldoutSize => row.cv_scheme.strip_prefix("holdout-").and_then(|n| n.parse().ok()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub title: String,
    pub x: Field,
    pub facets: Vec<Field>,
    /// Fields whose values together name a line.
    pub lines: Vec<Field>,
    pub y_label: String,
    pub log_x: bool,
}

fn key(fields: &[Field], row: &MetricRow) -> String {
    fields.iter().map(|f| f.text(row)).collect::<Vec<_>>().join(" ")
}

fn label(fields: &[Field], row: &MetricRow) -> String {
    fields.iter().map(|f| format!("{}={}", f.name(), f.text(row))).collect::<Vec<_>>().join(", ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        return format!("{v:.0e}");
    }
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 4.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 5.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    (0..=10).map(|k| first + k as f64 * step).take_while(|t| *t <= hi + step * 1e-9).collect()
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - d, hi + d)
    } else {
        let d = (hi - lo) * 0.05;
        (lo - d, hi + d)
    }
}

struct Series {
    points: Vec<(f64, f64)>,
}

/// Renders the mean of `value` per (facet, line, x). Rows whose x field is not
/// numeric, or is non-positive on a log axis, are skipped.
pub fn render_chart(rows: &[MetricRow], spec: &ChartSpec) -> Result<String> {
    let mut acc: BTreeMap<String, BTreeMap<String, Vec<(f64, f64)>>> = BTreeMap::new();
    let mut facet_titles: BTreeMap<String, String> = BTreeMap::new();
    let mut line_titles: BTreeMap<String, String> = BTreeMap::new();
    for row in rows {
        let Some(x) = spec.x.value(row) else { continue };
        if spec.log_x && x <= 0.0 {
            continue;
        }
        let fk = key(&spec.facets, row);
        let lk = key(&spec.lines, row);
        facet_titles.entry(fk.clone()).or_insert_with(|| label(&spec.facets, row));
        line_titles.entry(lk.clone()).or_insert_with(|| key(&spec.lines, row));
        acc.entry(fk).or_default().entry(lk).or_default().push((x, row.value));
    }
    if acc.is_empty() {
        return Err(HarnessError::Usage(format!("chart `{}` has no rows to plot", spec.title)));
    }
    let line_index: BTreeMap<&String, usize> = line_titles.keys().enumerate().map(|(i, k)| (k, i)).collect();

    let mut panels: Vec<(String, BTreeMap<String, Series>)> = Vec::new();
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (fk, lines) in &acc {
        let mut series = BTreeMap::new();
        for (lk, obs) in lines {
            let mut by_x: Vec<(f64, f64, usize)> = Vec::new();
            let mut sorted = obs.clone();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (x, v) in sorted {
                match by_x.last_mut() {
                    Some(last) if last.0.total_cmp(&x) == Ordering::Equal => {
                        last.1 += v;
                        last.2 += 1;
                    }
                    _ => by_x.push((x, v, 1)),
                }
            }
            let points: Vec<(f64, f64)> = by_x.iter().map(|&(x, s, c)| (x, s / c as f64)).collect();
            for &(x, _) in &points {
                let tx = if spec.log_x { x.log10() } else { x };
                x_lo = x_lo.min(tx);
                x_hi = x_hi.max(tx);
            }
            series.insert(lk.clone(), Series { points });
        }
        panels.push((facet_titles[fk].clone(), series));
    }
    let (x_lo, x_hi) = padded(x_lo, x_hi);

    let cols = (panels.len() as f64).sqrt().ceil() as usize;
    let grid_rows = panels.len().div_ceil(cols);
    let legend_h = LEGEND_ROW * (line_titles.len() as f64 + 1.0);
    let width = cols as f64 * PANEL_W;
    let height = 36.0 + grid_rows as f64 * PANEL_H + legend_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(&spec.title));

    for (p, (title, series)) in panels.iter().enumerate() {
        let ox = (p % cols) as f64 * PANEL_W;
        let oy = 36.0 + (p / cols) as f64 * PANEL_H;
        let (px0, px1) = (ox + MARGIN_L, ox + PANEL_W - MARGIN_R);
        let (py0, py1) = (oy + MARGIN_T, oy + PANEL_H - MARGIN_B);
        let finite = series.values().flat_map(|s| s.points.iter().map(|p| p.1)).filter(|v| v.is_finite());
        let (y_lo, y_hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let (y_lo, y_hi) = if y_lo.is_finite() { padded(y_lo, y_hi) } else { (0.0, 1.0) };
        let sx = |x: f64| {
            let t = if spec.log_x { x.log10() } else { x };
            px0 + (t - x_lo) / (x_hi - x_lo) * (px1 - px0)
        };
        let sy = |y: f64| py1 - (y - y_lo) / (y_hi - y_lo) * (py1 - py0);

        let _ = writeln!(svg, r#"<g>"#);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (px0 + px1) / 2.0, oy + 16.0, escape(title));
        let _ = writeln!(svg, r##"<rect x="{px0}" y="{py0}" width="{}" height="{}" fill="none" stroke="#444"/>"##, px1 - px0, py1 - py0);
        for t in ticks(y_lo, y_hi) {
            let y = sy(t);
            let _ = writeln!(svg, r##"<line x1="{}" y1="{y:.2}" x2="{px0}" y2="{y:.2}" stroke="#444"/>"##, px0 - 4.0);
            let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, px0 - 6.0, y + 4.0, fmt_tick(t));
        }
        let x_ticks: Vec<(f64, String)> = if spec.log_x {
            (x_lo.ceil() as i32..=x_hi.floor() as i32).map(|e| (10f64.powi(e), format!("1e{e}"))).collect()
        } else {
            ticks(x_lo, x_hi).into_iter().map(|t| (t, fmt_tick(t))).collect()
        };
        for (t, text) in x_ticks {
            let x = sx(t);
            let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{py1}" x2="{x:.2}" y2="{}" stroke="#444"/>"##, py1 + 4.0);
            let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{text}</text>"#, py1 + 16.0);
        }
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (px0 + px1) / 2.0, py1 + 32.0, spec.x.name());
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">{}</text>"#,
            ox + 14.0,
            (py0 + py1) / 2.0,
            ox + 14.0,
            (py0 + py1) / 2.0,
            escape(&spec.y_label)
        );
        for (lk, s) in series {
            let i = line_index[lk];
            let color = PALETTE[i % PALETTE.len()];
            let dash = DASHES[(i / PALETTE.len()) % DASHES.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|p| p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            if pts.len() > 1 {
                let dash_attr = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
                let _ = writeln!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash_attr}/>"#,
                    pts.join(" ")
                );
            }
            for pt in &pts {
                let (x, y) = pt.split_once(',').unwrap_or(("0", "0"));
                let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
            }
        }
        let _ = writeln!(svg, r#"</g>"#);
    }

    let ly = 36.0 + grid_rows as f64 * PANEL_H;
    let _ = writeln!(svg, r#"<g>"#);
    let _ = writeln!(svg, r#"<text x="10" y="{}">{}</text>"#, ly + 12.0, escape(&spec.lines.iter().map(|f| f.name()).collect::<Vec<_>>().join(" ")));
    for (i, (_, title)) in line_titles.iter().enumerate() {
        let y = ly + LEGEND_ROW * (i as f64 + 1.0) + 8.0;
        let color = PALETTE[i % PALETTE.len()];
        let dash = DASHES[(i / PALETTE.len()) % DASHES.len()];
        let dash_attr = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
        let _ = writeln!(svg, r#"<line x1="10" y1="{y}" x2="40" y2="{y}" stroke="{color}" stroke-width="2"{dash_attr}/>"#);
        let _ = writeln!(svg, r#"<text x="46" y="{}">{}</text>"#, y + 4.0, escape(title));
    }
    let _ = writeln!(svg, r#"</g>"#);
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricName;

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

    fn spec() -> ChartSpec {
        ChartSpec {
            title: "t".into(),
            x: Field::R,
            facets: vec![Field::CvScheme],
            lines: vec![Field::Strategy],
            y_label: "hard_ranking_error".into(),
            log_x: false,
        }
    }

    #[test]
    fn single_point_renders() {
        let svg = render_chart(&[row("train_loss", 0.25, 0.4)], &spec()).unwrap();
        assert!(svg.contains("<circle"));
        assert!(!svg.contains("<script"));
    }

    #[test]
    fn one_polyline_per_strategy() {
        let mut rows = Vec::new();
        for s in ["train_loss", "test_loss<&>"] {
            for r in [0.05, 0.5] {
                rows.push(row(s, r, r));
            }
        }
        let svg = render_chart(&rows, &spec()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("test_loss&lt;&amp;&gt;"));
    }

    #[test]
    fn empty_rows_are_an_error() {
        assert!(render_chart(&[], &spec()).is_err());
    }

    #[test]
    fn ticks_cover_the_range() {
        let t = ticks(0.0, 1.0);
        assert_eq!(t.first(), Some(&0.0));
        assert!(t.len() >= 3 && t.len() <= 6);
    }
}
