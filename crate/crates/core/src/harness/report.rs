//! CSV / JSON / markdown renderings of matrix results.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::run::{ModelKind, ResultRow};
use crate::error::{Error, Result};
use crate::generator::{PipelineBias, ScenarioId};
use crate::metrics::MetricsReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(Error::invalid(format!(
                "unknown report format {other:?} (expected csv, json or md)"
            ))),
        }
    }
}

fn pp(x: f64) -> String {
    // avoid printing "-0.0"
    let s = format!("{x:.1}");
    if s == "-0.0" {
        "0.0".to_string()
    } else {
        s
    }
}

pub const CSV_HEADER: [&str; 13] = [
    "scenario",
    "pipeline_bias",
    "model",
    "acc",
    "acc_a0",
    "acc_a1",
    "sel_rate_a0",
    "sel_rate_a1",
    "delta_dp",
    "delta_acc",
    "dp_of_true_target",
    "seed",
    "n_samples",
];

/// One line per (cell, model); rates and gaps in percentage points.
pub fn render_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(CSV_HEADER).map_err(to_err)?;
    for row in rows {
        for kind in ModelKind::ALL {
            let m = row.model(kind);
            w.write_record([
                row.cell.scenario.to_string(),
                row.cell.pipeline_bias.to_string(),
                kind.as_str().to_string(),
                pp(100.0 * m.acc),
                pp(100.0 * m.acc_a0),
                pp(100.0 * m.acc_a1),
                pp(100.0 * m.sel_rate_a0),
                pp(100.0 * m.sel_rate_a1),
                pp(m.delta_dp),
                pp(m.delta_acc),
                pp(row.dp_of_true_target),
                row.seed.to_string(),
                row.n_samples.to_string(),
            ])
            .map_err(to_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_json(rows: &[ResultRow]) -> Result<String> {
    serde_json::to_string_pretty(rows).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_json(text: &str) -> Result<Vec<ResultRow>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn find(rows: &[ResultRow], s: ScenarioId, b: PipelineBias) -> Option<&ResultRow> {
    rows.iter()
        .find(|r| r.cell.scenario == s && r.cell.pipeline_bias == b)
}

/// Grid with scenarios as row blocks (Acc, dDP, dAcc) and pipeline biases
/// as column groups (RF, BRF, ERF). The dDP label carries the gap of the
/// true target in brackets.
pub fn render_markdown(rows: &[ResultRow]) -> String {
    render_grid(
        rows,
        |m| [100.0 * m.acc, m.delta_dp, m.delta_acc].map(pp),
        |rows, s| {
            find(rows, s, PipelineBias::None)
                .map_or_else(String::new, |r| format!(" ({})", pp(r.dp_of_true_target)))
        },
    )
}

fn render_grid(
    rows: &[ResultRow],
    cells: impl Fn(&MetricsReport) -> [String; 3],
    dp_label: impl Fn(&[ResultRow], ScenarioId) -> String,
) -> String {
    let mut out = String::new();
    out.push_str("| Scenario | Metric |");
    for b in PipelineBias::ALL {
        for k in ModelKind::ALL {
            let _ = write!(out, " {} {} |", b.description(), k.as_str());
        }
    }
    out.push('\n');
    out.push_str("|---|---|");
    for _ in 0..PipelineBias::ALL.len() * ModelKind::ALL.len() {
        out.push_str("---:|");
    }
    out.push('\n');

    for s in ScenarioId::ALL {
        let metric_names = [
            "Acc".to_string(),
            format!("ΔDP{}", dp_label(rows, s)),
            "ΔAcc".to_string(),
        ];
        for (mi, metric) in metric_names.iter().enumerate() {
            let scenario_label = if mi == 0 {
                format!("{}) {}", s, s.description())
            } else {
                String::new()
            };
            let _ = write!(out, "| {scenario_label} | {metric} |");
            for b in PipelineBias::ALL {
                for k in ModelKind::ALL {
                    let v = find(rows, s, b).map_or_else(|| "–".to_string(), |r| cells(r.model(k))[mi].clone());
                    let _ = write!(out, " {v} |");
                }
            }
            out.push('\n');
        }
    }
    out
}

pub fn render(rows: &[ResultRow], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => render_csv(rows),
        ReportFormat::Json => render_json(rows),
        ReportFormat::Markdown => Ok(render_markdown(rows)),
    }
}

pub fn emit_report(rows: &[ResultRow], format: ReportFormat, path: &Path) -> Result<()> {
    let text = render(rows, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Mean and sample standard deviation of one metric over repeats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: ScenarioId,
    pub pipeline_bias: PipelineBias,
    pub model: ModelKind,
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
    pub repeats: usize,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

const SUMMARY_METRICS: [&str; 3] = ["acc", "delta_dp", "delta_acc"];

fn metric_value(m: &MetricsReport, name: &str) -> f64 {
    match name {
        "acc" => 100.0 * m.acc,
        "delta_dp" => m.delta_dp,
        "delta_acc" => m.delta_acc,
        _ => unreachable!("unknown summary metric {name}"),
    }
}

/// Summaries per (cell, model, metric) across repeated matrix runs.
pub fn summarize_repeats(runs: &[Vec<ResultRow>]) -> Vec<SummaryRow> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, row) in first.iter().enumerate() {
        for model in ModelKind::ALL {
            for metric in SUMMARY_METRICS {
                let xs: Vec<f64> = runs
                    .iter()
                    .map(|run| metric_value(run[i].model(model), metric))
                    .collect();
                let (mean, sd) = mean_sd(&xs);
                out.push(SummaryRow {
                    scenario: row.cell.scenario,
                    pipeline_bias: row.cell.pipeline_bias,
                    model,
                    metric: metric.to_string(),
                    mean,
                    sd,
                    repeats: runs.len(),
                });
            }
        }
    }
    out
}

pub fn render_summary(summary: &[SummaryRow], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(summary).map_err(|e| Error::Parse(e.to_string()))
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let to_err = |e: csv::Error| Error::Parse(e.to_string());
            w.write_record(["scenario", "pipeline_bias", "model", "metric", "mean", "sd", "repeats"])
                .map_err(to_err)?;
            for s in summary {
                w.write_record([
                    s.scenario.to_string(),
                    s.pipeline_bias.to_string(),
                    s.model.as_str().to_string(),
                    s.metric.clone(),
                    format!("{:.2}", s.mean),
                    format!("{:.2}", s.sd),
                    s.repeats.to_string(),
                ])
                .map_err(to_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        ReportFormat::Markdown => {
            let mut out = String::from("| Scenario | Pipeline bias | Model | Acc | ΔDP | ΔAcc |\n|---|---|---|---:|---:|---:|\n");
            for chunk in summary.chunks(SUMMARY_METRICS.len()) {
                let s = &chunk[0];
                let _ = write!(out, "| {} | {} | {} |", s.scenario, s.pipeline_bias, s.model.as_str());
                for m in chunk {
                    let _ = write!(out, " {:.1} ± {:.1} |", m.mean, m.sd);
                }
                out.push('\n');
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run::ExperimentCell;

    fn report(acc: f64, dp: f64) -> MetricsReport {
        MetricsReport {
            acc,
            acc_a0: acc,
            acc_a1: acc,
            sel_rate_a0: 0.5,
            sel_rate_a1: 0.5 - dp / 100.0,
            delta_dp: dp,
            delta_acc: 0.0,
            delta_acc_signed: 0.0,
            dp_of_true_target: 1.0,
        }
    }

    fn rows() -> Vec<ResultRow> {
        ExperimentCell::all()
            .into_iter()
            .enumerate()
            .map(|(i, cell)| ResultRow {
                cell,
                rf: report(0.8 + i as f64 / 1000.0, i as f64),
                brf: report(0.7, -0.04),
                erf: report(0.6, 0.3),
                dp_of_true_target: 1.26,
                seed: 9,
                n_samples: 100,
                n_train: 70,
                n_test: 30,
            })
            .collect()
    }

    #[test]
    fn csv_has_one_line_per_cell_and_model() {
        let text = render_csv(&rows()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 25 * 3);
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[1].starts_with("I,none,RF,80.0,"));
        // -0.04 rounds to zero without a sign
        assert!(lines[2].contains(",0.0,"));
    }

    #[test]
    fn json_round_trips() {
        let r = rows();
        assert_eq!(parse_json(&render_json(&r).unwrap()).unwrap(), r);
    }

    #[test]
    fn markdown_grid_shape() {
        let md = render_markdown(&rows());
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 2 + 5 * 3);
        for line in &lines {
            assert_eq!(line.matches('|').count(), 2 + 15 + 1, "{line}");
        }
        assert!(md.contains("ΔDP (1.3)"));
    }

    #[test]
    fn unknown_format_is_rejected() {
        assert!("xml".parse::<ReportFormat>().is_err());
        assert_eq!("MD".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
    }

    #[test]
    fn summary_statistics() {
        let a = rows();
        let mut b = rows();
        for r in &mut b {
            r.rf.acc += 0.02;
        }
        let s = summarize_repeats(&[a, b]);
        assert_eq!(s.len(), 25 * 3 * 3);
        let first = &s[0];
        assert_eq!((first.model, first.metric.as_str()), (ModelKind::Rf, "acc"));
        assert!((first.mean - 81.0).abs() < 1e-9);
        assert!((first.sd - 2f64.sqrt()).abs() < 1e-9);
        for f in [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Markdown] {
            assert!(!render_summary(&s, f).unwrap().is_empty());
        }
    }
}
