//! Report rendering: JSON, CSV and aligned text tables.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use jsonmask::schema::dataset::render_columns;

use crate::bench::{round_half_up, CoverageReport, EfficiencyReport};
use crate::conformance::{FailureBreakdown, Thresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("unknown report format {0:?} (expected json, csv or table)")]
    UnknownFormat(String),
    #[error("csv: {0}")]
    Csv(String),
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<ReportFormat, ReportError> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "table" | "text" | "text-table" => Ok(ReportFormat::Table),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

/// One line of a coverage table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub dataset: String,
    pub framework: String,
    pub schemas: usize,
    pub declared: f64,
    pub empirical: f64,
    pub compliance: Option<f64>,
}

pub fn coverage_rows(reports: &[CoverageReport]) -> Vec<CoverageRow> {
    let mut rows: Vec<CoverageRow> = reports
        .iter()
        .flat_map(|r| {
            r.datasets.iter().map(|d| CoverageRow {
                dataset: d.dataset.clone(),
                framework: r.framework.clone(),
                schemas: d.schemas,
                declared: d.declared,
                empirical: d.empirical,
                compliance: d.compliance,
            })
        })
        .collect();
    // Dataset-major, frameworks in the order given.
    rows.sort_by(|a, b| a.dataset.cmp(&b.dataset));
    rows
}

fn two(x: f64) -> String {
    format!("{:.2}", round_half_up(x, 2))
}

fn na(x: Option<f64>) -> String {
    x.map_or("NA".to_string(), two)
}

pub fn emit_report(reports: &[CoverageReport], format: ReportFormat) -> Result<Vec<u8>, ReportError> {
    let rows = coverage_rows(reports);
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(reports).expect("report serializes");
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["dataset", "framework", "schemas", "declared", "empirical", "compliance"]).map_err(|e| ReportError::Csv(e.to_string()))?;
            for r in &rows {
                let compliance = r.compliance.map_or("NA".to_string(), |c| c.to_string());
                w.write_record([&r.dataset, &r.framework, &r.schemas.to_string(), &r.declared.to_string(), &r.empirical.to_string(), &compliance])
                    .map_err(|e| ReportError::Csv(e.to_string()))?;
            }
            w.into_inner().map_err(|e| ReportError::Csv(e.to_string()))
        }
        ReportFormat::Table => {
            let mut lines = vec![["Dataset", "Framework", "Declared", "Empirical", "Compliance Rate"].map(String::from).to_vec()];
            let mut last = None;
            for r in &rows {
                let ds = if last == Some(&r.dataset) { String::new() } else { r.dataset.clone() };
                last = Some(&r.dataset);
                lines.push(vec![ds, r.framework.clone(), two(r.declared), two(r.empirical), na(r.compliance)]);
            }
            Ok(render_columns(&lines).into_bytes())
        }
    }
}

/// Reads back the CSV form.
pub fn parse_coverage_csv(bytes: &[u8]) -> Result<Vec<CoverageRow>, ReportError> {
    let mut r = csv::Reader::from_reader(bytes);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| ReportError::Csv(e.to_string()))?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| ReportError::Csv(format!("column {i}: {e}")));
        rows.push(CoverageRow {
            dataset: rec[0].to_string(),
            framework: rec[1].to_string(),
            schemas: rec[2].parse().map_err(|e| ReportError::Csv(format!("column 2: {e}")))?,
            declared: num(3)?,
            empirical: num(4)?,
            compliance: if &rec[5] == "NA" { None } else { Some(num(5)?) },
        });
    }
    Ok(rows)
}

/// Coverage levels by engine, one column per engine.
pub fn thresholds_table(columns: &[(String, Thresholds)]) -> String {
    let mut lines = vec![std::iter::once("Coverage".to_string()).chain(columns.iter().map(|c| c.0.clone())).collect::<Vec<_>>()];
    let rows: [(&str, fn(&Thresholds) -> usize); 5] = [
        ("Minimal coverage (>0%)", |t| t.minimal),
        ("Partial coverage (>25%)", |t| t.partial),
        ("Moderate coverage (>50%)", |t| t.moderate),
        ("High coverage (>75%)", |t| t.high),
        ("Full coverage (100%)", |t| t.full),
    ];
    for (label, f) in rows {
        lines.push(std::iter::once(label.to_string()).chain(columns.iter().map(|c| f(&c.1).to_string())).collect());
    }
    render_columns(&lines)
}

/// Categories per failure kind, one column per engine.
pub fn failures_table(columns: &[(String, FailureBreakdown)]) -> String {
    let mut lines = vec![std::iter::once("Failure type".to_string()).chain(columns.iter().map(|c| c.0.clone())).collect::<Vec<_>>()];
    let rows: [(&str, fn(&FailureBreakdown) -> usize); 3] =
        [("Compile Error", |f| f.compile_error), ("Over-constrained", |f| f.over_constrained), ("Under-constrained", |f| f.under_constrained)];
    for (label, f) in rows {
        lines.push(std::iter::once(label.to_string()).chain(columns.iter().map(|c| f(&c.1).to_string())).collect());
    }
    render_columns(&lines)
}

/// Median metrics per variant.
pub fn efficiency_table(report: &EfficiencyReport) -> String {
    let mut lines = vec!["Variant,Schemas,GCT (s),TTFT (s),TPOT (ms),TGT (s),Tokens (ff)".split(',').map(String::from).collect::<Vec<_>>()];
    for v in &report.variants {
        let m = &v.medians;
        lines.push(vec![
            v.name.clone(),
            v.schemas.to_string(),
            format!("{:.4}", m.gct),
            format!("{:.4}", m.ttft),
            m.tpot_ms.map_or("NA".to_string(), |t| format!("{t:.3}")),
            format!("{:.4}", m.tgt),
            format!("{} ({})", m.output_tokens, m.ff_tokens),
        ]);
    }
    render_columns(&lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_parse() {
        assert_eq!("csv".parse::<ReportFormat>(), Ok(ReportFormat::Csv));
        assert_eq!("xml".parse::<ReportFormat>(), Err(ReportError::UnknownFormat("xml".into())));
    }

    #[test]
    fn empty_reports_render() {
        let json = emit_report(&[], ReportFormat::Json).unwrap();
        assert_eq!(serde_json::from_slice::<serde_json::Value>(&json).unwrap(), serde_json::json!([]));
        let csv = emit_report(&[], ReportFormat::Csv).unwrap();
        assert!(parse_coverage_csv(&csv).unwrap().is_empty());
        let table = String::from_utf8(emit_report(&[], ReportFormat::Table).unwrap()).unwrap();
        assert_eq!(table.lines().count(), 1);
    }
}
