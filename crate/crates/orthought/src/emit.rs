//! Report serialization: text tables, CSV and JSON.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use orthought_core::labels::{Element, LabelKind, LabelSummary};
use orthought_core::{BenchmarkReport, GroupDim, ReportRow, VariantConfig};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" | "table-text" | "text" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format {other:?} (table, csv, json)")),
        }
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "dataset",
    "problem_type",
    "problem_size",
    "variant",
    "trials",
    "successes",
    "success_rate",
    "avg_prompt_tokens",
    "avg_completion_tokens",
    "avg_repair_iterations",
    "total_prompt_tokens",
    "total_completion_tokens",
];

/// Key cell for a dimension the report is not grouped on.
const UNGROUPED: &str = "*";

/// `0.890244` -> `89.02%`.
pub fn percent(rate: f64) -> String {
    format!("{:.2}%", rate * 100.0)
}

pub fn emit_report(report: &BenchmarkReport, format: Format) -> String {
    match format {
        Format::Table => table(report),
        Format::Csv => csv_text(report),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

fn csv_text(report: &BenchmarkReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in &report.rows {
        let mut fields: Vec<String> = row
            .key
            .iter()
            .map(|k| k.clone().unwrap_or_else(|| UNGROUPED.into()))
            .collect();
        fields.extend([
            row.trials.to_string(),
            row.successes.to_string(),
            row.success_rate.to_string(),
            row.avg_prompt_tokens.to_string(),
            row.avg_completion_tokens.to_string(),
            row.avg_repair_iterations.to_string(),
            row.total_prompt_tokens.to_string(),
            row.total_completion_tokens.to_string(),
        ]);
        w.write_record(&fields).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

#[derive(Debug, Error)]
pub enum ParseReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected CSV header")]
    Header,
    #[error("row {row}: bad {column}: {value:?}")]
    Field {
        row: usize,
        column: &'static str,
        value: String,
    },
}

/// Reads a report written by [`emit_report`] with [`Format::Csv`]. The
/// grouping is recovered from which key columns hold values.
pub fn parse_report_csv(text: &str) -> Result<BenchmarkReport, ParseReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    if r.headers()?.iter().ne(CSV_HEADER) {
        return Err(ParseReportError::Header);
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |col: usize| rec.get(col).unwrap_or("");
        fn num<T: FromStr>(row: usize, column: &'static str, value: &str) -> Result<T, ParseReportError> {
            value.parse().map_err(|_| ParseReportError::Field {
                row,
                column,
                value: value.into(),
            })
        }
        let key = [0, 1, 2, 3].map(|c| Some(field(c)).filter(|v| *v != UNGROUPED).map(str::to_owned));
        rows.push(ReportRow {
            key,
            trials: num(i, CSV_HEADER[4], field(4))?,
            successes: num(i, CSV_HEADER[5], field(5))?,
            success_rate: num(i, CSV_HEADER[6], field(6))?,
            avg_prompt_tokens: num(i, CSV_HEADER[7], field(7))?,
            avg_completion_tokens: num(i, CSV_HEADER[8], field(8))?,
            avg_repair_iterations: num(i, CSV_HEADER[9], field(9))?,
            total_prompt_tokens: num(i, CSV_HEADER[10], field(10))?,
            total_completion_tokens: num(i, CSV_HEADER[11], field(11))?,
        });
    }
    let group_by = rows
        .first()
        .map(|row: &ReportRow| {
            GroupDim::ALL
                .into_iter()
                .filter(|d| row.key_for(*d).is_some())
                .collect()
        })
        .unwrap_or_default();
    Ok(BenchmarkReport { group_by, rows })
}

fn variant_name(row: &ReportRow) -> String {
    match row.key_for(GroupDim::Variant) {
        Some(label) => VariantConfig::from_label(label).map_or_else(|| label.to_owned(), |v| v.display_name()),
        None => "all".into(),
    }
}

fn column_name(row: &ReportRow) -> String {
    let parts: Vec<&str> = [GroupDim::Dataset, GroupDim::ProblemType, GroupDim::ProblemSize]
        .into_iter()
        .filter_map(|d| row.key_for(d))
        .collect();
    if parts.is_empty() {
        "Overall".into()
    } else {
        parts.join("/")
    }
}

/// Variants down, remaining group keys across, success rates in cells,
/// then trial count and mean tokens per trial for each variant.
fn table(report: &BenchmarkReport) -> String {
    let mut variants: Vec<(String, String)> = Vec::new();
    let columns: BTreeSet<String> = report.rows.iter().map(column_name).collect();
    for row in &report.rows {
        let key = row.key_for(GroupDim::Variant).unwrap_or("").to_owned();
        if !variants.iter().any(|(k, _)| *k == key) {
            variants.push((key, variant_name(row)));
        }
    }

    let mut header = vec!["Method".to_owned()];
    header.extend(columns.iter().cloned());
    header.extend(["Trials".into(), "Avg prompt tok".into(), "Avg completion tok".into()]);

    let mut body = Vec::new();
    for (key, name) in &variants {
        let mine: Vec<&ReportRow> = report
            .rows
            .iter()
            .filter(|r| r.key_for(GroupDim::Variant).unwrap_or("") == key)
            .collect();
        let mut line = vec![name.clone()];
        for col in &columns {
            line.push(
                mine.iter()
                    .find(|r| column_name(r) == *col)
                    .map_or_else(|| "-".into(), |r| percent(r.success_rate)),
            );
        }
        let trials: u64 = mine.iter().map(|r| r.trials).sum();
        let prompt: u64 = mine.iter().map(|r| r.total_prompt_tokens).sum();
        let completion: u64 = mine.iter().map(|r| r.total_completion_tokens).sum();
        line.push(trials.to_string());
        line.push(format!("{:.1}", prompt as f64 / trials.max(1) as f64));
        line.push(format!("{:.1}", completion as f64 / trials.max(1) as f64));
        body.push(line);
    }

    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|l| l[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let render = |out: &mut String, cells: &[String]| {
        for (c, cell) in cells.iter().enumerate() {
            if c == 0 {
                let _ = write!(out, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(out, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push('\n');
    };
    render(&mut out, &header);
    let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for line in &body {
        render(&mut out, line);
    }
    out
}

/// Error type by element counts with marginals.
pub fn format_label_summary(s: &LabelSummary) -> String {
    let mut out = format!("{:<10}", "");
    for e in Element::ALL {
        let _ = write!(out, " {:>10}", e.as_str());
    }
    let _ = writeln!(out, " {:>10}", "total");
    for k in LabelKind::ALL {
        let _ = write!(out, "{:<10}", k.as_str());
        for e in Element::ALL {
            let _ = write!(out, " {:>10}", s.get(k, e));
        }
        let _ = writeln!(out, " {:>10}", s.by_error_type[k as usize]);
    }
    let _ = write!(out, "{:<10}", "total");
    for n in s.by_element {
        let _ = write!(out, " {n:>10}");
    }
    let _ = writeln!(out, " {:>10}", s.total);
    out
}
