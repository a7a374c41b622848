//! Rendering report tables as aligned text, CSV or JSON.

use std::io::Write;

use counterframe_core::evaluation::{Cell, ReportTable};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    /// Aligned plain-text columns.
    #[default]
    Plain,
    /// Comma-separated values with a header row.
    Delimited,
    /// JSON.
    Structured,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn numeric(cell: &Cell) -> bool {
    matches!(cell, Cell::Count(_) | Cell::Percent(_) | Cell::Number(_))
}

/// Writes the tables in order. Plain and delimited output separate tables
/// with a blank line; structured output is one JSON array.
pub fn export_report(
    tables: &[ReportTable],
    format: ReportFormat,
    mut out: impl Write,
) -> Result<(), ReportError> {
    match format {
        ReportFormat::Plain => {
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.write_all(b"\n")?;
                }
                write_plain(t, &mut out)?;
            }
        }
        ReportFormat::Delimited => {
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    out.write_all(b"\n")?;
                }
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(&t.columns)?;
                for row in &t.rows {
                    w.write_record(row.iter().map(Cell::render))?;
                }
                w.flush()?;
            }
        }
        ReportFormat::Structured => {
            let doc: Vec<Value> = tables.iter().map(structured).collect();
            serde_json::to_writer_pretty(&mut out, &doc).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn write_plain(t: &ReportTable, out: &mut impl Write) -> std::io::Result<()> {
    let rendered: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
    let widths: Vec<usize> = (0..t.columns.len())
        .map(|c| {
            rendered
                .iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .chain([t.columns[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    // a column is right-aligned when its first non-empty cell is numeric
    let right: Vec<bool> = (0..t.columns.len())
        .map(|c| {
            t.rows
                .iter()
                .filter_map(|r| r.get(c))
                .find(|cell| !matches!(cell, Cell::Empty))
                .is_some_and(numeric)
        })
        .collect();
    let line = |cells: &[String]| -> String {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if right[c] {
                    format!("{s:>w$}", w = widths[c])
                } else {
                    format!("{s:<w$}", w = widths[c])
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    writeln!(out, "{}", t.title)?;
    writeln!(out, "{}", line(&t.columns))?;
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    writeln!(out, "{}", rule.join("  "))?;
    for r in &rendered {
        writeln!(out, "{}", line(r))?;
    }
    Ok(())
}

fn structured(t: &ReportTable) -> Value {
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| {
            let obj: serde_json::Map<String, Value> = t
                .columns
                .iter()
                .zip(r)
                .map(|(col, cell)| {
                    let v = match cell {
                        Cell::Text(s) => json!(s),
                        Cell::Count(n) => json!(n),
                        Cell::Percent(x) | Cell::Number(x) => json!((x * 100.0).round() / 100.0),
                        Cell::Empty => Value::Null,
                    };
                    (col.clone(), v)
                })
                .collect();
            Value::Object(obj)
        })
        .collect();
    json!({ "title": t.title, "columns": t.columns, "rows": rows })
}
