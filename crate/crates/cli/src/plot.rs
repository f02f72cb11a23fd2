//! Turns experiment CSV output into charts.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use ggm_core::experiment::{RESULTS_HEADER, RISK_HEADER, ROC_HEADER};

use crate::svg::{Chart, Series};
use crate::PlotKind;

struct Table {
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

fn read_table(path: &Path) -> anyhow::Result<Table> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r.records().collect::<Result<Vec<_>, _>>()?;
    Ok(Table { header, rows })
}

fn number(record: &csv::StringRecord, col: usize, line: usize) -> anyhow::Result<f64> {
    let field = record.get(col).unwrap_or("");
    field
        .parse()
        .with_context(|| format!("row {line}: `{field}` is not a number"))
}

/// Groups `(x, y)` by procedure, keeping first-appearance order.
fn group(rows: impl Iterator<Item = (String, f64, f64)>) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for (name, x, y) in rows {
        match out.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((x, y)),
            None => out.push(Series {
                name,
                points: vec![(x, y)],
            }),
        }
    }
    out
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

pub fn run(results: &Path, kind: PlotKind, out: &Path, n: Option<usize>) -> anyhow::Result<()> {
    let table = read_table(results)?;
    let expected = match kind {
        PlotKind::Roc => ROC_HEADER,
        PlotKind::Risk => RISK_HEADER,
        PlotKind::FnVsN => RESULTS_HEADER,
    };
    if table.header.join(",") != expected {
        bail!(
            "{}: header `{}` does not match the expected `{expected}`",
            results.display(),
            table.header.join(",")
        );
    }
    if table.rows.is_empty() {
        bail!("{}: no data rows", results.display());
    }

    let mut parsed = Vec::with_capacity(table.rows.len());
    for (k, r) in table.rows.iter().enumerate() {
        let line = k + 2;
        let proc_name = r.get(0).unwrap_or("").to_string();
        let row_n = number(r, 1, line)? as usize;
        let (x, y) = match kind {
            PlotKind::FnVsN => (row_n as f64, number(r, 8, line)?),
            _ => (number(r, 2, line)?, number(r, 3, line)?),
        };
        parsed.push((proc_name, row_n, x, y));
    }

    let chart = match kind {
        PlotKind::FnVsN => {
            let series = group(parsed.into_iter().map(|(p, _, x, y)| (p, x, y)));
            let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
            let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            let y_max = series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1))
                .fold(0.0, f64::max);
            Chart {
                title: "Mean false negatives by sample size".into(),
                x_label: "n".into(),
                y_label: "mean FN".into(),
                x_range: padded(lo, hi),
                y_range: padded(0.0, y_max * 1.05),
                series,
            }
        }
        PlotKind::Roc | PlotKind::Risk => {
            let chosen = match n {
                Some(n) => n,
                None => parsed.iter().map(|r| r.1).max().expect("rows are not empty"),
            };
            let series = group(
                parsed
                    .into_iter()
                    .filter(|r| r.1 == chosen)
                    .map(|(p, _, x, y)| (p, x, y)),
            );
            if series.is_empty() {
                bail!("{}: no rows for n = {chosen}", results.display());
            }
            if matches!(kind, PlotKind::Roc) {
                Chart {
                    title: format!("ROC, n = {chosen}"),
                    x_label: "1 - specificity".into(),
                    y_label: "sensitivity".into(),
                    x_range: (0.0, 1.0),
                    y_range: (0.0, 1.0),
                    series,
                }
            } else {
                let y_max = series
                    .iter()
                    .flat_map(|s| s.points.iter().map(|p| p.1))
                    .fold(0.0, f64::max);
                Chart {
                    title: format!("Risk, n = {chosen}"),
                    x_label: "alpha".into(),
                    y_label: "risk".into(),
                    x_range: (0.0, 1.0),
                    y_range: padded(0.0, y_max * 1.05),
                    series,
                }
            }
        }
    };
    fs::write(out, chart.render()).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}
