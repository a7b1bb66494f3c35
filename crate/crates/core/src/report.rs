//! Report rendering: one JSON object per line for machines, aligned columns
//! for people. Both views print the same one-decimal percentages.

use std::fmt::Write as _;

use serde::Serialize;

use crate::metrics::{percent, EvalReport, Score};

/// One JSON line; keys are emitted in a fixed order.
pub fn machine_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("report values always serialize")
}

pub fn score_cells(score: &Score) -> [String; 3] {
    [percent(&score.precision), percent(&score.recall), percent(&score.f1)]
}

/// A plain text table with a header row and left-aligned first column.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate().take(cols) {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let rendered: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    format!("{:<w$}", c, w = widths[i])
                } else {
                    format!("{:>w$}", c, w = widths[i])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", rendered.join("  ").trim_end());
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

/// Evaluation results in the usual P / R / F1 layout, one row per report.
pub fn eval_table(reports: &[EvalReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let c = r.counts();
            let [p, rc, f] = score_cells(&r.totals);
            vec![
                r.config.mode.to_string(),
                p,
                rc,
                f,
                c.tp.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
            ]
        })
        .collect();
    let mut out = table(&["", "P", "R", "F1", "tp", "fp", "fn"], &rows);
    if let Some(first) = reports.first() {
        let _ = writeln!(
            out,
            "predicates: {}  aggregation: {:?}  redundant: {}  iou: {}",
            first.per_predicate.len(),
            first.config.aggregation,
            first.config.redundant,
            first.config.threshold
        );
        if first.unscored_predictions > 0 {
            let _ = writeln!(out, "unscored predicted predicates: {}", first.unscored_predictions);
        }
    }
    out
}
