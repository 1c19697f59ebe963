//! Evaluation report output: one CSV row per run plus a JSON mirror.

use std::path::Path;

use serde::Serialize;
use visreg_core::eval::{Budget, ExperimentReport};

use crate::error::CliResult;

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub method: String,
    pub budget: String,
    pub seed: u64,
    pub accuracy: f64,
    pub mae: f64,
    pub pearson: Option<f64>,
}

impl From<&ExperimentReport> for ReportRow {
    fn from(r: &ExperimentReport) -> Self {
        ReportRow {
            method: r.method.label().to_string(),
            budget: r.budget.label(),
            seed: r.seed,
            accuracy: r.accuracy,
            mae: r.mae,
            pearson: r.pearson,
        }
    }
}

/// Sorts rows canonically (method, budget order, seed) so output files are
/// stable no matter how the runs were scheduled.
pub fn sort_rows(rows: &mut [ReportRow]) {
    fn budget_rank(label: &str) -> (u8, usize) {
        if label == "full" {
            (1, 0)
        } else {
            (0, label.parse::<usize>().unwrap_or(0))
        }
    }
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(budget_rank(&a.budget).cmp(&budget_rank(&b.budget)))
            .then(a.seed.cmp(&b.seed))
    });
}

fn float_field(v: f64) -> String {
    format!("{v}")
}

pub fn write_csv(path: &Path, rows: &[ReportRow]) -> CliResult<()> {
    let mut out = String::from("method,budget,seed,accuracy,mae,pearson\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.method,
            r.budget,
            r.seed,
            float_field(r.accuracy),
            float_field(r.mae),
            r.pearson.map(float_field).unwrap_or_else(|| "nan".to_string()),
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_json(path: &Path, rows: &[ReportRow]) -> CliResult<()> {
    let json = serde_json::to_string_pretty(rows)
        .map_err(|e| crate::error::CliError::runtime(format!("serializing report: {e}")))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

/// Mean of a metric across seeds for one (method, budget) cell.
pub fn mean_accuracy(rows: &[ReportRow], method: &str, budget: &str) -> Option<f64> {
    let values: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == method && r.budget == budget)
        .map(|r| r.accuracy)
        .collect();
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Budgets present in a row set, in canonical order.
pub fn budgets_in(rows: &[ReportRow]) -> Vec<String> {
    let mut labels: Vec<String> = Vec::new();
    for r in rows {
        if !labels.contains(&r.budget) {
            labels.push(r.budget.clone());
        }
    }
    labels.sort_by_key(|l| {
        if l == "full" {
            (1, 0)
        } else {
            (0, l.parse::<usize>().unwrap_or(0))
        }
    });
    labels
}

/// Parses a budget list flag such as `0,10,100,full`.
pub fn parse_budgets(raw: &str) -> CliResult<Vec<Budget>> {
    let mut budgets = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if part == "full" {
            budgets.push(Budget::FullHistory);
        } else {
            let k: usize = part.parse().map_err(|_| {
                crate::error::CliError::usage(format!(
                    "budget `{part}` is neither a count nor `full`"
                ))
            })?;
            budgets.push(if k == 0 { Budget::Visual } else { Budget::K(k) });
        }
    }
    if budgets.is_empty() {
        return Err(crate::error::CliError::usage("budget list is empty"));
    }
    Ok(budgets)
}
