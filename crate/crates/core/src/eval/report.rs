use std::fmt::Write;

use serde::Serialize;

use super::{align, bootstrap_all, confusion_counts, mcnemar_from_correctness, metrics};
use super::{
    BootstrapCI, BootstrapConfig, ConfusionCounts, DatasetItem, McNemarResult, Metrics,
    PredictionSet,
};
use crate::error::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub model: String,
    pub method: String,
    pub n: usize,
    pub confusion: ConfusionCounts,
    pub metrics: Metrics,
    pub intervals: Vec<BootstrapCI>,
    pub invalid_rate: f64,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairComparison {
    /// `model/method` of the first run.
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub result: McNemarResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub resamples: usize,
    pub level: f64,
    pub runs: Vec<RunSummary>,
    pub comparisons: Vec<PairComparison>,
}

fn run_key(set: &PredictionSet) -> String {
    format!("{}/{}", set.model, set.method)
}

/// Metrics, intervals and invalid rates per run plus McNemar tests for every
/// pair of runs, ordered by (model, method).
pub fn build_report(
    runs: &[PredictionSet],
    gold: &[DatasetItem],
    config: BootstrapConfig,
) -> Result<MetricsReport, StatsError> {
    if gold.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut order: Vec<&PredictionSet> = runs.iter().collect();
    order.sort_by(|a, b| (&a.model, &a.method).cmp(&(&b.model, &b.method)));
    for w in order.windows(2) {
        if (&w[0].model, &w[0].method) == (&w[1].model, &w[1].method) {
            return Err(StatsError::InvalidArgument(format!(
                "run {} appears twice",
                run_key(w[0])
            )));
        }
    }

    let mut summaries = Vec::new();
    let mut correctness = Vec::new();
    for set in &order {
        let (g, p) = align(gold, set)?;
        let confusion = confusion_counts(&g, &p)?;
        summaries.push(RunSummary {
            model: set.model.clone(),
            method: set.method.clone(),
            n: g.len(),
            confusion,
            metrics: metrics(&confusion)?,
            intervals: bootstrap_all(&g, &p, config)?,
            invalid_rate: set.invalid_rate(),
            errors: set.error_count(),
        });
        correctness.push(g.iter().zip(&p).map(|(x, y)| x == y).collect::<Vec<bool>>());
    }

    let mut comparisons = Vec::new();
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            comparisons.push(PairComparison {
                a: run_key(order[i]),
                b: run_key(order[j]),
                result: mcnemar_from_correctness(&correctness[i], &correctness[j])?,
            });
        }
    }
    Ok(MetricsReport {
        seed: config.seed,
        resamples: config.resamples,
        level: config.level,
        runs: summaries,
        comparisons,
    })
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Fixed-width text rendering with four decimals.
    pub fn to_table(&self) -> String {
        let header = [
            "model",
            "method",
            "n",
            "accuracy",
            "precision",
            "recall",
            "f1",
            "invalid",
        ];
        let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.runs {
            let mut row = vec![r.model.clone(), r.method.clone(), r.n.to_string()];
            for ci in &r.intervals {
                row.push(format!(
                    "{:.4} [{:.4}, {:.4}]",
                    ci.point, ci.lower, ci.upper
                ));
            }
            row.push(format!("{:.4}", r.invalid_rate));
            rows.push(row);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| {
                    if c < 2 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            writeln!(out, "{}", cells.join("  ").trim_end()).expect("string write");
        }
        if !self.comparisons.is_empty() {
            writeln!(out).expect("string write");
            for c in &self.comparisons {
                writeln!(out, "{} vs {}: {}", c.a, c.b, format_mcnemar(&c.result))
                    .expect("string write");
            }
        }
        writeln!(
            out,
            "\n{}% percentile bootstrap, {} resamples, seed {}",
            self.level * 100.0,
            self.resamples,
            self.seed
        )
        .expect("string write");
        out
    }
}

/// `n01=.. n10=.. chi2=.. p=..`
pub fn format_mcnemar(r: &McNemarResult) -> String {
    format!(
        "n01={} n10={} chi2={:.4} p={:.4}",
        r.n01, r.n10, r.chi2, r.p_value
    )
}
