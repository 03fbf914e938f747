//! Report rendering for sweep results: a per-configuration metrics table, a
//! run-stability table over repeated seeds, and pairwise significance tests.
//! Each table is available as CSV, as an aligned text table, and (via the
//! combined JSON document) for tooling.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::eval::{fisher_combined, welch_t_test, EvalReport, SplitGranularity};
use crate::features::FeatureFamily;
use crate::models::ModelKind;
use crate::Result;

/// One row of the metrics table: per (family, group size, model), metric
/// means over the repeated seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub family: FeatureFamily,
    pub group_size: usize,
    pub model: ModelKind,
    pub runs: usize,
    pub accuracy: f64,
    pub f1: f64,
    /// Mean over the runs where AUC was defined; absent if it never was.
    pub auc: Option<f64>,
    pub precision: f64,
}

/// Collapse per-run records into per-configuration metric means, ordered by
/// (family, group size, model).
pub fn metrics_table(report: &EvalReport) -> Vec<MetricsRow> {
    let mut cells: std::collections::BTreeMap<(FeatureFamily, usize, ModelKind), Vec<usize>> =
        std::collections::BTreeMap::new();
    for (i, run) in report.runs.iter().enumerate() {
        cells
            .entry((run.family, run.group_size, run.model))
            .or_default()
            .push(i);
    }
    cells
        .into_iter()
        .map(|((family, group_size, model), indices)| {
            let mean = |get: &dyn Fn(usize) -> f64| {
                indices.iter().map(|&i| get(i)).sum::<f64>() / indices.len() as f64
            };
            let aucs: Vec<f64> = indices
                .iter()
                .filter_map(|&i| report.runs[i].metrics.auc)
                .collect();
            MetricsRow {
                family,
                group_size,
                model,
                runs: indices.len(),
                accuracy: mean(&|i| report.runs[i].metrics.accuracy),
                f1: mean(&|i| report.runs[i].metrics.f1),
                auc: (!aucs.is_empty())
                    .then(|| aucs.iter().sum::<f64>() / aucs.len() as f64),
                precision: mean(&|i| report.runs[i].metrics.precision),
            }
        })
        .collect()
}

fn fmt_auc(auc: Option<f64>) -> String {
    match auc {
        Some(v) => format!("{v:.4}"),
        None => "-".to_string(),
    }
}

/// Metrics table as CSV.
pub fn metrics_csv(report: &EvalReport) -> String {
    let mut out = String::from("family,group_size,model,runs,accuracy,f1,auc,precision\n");
    for row in metrics_table(report) {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{},{:.6}",
            row.family.name(),
            row.group_size,
            row.model.name(),
            row.runs,
            row.accuracy,
            row.f1,
            match row.auc {
                Some(v) => format!("{v:.6}"),
                None => String::new(),
            },
            row.precision,
        );
    }
    out
}

/// Metrics table as an aligned text table.
pub fn metrics_text(report: &EvalReport) -> String {
    let rows = metrics_table(report);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>10} {:<24} {:>5} {:>9} {:>9} {:>9} {:>9}",
        "family", "group_size", "model", "runs", "accuracy", "f1", "auc", "precision"
    );
    for row in &rows {
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:<24} {:>5} {:>9.4} {:>9.4} {:>9} {:>9.4}",
            row.family.name(),
            row.group_size,
            row.model.name(),
            row.runs,
            row.accuracy,
            row.f1,
            fmt_auc(row.auc),
            row.precision,
        );
    }
    for skipped in &report.skipped {
        let _ = writeln!(out, "skipped: {skipped}");
    }
    if report.split_granularity == SplitGranularity::Group {
        let _ = writeln!(
            out,
            "note: group-level split; groups of one file may straddle train/test \
             (use file-level splitting to rule out leakage)"
        );
    }
    out
}

/// Run-stability (accuracy over repeated seeds) as CSV.
pub fn stability_csv(report: &EvalReport) -> String {
    let mut out =
        String::from("family,group_size,model,mean,median,std_dev,p10,p90\n");
    for agg in &report.aggregates {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            agg.family.name(),
            agg.group_size,
            agg.model.name(),
            agg.accuracy.mean,
            agg.accuracy.median,
            agg.accuracy.std_dev,
            agg.accuracy.p10,
            agg.accuracy.p90,
        );
    }
    out
}

/// Run-stability table as an aligned text table.
pub fn stability_text(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>10} {:<24} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "family", "group_size", "model", "mean", "median", "std_dev", "p10", "p90"
    );
    for agg in &report.aggregates {
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:<24} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            agg.family.name(),
            agg.group_size,
            agg.model.name(),
            agg.accuracy.mean,
            agg.accuracy.median,
            agg.accuracy.std_dev,
            agg.accuracy.p10,
            agg.accuracy.p90,
        );
    }
    out
}

/// One pairwise Welch t-test between two configurations' accuracy samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub a: String,
    pub b: String,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub pairs: Vec<PairTest>,
    /// Fisher's combination of the pairwise p-values (absent without pairs).
    pub combined_p: Option<f64>,
}

fn cell_label(family: FeatureFamily, group_size: usize, model: ModelKind) -> String {
    format!("{}/g{}/{}", family.name(), group_size, model.name())
}

/// Welch t-tests for all pairwise configuration combinations with at least
/// two seeds each, plus Fisher's combined p-value.
pub fn significance(report: &EvalReport) -> Result<SignificanceReport> {
    let mut samples: std::collections::BTreeMap<(FeatureFamily, usize, ModelKind), Vec<f64>> =
        std::collections::BTreeMap::new();
    for run in &report.runs {
        samples
            .entry((run.family, run.group_size, run.model))
            .or_default()
            .push(run.metrics.accuracy);
    }
    let cells: Vec<_> = samples
        .into_iter()
        .filter(|(_, accs)| accs.len() >= 2)
        .collect();
    let mut out = SignificanceReport::default();
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            let (ka, accs_a) = &cells[i];
            let (kb, accs_b) = &cells[j];
            out.pairs.push(PairTest {
                a: cell_label(ka.0, ka.1, ka.2),
                b: cell_label(kb.0, kb.1, kb.2),
                p_value: welch_t_test(accs_a, accs_b)?,
            });
        }
    }
    if !out.pairs.is_empty() {
        let ps: Vec<f64> = out.pairs.iter().map(|p| p.p_value).collect();
        out.combined_p = Some(fisher_combined(&ps)?);
    }
    Ok(out)
}

/// Significance results as an aligned text table.
pub fn significance_text(sig: &SignificanceReport) -> String {
    let mut out = String::new();
    let width = sig
        .pairs
        .iter()
        .flat_map(|p| [p.a.len(), p.b.len()])
        .max()
        .unwrap_or(8);
    for pair in &sig.pairs {
        let _ = writeln!(
            out,
            "{:<width$} vs {:<width$} p = {:.3e}",
            pair.a, pair.b, pair.p_value
        );
    }
    match sig.combined_p {
        Some(p) => {
            let _ = writeln!(out, "combined (Fisher) p = {p:.3e}");
        }
        None => {
            let _ = writeln!(out, "no pairwise tests (need >= 2 seeds per configuration)");
        }
    }
    out
}

/// Full report as one JSON document: the raw runs and aggregates, the derived
/// tables, and the significance tests.
pub fn report_json(report: &EvalReport) -> Result<String> {
    let value = json!({
        "schema": 1,
        "report": serde_json::to_value(report)?,
        "metrics_table": serde_json::to_value(metrics_table(report))?,
        "significance": serde_json::to_value(significance(report)?)?,
    });
    let mut out = serde_json::to_string_pretty(&value)?;
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{MetricSet, RunRecord};

    fn sample_report() -> EvalReport {
        let run = |family, group_size, model, seed, accuracy| RunRecord {
            family,
            group_size,
            model,
            seed,
            metrics: MetricSet {
                accuracy,
                f1: accuracy - 0.01,
                auc: Some(accuracy + 0.01),
                precision: accuracy,
            },
        };
        let mut report = EvalReport {
            runs: vec![
                run(FeatureFamily::NbF, 30, ModelKind::RandomForest, 1, 0.90),
                run(FeatureFamily::NbF, 30, ModelKind::RandomForest, 2, 0.92),
                run(FeatureFamily::EwdNbF, 30, ModelKind::RandomForest, 1, 0.95),
                run(FeatureFamily::EwdNbF, 30, ModelKind::RandomForest, 2, 0.97),
            ],
            skipped: vec!["cnb-f group_size=70 (matrix unavailable)".into()],
            ..EvalReport::default()
        };
        report.aggregates = report.recompute_aggregates();
        report
    }

    #[test]
    fn metrics_table_averages_over_seeds() {
        let rows = metrics_table(&sample_report());
        assert_eq!(rows.len(), 2);
        // BTreeMap order: ewd-nb-f before nb-f.
        assert_eq!(rows[0].family, FeatureFamily::EwdNbF);
        assert!((rows[0].accuracy - 0.96).abs() < 1e-12);
        assert_eq!(rows[0].runs, 2);
        assert!((rows[1].accuracy - 0.91).abs() < 1e-12);
        assert_eq!(rows[1].auc.unwrap(), 0.92);
    }

    #[test]
    fn csv_headers_and_row_counts() {
        let report = sample_report();
        let csv = metrics_csv(&report);
        assert!(csv.starts_with("family,group_size,model,runs,accuracy,f1,auc,precision\n"));
        assert_eq!(csv.lines().count(), 3);
        let stability = stability_csv(&report);
        assert!(stability.starts_with("family,group_size,model,mean,"));
        assert_eq!(stability.lines().count(), 3);
    }

    #[test]
    fn text_tables_surface_skips_and_split_caveat() {
        let text = metrics_text(&sample_report());
        assert!(text.contains("skipped: cnb-f group_size=70"));
        assert!(text.contains("group-level split"));
        let aligned_cols = text.lines().next().unwrap();
        assert!(aligned_cols.contains("accuracy"));
    }

    #[test]
    fn significance_covers_all_pairs_with_combination() {
        let sig = significance(&sample_report()).unwrap();
        assert_eq!(sig.pairs.len(), 1);
        assert!(sig.combined_p.is_some());
        let text = significance_text(&sig);
        assert!(text.contains("combined (Fisher) p ="));
    }

    #[test]
    fn significance_empty_without_repeats() {
        let mut report = sample_report();
        report.runs.truncate(1);
        let sig = significance(&report).unwrap();
        assert!(sig.pairs.is_empty());
        assert_eq!(sig.combined_p, None);
    }

    #[test]
    fn json_round_trips_the_report() {
        let report = sample_report();
        let text = report_json(&report).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let restored: EvalReport = serde_json::from_value(value["report"].clone()).unwrap();
        assert_eq!(restored, report);
    }
}
