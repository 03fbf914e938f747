//! Train/test splitting, classification metrics, repeated-run sweeps, and
//! significance tests.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::features::{percentile, winsorize_row, FeatureFamily, FeatureMatrix};
use crate::models::{predict_score, train, ModelKind, ModelSpec};
use crate::{Error, Result};

/// Split unit: individual code groups, or whole files (all groups of a file
/// stay on one side, controlling near-duplicate leakage).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitGranularity {
    Group,
    File,
}

/// Stratified seeded shuffle-then-prefix split into (train, test) row
/// indices.
pub fn split(
    matrix: &FeatureMatrix,
    test_fraction: f64,
    seed: u64,
    granularity: SplitGranularity,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    match granularity {
        SplitGranularity::Group => {
            for class in [0u8, 1u8] {
                let mut indices: Vec<usize> = (0..matrix.rows.len())
                    .filter(|&i| matrix.rows[i].label == class)
                    .collect();
                indices.shuffle(&mut rng);
                let test_count = (indices.len() as f64 * test_fraction).floor() as usize;
                test_rows.extend_from_slice(&indices[..test_count]);
                train_rows.extend_from_slice(&indices[test_count..]);
            }
        }
        SplitGranularity::File => {
            // Map each file to its rows; a file's class is its majority
            // label (ties count as positive).
            let mut files: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, row) in matrix.rows.iter().enumerate() {
                files.entry(&row.meta.path).or_default().push(i);
            }
            let files: Vec<(Vec<usize>, u8)> = files
                .into_values()
                .map(|rows| {
                    let positive = rows.iter().filter(|&&i| matrix.rows[i].label == 1).count();
                    let class = u8::from(2 * positive >= rows.len());
                    (rows, class)
                })
                .collect();
            for class in [0u8, 1u8] {
                let mut class_files: Vec<&(Vec<usize>, u8)> =
                    files.iter().filter(|(_, c)| *c == class).collect();
                class_files.shuffle(&mut rng);
                let class_total: usize = class_files.iter().map(|(rows, _)| rows.len()).sum();
                let target = (class_total as f64 * test_fraction).floor() as usize;
                let mut taken = 0;
                for (rows, _) in class_files {
                    if taken < target {
                        taken += rows.len();
                        test_rows.extend_from_slice(rows);
                    } else {
                        train_rows.extend_from_slice(rows);
                    }
                }
            }
        }
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    for (side, rows) in [("train", &train_rows), ("test", &test_rows)] {
        let has = |class: u8| rows.iter().any(|&i| matrix.rows[i].label == class);
        if !has(0) || !has(1) {
            return Err(Error::ClassAbsentFromSplit { side });
        }
    }
    Ok((train_rows, test_rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub f1: f64,
    /// Absent when the labels contain a single class.
    pub auc: Option<f64>,
    pub precision: f64,
}

/// Thresholded confusion-matrix metrics plus rank AUC. Precision and F1 are
/// defined as 0 when their denominator is 0. AUC is the fraction of
/// (positive, negative) pairs ordered correctly, ties counting one half;
/// computed exactly over tied score groups.
pub fn metrics(scores: &[f64], labels: &[u8], threshold: f64) -> Result<MetricSet> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::InvalidConfig(
            "metrics need equal-length, non-empty scores and labels".into(),
        ));
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut tn = 0u64;
    let mut fn_ = 0u64;
    for (&score, &label) in scores.iter().zip(labels) {
        match (score > threshold, label == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let total = (tp + fp + tn + fn_) as f64;
    let accuracy = (tp + tn) as f64 / total;
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(MetricSet {
        accuracy,
        f1,
        auc: rank_auc(scores, labels),
        precision,
    })
}

/// Rank AUC in O(n log n): twice-wins-plus-ties accumulated as an integer, so
/// the result is exact. None when only one class is present.
pub fn rank_auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let positives = labels.iter().filter(|&&l| l == 1).count() as u128;
    let negatives = labels.len() as u128 - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut doubled_wins = 0u128; // 2*wins + ties
    let mut negatives_below = 0u128;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let group = &order[i..j];
        let group_pos = group.iter().filter(|&&k| labels[k] == 1).count() as u128;
        let group_neg = group.len() as u128 - group_pos;
        doubled_wins += 2 * group_pos * negatives_below + group_pos * group_neg;
        negatives_below += group_neg;
        i = j;
    }
    Some(doubled_wins as f64 / (2 * positives * negatives) as f64)
}

/// Two-sided Welch t-test p-value with Welch-Satterthwaite degrees of
/// freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidConfig(
            "welch_t_test needs at least 2 observations per sample".into(),
        ));
    }
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let var = |x: &[f64], m: f64| {
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
    };
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (var(a, ma), var(b, mb));
    if va == 0.0 && vb == 0.0 {
        return Ok(if ma == mb { 1.0 } else { 0.0 });
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let se2 = va / na + vb / nb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidConfig(format!("t-distribution: {e}")))?;
    Ok(2.0 * (1.0 - dist.cdf(t.abs())))
}

/// Fisher's combination of p-values: -2 sum(ln p) against chi-squared with 2k
/// degrees of freedom.
pub fn fisher_combined(p_values: &[f64]) -> Result<f64> {
    if p_values.is_empty() {
        return Err(Error::InvalidConfig("no p-values to combine".into()));
    }
    let statistic: f64 = p_values
        .iter()
        .map(|&p| -2.0 * p.max(f64::MIN_POSITIVE).ln())
        .sum();
    let dist = ChiSquared::new(2.0 * p_values.len() as f64)
        .map_err(|e| Error::InvalidConfig(format!("chi-squared: {e}")))?;
    Ok(1.0 - dist.cdf(statistic))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SweepCell {
    pub family: FeatureFamily,
    pub group_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub family: FeatureFamily,
    pub group_size: usize,
    pub model: ModelKind,
    pub seed: u64,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    pub p10: f64,
    pub p90: f64,
}

pub fn aggregate(values: &[f64]) -> AggregateStats {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    let std_dev = if sorted.len() < 2 {
        0.0
    } else {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (sorted.len() - 1) as f64).sqrt()
    };
    AggregateStats {
        mean,
        median: percentile(&sorted, 50.0),
        std_dev,
        p10: percentile(&sorted, 10.0),
        p90: percentile(&sorted, 90.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub family: FeatureFamily,
    pub group_size: usize,
    pub model: ModelKind,
    /// Accuracy statistics over the repeated seeds.
    pub accuracy: AggregateStats,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<CellAggregate>,
    pub skipped: Vec<String>,
    /// Caveat surfaced when group-level splitting is used: groups of one file
    /// may straddle the split.
    pub split_granularity: SplitGranularity,
}

impl Default for SplitGranularity {
    fn default() -> Self {
        SplitGranularity::Group
    }
}

impl EvalReport {
    /// Recompute the per-cell aggregates from the persisted per-run rows.
    pub fn recompute_aggregates(&self) -> Vec<CellAggregate> {
        let mut cells: BTreeMap<(SweepCell, ModelKind), Vec<f64>> = BTreeMap::new();
        for run in &self.runs {
            cells
                .entry((
                    SweepCell {
                        family: run.family,
                        group_size: run.group_size,
                    },
                    run.model,
                ))
                .or_default()
                .push(run.metrics.accuracy);
        }
        cells
            .into_iter()
            .map(|((cell, model), accuracies)| CellAggregate {
                family: cell.family,
                group_size: cell.group_size,
                model,
                accuracy: aggregate(&accuracies),
            })
            .collect()
    }
}

impl PartialOrd for ModelKind {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ModelKind {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.name().cmp(other.name())
    }
}

impl PartialOrd for FeatureFamily {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FeatureFamily {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.name().cmp(other.name())
    }
}

/// Evaluate one model on one pre-built (unnormalized) matrix for one seed:
/// split, fit winsorization on the training rows, train, score the test rows.
pub fn evaluate_once(
    matrix: &FeatureMatrix,
    kind: ModelKind,
    seed: u64,
    test_fraction: f64,
    granularity: SplitGranularity,
) -> Result<MetricSet> {
    let (train_rows, test_rows) = split(matrix, test_fraction, seed, granularity)?;
    let stats = crate::features::fit_winsorize_stats(matrix, &train_rows)?;
    let mut normalized = matrix.clone();
    for row in &mut normalized.rows {
        winsorize_row(&mut row.values, &stats);
    }
    let model = train(&ModelSpec::with_defaults(kind, seed), &normalized, &train_rows)?;
    let scores: Vec<f64> = test_rows
        .iter()
        .map(|&i| predict_score(&model, &normalized.rows[i].values))
        .collect::<Result<_>>()?;
    let labels: Vec<u8> = test_rows.iter().map(|&i| matrix.rows[i].label).collect();
    metrics(&scores, &labels, 0.5)
}

/// Run the grid of (cell matrix) x model kind x seed. Cells whose matrix is
/// missing are reported as skipped, not fatal.
pub fn run_sweep(
    cells: &[(SweepCell, Option<&FeatureMatrix>)],
    kinds: &[ModelKind],
    seeds: &[u64],
    test_fraction: f64,
    granularity: SplitGranularity,
) -> Result<EvalReport> {
    let mut report = EvalReport {
        split_granularity: granularity,
        ..EvalReport::default()
    };
    for (cell, matrix) in cells {
        let Some(matrix) = matrix else {
            report.skipped.push(format!(
                "{} group_size={} (matrix unavailable)",
                cell.family.name(),
                cell.group_size
            ));
            continue;
        };
        for &kind in kinds {
            for &seed in seeds {
                let metrics = evaluate_once(matrix, kind, seed, test_fraction, granularity)?;
                report.runs.push(RunRecord {
                    family: cell.family,
                    group_size: cell.group_size,
                    model: kind,
                    seed,
                    metrics,
                });
            }
        }
    }
    report.aggregates = report.recompute_aggregates();
    Ok(report)
}
