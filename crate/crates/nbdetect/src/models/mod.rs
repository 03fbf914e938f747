//! Tree-ensemble binary classifiers with deterministic seeding.
//!
//! Two kinds share one interface: a CART random forest (Gini splits,
//! bootstrap rows, sqrt-feature subsampling) and depthwise gradient-boosted
//! trees with logistic loss. Training is deterministic for a fixed seed and
//! invariant to the order of the supplied training rows: rows are sorted by
//! their stable (path, line-range) identifier before the seeded shuffle.

pub mod bundle;
pub mod cart;

pub use bundle::ModelBundle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::features::FeatureMatrix;
use crate::{Error, Result};
use cart::{ClassificationTreeBuilder, GradientTreeBuilder, TreeNode};

pub const MODEL_SCHEMA: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RandomForest,
    GradientBoostedTrees,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "random_forest",
            ModelKind::GradientBoostedTrees => "gradient_boosted_trees",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_forest" | "rf" => Ok(ModelKind::RandomForest),
            "gradient_boosted_trees" | "gbt" => Ok(ModelKind::GradientBoostedTrees),
            other => Err(Error::InvalidConfig(format!(
                "unknown model kind {other:?} (expected random_forest or gradient_boosted_trees)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    RandomForest {
        seed: u64,
        trees: usize,
        min_samples_split: usize,
        min_samples_leaf: usize,
    },
    GradientBoostedTrees {
        seed: u64,
        rounds: usize,
        learning_rate: f64,
        max_depth: usize,
        lambda: f64,
    },
}

impl ModelSpec {
    pub fn random_forest(seed: u64) -> Self {
        ModelSpec::RandomForest {
            seed,
            trees: 100,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }

    pub fn gradient_boosted_trees(seed: u64) -> Self {
        ModelSpec::GradientBoostedTrees {
            seed,
            rounds: 100,
            learning_rate: 0.3,
            max_depth: 6,
            lambda: 1.0,
        }
    }

    pub fn with_defaults(kind: ModelKind, seed: u64) -> Self {
        match kind {
            ModelKind::RandomForest => Self::random_forest(seed),
            ModelKind::GradientBoostedTrees => Self::gradient_boosted_trees(seed),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::RandomForest { .. } => ModelKind::RandomForest,
            ModelSpec::GradientBoostedTrees { .. } => ModelKind::GradientBoostedTrees,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelSpec::RandomForest { seed, .. } | ModelSpec::GradientBoostedTrees { seed, .. } => {
                *seed
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    /// Score = fraction of trees whose leaf votes positive (leaf value > 0.5).
    Forest { trees: Vec<TreeNode> },
    /// Score = logistic of base score plus summed (already eta-scaled) leaf
    /// values.
    Boosted { trees: Vec<TreeNode>, base_score: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub feature_count: usize,
    pub ensemble: Ensemble,
}

/// Train on the given rows of `matrix`. Deterministic for a fixed
/// (spec, data) pair and invariant to permutations of `train_rows`.
pub fn train(spec: &ModelSpec, matrix: &FeatureMatrix, train_rows: &[usize]) -> Result<TrainedModel> {
    let mut order: Vec<usize> = train_rows.to_vec();
    order.sort_by(|&a, &b| {
        let ra = &matrix.rows[a].meta;
        let rb = &matrix.rows[b].meta;
        (&ra.path, ra.start_line, ra.end_line).cmp(&(&rb.path, rb.start_line, rb.end_line))
    });
    let rows: Vec<Vec<f64>> = order.iter().map(|&i| matrix.rows[i].values.clone()).collect();
    let labels: Vec<u8> = order.iter().map(|&i| matrix.rows[i].label).collect();
    if rows.is_empty() || labels.iter().all(|&l| l == 1) || labels.iter().all(|&l| l == 0) {
        return Err(Error::DegenerateLabels);
    }
    let feature_count = matrix.column_count;
    let ensemble = match spec {
        ModelSpec::RandomForest {
            seed,
            trees,
            min_samples_split,
            min_samples_leaf,
        } => train_forest(
            &rows,
            &labels,
            feature_count,
            *seed,
            *trees,
            *min_samples_split,
            *min_samples_leaf,
        ),
        ModelSpec::GradientBoostedTrees {
            rounds,
            learning_rate,
            max_depth,
            lambda,
            ..
        } => train_boosted(&rows, &labels, feature_count, *rounds, *learning_rate, *max_depth, *lambda),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        feature_count,
        ensemble,
    })
}

#[allow(clippy::too_many_arguments)]
fn train_forest(
    rows: &[Vec<f64>],
    labels: &[u8],
    feature_count: usize,
    seed: u64,
    tree_count: usize,
    min_samples_split: usize,
    min_samples_leaf: usize,
) -> Ensemble {
    let n = rows.len();
    let mtry = (feature_count as f64).sqrt().ceil() as usize;
    let mtry = mtry.clamp(1, feature_count);
    // Per-tree derived seeds keep tree training independent, so rayon's
    // scheduling cannot change the result.
    let trees: Vec<TreeNode> = (0..tree_count)
        .into_par_iter()
        .map(|tree_index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(tree_index as u64 + 1));
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let builder = ClassificationTreeBuilder {
                rows,
                labels,
                min_samples_split,
                min_samples_leaf,
            };
            let mut pool_rng =
                ChaCha8Rng::seed_from_u64(seed.wrapping_add(tree_index as u64 + 1) ^ 0x9e37_79b9);
            builder.grow(&sample, &mut || {
                rand::seq::index::sample(&mut pool_rng, feature_count, mtry).into_vec()
            })
        })
        .collect();
    Ensemble::Forest { trees }
}

fn train_boosted(
    rows: &[Vec<f64>],
    labels: &[u8],
    feature_count: usize,
    rounds: usize,
    learning_rate: f64,
    max_depth: usize,
    lambda: f64,
) -> Ensemble {
    let n = rows.len();
    let base_score = 0.0;
    let mut margins = vec![base_score; n];
    let mut trees = Vec::with_capacity(rounds);
    let sample: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for _ in 0..rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            grad[i] = p - labels[i] as f64;
            hess[i] = p * (1.0 - p);
        }
        let builder = GradientTreeBuilder {
            rows,
            grad: &grad,
            hess: &hess,
            max_depth,
            lambda,
            feature_count,
        };
        let tree = scale_leaves(builder.grow(&sample, 0), learning_rate);
        for i in 0..n {
            margins[i] += tree.predict(&rows[i]);
        }
        trees.push(tree);
    }
    Ensemble::Boosted { trees, base_score }
}

fn scale_leaves(node: TreeNode, eta: f64) -> TreeNode {
    match node {
        TreeNode::Leaf { value } => TreeNode::Leaf { value: value * eta },
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => TreeNode::Split {
            feature,
            threshold,
            left: Box::new(scale_leaves(*left, eta)),
            right: Box::new(scale_leaves(*right, eta)),
        },
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Probability-like score in [0, 1]; the positive class is `score > 0.5`
/// (strict, so an evenly split forest votes negative).
pub fn predict_score(model: &TrainedModel, row: &[f64]) -> Result<f64> {
    if row.len() != model.feature_count {
        return Err(Error::FeatureShapeMismatch {
            expected: model.feature_count,
            actual: row.len(),
        });
    }
    Ok(match &model.ensemble {
        Ensemble::Forest { trees } => {
            let votes = trees.iter().filter(|t| t.predict(row) > 0.5).count();
            votes as f64 / trees.len() as f64
        }
        Ensemble::Boosted { trees, base_score } => {
            let margin: f64 = base_score + trees.iter().map(|t| t.predict(row)).sum::<f64>();
            sigmoid(margin)
        }
    })
}

pub fn predict_class(score: f64) -> bool {
    score > 0.5
}

impl TrainedModel {
    pub fn to_value(&self) -> Result<Value> {
        let (kind, trees, extra) = match &self.ensemble {
            Ensemble::Forest { trees } => ("forest", trees, json!({})),
            Ensemble::Boosted { trees, base_score } => {
                ("boosted", trees, json!({ "base_score": base_score }))
            }
        };
        let trees: Vec<Value> = trees.iter().map(TreeNode::to_value).collect();
        Ok(json!({
            "schema": MODEL_SCHEMA,
            "spec": serde_json::to_value(&self.spec)?,
            "feature_count": self.feature_count,
            "ensemble": { "type": kind, "trees": trees, "params": extra },
        }))
    }

    pub fn from_value(value: &Value) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_value(value["spec"].clone())?;
        let feature_count = value["feature_count"]
            .as_u64()
            .ok_or_else(|| Error::InvalidConfig("model missing feature_count".into()))?
            as usize;
        let ensemble_value = &value["ensemble"];
        let trees: Vec<TreeNode> = ensemble_value["trees"]
            .as_array()
            .ok_or_else(|| Error::InvalidConfig("model missing trees".into()))?
            .iter()
            .map(TreeNode::from_value)
            .collect::<Result<_>>()?;
        let ensemble = match ensemble_value["type"].as_str() {
            Some("forest") => Ensemble::Forest { trees },
            Some("boosted") => Ensemble::Boosted {
                trees,
                base_score: ensemble_value["params"]["base_score"].as_f64().unwrap_or(0.0),
            },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown ensemble type {other:?}"
                )))
            }
        };
        Ok(TrainedModel {
            spec,
            feature_count,
            ensemble,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut out = serde_json::to_string(&self.to_value()?)?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(&serde_json::from_str(text)?)
    }
}
