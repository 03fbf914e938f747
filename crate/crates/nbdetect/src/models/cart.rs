//! Binary decision trees shared by the forest and boosting ensembles.
//!
//! Split search is exact greedy over sorted feature values, with a fixed
//! tie-break (lowest feature index, then lowest threshold) so training is
//! deterministic. Trees serialize as nested JSON arrays: a leaf is
//! `[value]`, a split is `[feature, threshold, left, right]`.

use serde_json::{json, Value};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    /// Rows go left when `x[feature] <= threshold`.
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            TreeNode::Leaf { value } => *value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if row[*feature] <= *threshold {
                    left.predict(row)
                } else {
                    right.predict(row)
                }
            }
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            TreeNode::Leaf { value } => json!([value]),
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => json!([feature, threshold, left.to_value(), right.to_value()]),
        }
    }

    pub fn from_value(value: &Value) -> Result<Self> {
        let arr = value
            .as_array()
            .ok_or_else(|| Error::InvalidConfig("tree node is not an array".into()))?;
        match arr.len() {
            1 => Ok(TreeNode::Leaf {
                value: arr[0]
                    .as_f64()
                    .ok_or_else(|| Error::InvalidConfig("leaf value is not a number".into()))?,
            }),
            4 => Ok(TreeNode::Split {
                feature: arr[0]
                    .as_u64()
                    .ok_or_else(|| Error::InvalidConfig("split feature is not an integer".into()))?
                    as usize,
                threshold: arr[1]
                    .as_f64()
                    .ok_or_else(|| Error::InvalidConfig("split threshold is not a number".into()))?,
                left: Box::new(TreeNode::from_value(&arr[2])?),
                right: Box::new(TreeNode::from_value(&arr[3])?),
            }),
            n => Err(Error::InvalidConfig(format!(
                "tree node array has {n} elements (expected 1 or 4)"
            ))),
        }
    }
}

/// Candidate split with its gain; `better_than` encodes the tie-break.
#[derive(Debug, Clone, Copy)]
pub struct Candidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

impl Candidate {
    pub fn better_than(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => {
                self.gain > o.gain
                    || (self.gain == o.gain
                        && (self.feature < o.feature
                            || (self.feature == o.feature && self.threshold < o.threshold)))
            }
        }
    }
}

fn gini(positive: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = positive / total;
    2.0 * p * (1.0 - p)
}

/// Grow a classification tree on `sample` (indices into `rows`) with Gini
/// impurity. `feature_pool` is the per-split candidate feature set provider
/// (the forest passes a seeded sampler, a single tree passes all features).
/// Leaf values are positive-class fractions.
pub struct ClassificationTreeBuilder<'a> {
    pub rows: &'a [Vec<f64>],
    pub labels: &'a [u8],
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl ClassificationTreeBuilder<'_> {
    pub fn grow(&self, sample: &[usize], feature_pool: &mut dyn FnMut() -> Vec<usize>) -> TreeNode {
        let total = sample.len() as f64;
        let positive = sample.iter().filter(|&&i| self.labels[i] == 1).count() as f64;
        let leaf = TreeNode::Leaf {
            value: positive / total,
        };
        if sample.len() < self.min_samples_split || positive == 0.0 || positive == total {
            return leaf;
        }
        let parent_impurity = gini(positive, total);
        let mut best: Option<Candidate> = None;
        let mut features = feature_pool();
        features.sort_unstable();
        let mut sorted: Vec<(f64, u8)> = Vec::with_capacity(sample.len());
        for feature in features {
            sorted.clear();
            sorted.extend(
                sample
                    .iter()
                    .map(|&i| (self.rows[i][feature], self.labels[i])),
            );
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_n = 0.0;
            let mut left_pos = 0.0;
            for i in 0..sorted.len() - 1 {
                left_n += 1.0;
                if sorted[i].1 == 1 {
                    left_pos += 1.0;
                }
                if sorted[i].0 == sorted[i + 1].0 {
                    continue;
                }
                let left_count = i + 1;
                let right_count = sorted.len() - left_count;
                if left_count < self.min_samples_leaf || right_count < self.min_samples_leaf {
                    continue;
                }
                let right_n = total - left_n;
                let right_pos = positive - left_pos;
                let weighted = (left_n * gini(left_pos, left_n)
                    + right_n * gini(right_pos, right_n))
                    / total;
                let gain = parent_impurity - weighted;
                let candidate = Candidate {
                    feature,
                    threshold: midpoint(sorted[i].0, sorted[i + 1].0),
                    gain,
                };
                if gain > 0.0 && candidate.better_than(&best) {
                    best = Some(candidate);
                }
            }
        }
        let Some(split) = best else {
            return leaf;
        };
        let (left_sample, right_sample): (Vec<usize>, Vec<usize>) = sample
            .iter()
            .partition(|&&i| self.rows[i][split.feature] <= split.threshold);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(&left_sample, feature_pool)),
            right: Box::new(self.grow(&right_sample, feature_pool)),
        }
    }
}

/// Grow a regression tree on gradient/hessian pairs, XGBoost-style depthwise:
/// gain = GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l), leaf weight = -G/(H+l).
pub struct GradientTreeBuilder<'a> {
    pub rows: &'a [Vec<f64>],
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    pub max_depth: usize,
    pub lambda: f64,
    pub feature_count: usize,
}

impl GradientTreeBuilder<'_> {
    pub fn grow(&self, sample: &[usize], depth: usize) -> TreeNode {
        let g: f64 = sample.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = sample.iter().map(|&i| self.hess[i]).sum();
        let leaf = TreeNode::Leaf {
            value: -g / (h + self.lambda),
        };
        if depth >= self.max_depth || sample.len() < 2 {
            return leaf;
        }
        let parent_score = g * g / (h + self.lambda);
        let mut best: Option<Candidate> = None;
        let mut sorted: Vec<(f64, f64, f64)> = Vec::with_capacity(sample.len());
        for feature in 0..self.feature_count {
            sorted.clear();
            sorted.extend(
                sample
                    .iter()
                    .map(|&i| (self.rows[i][feature], self.grad[i], self.hess[i])),
            );
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut gl = 0.0;
            let mut hl = 0.0;
            for i in 0..sorted.len() - 1 {
                gl += sorted[i].1;
                hl += sorted[i].2;
                if sorted[i].0 == sorted[i + 1].0 {
                    continue;
                }
                let gr = g - gl;
                let hr = h - hl;
                let gain = gl * gl / (hl + self.lambda) + gr * gr / (hr + self.lambda)
                    - parent_score;
                let candidate = Candidate {
                    feature,
                    threshold: midpoint(sorted[i].0, sorted[i + 1].0),
                    gain,
                };
                if gain > 1e-12 && candidate.better_than(&best) {
                    best = Some(candidate);
                }
            }
        }
        let Some(split) = best else {
            return leaf;
        };
        let (left_sample, right_sample): (Vec<usize>, Vec<usize>) = sample
            .iter()
            .partition(|&&i| self.rows[i][split.feature] <= split.threshold);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(&left_sample, depth + 1)),
            right: Box::new(self.grow(&right_sample, depth + 1)),
        }
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    // Guard against midpoints rounding onto b, which would send equal values
    // both ways.
    if mid >= b {
        a
    } else {
        mid
    }
}
