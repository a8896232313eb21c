// SPDX-License-Identifier: Apache-2.0

//! Leaf quantization: shift each tree so its smallest leaf is 0, scale all
//! trees by one global factor so the largest shifted leaf lands on
//! 2^w_tree - 1, then round leaves and the accumulated bias to integers.
//!
//! Shifting is per tree and scaling is global, so most trees end up using
//! fewer than `w_tree` bits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits_for;
use crate::ensemble::{GbdtEnsemble, TaskKind, TreeNode};
use crate::quantizer::MAX_FEATURE_BITS;

pub const MAX_TREE_BITS: u32 = 32;

#[derive(Debug, Error)]
pub enum QuantizeError {
    #[error("w_tree must be in 1..={MAX_TREE_BITS}, got {0}")]
    BadTreeWidth(u32),
    #[error("w_feature must be in 1..={MAX_FEATURE_BITS}, got {0}")]
    BadFeatureWidth(u32),
    #[error("expected a {expected} model")]
    WrongTask { expected: &'static str },
    #[error("quantized bias {0} is out of range")]
    BiasOverflow(f64),
    #[error("invalid quantized model: {0}")]
    Invalid(String),
}

/// Nearest integer, ties away from zero.
pub fn round_half_away(z: f64) -> i64 {
    z.round() as i64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuantizedNode {
    /// Left iff `qx[feature] < threshold`.
    Split {
        feature: usize,
        threshold: i64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedTree {
    pub nodes: Vec<QuantizedNode>,
}

impl QuantizedTree {
    pub fn evaluate(&self, qx: &[u32]) -> u32 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                QuantizedNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if i64::from(qx[feature]) < threshold {
                        left
                    } else {
                        right
                    }
                }
                QuantizedNode::Leaf { value } => return value,
            }
        }
    }

    pub fn max_leaf(&self) -> u32 {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                QuantizedNode::Leaf { value } => Some(*value),
                QuantizedNode::Split { .. } => None,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Integer-threshold, integer-leaf ensemble.
///
/// Trees keep the float model's flat order (class `i % N` for multiclass).
/// `QF_n(qx) = biases[n] + sum of class-n tree outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedEnsemble {
    pub task: TaskKind,
    pub num_features: usize,
    pub w_feature: u32,
    pub w_tree: u32,
    pub trees: Vec<QuantizedTree>,
    /// `[qb]` for binary, `[qb_0 .. qb_N-1]` (all >= 0) for multiclass.
    pub biases: Vec<i64>,
    /// Constant added to every multiclass bias after rounding (0 for binary).
    pub bias_shift: i64,
    pub scale: f64,
    /// Bits needed for each tree's largest leaf.
    pub tree_widths: Vec<u32>,
    /// Unscaled per-class biases `f0 + sum of per-tree minimum leaves`.
    pub float_biases: Vec<f64>,
}

impl QuantizedEnsemble {
    pub fn num_outputs(&self) -> usize {
        self.task.num_outputs()
    }

    pub fn trees_per_class(&self) -> usize {
        self.trees.len() / self.num_outputs()
    }

    pub fn class_of_tree(&self, flat_index: usize) -> usize {
        flat_index % self.num_outputs()
    }

    /// Flat indices of class `class`'s trees in boosting order.
    pub fn class_tree_indices(&self, class: usize) -> impl Iterator<Item = usize> {
        (class..self.trees.len()).step_by(self.num_outputs())
    }

    /// Largest legal quantized feature value.
    pub fn max_feature_value(&self) -> u32 {
        (1u32 << self.w_feature) - 1
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RawQuantized::from(self)).expect("quantized model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, QuantizeError> {
        let raw: RawQuantized = serde_json::from_str(text).map_err(|e| QuantizeError::Invalid(e.to_string()))?;
        raw.try_into()
    }
}

fn check_widths(w_feature: u32, w_tree: u32) -> Result<(), QuantizeError> {
    if !(1..=MAX_TREE_BITS).contains(&w_tree) {
        return Err(QuantizeError::BadTreeWidth(w_tree));
    }
    if !(1..=MAX_FEATURE_BITS).contains(&w_feature) {
        return Err(QuantizeError::BadFeatureWidth(w_feature));
    }
    Ok(())
}

fn to_bias(z: f64) -> Result<i64, QuantizeError> {
    // Keeps every later sum comfortably inside i64.
    if !z.is_finite() || z.abs() > (1u64 << 52) as f64 {
        return Err(QuantizeError::BiasOverflow(z));
    }
    Ok(round_half_away(z))
}

/// Dispatches on the model's task.
pub fn quantize(ensemble: &GbdtEnsemble, w_feature: u32, w_tree: u32) -> Result<QuantizedEnsemble, QuantizeError> {
    match ensemble.task {
        TaskKind::BinaryLogistic => quantize_binary(ensemble, w_feature, w_tree),
        TaskKind::MulticlassSoftmax { .. } => quantize_multiclass(ensemble, w_feature, w_tree),
    }
}

pub fn quantize_binary(
    ensemble: &GbdtEnsemble,
    w_feature: u32,
    w_tree: u32,
) -> Result<QuantizedEnsemble, QuantizeError> {
    if ensemble.task != TaskKind::BinaryLogistic {
        return Err(QuantizeError::WrongTask { expected: "binary" });
    }
    quantize_shared(ensemble, w_feature, w_tree)
}

pub fn quantize_multiclass(
    ensemble: &GbdtEnsemble,
    w_feature: u32,
    w_tree: u32,
) -> Result<QuantizedEnsemble, QuantizeError> {
    if !matches!(ensemble.task, TaskKind::MulticlassSoftmax { .. }) {
        return Err(QuantizeError::WrongTask { expected: "multiclass" });
    }
    quantize_shared(ensemble, w_feature, w_tree)
}

/// Binary is the one-class case of the multiclass procedure, minus the
/// final positivization of the biases.
fn quantize_shared(ensemble: &GbdtEnsemble, w_feature: u32, w_tree: u32) -> Result<QuantizedEnsemble, QuantizeError> {
    check_widths(w_feature, w_tree)?;
    let groups = ensemble.num_outputs();

    let min_leaves: Vec<f64> = ensemble
        .trees
        .iter()
        .map(|t| t.leaf_values().fold(f64::INFINITY, f64::min))
        .collect();
    let mut float_biases = vec![ensemble.f0; groups];
    for (i, m) in min_leaves.iter().enumerate() {
        float_biases[ensemble.class_of_tree(i)] += m;
    }
    let max_shifted = ensemble
        .trees
        .iter()
        .zip(&min_leaves)
        .flat_map(|(t, m)| t.leaf_values().map(move |v| v - m))
        .fold(0.0, f64::max);
    let top = ((1u64 << w_tree) - 1) as f64;
    let scale = if max_shifted > 0.0 { top / max_shifted } else { 1.0 };

    let trees: Vec<QuantizedTree> = ensemble
        .trees
        .iter()
        .zip(&min_leaves)
        .map(|(t, &m)| QuantizedTree {
            nodes: t
                .nodes
                .iter()
                .map(|n| match *n {
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => QuantizedNode::Split {
                        feature,
                        // Saturating cast; out-of-range thresholds fold to constants later.
                        threshold: threshold.ceil() as i64,
                        left,
                        right,
                    },
                    TreeNode::Leaf { value } => QuantizedNode::Leaf {
                        value: round_half_away((value - m) * scale).clamp(0, top as i64) as u32,
                    },
                })
                .collect(),
        })
        .collect();

    let mut biases = float_biases
        .iter()
        .map(|b| to_bias(b * scale))
        .collect::<Result<Vec<_>, _>>()?;
    let bias_shift = match ensemble.task {
        TaskKind::BinaryLogistic => 0,
        TaskKind::MulticlassSoftmax { .. } => {
            let shift = (-biases.iter().copied().min().unwrap_or(0)).max(0);
            biases.iter_mut().for_each(|b| *b += shift);
            shift
        }
    };

    let tree_widths = trees.iter().map(|t| bits_for(u64::from(t.max_leaf()))).collect();
    Ok(QuantizedEnsemble {
        task: ensemble.task,
        num_features: ensemble.num_features,
        w_feature,
        w_tree,
        trees,
        biases,
        bias_shift,
        scale,
        tree_widths,
        float_biases,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuantized {
    task: String,
    num_classes: usize,
    num_features: usize,
    w_feature: u32,
    w_tree: u32,
    scale: f64,
    biases: Vec<i64>,
    bias_shift: i64,
    tree_widths: Vec<u32>,
    float_biases: Vec<f64>,
    trees: Vec<RawQTree>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQTree {
    nodes: Vec<RawQNode>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawQNode {
    Split { f: usize, t: i64, l: usize, r: usize },
    Leaf { v: u32 },
}

impl From<&QuantizedEnsemble> for RawQuantized {
    fn from(q: &QuantizedEnsemble) -> Self {
        let (task, num_classes) = match q.task {
            TaskKind::BinaryLogistic => ("binary", 2),
            TaskKind::MulticlassSoftmax { num_classes } => ("multiclass", num_classes),
        };
        RawQuantized {
            task: task.into(),
            num_classes,
            num_features: q.num_features,
            w_feature: q.w_feature,
            w_tree: q.w_tree,
            scale: q.scale,
            biases: q.biases.clone(),
            bias_shift: q.bias_shift,
            tree_widths: q.tree_widths.clone(),
            float_biases: q.float_biases.clone(),
            trees: q
                .trees
                .iter()
                .map(|t| RawQTree {
                    nodes: t
                        .nodes
                        .iter()
                        .map(|n| match *n {
                            QuantizedNode::Split {
                                feature,
                                threshold,
                                left,
                                right,
                            } => RawQNode::Split {
                                f: feature,
                                t: threshold,
                                l: left,
                                r: right,
                            },
                            QuantizedNode::Leaf { value } => RawQNode::Leaf { v: value },
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<RawQuantized> for QuantizedEnsemble {
    type Error = QuantizeError;

    fn try_from(raw: RawQuantized) -> Result<Self, QuantizeError> {
        check_widths(raw.w_feature, raw.w_tree)?;
        let task = match raw.task.as_str() {
            "binary" => TaskKind::BinaryLogistic,
            "multiclass" => TaskKind::MulticlassSoftmax {
                num_classes: raw.num_classes,
            },
            other => return Err(QuantizeError::Invalid(format!("unknown task {other}"))),
        };
        let trees: Vec<QuantizedTree> = raw
            .trees
            .into_iter()
            .map(|t| QuantizedTree {
                nodes: t
                    .nodes
                    .into_iter()
                    .map(|n| match n {
                        RawQNode::Split { f, t, l, r } => QuantizedNode::Split {
                            feature: f,
                            threshold: t,
                            left: l,
                            right: r,
                        },
                        RawQNode::Leaf { v } => QuantizedNode::Leaf { value: v },
                    })
                    .collect(),
            })
            .collect();
        let q = QuantizedEnsemble {
            task,
            num_features: raw.num_features,
            w_feature: raw.w_feature,
            w_tree: raw.w_tree,
            trees,
            biases: raw.biases,
            bias_shift: raw.bias_shift,
            scale: raw.scale,
            tree_widths: raw.tree_widths,
            float_biases: raw.float_biases,
        };
        validate(&q)?;
        Ok(q)
    }
}

/// Structural checks on a quantized model read from disk.
pub fn validate(q: &QuantizedEnsemble) -> Result<(), QuantizeError> {
    let bad = |m: String| Err(QuantizeError::Invalid(m));
    let groups = q.num_outputs();
    if groups == 0 || !q.trees.len().is_multiple_of(groups) {
        return bad("tree count does not divide evenly over the classes".into());
    }
    if q.biases.len() != groups || q.float_biases.len() != groups {
        return bad(format!("expected {groups} biases"));
    }
    if q.tree_widths.len() != q.trees.len() {
        return bad("tree_widths length differs from tree count".into());
    }
    let top = (1u64 << q.w_tree) - 1;
    for (i, t) in q.trees.iter().enumerate() {
        let as_float = crate::ensemble::DecisionTree {
            nodes: t
                .nodes
                .iter()
                .map(|n| match *n {
                    QuantizedNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => TreeNode::Split {
                        feature,
                        threshold: threshold as f64,
                        left,
                        right,
                    },
                    QuantizedNode::Leaf { value } => TreeNode::Leaf {
                        value: f64::from(value),
                    },
                })
                .collect(),
        };
        as_float
            .validate(q.num_features)
            .map_err(|e| QuantizeError::Invalid(format!("tree {i}: {e}")))?;
        if u64::from(t.max_leaf()) > top {
            return bad(format!("tree {i} has a leaf wider than w_tree"));
        }
    }
    Ok(())
}
