// SPDX-License-Identifier: Apache-2.0

//! Float GBDT classifiers: the in-memory model, its reference inference and
//! the two on-disk formats it is read from (XGBoost `save_model` JSON and
//! the canonical ensemble JSON used by fixtures).

mod schema;
mod xgboost;

use std::path::Path;

use thiserror::Error;

pub use schema::{from_canonical_json, to_canonical_json};
pub use xgboost::{load_xgboost_model, BaseScoreHandling, ClassMapping, LoadReport, XgboostImport};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unsupported objective `{0}`")]
    UnsupportedObjective(String),
    #[error("unsupported booster `{0}`")]
    UnsupportedBooster(String),
    #[error("invalid model: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ModelError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ModelError::Validation(msg.into())
    }

    /// Wraps a serde_json error, translating its line/column into a byte offset.
    pub(crate) fn from_json(text: &str, err: serde_json::Error) -> Self {
        let offset = byte_offset(text, err.line(), err.column());
        ModelError::Parse {
            offset,
            message: err.to_string(),
        }
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

/// Classification task of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskKind {
    BinaryLogistic,
    /// `num_classes` groups of trees, emitted round-robin: flat tree `i`
    /// belongs to class `i % num_classes`.
    MulticlassSoftmax {
        num_classes: usize,
    },
}

impl TaskKind {
    /// Number of independent margins the model produces (1 for binary).
    pub fn num_outputs(self) -> usize {
        match self {
            TaskKind::BinaryLogistic => 1,
            TaskKind::MulticlassSoftmax { num_classes } => num_classes,
        }
    }

    /// Number of class labels (2 for binary).
    pub fn num_labels(self) -> usize {
        match self {
            TaskKind::BinaryLogistic => 2,
            TaskKind::MulticlassSoftmax { num_classes } => num_classes,
        }
    }

    /// Class decision shared by every evaluator: sign test for binary,
    /// argmax with ties going to the smallest index for multiclass.
    pub fn decide<T: PartialOrd + Default + Copy>(self, scores: &[T]) -> usize {
        match self {
            TaskKind::BinaryLogistic => usize::from(scores[0] >= T::default()),
            TaskKind::MulticlassSoftmax { .. } => argmax(scores),
        }
    }
}

pub(crate) fn argmax<T: PartialOrd + Copy>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Go to `left` iff `x[feature] < threshold`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A decision tree stored as a node array rooted at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn leaf(value: f64) -> Self {
        DecisionTree {
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if x[feature] < threshold { left } else { right },
                TreeNode::Leaf { value } => return value,
            }
        }
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Leaf { value } => Some(*value),
            TreeNode::Split { .. } => None,
        })
    }

    pub fn num_internal(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }

    /// Largest number of internal nodes on any root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((idx, d)) = stack.pop() {
            match self.nodes[idx] {
                TreeNode::Split { left, right, .. } => {
                    stack.push((left, d + 1));
                    stack.push((right, d + 1));
                }
                TreeNode::Leaf { .. } => best = best.max(d),
            }
        }
        best
    }

    /// Checks that the node array forms one proper binary tree rooted at 0.
    pub fn validate(&self, num_features: usize) -> Result<(), ModelError> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(ModelError::invalid("tree has no nodes"));
        }
        let mut parents = vec![0usize; n];
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= num_features {
                        return Err(ModelError::invalid(format!(
                            "node {i} uses feature {feature} but the model has {num_features}"
                        )));
                    }
                    if threshold.is_nan() {
                        return Err(ModelError::invalid(format!("node {i} has a NaN threshold")));
                    }
                    for child in [left, right] {
                        if child >= n || child == 0 {
                            return Err(ModelError::invalid(format!(
                                "node {i} references invalid child {child}"
                            )));
                        }
                        parents[child] += 1;
                    }
                }
                TreeNode::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(ModelError::invalid(format!("leaf {i} is not finite")));
                    }
                }
            }
        }
        if let Some(i) = parents.iter().skip(1).position(|&p| p != 1) {
            return Err(ModelError::invalid(format!(
                "node {} has {} parents",
                i + 1,
                parents[i + 1]
            )));
        }
        // One parent each still allows a detached cycle.
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        let mut reached = 0;
        while let Some(idx) = stack.pop() {
            if std::mem::replace(&mut seen[idx], true) {
                continue;
            }
            reached += 1;
            if let TreeNode::Split { left, right, .. } = self.nodes[idx] {
                stack.push(left);
                stack.push(right);
            }
        }
        if reached != n {
            return Err(ModelError::invalid("tree contains nodes unreachable from the root"));
        }
        Ok(())
    }
}

/// A float GBDT classifier. `f0` is in margin space.
#[derive(Debug, Clone, PartialEq)]
pub struct GbdtEnsemble {
    pub task: TaskKind,
    pub f0: f64,
    pub trees: Vec<DecisionTree>,
    pub num_features: usize,
}

impl GbdtEnsemble {
    pub fn new(task: TaskKind, f0: f64, trees: Vec<DecisionTree>, num_features: usize) -> Result<Self, ModelError> {
        let ens = GbdtEnsemble {
            task,
            f0,
            trees,
            num_features,
        };
        ens.validate()?;
        Ok(ens)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.f0.is_finite() {
            return Err(ModelError::invalid("initial score is not finite"));
        }
        if let TaskKind::MulticlassSoftmax { num_classes } = self.task {
            if num_classes < 2 {
                return Err(ModelError::invalid("multiclass models need at least 2 classes"));
            }
            if !self.trees.len().is_multiple_of(num_classes) {
                return Err(ModelError::invalid(format!(
                    "{} trees cannot be split evenly over {num_classes} classes",
                    self.trees.len()
                )));
            }
        }
        for (i, tree) in self.trees.iter().enumerate() {
            tree.validate(self.num_features)
                .map_err(|e| ModelError::invalid(format!("tree {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn num_outputs(&self) -> usize {
        self.task.num_outputs()
    }

    /// M: trees per class (all trees for binary).
    pub fn trees_per_class(&self) -> usize {
        self.trees.len() / self.num_outputs()
    }

    pub fn class_of_tree(&self, flat_index: usize) -> usize {
        flat_index % self.num_outputs()
    }

    /// Trees of class `class` in boosting order.
    pub fn class_trees(&self, class: usize) -> impl Iterator<Item = &DecisionTree> {
        self.trees.iter().skip(class).step_by(self.num_outputs())
    }

    pub fn predict_margin(&self, x: &[f64]) -> Vec<f64> {
        let mut margins = vec![self.f0; self.num_outputs()];
        for (i, tree) in self.trees.iter().enumerate() {
            margins[self.class_of_tree(i)] += tree.evaluate(x);
        }
        margins
    }

    pub fn predict_class(&self, x: &[f64]) -> usize {
        self.task.decide(&self.predict_margin(x))
    }

    /// Applies `f` to every internal node threshold, returning a new model.
    pub fn map_thresholds(&self, f: impl Fn(f64) -> f64) -> GbdtEnsemble {
        let trees = self
            .trees
            .iter()
            .map(|t| DecisionTree {
                nodes: t
                    .nodes
                    .iter()
                    .map(|n| match *n {
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => TreeNode::Split {
                            feature,
                            threshold: f(threshold),
                            left,
                            right,
                        },
                        ref leaf => leaf.clone(),
                    })
                    .collect(),
            })
            .collect();
        GbdtEnsemble { trees, ..self.clone() }
    }
}

/// Reads a model file, accepting either XGBoost JSON or the canonical schema.
pub fn load_model_file(path: impl AsRef<Path>) -> Result<GbdtEnsemble, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}

/// Parses model text, detecting the format from its top-level keys.
pub fn parse_model(text: &str) -> Result<GbdtEnsemble, ModelError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ModelError::from_json(text, e))?;
    if value.get("learner").is_some() {
        Ok(load_xgboost_model(text)?.ensemble)
    } else {
        from_canonical_json(text)
    }
}
