// SPDX-License-Identifier: Apache-2.0

//! Random ensembles for property tests and benchmarks.

use rand::Rng;

use crate::ensemble::{DecisionTree, GbdtEnsemble, TaskKind, TreeNode};

#[derive(Debug, Clone)]
pub struct EnsembleShape {
    /// 1 for a binary model, N >= 2 for multiclass.
    pub num_classes: usize,
    pub trees_per_class: usize,
    pub max_depth: usize,
    pub num_features: usize,
    pub w_feature: u32,
    /// Chance of stopping early at an internal position.
    pub leaf_probability: f64,
}

impl Default for EnsembleShape {
    fn default() -> Self {
        EnsembleShape {
            num_classes: 1,
            trees_per_class: 4,
            max_depth: 3,
            num_features: 4,
            w_feature: 4,
            leaf_probability: 0.15,
        }
    }
}

fn grow(rng: &mut impl Rng, shape: &EnsembleShape, depth: usize, nodes: &mut Vec<TreeNode>) -> usize {
    let idx = nodes.len();
    nodes.push(TreeNode::Leaf { value: 0.0 });
    if depth == 0 || (idx > 0 && rng.gen_bool(shape.leaf_probability)) {
        // Coarse leaf grid so repeated values (and shared selectors) happen.
        let value = f64::from(rng.gen_range(-20i32..=20)) / 16.0 + rng.gen_range(-0.01..0.01);
        nodes[idx] = TreeNode::Leaf { value };
        return idx;
    }
    // Thresholds span one step past both ends of the input range so that
    // constant-true / constant-false comparisons show up.
    let top = 1i32 << shape.w_feature;
    let threshold = f64::from(rng.gen_range(0..=top));
    let feature = rng.gen_range(0..shape.num_features);
    let left = grow(rng, shape, depth - 1, nodes);
    let right = grow(rng, shape, depth - 1, nodes);
    nodes[idx] = TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    idx
}

pub fn random_tree(rng: &mut impl Rng, shape: &EnsembleShape) -> DecisionTree {
    let mut nodes = Vec::new();
    grow(rng, shape, shape.max_depth, &mut nodes);
    DecisionTree { nodes }
}

/// A random ensemble with integer thresholds in `0..=2^w_feature`.
pub fn random_ensemble(rng: &mut impl Rng, shape: &EnsembleShape) -> GbdtEnsemble {
    let task = if shape.num_classes <= 1 {
        TaskKind::BinaryLogistic
    } else {
        TaskKind::MulticlassSoftmax {
            num_classes: shape.num_classes,
        }
    };
    let count = shape.trees_per_class * task.num_outputs();
    let trees = (0..count).map(|_| random_tree(rng, shape)).collect();
    let f0 = rng.gen_range(-1.0..1.0);
    GbdtEnsemble::new(task, f0, trees, shape.num_features).expect("generated trees are well formed")
}

/// Uniform random quantized input vector.
pub fn random_input(rng: &mut impl Rng, num_features: usize, w_feature: u32) -> Vec<u32> {
    (0..num_features)
        .map(|_| rng.gen_range(0..(1u32 << w_feature)))
        .collect()
}
