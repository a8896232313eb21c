// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::Serialize;

use crate::leaves::{QuantizedEnsemble, QuantizedNode};

/// One shared comparator bit: `x[feature] < threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Key {
    pub id: usize,
    pub feature: usize,
    pub threshold: u32,
}

impl Key {
    pub fn eval(&self, qx: &[u32]) -> bool {
        qx[self.feature] < self.threshold
    }
}

/// What a quantized tree node turned into in hardware.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeBinding {
    Key(usize),
    /// Threshold above every representable input: the left child is always taken.
    AlwaysLeft,
    /// Threshold <= 0: the right child is always taken.
    AlwaysRight,
    Leaf,
}

#[derive(Debug, Clone)]
pub struct KeyTable {
    /// Sorted by (feature, threshold); `keys[i].id == i`.
    pub keys: Vec<Key>,
    /// `bindings[flat tree][node]`.
    pub bindings: Vec<Vec<NodeBinding>>,
}

impl KeyTable {
    pub fn folded_nodes(&self) -> usize {
        self.bindings
            .iter()
            .flatten()
            .filter(|b| matches!(b, NodeBinding::AlwaysLeft | NodeBinding::AlwaysRight))
            .count()
    }
}

/// Collects the deduplicated comparator set and binds every tree node to a
/// key or a constant.
pub fn build_keys(q: &QuantizedEnsemble) -> KeyTable {
    let top = i64::from(q.max_feature_value());
    let in_range = |t: i64| (1..=top).contains(&t);

    let mut ids: BTreeMap<(usize, u32), usize> = BTreeMap::new();
    for tree in &q.trees {
        for node in &tree.nodes {
            if let QuantizedNode::Split { feature, threshold, .. } = *node {
                if in_range(threshold) {
                    ids.insert((feature, threshold as u32), 0);
                }
            }
        }
    }
    let keys: Vec<Key> = ids
        .iter_mut()
        .enumerate()
        .map(|(id, (&(feature, threshold), slot))| {
            *slot = id;
            Key { id, feature, threshold }
        })
        .collect();

    let bindings = q
        .trees
        .iter()
        .map(|tree| {
            tree.nodes
                .iter()
                .map(|node| match *node {
                    QuantizedNode::Leaf { .. } => NodeBinding::Leaf,
                    QuantizedNode::Split { feature, threshold, .. } => {
                        if threshold <= 0 {
                            NodeBinding::AlwaysRight
                        } else if threshold > top {
                            NodeBinding::AlwaysLeft
                        } else {
                            NodeBinding::Key(ids[&(feature, threshold as u32)])
                        }
                    }
                })
                .collect()
        })
        .collect();

    KeyTable { keys, bindings }
}
