// SPDX-License-Identifier: Apache-2.0

//! Canonical ensemble JSON:
//!
//! ```json
//! { "task": "binary", "num_classes": 2, "num_features": 5, "f0": 0.0,
//!   "trees": [ { "nodes": [ {"f": 2, "t": 3.0, "l": 1, "r": 2}, {"v": -0.7}, ... ] } ] }
//! ```
//!
//! Node 0 is the root. Leaves carry `"v"`; a leaf may also spell out its
//! children as `-1`.

use serde::{Deserialize, Serialize};

use super::{DecisionTree, GbdtEnsemble, ModelError, TaskKind, TreeNode};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    task: String,
    #[serde(default)]
    num_classes: Option<usize>,
    num_features: usize,
    f0: f64,
    trees: Vec<RawTree>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTree {
    nodes: Vec<RawNode>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawNode {
    #[serde(skip_serializing_if = "Option::is_none")]
    f: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v: Option<f64>,
}

fn child(tree: usize, node: usize, c: Option<i64>) -> Result<usize, ModelError> {
    match c {
        Some(c) if c >= 0 => Ok(c as usize),
        _ => Err(ModelError::invalid(format!(
            "tree {tree} node {node}: internal node needs non-negative \"l\" and \"r\""
        ))),
    }
}

pub fn from_canonical_json(text: &str) -> Result<GbdtEnsemble, ModelError> {
    let raw: RawEnsemble = serde_json::from_str(text).map_err(|e| ModelError::from_json(text, e))?;
    let task = match raw.task.as_str() {
        "binary" => TaskKind::BinaryLogistic,
        "multiclass" => TaskKind::MulticlassSoftmax {
            num_classes: raw
                .num_classes
                .ok_or_else(|| ModelError::invalid("multiclass model without \"num_classes\""))?,
        },
        other => return Err(ModelError::invalid(format!("unknown task \"{other}\""))),
    };
    let mut trees = Vec::with_capacity(raw.trees.len());
    for (ti, t) in raw.trees.into_iter().enumerate() {
        let mut nodes = Vec::with_capacity(t.nodes.len());
        for (ni, n) in t.nodes.into_iter().enumerate() {
            let node = match (n.v, n.f, n.t) {
                (Some(value), None, None) => {
                    if n.l.unwrap_or(-1) != -1 || n.r.unwrap_or(-1) != -1 {
                        return Err(ModelError::invalid(format!("tree {ti} node {ni}: leaf with children")));
                    }
                    TreeNode::Leaf { value }
                }
                (None, Some(feature), Some(threshold)) => TreeNode::Split {
                    feature,
                    threshold,
                    left: child(ti, ni, n.l)?,
                    right: child(ti, ni, n.r)?,
                },
                _ => {
                    return Err(ModelError::invalid(format!(
                        "tree {ti} node {ni}: expected either {{\"v\"}} or {{\"f\",\"t\",\"l\",\"r\"}}"
                    )))
                }
            };
            nodes.push(node);
        }
        trees.push(DecisionTree { nodes });
    }
    GbdtEnsemble::new(task, raw.f0, trees, raw.num_features)
}

pub fn to_canonical_json(ens: &GbdtEnsemble) -> String {
    let (task, num_classes) = match ens.task {
        TaskKind::BinaryLogistic => ("binary", 2),
        TaskKind::MulticlassSoftmax { num_classes } => ("multiclass", num_classes),
    };
    let raw = RawEnsemble {
        task: task.to_string(),
        num_classes: Some(num_classes),
        num_features: ens.num_features,
        f0: ens.f0,
        trees: ens
            .trees
            .iter()
            .map(|t| RawTree {
                nodes: t
                    .nodes
                    .iter()
                    .map(|n| match *n {
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => RawNode {
                            f: Some(feature),
                            t: Some(threshold),
                            l: Some(left as i64),
                            r: Some(right as i64),
                            v: None,
                        },
                        TreeNode::Leaf { value } => RawNode {
                            v: Some(value),
                            ..RawNode::default()
                        },
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("ensemble serializes")
}
