// SPDX-License-Identifier: Apache-2.0

//! Reader for XGBoost `save_model` JSON (gbtree boosters only).

use serde::Serialize;
use serde_json::Value;

use super::{DecisionTree, GbdtEnsemble, ModelError, TaskKind, TreeNode};

/// How the stored `base_score` became the margin-space `f0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseScoreHandling {
    /// Binary probability in (0, 1) converted with ln(p / (1 - p)).
    Logit,
    /// Used as stored.
    Identity,
    /// Per-class intercepts: `f0` is class 0's value and every other class's
    /// difference was added to the leaves of its first tree.
    InterceptFolding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassMapping {
    SingleGroup,
    /// `tree_info` present and equal to `i mod N`.
    RoundRobinVerified,
    /// No `tree_info`; `i mod N` assumed.
    RoundRobinAssumed,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoadReport {
    pub objective: String,
    pub booster: String,
    pub base_score_raw: String,
    pub base_score_handling: BaseScoreHandling,
    pub f0: f64,
    pub class_mapping: ClassMapping,
    pub num_trees: usize,
    /// Nodes whose missing-value direction was read and dropped.
    pub default_left_ignored: usize,
}

#[derive(Debug, Clone)]
pub struct XgboostImport {
    pub ensemble: GbdtEnsemble,
    pub report: LoadReport,
}

fn field<'a>(v: &'a Value, path: &[&str]) -> Result<&'a Value, ModelError> {
    let mut cur = v;
    for key in path {
        cur = cur
            .get(key)
            .ok_or_else(|| ModelError::invalid(format!("missing field `{}`", path.join("."))))?;
    }
    Ok(cur)
}

/// XGBoost stores most scalars as strings ("3", "5E-1").
fn as_f64(v: &Value, what: &str) -> Result<f64, ModelError> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
    .ok_or_else(|| ModelError::invalid(format!("`{what}` is not a number: {v}")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize, ModelError> {
    let x = as_f64(v, what)?;
    if x < 0.0 || x.fract() != 0.0 {
        return Err(ModelError::invalid(format!("`{what}` is not a count: {v}")));
    }
    Ok(x as usize)
}

/// `base_score` is "0.5", "5E-1", or (XGBoost >= 3) a bracketed vector.
fn parse_base_score(v: &Value) -> Result<(String, Vec<f64>), ModelError> {
    let raw = match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let values = raw
        .trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| ModelError::invalid(format!("bad base_score `{raw}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() || values.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::invalid(format!("bad base_score `{raw}`")));
    }
    Ok((raw, values))
}

fn int_array(tree: &Value, key: &str, ti: usize) -> Result<Vec<i64>, ModelError> {
    let arr = tree
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| ModelError::invalid(format!("tree {ti}: missing `{key}`")))?;
    arr.iter()
        .map(|x| {
            x.as_i64()
                .or_else(|| x.as_bool().map(i64::from))
                .ok_or_else(|| ModelError::invalid(format!("tree {ti}: `{key}` holds {x}")))
        })
        .collect()
}

fn float_array(tree: &Value, key: &str, ti: usize) -> Result<Vec<f64>, ModelError> {
    let arr = tree
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| ModelError::invalid(format!("tree {ti}: missing `{key}`")))?;
    arr.iter().map(|x| as_f64(x, key)).collect()
}

fn parse_tree(tree: &Value, ti: usize, ignored: &mut usize) -> Result<DecisionTree, ModelError> {
    let left = int_array(tree, "left_children", ti)?;
    let right = int_array(tree, "right_children", ti)?;
    let index = int_array(tree, "split_indices", ti)?;
    // Leaf values sit in split_conditions at leaf positions.
    let cond = float_array(tree, "split_conditions", ti)?;
    let n = left.len();
    if [right.len(), index.len(), cond.len()].iter().any(|&l| l != n) {
        return Err(ModelError::invalid(format!("tree {ti}: node arrays differ in length")));
    }
    if let Some(types) = tree.get("split_type").and_then(Value::as_array) {
        if types.iter().any(|t| t.as_i64().unwrap_or(0) != 0) {
            return Err(ModelError::invalid(format!(
                "tree {ti}: categorical splits are not supported"
            )));
        }
    }
    if let Ok(dl) = int_array(tree, "default_left", ti) {
        *ignored += dl.iter().filter(|&&d| d != 0).count();
    }
    let nodes = (0..n)
        .map(|i| {
            if left[i] == -1 {
                if right[i] != -1 {
                    return Err(ModelError::invalid(format!("tree {ti} node {i}: half-leaf")));
                }
                Ok(TreeNode::Leaf { value: cond[i] })
            } else {
                if left[i] < 0 || right[i] < 0 || index[i] < 0 {
                    return Err(ModelError::invalid(format!("tree {ti} node {i}: negative index")));
                }
                Ok(TreeNode::Split {
                    feature: index[i] as usize,
                    threshold: cond[i],
                    left: left[i] as usize,
                    right: right[i] as usize,
                })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DecisionTree { nodes })
}

/// Loads an XGBoost `save_model` JSON classifier.
pub fn load_xgboost_model(json_text: &str) -> Result<XgboostImport, ModelError> {
    let doc: Value = serde_json::from_str(json_text).map_err(|e| ModelError::from_json(json_text, e))?;
    let learner = field(&doc, &["learner"])?;

    let objective = field(learner, &["objective", "name"])?
        .as_str()
        .unwrap_or_default()
        .to_string();
    let booster = field(learner, &["gradient_booster", "name"])?
        .as_str()
        .unwrap_or_default()
        .to_string();
    if booster != "gbtree" {
        return Err(ModelError::UnsupportedBooster(booster));
    }

    let params = field(learner, &["learner_model_param"])?;
    let num_features = as_usize(field(params, &["num_feature"])?, "num_feature")?;
    if num_features == 0 {
        return Err(ModelError::invalid("num_feature is 0"));
    }
    let (base_score_raw, base) = parse_base_score(field(params, &["base_score"])?)?;

    let task = match objective.as_str() {
        "binary:logistic" => TaskKind::BinaryLogistic,
        "multi:softmax" | "multi:softprob" => {
            let num_classes = as_usize(field(params, &["num_class"])?, "num_class")?;
            if num_classes < 2 {
                return Err(ModelError::invalid(format!("num_class is {num_classes}")));
            }
            TaskKind::MulticlassSoftmax { num_classes }
        }
        _ => return Err(ModelError::UnsupportedObjective(objective.clone())),
    };

    let model = field(learner, &["gradient_booster", "model"])?;
    let raw_trees = field(model, &["trees"])?
        .as_array()
        .ok_or_else(|| ModelError::invalid("`trees` is not an array"))?;
    let mut ignored = 0;
    let mut trees = raw_trees
        .iter()
        .enumerate()
        .map(|(i, t)| parse_tree(t, i, &mut ignored))
        .collect::<Result<Vec<_>, _>>()?;

    let groups = task.num_outputs();
    let class_mapping = match (task, model.get("tree_info").and_then(Value::as_array)) {
        (TaskKind::BinaryLogistic, _) => ClassMapping::SingleGroup,
        (_, Some(info)) => {
            if info.len() != trees.len() {
                return Err(ModelError::invalid("tree_info length differs from tree count"));
            }
            for (i, c) in info.iter().enumerate() {
                if c.as_u64() != Some((i % groups) as u64) {
                    return Err(ModelError::invalid(format!(
                        "tree {i} belongs to class {c}, expected round-robin class {}",
                        i % groups
                    )));
                }
            }
            ClassMapping::RoundRobinVerified
        }
        (_, None) => ClassMapping::RoundRobinAssumed,
    };

    let (f0, handling) = match task {
        TaskKind::BinaryLogistic => {
            if base.len() != 1 {
                return Err(ModelError::invalid(format!(
                    "binary model with base_score `{base_score_raw}`"
                )));
            }
            let p = base[0];
            if p > 0.0 && p < 1.0 {
                ((p / (1.0 - p)).ln(), BaseScoreHandling::Logit)
            } else {
                (p, BaseScoreHandling::Identity)
            }
        }
        TaskKind::MulticlassSoftmax { num_classes } => {
            if base.len() == 1 || base.iter().all(|&b| b == base[0]) {
                (base[0], BaseScoreHandling::Identity)
            } else if base.len() == num_classes {
                if trees.len() < num_classes {
                    return Err(ModelError::invalid(
                        "per-class base_score needs at least one tree per class",
                    ));
                }
                for (class, tree) in trees.iter_mut().take(num_classes).enumerate() {
                    let delta = base[class] - base[0];
                    for node in &mut tree.nodes {
                        if let TreeNode::Leaf { value } = node {
                            *value += delta;
                        }
                    }
                }
                (base[0], BaseScoreHandling::InterceptFolding)
            } else {
                return Err(ModelError::invalid(format!(
                    "base_score `{base_score_raw}` does not match {num_classes} classes"
                )));
            }
        }
    };

    let num_trees = trees.len();
    let ensemble = GbdtEnsemble::new(task, f0, trees, num_features)?;
    Ok(XgboostImport {
        ensemble,
        report: LoadReport {
            objective,
            booster,
            base_score_raw,
            base_score_handling: handling,
            f0,
            class_mapping,
            num_trees,
            default_left_ignored: ignored,
        },
    })
}
