// SPDX-License-Identifier: Apache-2.0

//! Per-tree selector logic: every root-to-leaf path becomes a conjunction
//! of key literals, and the paths reaching each distinct leaf value are
//! OR-ed into one select line.

use std::collections::BTreeMap;

use serde::Serialize;

use super::keys::NodeBinding;
use crate::bits_for;
use crate::leaves::{QuantizedNode, QuantizedTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Literal {
    pub key: usize,
    /// True for the plain key (left branch), false for its complement.
    pub positive: bool,
}

pub type Path = Vec<Literal>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Selector {
    pub value: u32,
    pub paths: Vec<Path>,
}

impl Selector {
    pub fn eval(&self, keys: &[bool]) -> bool {
        self.paths.iter().any(|p| p.iter().all(|l| keys[l.key] == l.positive))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeLogic {
    pub class_index: usize,
    pub tree_index: usize,
    /// Distinct reachable leaf values, ascending.
    pub unique_values: Vec<u32>,
    pub default_value: u32,
    /// One selector per non-default value, ascending by value.
    pub selectors: Vec<Selector>,
    /// Paths that end at the default value (not emitted as logic).
    pub default_paths: usize,
    pub out_width: u32,
}

impl TreeLogic {
    /// Output for a full key assignment. Selectors are mutually exclusive,
    /// so the first hit is the only hit.
    pub fn eval(&self, keys: &[bool]) -> u32 {
        self.selectors
            .iter()
            .find(|s| s.eval(keys))
            .map_or(self.default_value, |s| s.value)
    }

    pub fn max_value(&self) -> u32 {
        *self.unique_values.last().expect("a tree has at least one leaf")
    }

    pub fn total_paths(&self) -> usize {
        self.default_paths + self.selectors.iter().map(|s| s.paths.len()).sum::<usize>()
    }

    /// Sorted distinct keys referenced by the selectors.
    pub fn keys_used(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self
            .selectors
            .iter()
            .flat_map(|s| s.paths.iter().flatten().map(|l| l.key))
            .collect();
        used.sort_unstable();
        used.dedup();
        used
    }
}

/// Enumerates root-to-leaf paths, folding constant comparisons and repeated
/// keys, then groups paths by leaf value. The value with the most paths
/// (ties: the smaller value) becomes the default and gets no select line.
pub fn tree_to_logic(
    tree: &QuantizedTree,
    bindings: &[NodeBinding],
    class_index: usize,
    tree_index: usize,
) -> TreeLogic {
    let mut by_value: BTreeMap<u32, Vec<Path>> = BTreeMap::new();
    let mut path = Vec::new();
    walk(tree, bindings, 0, &mut path, &mut by_value);

    let default_value = by_value
        .iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
        .map(|(v, _)| *v)
        .expect("a tree has at least one leaf");
    let unique_values: Vec<u32> = by_value.keys().copied().collect();
    let default_paths = by_value[&default_value].len();
    let selectors = by_value
        .into_iter()
        .filter(|(v, _)| *v != default_value)
        .map(|(value, paths)| Selector { value, paths })
        .collect();
    let out_width = bits_for(u64::from(*unique_values.last().unwrap()));
    TreeLogic {
        class_index,
        tree_index,
        unique_values,
        default_value,
        selectors,
        default_paths,
        out_width,
    }
}

fn walk(
    tree: &QuantizedTree,
    bindings: &[NodeBinding],
    idx: usize,
    path: &mut Path,
    out: &mut BTreeMap<u32, Vec<Path>>,
) {
    match (tree.nodes[idx].clone(), bindings[idx]) {
        (QuantizedNode::Leaf { value }, _) => out.entry(value).or_default().push(path.clone()),
        (QuantizedNode::Split { left, .. }, NodeBinding::AlwaysLeft) => walk(tree, bindings, left, path, out),
        (QuantizedNode::Split { right, .. }, NodeBinding::AlwaysRight) => walk(tree, bindings, right, path, out),
        (QuantizedNode::Split { left, right, .. }, NodeBinding::Key(key)) => {
            // A key already decided higher up fixes the branch.
            if let Some(lit) = path.iter().find(|l| l.key == key) {
                let next = if lit.positive { left } else { right };
                return walk(tree, bindings, next, path, out);
            }
            for (positive, child) in [(true, left), (false, right)] {
                path.push(Literal { key, positive });
                walk(tree, bindings, child, path, out);
                path.pop();
            }
        }
        (QuantizedNode::Split { .. }, NodeBinding::Leaf) => {
            unreachable!("split node bound as a leaf")
        }
    }
}

/// Prefix notation for a selector, e.g. `(or (and k5 (not k12)) (and (not k5) k24))`.
pub fn selector_expr(sel: &Selector) -> String {
    let lit = |l: &Literal| {
        if l.positive {
            format!("k{}", l.key)
        } else {
            format!("(not k{})", l.key)
        }
    };
    let term = |p: &Path| match p.len() {
        0 => "true".to_string(),
        1 => lit(&p[0]),
        _ => format!("(and {})", p.iter().map(lit).collect::<Vec<_>>().join(" ")),
    };
    match sel.paths.len() {
        1 => term(&sel.paths[0]),
        _ => format!("(or {})", sel.paths.iter().map(term).collect::<Vec<_>>().join(" ")),
    }
}
