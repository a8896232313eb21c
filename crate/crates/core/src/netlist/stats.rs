// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use super::{selector_expr, AdderTree, Key, Netlist, OutputStage, PipelineConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetlistStats {
    pub num_keys: usize,
    pub num_trees: usize,
    pub unique_values_per_tree: Vec<usize>,
    pub total_paths: usize,
    /// Paths that need logic (everything except default-value paths).
    pub selector_paths: usize,
    pub folded_nodes: usize,
    pub adder_depth: usize,
    pub adder_root_widths: Vec<u32>,
    pub adder_node_widths: Vec<Vec<Vec<u32>>>,
    pub register_bits: u64,
    pub latency_cycles: usize,
    pub pipeline: String,
    pub constant_classifier: bool,
    pub output_width: u32,
}

/// Total flip-flop bits across all register boundaries.
fn register_bits(n: &Netlist) -> u64 {
    let mut bits = 0u64;
    if n.pipeline.p0 {
        bits += n.keys.len() as u64;
    }
    if n.pipeline.p1 {
        bits += n.tree_logics.iter().map(|t| u64::from(t.out_width)).sum::<u64>();
    }
    for a in &n.adder_trees {
        for &level in &a.register_levels {
            bits += a.levels[level - 1].iter().map(|x| u64::from(x.width)).sum::<u64>();
        }
    }
    bits
}

pub fn stats(n: &Netlist) -> NetlistStats {
    NetlistStats {
        num_keys: n.keys.len(),
        num_trees: n.tree_logics.len(),
        unique_values_per_tree: n.tree_logics.iter().map(|t| t.unique_values.len()).collect(),
        total_paths: n.tree_logics.iter().map(|t| t.total_paths()).sum(),
        selector_paths: n.tree_logics.iter().map(|t| t.total_paths() - t.default_paths).sum(),
        folded_nodes: n.folded_nodes,
        adder_depth: n.adder_depth(),
        adder_root_widths: n.adder_trees.iter().map(AdderTree::root_width).collect(),
        adder_node_widths: n
            .adder_trees
            .iter()
            .map(|a| {
                std::iter::once(a.operands.iter().map(|o| o.width).collect())
                    .chain(a.levels.iter().map(|l| l.iter().map(|x| x.width).collect()))
                    .collect()
            })
            .collect(),
        register_bits: register_bits(n),
        latency_cycles: n.latency(),
        pipeline: n.pipeline.to_string(),
        constant_classifier: n.is_constant_classifier(),
        output_width: n.output_width(),
    }
}

#[derive(Serialize)]
struct DumpTree {
    class: usize,
    index: usize,
    out_width: u32,
    default: u32,
    selectors: Vec<DumpSelector>,
}

#[derive(Serialize)]
struct DumpSelector {
    value: u32,
    expr: String,
}

#[derive(Serialize)]
struct Dump<'a> {
    keys: &'a [Key],
    trees: Vec<DumpTree>,
    adders: &'a [AdderTree],
    output: OutputStage,
    pipeline: PipelineConfig,
}

/// JSON debug view: keys, selector expressions in prefix notation, adder shapes.
pub fn debug_dump(n: &Netlist) -> String {
    let dump = Dump {
        keys: &n.keys,
        trees: n
            .tree_logics
            .iter()
            .map(|t| DumpTree {
                class: t.class_index,
                index: t.tree_index,
                out_width: t.out_width,
                default: t.default_value,
                selectors: t
                    .selectors
                    .iter()
                    .map(|s| DumpSelector {
                        value: s.value,
                        expr: selector_expr(s),
                    })
                    .collect(),
            })
            .collect(),
        adders: &n.adder_trees,
        output: n.output,
        pipeline: n.pipeline,
    };
    serde_json::to_string_pretty(&dump).expect("netlist dump serializes")
}
