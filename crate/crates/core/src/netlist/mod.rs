// SPDX-License-Identifier: Apache-2.0

//! Hardware IR for a quantized ensemble.
//!
//! Three layers, in order: a key generator (one comparator per distinct
//! `(feature, threshold)` pair), one selector block per tree driven only by
//! key bits, and one adder tree per output. Binary models keep their bias
//! out of the adder and compare the sum against `-qb` instead; multiclass
//! adders take their non-negative bias as the last operand.
//!
//! Pipeline registers can sit after the key generator (`p0`), after the
//! trees (`p1`) and at `p2` evenly spaced adder levels. Trees themselves are
//! never cut.

mod adder;
mod keys;
mod logic;
mod sim;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub use adder::{build_adder_tree, register_levels, AdderNode, AdderOp, AdderTree, Operand, OperandSource};
pub use keys::{build_keys, Key, KeyTable, NodeBinding};
pub use logic::{selector_expr, tree_to_logic, Literal, Path, Selector, TreeLogic};
pub use sim::Simulator;
pub use stats::{debug_dump, stats, NetlistStats};

use crate::ensemble::TaskKind;
use crate::leaves::QuantizedEnsemble;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetlistError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("expected {expected} input features, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("feature {feature} = {value} exceeds the {w_feature}-bit input range")]
    InputRange { feature: usize, value: u32, w_feature: u32 },
}

/// Register placement `[p0, p1, p2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PipelineConfig {
    /// Register after the key generator.
    pub p0: bool,
    /// Register after the tree outputs.
    pub p1: bool,
    /// Register stages inside each adder tree.
    pub p2: usize,
}

impl PipelineConfig {
    pub fn new(p0: bool, p1: bool, p2: usize) -> Self {
        PipelineConfig { p0, p1, p2 }
    }

    pub fn latency(&self) -> usize {
        usize::from(self.p0) + usize::from(self.p1) + self.p2
    }
}

impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", u8::from(self.p0), u8::from(self.p1), self.p2)
    }
}

impl FromStr for PipelineConfig {
    type Err = NetlistError;

    /// Accepts `a,b,c` or `[a, b, c]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NetlistError::Config(format!("pipeline must be p0,p1,p2 with p0,p1 in {{0,1}}: `{s}`"));
        let parts: Vec<usize> = s
            .trim()
            .trim_start_matches('[')
            .trim_end_matches(']')
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [p0 @ 0..=1, p1 @ 0..=1, p2] => Ok(PipelineConfig::new(p0 == 1, p1 == 1, p2)),
            _ => Err(bad()),
        }
    }
}

/// How the adder roots become module outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputStage {
    /// `y = sum >= threshold`, with `threshold = -qb`. When `qb > 0` the
    /// model is a constant classifier and `y` is tied to 1.
    Binary { threshold: i64, constant: bool },
    /// N sums, each zero-extended to `w_sum` bits. No argmax in hardware.
    Multiclass { w_sum: u32 },
}

/// One combinational step between (potential) register boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    KeyGen,
    Trees,
    /// Adder level `l` (1-based), applied to every class's adder tree.
    AdderLevel(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct Netlist {
    pub task: TaskKind,
    pub num_features: usize,
    pub w_feature: u32,
    pub w_tree: u32,
    pub scale: f64,
    pub biases: Vec<i64>,
    pub keys: Vec<Key>,
    /// Class-major: class 0's trees in boosting order, then class 1's, ...
    pub tree_logics: Vec<TreeLogic>,
    pub adder_trees: Vec<AdderTree>,
    pub output: OutputStage,
    pub pipeline: PipelineConfig,
    pub folded_nodes: usize,
}

/// Values crossing a stage boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Wires {
    Features(Vec<u32>),
    Keys(Vec<bool>),
    /// Tree outputs in `tree_logics` order.
    Trees(Vec<u64>),
    /// Per adder tree, the values at the current level.
    Levels(Vec<Vec<u64>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetlistOutput {
    Binary(bool),
    Scores(Vec<u64>),
}

impl NetlistOutput {
    /// Same decision rule as the software evaluators.
    pub fn class(&self) -> usize {
        match self {
            NetlistOutput::Binary(y) => usize::from(*y),
            NetlistOutput::Scores(s) => crate::ensemble::argmax(s),
        }
    }
}

pub fn build_netlist(q: &QuantizedEnsemble, pipeline: PipelineConfig) -> Result<Netlist, NetlistError> {
    crate::leaves::validate(q).map_err(|e| NetlistError::Config(e.to_string()))?;
    let table = build_keys(q);
    let groups = q.num_outputs();
    let per_class = q.trees_per_class();

    let mut tree_logics = Vec::with_capacity(q.trees.len());
    for class in 0..groups {
        for (m, flat) in q.class_tree_indices(class).enumerate() {
            tree_logics.push(tree_to_logic(&q.trees[flat], &table.bindings[flat], class, m));
        }
    }

    let mut adder_trees = Vec::with_capacity(groups);
    for class in 0..groups {
        let mut operands: Vec<Operand> = (0..per_class)
            .map(|m| {
                let i = class * per_class + m;
                Operand::tree(i, u64::from(tree_logics[i].max_value()))
            })
            .collect();
        let bias = match q.task {
            TaskKind::BinaryLogistic => {
                if operands.is_empty() {
                    operands.push(Operand::constant(0));
                }
                None
            }
            TaskKind::MulticlassSoftmax { .. } => Some(
                u64::try_from(q.biases[class])
                    .map_err(|_| NetlistError::Config("multiclass biases must be non-negative".into()))?,
            ),
        };
        adder_trees.push(build_adder_tree(class, operands, bias, pipeline.p2)?);
    }

    let output = match q.task {
        TaskKind::BinaryLogistic => OutputStage::Binary {
            threshold: -q.biases[0],
            constant: q.biases[0] > 0,
        },
        TaskKind::MulticlassSoftmax { .. } => OutputStage::Multiclass {
            w_sum: adder_trees.iter().map(AdderTree::root_width).max().unwrap_or(1),
        },
    };

    Ok(Netlist {
        task: q.task,
        num_features: q.num_features,
        w_feature: q.w_feature,
        w_tree: q.w_tree,
        scale: q.scale,
        biases: q.biases.clone(),
        keys: table.keys.clone(),
        tree_logics,
        adder_trees,
        output,
        pipeline,
        folded_nodes: table.folded_nodes(),
    })
}

impl Netlist {
    pub fn latency(&self) -> usize {
        self.pipeline.latency()
    }

    pub fn num_outputs(&self) -> usize {
        self.adder_trees.len()
    }

    pub fn adder_depth(&self) -> usize {
        self.adder_trees[0].depth()
    }

    pub fn is_constant_classifier(&self) -> bool {
        matches!(self.output, OutputStage::Binary { constant: true, .. })
    }

    /// Bits on the `y` port (binary) or the packed `scores` port.
    pub fn output_width(&self) -> u32 {
        match self.output {
            OutputStage::Binary { .. } => 1,
            OutputStage::Multiclass { w_sum } => w_sum * self.num_outputs() as u32,
        }
    }

    /// Combinational stages with a flag for "registered afterwards".
    pub fn stages(&self) -> Vec<(Stage, bool)> {
        let adder = &self.adder_trees[0];
        let mut out = vec![(Stage::KeyGen, self.pipeline.p0), (Stage::Trees, self.pipeline.p1)];
        out.extend((1..=adder.depth()).map(|l| (Stage::AdderLevel(l), adder.is_registered(l))));
        out
    }

    pub fn check_input(&self, qx: &[u32]) -> Result<(), NetlistError> {
        if qx.len() != self.num_features {
            return Err(NetlistError::Arity {
                expected: self.num_features,
                found: qx.len(),
            });
        }
        let top = (1u32 << self.w_feature) - 1;
        match qx.iter().position(|&v| v > top) {
            Some(feature) => Err(NetlistError::InputRange {
                feature,
                value: qx[feature],
                w_feature: self.w_feature,
            }),
            None => Ok(()),
        }
    }

    /// Level-0 adder operands per class.
    fn operands(&self, trees: &[u64]) -> Vec<Vec<u64>> {
        self.adder_trees
            .iter()
            .map(|a| {
                a.operands
                    .iter()
                    .map(|o| match o.source {
                        OperandSource::Tree(i) => trees[i],
                        OperandSource::Constant(c) => c,
                    })
                    .collect()
            })
            .collect()
    }

    /// Evaluates one combinational stage.
    pub fn apply(&self, stage: Stage, wires: Wires) -> Wires {
        match (stage, wires) {
            (Stage::KeyGen, Wires::Features(qx)) => Wires::Keys(self.keys.iter().map(|k| k.eval(&qx)).collect()),
            (Stage::Trees, Wires::Keys(keys)) => {
                Wires::Trees(self.tree_logics.iter().map(|t| u64::from(t.eval(&keys))).collect())
            }
            (Stage::AdderLevel(l), w) => {
                let prev = match w {
                    Wires::Trees(t) if l == 1 => self.operands(&t),
                    Wires::Levels(v) => v,
                    other => panic!("adder level {l} fed with {other:?}"),
                };
                Wires::Levels(
                    self.adder_trees
                        .iter()
                        .zip(&prev)
                        .map(|(a, p)| a.reduce(l, p))
                        .collect(),
                )
            }
            (stage, w) => panic!("stage {stage:?} fed with {w:?}"),
        }
    }

    /// Turns the last stage's wires into module outputs.
    pub fn finish(&self, wires: Wires) -> NetlistOutput {
        let roots: Vec<u64> = match wires {
            Wires::Trees(t) => self.operands(&t).into_iter().map(|v| v[0]).collect(),
            Wires::Levels(v) => v.into_iter().map(|l| l[0]).collect(),
            other => panic!("outputs fed with {other:?}"),
        };
        match self.output {
            OutputStage::Binary { constant: true, .. } => NetlistOutput::Binary(true),
            OutputStage::Binary { threshold, .. } => {
                NetlistOutput::Binary(i128::from(roots[0]) >= i128::from(threshold))
            }
            OutputStage::Multiclass { .. } => NetlistOutput::Scores(roots),
        }
    }

    /// Every intermediate signal, stage by stage, starting with the inputs.
    pub fn trace(&self, qx: &[u32]) -> Result<Vec<Wires>, NetlistError> {
        self.check_input(qx)?;
        let mut out = vec![Wires::Features(qx.to_vec())];
        for (stage, _) in self.stages() {
            let next = self.apply(stage, out.last().unwrap().clone());
            out.push(next);
        }
        Ok(out)
    }
}

/// Combinational reference semantics of the IR.
pub fn interpret_netlist(n: &Netlist, qx: &[u32]) -> Result<NetlistOutput, NetlistError> {
    n.check_input(qx)?;
    let mut wires = Wires::Features(qx.to_vec());
    for (stage, _) in n.stages() {
        wires = n.apply(stage, wires);
    }
    Ok(n.finish(wires))
}
