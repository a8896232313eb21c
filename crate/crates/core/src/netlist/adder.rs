// SPDX-License-Identifier: Apache-2.0

//! Balanced adder trees with per-node width bounds and evenly spread
//! pipeline registers.

use serde::Serialize;

use super::NetlistError;
use crate::bits_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperandSource {
    /// Output of `tree_logics[i]`.
    Tree(usize),
    Constant(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Operand {
    pub source: OperandSource,
    pub max_value: u64,
    pub width: u32,
}

impl Operand {
    pub fn tree(index: usize, max_value: u64) -> Self {
        Operand {
            source: OperandSource::Tree(index),
            max_value,
            width: bits_for(max_value),
        }
    }

    pub fn constant(value: u64) -> Self {
        Operand {
            source: OperandSource::Constant(value),
            max_value: value,
            width: bits_for(value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdderOp {
    /// Sum of two nodes of the previous level.
    Add(usize, usize),
    /// Odd last node carried to the next level unchanged.
    Pass(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AdderNode {
    pub op: AdderOp,
    pub max_value: u64,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdderTree {
    pub class_index: usize,
    pub operands: Vec<Operand>,
    /// `levels[l - 1]` holds level `l`; level 0 is the operand list.
    pub levels: Vec<Vec<AdderNode>>,
    /// Levels whose outputs are registered, ascending, each in `1..=depth`.
    pub register_levels: Vec<usize>,
}

impl AdderTree {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn root_max(&self) -> u64 {
        self.levels
            .last()
            .map_or(self.operands[0].max_value, |l| l[0].max_value)
    }

    pub fn root_width(&self) -> u32 {
        self.levels.last().map_or(self.operands[0].width, |l| l[0].width)
    }

    pub fn is_registered(&self, level: usize) -> bool {
        self.register_levels.contains(&level)
    }

    /// Width of node `index` at `level` (0 = operands).
    pub fn width_at(&self, level: usize, index: usize) -> u32 {
        if level == 0 {
            self.operands[index].width
        } else {
            self.levels[level - 1][index].width
        }
    }

    /// Applies one reduction level to the previous level's values.
    pub fn reduce(&self, level: usize, prev: &[u64]) -> Vec<u64> {
        self.levels[level - 1]
            .iter()
            .map(|n| match n.op {
                AdderOp::Add(a, b) => prev[a] + prev[b],
                AdderOp::Pass(a) => prev[a],
            })
            .collect()
    }
}

/// Register boundaries for `p2` stages over `depth` levels: after levels
/// floor(depth * i / (p2 + 1)) for i in 1..=p2. With `p2 == depth` every
/// level is registered, the root included.
pub fn register_levels(depth: usize, p2: usize) -> Result<Vec<usize>, NetlistError> {
    if p2 > depth {
        return Err(NetlistError::Config(format!(
            "more stages than adder levels: p2 = {p2} but the adder tree has {depth} level(s)"
        )));
    }
    if p2 == depth {
        return Ok((1..=depth).collect());
    }
    Ok((1..=p2).map(|i| depth * i / (p2 + 1)).collect())
}

/// Pairs adjacent nodes left to right each level; the bias, if any, is the
/// last operand.
pub fn build_adder_tree(
    class_index: usize,
    mut operands: Vec<Operand>,
    bias: Option<u64>,
    p2: usize,
) -> Result<AdderTree, NetlistError> {
    if let Some(b) = bias {
        operands.push(Operand::constant(b));
    }
    if operands.is_empty() {
        return Err(NetlistError::Config("adder tree without operands".into()));
    }
    let mut levels = Vec::new();
    let mut maxes: Vec<u64> = operands.iter().map(|o| o.max_value).collect();
    while maxes.len() > 1 {
        let level: Vec<AdderNode> = (0..maxes.len())
            .step_by(2)
            .map(|i| {
                let (op, max_value) = if i + 1 < maxes.len() {
                    let sum = maxes[i]
                        .checked_add(maxes[i + 1])
                        .ok_or_else(|| NetlistError::Config("adder tree sum overflows 64 bits".into()))?;
                    (AdderOp::Add(i, i + 1), sum)
                } else {
                    (AdderOp::Pass(i), maxes[i])
                };
                Ok(AdderNode {
                    op,
                    max_value,
                    width: bits_for(max_value),
                })
            })
            .collect::<Result<_, NetlistError>>()?;
        maxes = level.iter().map(|n| n.max_value).collect();
        levels.push(level);
    }
    let register_levels = register_levels(levels.len(), p2)?;
    Ok(AdderTree {
        class_index,
        operands,
        levels,
        register_levels,
    })
}
