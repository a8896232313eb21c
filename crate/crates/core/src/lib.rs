// SPDX-License-Identifier: Apache-2.0

//! Compile trained gradient-boosted tree classifiers into quantized,
//! fully unrolled and pipelined Verilog, with software models that
//! reproduce the generated hardware bit for bit.
//!
//! The flow is:
//!
//! 1. [`quantizer::FeatureQuantizer`] maps raw features onto `w_feature`-bit
//!    unsigned integers; the model is trained on those integers.
//! 2. [`ensemble::GbdtEnsemble`] holds the trained float model (loaded from
//!    XGBoost JSON or the canonical schema).
//! 3. [`leaves::quantize`] turns leaf scores into `w_tree`-bit unsigned
//!    integers plus per-class integer biases.
//! 4. [`netlist::build_netlist`] lowers the quantized model to a three-layer
//!    hardware IR (key comparators, per-tree selector logic, adder trees)
//!    with pipeline registers.
//! 5. [`verilog::emit`] writes the IR out as Verilog-2001.
//!
//! [`eval`], [`netlist::interpret_netlist`] and [`netlist::Simulator`] are
//! three independent views of the same function and are cross-checked
//! against each other throughout the test suite.

pub mod dataset;
pub mod ensemble;
pub mod eval;
pub mod leaves;
pub mod netlist;
pub mod par;
pub mod quantizer;
pub mod synth;
pub mod verilog;

pub use ensemble::{DecisionTree, GbdtEnsemble, TaskKind, TreeNode};
pub use eval::{predict_quantized, PredictionReport, QuantizedPrediction};
pub use leaves::{quantize, round_half_away, QuantizedEnsemble};
pub use netlist::{build_netlist, interpret_netlist, Netlist, NetlistOutput, PipelineConfig};
pub use par::Exec;
pub use quantizer::FeatureQuantizer;

/// Number of bits needed to hold `value` as an unsigned integer (at least 1).
pub fn bits_for(value: u64) -> u32 {
    (u64::BITS - value.leading_zeros()).max(1)
}
